//! Household precarity simulation.
//!
//! Households carry income, net worth and health. Each round a threshold
//! classifier issues a positive or negative decision based on income only;
//! households then react, either as bounded-rationality agents sampling
//! class-typical moves ([`mdp`]) or as rational consumption optimizers
//! ([`ifp`]). Decile positions for each attribute are recorded round by
//! round, and the precarity of every resulting trajectory is measured with a
//! sequence index ([`metrics`]). Interventions (fixed stimulus, precarity
//! resistance) live in [`policy`]; [`engine`] runs the loop and [`report`]
//! summarizes distributions.

pub mod config;
pub mod engine;
pub mod error;
pub mod ifp;
pub mod ingest;
pub mod mdp;
pub mod metrics;
pub mod policy;
pub mod population;
pub mod report;
pub mod runner;

pub use engine::{run_simulation, AgentModel, Attribute, Simulation, SimulationConfig, TrajectoryRecord};
pub use error::{Error, Result};
pub use metrics::{precarity_index, PrecarityParams, StateSequence};
pub use population::{Household, IncomeClass};
