//! Round loop: classify, intervene, let agents react, update health,
//! re-bin deciles, extend each household's state sequences and recompute
//! their cumulative precarity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifp::{self, ConsumptionPolicy, Crra, IfpModel};
use crate::mdp::{self, TransitionTable};
use crate::metrics::{precarity_index, PrecarityParams, StateSequence};
use crate::policy::{self, ClassifierPolicy, InterventionConfig, ZProcess};
use crate::population::{self, DecileState, HealthModel, Household, IncomeClass, PopulationSpec, DECILES};

/// Fraction of current income moved by one decision-driven shock.
pub const SHOCK_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentModel {
    Mdp,
    Ifp,
}

impl AgentModel {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentModel::Mdp => "mdp",
            AgentModel::Ifp => "ifp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Income,
    NetWorth,
    Health,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Income, Attribute::NetWorth, Attribute::Health];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attribute::Income => "income",
            Attribute::NetWorth => "net_worth",
            Attribute::Health => "health",
        }
    }

    fn of(self, st: &DecileState) -> usize {
        match self {
            Attribute::Income => st.income as usize,
            Attribute::NetWorth => st.net_worth as usize,
            Attribute::Health => st.health as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfpSettings {
    pub beta: f64,
    pub gamma_c: f64,
    pub a_r: f64,
    pub b_r: f64,
    pub grid_size: usize,
    /// Grid extent as a multiple of median annual income.
    pub grid_max_multiple: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IfpSettings {
    fn default() -> Self {
        Self {
            beta: 0.96,
            gamma_c: 2.0,
            a_r: 0.0,
            b_r: 0.0,
            grid_size: 100,
            grid_max_multiple: 20.0,
            tol: ifp::DEFAULT_TOLERANCE,
            max_iter: ifp::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub rounds: usize,
    pub agent_model: AgentModel,
    pub seed: u64,
    pub population: PopulationSpec,
    pub acceptance_quantile: f64,
    pub intervention: InterventionConfig,
    pub precarity: PrecarityParams,
    pub health: HealthModel,
    pub transitions: TransitionTable,
    pub ifp: IfpSettings,
    /// Step households on the rayon pool; results are identical either way.
    pub parallel: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            agent_model: AgentModel::Mdp,
            seed: 0,
            population: PopulationSpec::default(),
            acceptance_quantile: 0.5,
            intervention: InterventionConfig::default(),
            precarity: PrecarityParams::default(),
            health: HealthModel::default(),
            transitions: TransitionTable::default(),
            ifp: IfpSettings::default(),
            parallel: true,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::param("rounds", "must be >= 1"));
        }
        self.population.validate()?;
        self.intervention.validate()?;
        self.precarity.validate()?;
        self.health.validate()?;
        self.transitions.validate()?;
        if !(0.0..=1.0).contains(&self.acceptance_quantile) {
            return Err(Error::param("acceptance_quantile", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Per-household state sequences and cumulative precarity after every round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// `sequences[h][attribute]`, each of length `rounds + 1`.
    pub sequences: Vec<[StateSequence; 3]>,
    /// `precarity[round][h][attribute]` for rounds `0..=rounds`.
    pub precarity: Vec<Vec<[f64; 3]>>,
    pub income_classes: Vec<IncomeClass>,
}

impl TrajectoryRecord {
    pub fn rounds(&self) -> usize {
        self.precarity.len().saturating_sub(1)
    }

    pub fn values(&self, round: usize, attribute: Attribute) -> Vec<f64> {
        self.precarity[round].iter().map(|p| p[attribute.index()]).collect()
    }
}

/// A population mid-simulation.
pub struct Simulation {
    cfg: SimulationConfig,
    classifier: ClassifierPolicy,
    households: Vec<Household>,
    rngs: Vec<ChaCha8Rng>,
    states: Vec<DecileState>,
    sequences: Vec<[StateSequence; 3]>,
    precarity: Vec<Vec<[f64; 3]>>,
    rational: Option<RationalAgents>,
    round: usize,
}

struct RationalAgents {
    model: IfpModel,
    policy: ConsumptionPolicy,
    z: Vec<usize>,
}

fn household_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

fn sequences_for(st: &DecileState) -> [StateSequence; 3] {
    Attribute::ALL.map(|a| StateSequence::new(vec![a.of(st)], DECILES).expect("decile in range"))
}

fn index_row(seqs: &[StateSequence; 3], params: &PrecarityParams) -> [f64; 3] {
    [
        precarity_index(&seqs[0], params),
        precarity_index(&seqs[1], params),
        precarity_index(&seqs[2], params),
    ]
}

impl Simulation {
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        cfg.validate()?;
        let households = population::build_population(&cfg.population, cfg.seed)?;
        Self::with_population(cfg, households)
    }

    /// Starts from an explicit population (ids must be `0..n` in order).
    pub fn with_population(cfg: &SimulationConfig, households: Vec<Household>) -> Result<Self> {
        if households.is_empty() {
            return Err(Error::param("population", "must not be empty"));
        }
        if households.iter().enumerate().any(|(i, h)| h.id != i) {
            return Err(Error::param("population", "household ids must be 0..n in order"));
        }
        let classifier = policy::calibrate_threshold(&households, cfg.acceptance_quantile)?;
        let states = population::assign_deciles(&households);
        let sequences: Vec<_> = states.iter().map(sequences_for).collect();
        let initial: Vec<[f64; 3]> = sequences.iter().map(|s| index_row(s, &cfg.precarity)).collect();
        let rngs = households.iter().map(|h| household_rng(cfg.seed, h.id)).collect();
        let rational = match cfg.agent_model {
            AgentModel::Mdp => None,
            AgentModel::Ifp => Some(Self::solve_rational(cfg, &households, &states, &classifier)?),
        };
        log::info!(
            "initialized {} households ({} agents), threshold {:.2}",
            households.len(),
            cfg.agent_model.as_str(),
            classifier.threshold_income
        );
        Ok(Self {
            cfg: cfg.clone(),
            classifier,
            households,
            rngs,
            states,
            sequences,
            precarity: vec![initial],
            rational,
            round: 0,
        })
    }

    fn solve_rational(
        cfg: &SimulationConfig,
        households: &[Household],
        states: &[DecileState],
        classifier: &ClassifierPolicy,
    ) -> Result<RationalAgents> {
        let settings = &cfg.ifp;
        let income_of_state = population::decile_mean_incomes(households, states).to_vec();
        let process = ZProcess::new(cfg.transitions).with_resistance(cfg.intervention.resistance_scale(1));
        let transition = process.matrix(households, states, classifier);
        let incomes: Vec<f64> = households.iter().map(|h| h.income).collect();
        let median = policy::quantile(&incomes, 0.5);
        let grid_max = (settings.grid_max_multiple * 12.0 * median).max(1.0);
        let model = IfpModel {
            beta: settings.beta,
            utility: Crra::new(settings.gamma_c)?,
            a_r: settings.a_r,
            b_r: settings.b_r,
            transition,
            income_of_state,
            savings_grid: ifp::geometric_grid(settings.grid_size, grid_max, 1e-4)?,
        };
        let solution = ifp::solve_policy(&model, settings.tol, settings.max_iter)?;
        log::info!(
            "consumption policy converged in {} iterations (distance {:e})",
            solution.iterations,
            solution.distance
        );
        let z = states.iter().map(|s| s.income as usize).collect();
        Ok(RationalAgents {
            model,
            policy: solution.policy,
            z,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    pub fn states(&self) -> &[DecileState] {
        &self.states
    }

    pub fn sequences(&self) -> &[[StateSequence; 3]] {
        &self.sequences
    }

    pub fn classifier(&self) -> &ClassifierPolicy {
        &self.classifier
    }

    pub fn consumption_policy(&self) -> Option<&ConsumptionPolicy> {
        self.rational.as_ref().map(|r| &r.policy)
    }

    /// Advances one decision round.
    pub fn run_round(&mut self) -> Result<()> {
        let round = self.round + 1;
        let cfg = &self.cfg;
        let classifier = self.classifier;
        let scale = cfg.intervention.resistance_scale(round);
        let table = policy::apply_resistance(&cfg.transitions, scale);
        let process = ZProcess::new(cfg.transitions).with_resistance(scale);

        for hh in &mut self.households {
            hh.transfer = 0.0;
        }

        let z_states = self.rational.as_mut().map(|r| std::mem::take(&mut r.z));
        let step = |hh: &mut Household, rng: &mut ChaCha8Rng, z: Option<&mut usize>| -> Result<()> {
            let outcome = policy::classify(hh, &classifier);
            policy::apply_stimulus(hh, &cfg.intervention, &classifier, round);
            match (z, &self.rational) {
                (None, _) | (_, None) => {
                    let action = mdp::sample_action(hh.income_class, outcome, &table, rng);
                    mdp::apply_action(hh, action, SHOCK_FRACTION * hh.income);
                }
                (Some(z), Some(rational)) => {
                    let next = process.step(*z, hh.income_class, outcome, rng);
                    if next != *z {
                        let unit = SHOCK_FRACTION * hh.income;
                        hh.income += if next > *z { unit } else { -unit };
                        *z = next;
                    }
                    let (c, short) =
                        ifp::month_consumption(&rational.policy, hh.net_worth, *z, hh.expenses);
                    let gross = if rational.model.a_r > 0.0 {
                        let zeta: f64 = rng.sample(StandardNormal);
                        (rational.model.a_r * zeta + rational.model.b_r).exp()
                    } else {
                        rational.model.deterministic_return()
                    };
                    hh.insolvent |= short;
                    hh.net_worth = gross * (hh.net_worth - c) + hh.effective_income();
                }
            }
            if !(hh.income.is_finite() && hh.net_worth.is_finite() && hh.health.is_finite()) {
                return Err(Error::Household {
                    household: hh.id,
                    round,
                    message: "attribute became non-finite".into(),
                });
            }
            Ok(())
        };

        let results: Vec<Result<()>> = match z_states {
            None => {
                if cfg.parallel {
                    self.households
                        .par_iter_mut()
                        .zip(self.rngs.par_iter_mut())
                        .map(|(hh, rng)| step(hh, rng, None))
                        .collect()
                } else {
                    self.households
                        .iter_mut()
                        .zip(self.rngs.iter_mut())
                        .map(|(hh, rng)| step(hh, rng, None))
                        .collect()
                }
            }
            Some(mut z) => {
                let results = if cfg.parallel {
                    self.households
                        .par_iter_mut()
                        .zip(self.rngs.par_iter_mut())
                        .zip(z.par_iter_mut())
                        .map(|((hh, rng), z)| step(hh, rng, Some(z)))
                        .collect()
                } else {
                    self.households
                        .iter_mut()
                        .zip(self.rngs.iter_mut())
                        .zip(z.iter_mut())
                        .map(|((hh, rng), z)| step(hh, rng, Some(z)))
                        .collect()
                };
                if let Some(r) = self.rational.as_mut() {
                    r.z = z;
                }
                results
            }
        };
        if let Some(err) = results.into_iter().find_map(Result::err) {
            return Err(err);
        }

        // Reference groups are the income deciles at the start of the round.
        let group_means = population::decile_mean_incomes(&self.households, &self.states);
        let health = self.cfg.health;
        for (hh, st) in self.households.iter_mut().zip(&self.states) {
            hh.health =
                population::update_health(hh, group_means[st.income as usize], &health) + hh.health_adjustment;
        }

        self.states = population::assign_deciles(&self.households);
        for (seqs, st) in self.sequences.iter_mut().zip(&self.states) {
            for attribute in Attribute::ALL {
                seqs[attribute.index()].push(attribute.of(st));
            }
        }
        let params = self.cfg.precarity;
        let row: Vec<[f64; 3]> = if self.cfg.parallel {
            self.sequences.par_iter().map(|s| index_row(s, &params)).collect()
        } else {
            self.sequences.iter().map(|s| index_row(s, &params)).collect()
        };
        self.precarity.push(row);
        self.round = round;
        log::debug!("round {round} complete");
        Ok(())
    }

    pub fn into_record(self) -> TrajectoryRecord {
        TrajectoryRecord {
            income_classes: self.households.iter().map(|h| h.income_class).collect(),
            sequences: self.sequences,
            precarity: self.precarity,
        }
    }
}

/// Runs every configured round and returns the full trajectory record.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<TrajectoryRecord> {
    let mut sim = Simulation::new(cfg)?;
    for _ in 0..cfg.rounds {
        sim.run_round()?;
    }
    Ok(sim.into_record())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Outcome;

    fn small(model: AgentModel) -> SimulationConfig {
        SimulationConfig {
            rounds: 4,
            agent_model: model,
            seed: 11,
            population: PopulationSpec {
                n: 100,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_rounds_is_initial_state() {
        let cfg = small(AgentModel::Mdp);
        let sim = Simulation::new(&cfg).unwrap();
        let record = sim.into_record();
        assert_eq!(record.rounds(), 0);
        for (seqs, p) in record.sequences.iter().zip(&record.precarity[0]) {
            for a in Attribute::ALL {
                let r = (9.0 - seqs[a.index()].states()[0] as f64) / 9.0;
                assert!((p[a.index()] - 0.2 * r).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn forced_stay_single_household() {
        let mut cfg = small(AgentModel::Mdp);
        for class in IncomeClass::ALL {
            for outcome in Outcome::ALL {
                cfg.transitions.set_row(class, outcome, [1.0, 0.0, 0.0, 0.0]);
            }
        }
        cfg.population.n = 1;
        let record = run_simulation(&cfg).unwrap();
        for seq in &record.sequences[0] {
            assert!(seq.states().iter().all(|&s| s == seq.states()[0]));
        }
        for round in &record.precarity {
            for &p in &round[0] {
                assert_eq!(p, 0.2);
            }
        }
    }

    #[test]
    fn sequences_grow_one_per_round_and_population_is_conserved() {
        for model in [AgentModel::Mdp, AgentModel::Ifp] {
            let cfg = small(model);
            let record = run_simulation(&cfg).unwrap();
            assert_eq!(record.sequences.len(), 100);
            assert_eq!(record.precarity.len(), 5);
            assert!(record.precarity.iter().all(|r| r.len() == 100));
            assert!(record.sequences.iter().flatten().all(|s| s.len() == 5));
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        for model in [AgentModel::Mdp, AgentModel::Ifp] {
            let mut cfg = small(model);
            let par = run_simulation(&cfg).unwrap();
            cfg.parallel = false;
            let seq = run_simulation(&cfg).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small(AgentModel::Mdp);
        cfg.rounds = 0;
        assert!(run_simulation(&cfg).is_err());
        let mut cfg = small(AgentModel::Mdp);
        cfg.acceptance_quantile = 2.0;
        assert!(run_simulation(&cfg).is_err());
    }
}
