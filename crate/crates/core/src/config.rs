//! Scenario configuration file (TOML).
//!
//! ```toml
//! seed = 7
//! rounds = 10
//! agent_model = "mdp"            # or "ifp"
//!
//! [population]
//! n = 10000
//! class_cutoffs = [0.29, 0.52, 0.19]
//! net_worth_table = "networth.csv"     # optional, relative to this file
//! expenditure_table = "expenses.csv"   # optional
//! [population.income]
//! source = "synthetic"                 # or source = "file", path = "incomes.csv"
//! log_mean = 8.65
//! log_sd = 0.85
//!
//! [classifier]
//! quantiles = [0.5]
//!
//! [[mdp.transitions]]
//! class = "low"
//! outcome = "negative"
//! action = "stay"
//! probability = 0.2
//!
//! [[scenarios]]
//! name = "stimulus"
//! intervention = { kind = "fixed_stimulus", amount = 1500 }
//! start_round = 1
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::engine::{AgentModel, IfpSettings, SimulationConfig};
use crate::error::{Error, Result};
use crate::ingest::{self, ExpenditureTable, PercentileTable};
use crate::mdp::{MdpAction, Outcome, TransitionTable};
use crate::metrics::PrecarityParams;
use crate::policy::{Intervention, InterventionConfig};
use crate::population::{HealthModel, IncomeClass, IncomeSource, PopulationSpec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_model")]
    pub agent_model: AgentModel,
    #[serde(default = "default_true")]
    pub parallel: bool,
    #[serde(default)]
    pub population: PopulationSection,
    #[serde(default)]
    pub health: HealthSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub precarity: PrecarityParams,
    #[serde(default)]
    pub ifp: IfpSettings,
    #[serde(default)]
    pub mdp: MdpSection,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<ScenarioSection>,
}

fn default_rounds() -> usize {
    10
}

fn default_model() -> AgentModel {
    AgentModel::Mdp
}

fn default_true() -> bool {
    true
}

fn default_scenarios() -> Vec<ScenarioSection> {
    vec![ScenarioSection {
        name: "baseline".into(),
        agent_model: None,
        intervention: Intervention::None,
        start_round: 1,
    }]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSection {
    pub n: Option<usize>,
    #[serde(default = "default_cutoffs")]
    pub class_cutoffs: [f64; 3],
    #[serde(default)]
    pub income: IncomeSection,
    pub net_worth_table: Option<PathBuf>,
    pub expenditure_table: Option<PathBuf>,
}

impl Default for PopulationSection {
    fn default() -> Self {
        Self {
            n: None,
            class_cutoffs: default_cutoffs(),
            income: IncomeSection::default(),
            net_worth_table: None,
            expenditure_table: None,
        }
    }
}

fn default_cutoffs() -> [f64; 3] {
    [0.29, 0.52, 0.19]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum IncomeSection {
    Synthetic {
        #[serde(default = "default_log_mean")]
        log_mean: f64,
        #[serde(default = "default_log_sd")]
        log_sd: f64,
    },
    File {
        path: PathBuf,
    },
}

impl Default for IncomeSection {
    fn default() -> Self {
        IncomeSection::Synthetic {
            log_mean: default_log_mean(),
            log_sd: default_log_sd(),
        }
    }
}

fn default_log_mean() -> f64 {
    8.65
}

fn default_log_sd() -> f64 {
    0.85
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HealthSection {
    pub h_bar: f64,
    pub eta: f64,
    pub sigma: f64,
}

impl Default for HealthSection {
    fn default() -> Self {
        let m = HealthModel::default();
        Self {
            h_bar: m.h_bar,
            eta: m.eta,
            sigma: m.sigma_h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub acceptance_quantile: Option<f64>,
    pub quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpSection {
    #[serde(default)]
    pub transitions: Vec<TransitionOverride>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionOverride {
    pub class: IncomeClass,
    pub outcome: Outcome,
    pub action: MdpAction,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub agent_model: Option<AgentModel>,
    #[serde(default = "default_intervention")]
    pub intervention: Intervention,
    #[serde(default = "default_start_round")]
    pub start_round: usize,
}

fn default_intervention() -> Intervention {
    Intervention::None
}

fn default_start_round() -> usize {
    1
}

/// Parses config text without touching the filesystem.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// One fully resolved scenario ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub config: SimulationConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenarios: Vec<Scenario>,
    /// SHA-256 over the config text and every ingested data file.
    pub digest: String,
    pub seed: u64,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !name.starts_with('.')
}

impl ConfigFile {
    /// Reads referenced data files (relative to `base_dir`) and expands
    /// scenarios over the classifier quantiles.
    pub fn resolve(&self, base_dir: &Path, config_text: &str, seed_override: Option<u64>) -> Result<ResolvedConfig> {
        let mut hasher = Sha256::new();
        hasher.update(config_text.as_bytes());
        let mut load = |p: &Path| -> Result<(String, String)> {
            let full = base_dir.join(p);
            let text = ingest::read_to_string(&full)?;
            hasher.update(b"\0");
            hasher.update(text.as_bytes());
            Ok((text, full.display().to_string()))
        };

        let pop = &self.population;
        let income = match &pop.income {
            IncomeSection::Synthetic { log_mean, log_sd } => IncomeSource::Synthetic {
                log_mean: *log_mean,
                log_sd: *log_sd,
            },
            IncomeSection::File { path } => {
                let (text, name) = load(path)?;
                IncomeSource::Values(ingest::parse_income_table(&text, &name)?)
            }
        };
        let n = match (&income, pop.n) {
            (IncomeSource::Values(v), None) => v.len(),
            (_, Some(n)) => n,
            (IncomeSource::Synthetic { .. }, None) => 10_000,
        };
        let net_worth = match &pop.net_worth_table {
            Some(p) => {
                let (text, name) = load(p)?;
                ingest::parse_percentile_table(&text, &name)?
            }
            None => PercentileTable::default(),
        };
        let expenditures = match &pop.expenditure_table {
            Some(p) => {
                let (text, name) = load(p)?;
                ingest::parse_expenditure_table(&text, &name)?
            }
            None => ExpenditureTable::default(),
        };
        let seed = seed_override.unwrap_or(self.seed);
        hasher.update(format!("\0seed={seed}").as_bytes());
        let digest = hex::encode(hasher.finalize());

        let health = HealthModel {
            h_bar: self.health.h_bar,
            eta: self.health.eta,
            sigma_h: self.health.sigma,
        };
        let population = PopulationSpec {
            n,
            income,
            net_worth,
            expenditures,
            h_bar: health.h_bar,
            class_cutoffs: pop.class_cutoffs,
        };

        let mut transitions = TransitionTable::default();
        for o in &self.mdp.transitions {
            transitions.set(o.class, o.outcome, o.action, o.probability)?;
        }

        let quantiles = match (&self.classifier.quantiles, self.classifier.acceptance_quantile) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "classifier: give either `acceptance_quantile` or `quantiles`, not both".into(),
                ))
            }
            (Some(q), None) if q.is_empty() => {
                return Err(Error::Config("classifier.quantiles must not be empty".into()))
            }
            (Some(q), None) => q.clone(),
            (None, Some(q)) => vec![q],
            (None, None) => vec![0.5],
        };

        if self.scenarios.is_empty() {
            return Err(Error::Config("at least one scenario is required".into()));
        }
        let mut scenarios = Vec::new();
        for s in &self.scenarios {
            if !valid_name(&s.name) {
                return Err(Error::Config(format!(
                    "scenario name {:?} must be non-empty and use only letters, digits, '_', '-', '.'",
                    s.name
                )));
            }
            for &q in &quantiles {
                let name = if quantiles.len() > 1 {
                    format!("{}_q{q}", s.name)
                } else {
                    s.name.clone()
                };
                let config = SimulationConfig {
                    rounds: self.rounds,
                    agent_model: s.agent_model.unwrap_or(self.agent_model),
                    seed,
                    population: population.clone(),
                    acceptance_quantile: q,
                    intervention: InterventionConfig {
                        kind: s.intervention,
                        start_round: s.start_round,
                    },
                    precarity: self.precarity,
                    health,
                    transitions,
                    ifp: self.ifp,
                    parallel: self.parallel,
                };
                config
                    .validate()
                    .map_err(|e| Error::Config(format!("scenario `{name}`: {e}")))?;
                scenarios.push(Scenario { name, config });
            }
        }
        let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("scenario names must be unique".into()));
        }
        Ok(ResolvedConfig {
            scenarios,
            digest,
            seed,
        })
    }
}

/// Loads and resolves a config file; data paths are relative to its directory.
pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<ResolvedConfig> {
    let text = ingest::read_to_string(path)?;
    let file = parse_config(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    file.resolve(base, &text, seed_override)
}
