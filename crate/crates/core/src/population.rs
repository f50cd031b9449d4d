//! Household population: initialization, decile states and the health update.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ExpenditureTable, PercentileTable};

pub const DECILES: usize = 10;

/// Stream tag mixed into the master seed for population sampling.
const POPULATION_STREAM: u64 = 0x5eed_0f90_901a_7e00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomeClass {
    Low,
    Middle,
    High,
}

impl IncomeClass {
    pub const ALL: [IncomeClass; 3] = [IncomeClass::Low, IncomeClass::Middle, IncomeClass::High];

    pub fn as_str(self) -> &'static str {
        match self {
            IncomeClass::Low => "low",
            IncomeClass::Middle => "middle",
            IncomeClass::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Household {
    pub id: usize,
    /// Monthly income before any round-specific transfer.
    pub income: f64,
    /// Transfer received this round (stimulus); reset every round.
    pub transfer: f64,
    pub net_worth: f64,
    pub health: f64,
    /// Cumulative health score changes from agent actions.
    pub health_adjustment: f64,
    /// Monthly basic expenditures.
    pub expenses: f64,
    pub income_class: IncomeClass,
    /// Set once a household enters a month with negative assets.
    pub insolvent: bool,
}

impl Household {
    /// Income observed this round, including transfers.
    pub fn effective_income(&self) -> f64 {
        self.income + self.transfer
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecileState {
    pub income: u8,
    pub net_worth: u8,
    pub health: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HealthModel {
    pub h_bar: f64,
    pub eta: f64,
    pub sigma_h: f64,
}

impl Default for HealthModel {
    fn default() -> Self {
        Self {
            h_bar: 2.0,
            eta: 1.0,
            sigma_h: 1e-20,
        }
    }
}

impl HealthModel {
    pub fn validate(&self) -> Result<()> {
        if !self.h_bar.is_finite() {
            return Err(Error::param("h_bar", "must be finite"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", "must be > 0"));
        }
        if !(self.sigma_h > 0.0 && self.sigma_h.is_finite()) {
            return Err(Error::param("sigma_h", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IncomeSource {
    /// Log-normal monthly incomes.
    Synthetic { log_mean: f64, log_sd: f64 },
    /// One income per household, in file order.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub n: usize,
    pub income: IncomeSource,
    pub net_worth: PercentileTable,
    pub expenditures: ExpenditureTable,
    pub h_bar: f64,
    /// Population fractions for the Low, Middle and High income classes.
    pub class_cutoffs: [f64; 3],
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            n: 10_000,
            income: IncomeSource::Synthetic {
                log_mean: 8.65,
                log_sd: 0.85,
            },
            net_worth: PercentileTable::default(),
            expenditures: ExpenditureTable::default(),
            h_bar: HealthModel::default().h_bar,
            class_cutoffs: [0.29, 0.52, 0.19],
        }
    }
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "population must not be empty"));
        }
        if self.class_cutoffs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::param("class_cutoffs", "fractions must lie in [0, 1]"));
        }
        let sum: f64 = self.class_cutoffs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param("class_cutoffs", format!("fractions sum to {sum}, not 1")));
        }
        match &self.income {
            IncomeSource::Synthetic { log_mean, log_sd } => {
                if !log_mean.is_finite() || !(log_sd.is_finite() && *log_sd >= 0.0) {
                    return Err(Error::param("income", "log-normal parameters must be finite, sd >= 0"));
                }
            }
            IncomeSource::Values(values) => {
                if values.len() != self.n {
                    return Err(Error::param(
                        "n",
                        format!("population size {} but income file has {} rows", self.n, values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::param("income", "incomes must be finite and >= 0"));
                }
            }
        }
        if !self.h_bar.is_finite() {
            return Err(Error::param("h_bar", "must be finite"));
        }
        Ok(())
    }
}

/// Positions of `values` in ascending order, ties by index.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

/// Rank-based labels: `label_at(position)` for each position in sorted order,
/// with every member of a tie group taking the label of the group's first
/// position.
fn rank_labels<T: Copy>(values: &[f64], label_at: impl Fn(usize) -> T) -> Vec<Option<T>> {
    let order = sorted_order(values);
    let mut labels = vec![None; values.len()];
    let mut group_label = None;
    for (pos, &idx) in order.iter().enumerate() {
        let starts_group = pos == 0 || values[order[pos - 1]].total_cmp(&values[idx]) != Ordering::Equal;
        if starts_group {
            group_label = Some(label_at(pos));
        }
        labels[idx] = group_label;
    }
    labels
}

/// Equal-frequency decile of each value (0 = lowest). Ties share the decile
/// of the first member of the tie group.
pub fn deciles(values: &[f64]) -> Vec<u8> {
    let n = values.len();
    rank_labels(values, |pos| (pos * DECILES / n) as u8)
        .into_iter()
        .map(|d| d.expect("every position labeled"))
        .collect()
}

/// Income-class labels from rank cutoffs over the given incomes.
pub fn income_classes(incomes: &[f64], cutoffs: [f64; 3]) -> Vec<IncomeClass> {
    let n = incomes.len() as f64;
    let low_end = (cutoffs[0] * n).round() as usize;
    let mid_end = ((cutoffs[0] + cutoffs[1]) * n).round() as usize;
    rank_labels(incomes, |pos| {
        if pos < low_end {
            IncomeClass::Low
        } else if pos < mid_end {
            IncomeClass::Middle
        } else {
            IncomeClass::High
        }
    })
    .into_iter()
    .map(|c| c.expect("every position labeled"))
    .collect()
}

/// Mid-rank percentile (0–100) of each value; tied values share a percentile.
fn percentiles(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let order = sorted_order(values);
    let mut out = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[order[end + 1]].total_cmp(&values[order[start]]) == Ordering::Equal {
            end += 1;
        }
        let mid = (start + end) as f64 / 2.0;
        let pct = 100.0 * (mid + 0.5) / n as f64;
        for &idx in &order[start..=end] {
            out[idx] = pct;
        }
        start = end + 1;
    }
    out
}

fn sample_incomes(spec: &PopulationSpec, seed: u64) -> Result<Vec<f64>> {
    match &spec.income {
        IncomeSource::Values(values) => Ok(values.clone()),
        IncomeSource::Synthetic { log_mean, log_sd } => {
            if *log_sd == 0.0 {
                return Ok(vec![log_mean.exp(); spec.n]);
            }
            let dist = LogNormal::new(*log_mean, *log_sd)
                .map_err(|e| Error::param("income", e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ POPULATION_STREAM);
            Ok((0..spec.n).map(|_| dist.sample(&mut rng)).collect())
        }
    }
}

/// Builds the initial population. Identical `(spec, seed)` pairs reproduce
/// identical populations.
pub fn build_population(spec: &PopulationSpec, seed: u64) -> Result<Vec<Household>> {
    spec.validate()?;
    let incomes = sample_incomes(spec, seed)?;
    let income_deciles = deciles(&incomes);
    let pct = percentiles(&incomes);
    let classes = income_classes(&incomes, spec.class_cutoffs);
    Ok(incomes
        .iter()
        .enumerate()
        .map(|(id, &income)| Household {
            id,
            income,
            transfer: 0.0,
            net_worth: spec.net_worth.lookup(pct[id]),
            health: spec.h_bar,
            health_adjustment: 0.0,
            expenses: spec.expenditures.for_decile(income_deciles[id]),
            income_class: classes[id],
            insolvent: false,
        })
        .collect())
}

/// Decile states of every household, each attribute binned independently.
pub fn assign_deciles(households: &[Household]) -> Vec<DecileState> {
    let income: Vec<f64> = households.iter().map(Household::effective_income).collect();
    let net_worth: Vec<f64> = households.iter().map(|h| h.net_worth).collect();
    let health: Vec<f64> = households.iter().map(|h| h.health).collect();
    let (i, w, h) = (deciles(&income), deciles(&net_worth), deciles(&health));
    (0..households.len())
        .map(|k| DecileState {
            income: i[k],
            net_worth: w[k],
            health: h[k],
        })
        .collect()
}

/// Mean effective income per income decile (0.0 for empty deciles).
pub fn decile_mean_incomes(households: &[Household], states: &[DecileState]) -> [f64; DECILES] {
    let mut sums = [0.0; DECILES];
    let mut counts = [0usize; DECILES];
    for (hh, st) in households.iter().zip(states) {
        sums[st.income as usize] += hh.effective_income();
        counts[st.income as usize] += 1;
    }
    let mut means = [0.0; DECILES];
    for d in 0..DECILES {
        if counts[d] > 0 {
            means[d] = sums[d] / counts[d] as f64;
        }
    }
    means
}

/// Health relative to the reference group's mean income `group_mean_income`:
/// `h̄ + η·d − σ·d²` with `d = w_i − w_g`.
pub fn update_health(hh: &Household, group_mean_income: f64, model: &HealthModel) -> f64 {
    let d = hh.effective_income() - group_mean_income;
    model.h_bar + model.eta * d - model.sigma_h * d * d
}
