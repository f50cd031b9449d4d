//! Decision-maker side: the income-threshold classifier, the exogenous state
//! process that turns decisions into income-state moves, and the two
//! interventions (fixed stimulus and precarity resistance).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Outcome, TransitionTable};
use crate::population::{DecileState, Household, IncomeClass, DECILES};

/// Fixed income threshold calibrated once on the initial population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierPolicy {
    pub acceptance_quantile: f64,
    pub threshold_income: f64,
}

/// Linear-interpolation quantile (midpoint of the two central values for
/// the median of an even-sized sample).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Threshold at the `q`-quantile of current incomes; households at or above
/// it receive positive decisions.
pub fn calibrate_threshold(population: &[Household], q: f64) -> Result<ClassifierPolicy> {
    if population.is_empty() {
        return Err(Error::param("population", "cannot calibrate on an empty population"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("acceptance_quantile", format!("{q} not in [0, 1]")));
    }
    let incomes: Vec<f64> = population.iter().map(|h| h.income).collect();
    Ok(ClassifierPolicy {
        acceptance_quantile: q,
        threshold_income: quantile(&incomes, q),
    })
}

/// Positive iff income (before transfers) reaches the threshold.
pub fn classify(hh: &Household, policy: &ClassifierPolicy) -> Outcome {
    if hh.income >= policy.threshold_income {
        Outcome::Positive
    } else {
        Outcome::Negative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Intervention {
    None,
    /// Monthly transfer to every household below the threshold.
    FixedStimulus {
        #[serde(default = "default_stimulus_amount")]
        amount: f64,
    },
    /// Scales the probability of moving to a poorer state after a negative decision.
    PrecarityResistance { negative_prob_scale: f64 },
}

fn default_stimulus_amount() -> f64 {
    1500.0
}

impl Intervention {
    pub fn describe(&self) -> String {
        match self {
            Intervention::None => "none".into(),
            Intervention::FixedStimulus { amount } => format!("fixed_stimulus(amount={amount})"),
            Intervention::PrecarityResistance { negative_prob_scale } => {
                format!("precarity_resistance(scale={negative_prob_scale})")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterventionConfig {
    pub kind: Intervention,
    pub start_round: usize,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        Self {
            kind: Intervention::None,
            start_round: 1,
        }
    }
}

impl InterventionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.start_round < 1 {
            return Err(Error::param("start_round", "must be >= 1"));
        }
        match self.kind {
            Intervention::None => Ok(()),
            Intervention::FixedStimulus { amount } => {
                if amount.is_finite() && amount >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("amount", "must be finite and >= 0"))
                }
            }
            Intervention::PrecarityResistance { negative_prob_scale } => {
                if (0.0..=1.0).contains(&negative_prob_scale) {
                    Ok(())
                } else {
                    Err(Error::param("negative_prob_scale", "must lie in [0, 1]"))
                }
            }
        }
    }

    pub fn active(&self, round: usize) -> bool {
        round >= self.start_round
    }

    /// Resistance scale in effect for `round` (1 when inactive).
    pub fn resistance_scale(&self, round: usize) -> f64 {
        match self.kind {
            Intervention::PrecarityResistance { negative_prob_scale } if self.active(round) => {
                negative_prob_scale
            }
            _ => 1.0,
        }
    }
}

/// Grants the stimulus for this round to a below-threshold household.
pub fn apply_stimulus(hh: &mut Household, cfg: &InterventionConfig, policy: &ClassifierPolicy, round: usize) {
    if let Intervention::FixedStimulus { amount } = cfg.kind {
        if cfg.active(round) && hh.income < policy.threshold_income {
            hh.transfer += amount;
        }
    }
}

/// Scales every inferior move after a negative decision by `scale` and moves
/// the freed mass to Stay.
pub fn apply_resistance(table: &TransitionTable, scale: f64) -> TransitionTable {
    let mut out = *table;
    for class in IncomeClass::ALL {
        let mut row = table.row(class, Outcome::Negative);
        let mut freed = 0.0;
        for p in &mut row[1..] {
            let kept = *p * scale;
            freed += *p - kept;
            *p = kept;
        }
        row[0] += freed;
        out.set_row(class, Outcome::Negative, row);
    }
    out
}

/// Scales transitions into lower-index (poorer) states by `scale`, moving the
/// freed mass onto the diagonal.
pub fn resist_matrix(transition: &[Vec<f64>], scale: f64) -> Vec<Vec<f64>> {
    transition
        .iter()
        .enumerate()
        .map(|(z, row)| {
            let mut out = row.clone();
            let mut freed = 0.0;
            for p in &mut out[..z] {
                let kept = *p * scale;
                freed += *p - kept;
                *p = kept;
            }
            out[z] += freed;
            out
        })
        .collect()
}

/// Exogenous income-state process for rational agents. States are income
/// deciles; a negative decision moves a household one decile down and a
/// positive one one decile up, with the move probabilities of its class
/// (1 − Stay) taken from the behavioral transition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZProcess {
    move_table: TransitionTable,
    down_scale: f64,
}

impl ZProcess {
    pub fn new(move_table: TransitionTable) -> Self {
        Self {
            move_table,
            down_scale: 1.0,
        }
    }

    pub fn with_resistance(mut self, scale: f64) -> Self {
        self.down_scale = scale;
        self
    }

    pub fn n_states(&self) -> usize {
        DECILES
    }

    /// Probability of leaving state `z` after `outcome`.
    pub fn move_probability(&self, z: usize, class: IncomeClass, outcome: Outcome) -> f64 {
        let stay = self.move_table.stay_probability(class, outcome);
        match outcome {
            Outcome::Negative if z > 0 => (1.0 - stay) * self.down_scale,
            Outcome::Positive if z + 1 < DECILES => 1.0 - stay,
            _ => 0.0,
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, z: usize, class: IncomeClass, outcome: Outcome, rng: &mut R) -> usize {
        let p = self.move_probability(z, class, outcome);
        let u: f64 = rng.random();
        if u < p {
            match outcome {
                Outcome::Negative => z - 1,
                Outcome::Positive => z + 1,
            }
        } else {
            z
        }
    }

    /// Unconditional transition matrix implied by the population's classes
    /// and decisions, averaging over the households in each state.
    pub fn matrix(&self, households: &[Household], states: &[DecileState], policy: &ClassifierPolicy) -> Vec<Vec<f64>> {
        let n = DECILES;
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for (hh, st) in households.iter().zip(states) {
            let z = st.income as usize;
            counts[z] += 1;
            let outcome = classify(hh, policy);
            let p = self.move_probability(z, hh.income_class, outcome);
            match outcome {
                Outcome::Negative => down[z] += p,
                Outcome::Positive => up[z] += p,
            }
        }
        (0..n)
            .map(|z| {
                let mut row = vec![0.0; n];
                if counts[z] > 0 {
                    let k = counts[z] as f64;
                    if z > 0 {
                        row[z - 1] = down[z] / k;
                    }
                    if z + 1 < n {
                        row[z + 1] = up[z] / k;
                    }
                }
                let off: f64 = row.iter().sum();
                row[z] = 1.0 - off;
                row
            })
            .collect()
    }
}
