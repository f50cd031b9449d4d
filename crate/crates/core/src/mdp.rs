//! Bounded-rationality agent: after each decision a household stochastically
//! stays put or takes one of three class-typical moves.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{Household, IncomeClass};

/// Classifier decision received by a household in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Positive,
    Negative,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Negative, Outcome::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Positive => "positive",
            Outcome::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MdpAction {
    Stay,
    BurnSavings,
    SellHealthAsset,
    DropInsurance,
    SaveToNetWorth,
    BetterHealthPlan,
    ConsumeMore,
}

impl MdpAction {
    /// Actions available after `outcome`, in table column order.
    pub fn choices(outcome: Outcome) -> [MdpAction; 4] {
        match outcome {
            Outcome::Negative => [
                MdpAction::Stay,
                MdpAction::BurnSavings,
                MdpAction::SellHealthAsset,
                MdpAction::DropInsurance,
            ],
            Outcome::Positive => [
                MdpAction::Stay,
                MdpAction::SaveToNetWorth,
                MdpAction::BetterHealthPlan,
                MdpAction::ConsumeMore,
            ],
        }
    }

    pub fn outcome(self) -> Option<Outcome> {
        match self {
            MdpAction::Stay => None,
            MdpAction::BurnSavings | MdpAction::SellHealthAsset | MdpAction::DropInsurance => {
                Some(Outcome::Negative)
            }
            MdpAction::SaveToNetWorth | MdpAction::BetterHealthPlan | MdpAction::ConsumeMore => {
                Some(Outcome::Positive)
            }
        }
    }
}

/// Action probabilities per (income class, outcome). Each row is ordered as
/// [`MdpAction::choices`]: Stay first, then the three moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionTable {
    rows: [[[f64; 4]; 2]; 3],
}

const ROW_TOLERANCE: f64 = 1e-12;

fn class_index(class: IncomeClass) -> usize {
    match class {
        IncomeClass::Low => 0,
        IncomeClass::Middle => 1,
        IncomeClass::High => 2,
    }
}

fn outcome_index(outcome: Outcome) -> usize {
    match outcome {
        Outcome::Negative => 0,
        Outcome::Positive => 1,
    }
}

impl Default for TransitionTable {
    fn default() -> Self {
        let ninth = 1.0 / 9.0;
        let eight_27 = 8.0 / 27.0;
        let sixth = 1.0 / 6.0;
        let cautious = [ninth, eight_27, eight_27, eight_27];
        let even = [0.5, sixth, sixth, sixth];
        let steady = [0.55, 0.15, 0.15, 0.15];
        Self {
            rows: [
                // Low: [negative, positive]
                [cautious, steady],
                [even, even],
                // High
                [steady, cautious],
            ],
        }
    }
}

impl TransitionTable {
    pub fn row(&self, class: IncomeClass, outcome: Outcome) -> [f64; 4] {
        self.rows[class_index(class)][outcome_index(outcome)]
    }

    pub fn stay_probability(&self, class: IncomeClass, outcome: Outcome) -> f64 {
        self.row(class, outcome)[0]
    }

    pub fn probability(&self, class: IncomeClass, outcome: Outcome, action: MdpAction) -> f64 {
        MdpAction::choices(outcome)
            .iter()
            .position(|&a| a == action)
            .map(|k| self.row(class, outcome)[k])
            .unwrap_or(0.0)
    }

    /// Overrides one entry. Row sums are checked by [`TransitionTable::validate`].
    pub fn set(&mut self, class: IncomeClass, outcome: Outcome, action: MdpAction, p: f64) -> Result<()> {
        let k = MdpAction::choices(outcome)
            .iter()
            .position(|&a| a == action)
            .ok_or_else(|| {
                Error::param(
                    "transition table",
                    format!("action {action:?} is not available after a {} outcome", outcome.as_str()),
                )
            })?;
        self.rows[class_index(class)][outcome_index(outcome)][k] = p;
        Ok(())
    }

    pub fn set_row(&mut self, class: IncomeClass, outcome: Outcome, row: [f64; 4]) {
        self.rows[class_index(class)][outcome_index(outcome)] = row;
    }

    pub fn validate(&self) -> Result<()> {
        for class in IncomeClass::ALL {
            for outcome in Outcome::ALL {
                let row = self.row(class, outcome);
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::param(
                        "transition table",
                        format!("negative entry in ({}, {}) row", class.as_str(), outcome.as_str()),
                    ));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    return Err(Error::param(
                        "transition table",
                        format!("({}, {}) row sums to {sum}", class.as_str(), outcome.as_str()),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Draws an action from the (class, outcome) row.
pub fn sample_action<R: Rng + ?Sized>(
    class: IncomeClass,
    outcome: Outcome,
    table: &TransitionTable,
    rng: &mut R,
) -> MdpAction {
    let row = table.row(class, outcome);
    let choices = MdpAction::choices(outcome);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (p, action) in row.iter().zip(choices) {
        acc += p;
        if u < acc {
            return action;
        }
    }
    // u landed in the rounding slack above the cumulative sum
    choices
        .iter()
        .zip(row)
        .rev()
        .find(|(_, p)| *p > 0.0)
        .map(|(a, _)| *a)
        .unwrap_or(MdpAction::Stay)
}

/// Applies `action` to the household. `shock_unit` is the income change for
/// any non-Stay move (10% of current income in the simulation).
pub fn apply_action(hh: &mut Household, action: MdpAction, shock_unit: f64) {
    match action.outcome() {
        None => return,
        Some(Outcome::Negative) => hh.income -= shock_unit,
        Some(Outcome::Positive) => hh.income += shock_unit,
    }
    match action {
        MdpAction::BurnSavings => {
            hh.net_worth -= (hh.expenses - hh.effective_income()).max(0.0);
        }
        MdpAction::SellHealthAsset => adjust_health(hh, -1.0),
        MdpAction::DropInsurance => adjust_health(hh, -2.0),
        MdpAction::SaveToNetWorth => {
            hh.net_worth += (hh.effective_income() - hh.expenses).max(0.0);
        }
        MdpAction::BetterHealthPlan => adjust_health(hh, 1.0),
        MdpAction::ConsumeMore | MdpAction::Stay => {}
    }
}

fn adjust_health(hh: &mut Household, scores: f64) {
    hh.health += scores;
    hh.health_adjustment += scores;
}
