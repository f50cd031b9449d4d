//! Sequence-based precarity index.
//!
//! A trajectory is a sequence of ranked states (0 = most precarious). The
//! index combines three things: how bad the starting state is, the weighted
//! net share of downward moves, and how erratic the sequence is (entropy of
//! visited states times the share of state changes).
//!
//! ```text
//! p = λ·r(s₁) + (1 − λ)·c^α·(1 + q)^γ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trajectory of state ranks over a state space of `state_space_size` states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSequence {
    states: Vec<usize>,
    state_space_size: usize,
}

impl StateSequence {
    pub fn new(states: Vec<usize>, state_space_size: usize) -> Result<Self> {
        if state_space_size < 2 {
            return Err(Error::Sequence(format!(
                "state space must have at least 2 states, got {state_space_size}"
            )));
        }
        if states.is_empty() {
            return Err(Error::Sequence("sequence is empty".into()));
        }
        if let Some(&bad) = states.iter().find(|&&s| s >= state_space_size) {
            return Err(Error::Sequence(format!(
                "state {bad} outside 0..{state_space_size}"
            )));
        }
        Ok(Self {
            states,
            state_space_size,
        })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn state_space_size(&self) -> usize {
        self.state_space_size
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// View of the first `len` states. `len` is clamped to `1..=self.len()`.
    pub fn prefix(&self, len: usize) -> StateSequence {
        let len = len.clamp(1, self.states.len());
        StateSequence {
            states: self.states[..len].to_vec(),
            state_space_size: self.state_space_size,
        }
    }

    pub(crate) fn push(&mut self, state: usize) {
        debug_assert!(state < self.state_space_size);
        self.states.push(state);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecarityParams {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for PrecarityParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            alpha: 1.0,
            gamma: 1.2,
        }
    }
}

impl PrecarityParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::param("lambda", format!("{} not in [0, 1]", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("{} must be > 0", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", format!("{} must be > 0", self.gamma)));
        }
        Ok(())
    }

    /// Largest value the index can take: `λ + (1 − λ)·2^γ`.
    pub fn upper_bound(&self) -> f64 {
        self.lambda + (1.0 - self.lambda) * 2f64.powf(self.gamma)
    }
}

/// All constituent statistics of one sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceStats {
    pub q_neg: f64,
    pub q_pos: f64,
    pub q: f64,
    pub h_norm: f64,
    pub t_norm: f64,
    pub c: f64,
    pub r_start: f64,
}

/// Precariousness of the first state: 1 at rank 0, 0 at the top rank.
pub fn start_quality(seq: &StateSequence) -> f64 {
    let top = (seq.state_space_size - 1) as f64;
    (top - seq.states[0] as f64) / top
}

/// Weighted shares of downward and upward transitions.
///
/// Each consecutive pair is weighted by `1 + hops`, where `hops` is the rank
/// distance of the destination from the best state seen anywhere in the
/// sequence. Same-state pairs count toward the total weight only.
pub fn net_decline(seq: &StateSequence) -> (f64, f64, f64) {
    let states = &seq.states;
    if states.len() < 2 {
        return (0.0, 0.0, 0.0);
    }
    let best = *states.iter().max().expect("non-empty");
    let (mut neg, mut pos, mut total) = (0.0, 0.0, 0.0);
    for pair in states.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        let weight = 1.0 + (best - to) as f64;
        total += weight;
        if to < from {
            neg += weight;
        } else if to > from {
            pos += weight;
        }
    }
    let q_neg = neg / total;
    let q_pos = pos / total;
    (q_neg, q_pos, q_neg - q_pos)
}

/// Normalized entropy, normalized count of state changes, and their
/// geometric mean.
pub fn variability(seq: &StateSequence) -> Result<(f64, f64, f64)> {
    let n = seq.states.len();
    if n < 2 {
        return Err(Error::Sequence(
            "variability needs at least two states".into(),
        ));
    }
    let mut counts = vec![0usize; seq.state_space_size];
    for &s in &seq.states {
        counts[s] += 1;
    }
    let total = n as f64;
    let entropy: f64 = counts
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / total;
            -p * p.ln()
        })
        .sum();
    let h_norm = (entropy / (seq.state_space_size as f64).ln()).clamp(0.0, 1.0);
    let changes = seq.states.windows(2).filter(|w| w[0] != w[1]).count();
    let t_norm = changes as f64 / (n - 1) as f64;
    Ok((h_norm, t_norm, (h_norm * t_norm).sqrt()))
}

pub fn sequence_stats(seq: &StateSequence) -> SequenceStats {
    let r_start = start_quality(seq);
    let (q_neg, q_pos, q) = net_decline(seq);
    let (h_norm, t_norm, c) = variability(seq).unwrap_or((0.0, 0.0, 0.0));
    SequenceStats {
        q_neg,
        q_pos,
        q,
        h_norm,
        t_norm,
        c,
        r_start,
    }
}

/// Precarity index of a sequence. Single-state sequences reduce to `λ·r(s₁)`.
pub fn precarity_index(seq: &StateSequence, params: &PrecarityParams) -> f64 {
    let r_start = start_quality(seq);
    if seq.len() < 2 {
        return params.lambda * r_start;
    }
    let (_, _, q) = net_decline(seq);
    let (_, _, c) = variability(seq).expect("length checked");
    let dynamic = c.powf(params.alpha) * (1.0 + q).max(0.0).powf(params.gamma);
    params.lambda * r_start + (1.0 - params.lambda) * dynamic
}
