//! Rational agent: infinite-horizon consumption-savings under CRRA utility,
//! solved with the endogenous grid method.
//!
//! Budget: `a' = R'·(a − c) + Y'`, `0 ≤ c ≤ a`. Income `Y` depends on an
//! exogenous Markov state `z`; gross returns are `R = exp(a_r·ζ + b_r)` with
//! `ζ` standard normal (deterministic when `a_r = 0`).

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Constant relative risk aversion utility `c^(1−γ)/(1−γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crra {
    gamma: f64,
}

impl Crra {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma_c", format!("{gamma} must be > 0")));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn utility(&self, c: f64) -> Result<f64> {
        check_positive(c, "consumption")?;
        if (self.gamma - 1.0).abs() < f64::EPSILON {
            return Ok(c.ln());
        }
        Ok(c.powf(1.0 - self.gamma) / (1.0 - self.gamma))
    }

    pub fn marginal(&self, c: f64) -> Result<f64> {
        check_positive(c, "consumption")?;
        Ok(self.marginal_unchecked(c))
    }

    pub fn marginal_inverse(&self, m: f64) -> Result<f64> {
        check_positive(m, "marginal utility")?;
        Ok(self.marginal_inverse_unchecked(m))
    }

    #[inline]
    fn marginal_unchecked(&self, c: f64) -> f64 {
        c.powf(-self.gamma)
    }

    #[inline]
    fn marginal_inverse_unchecked(&self, m: f64) -> f64 {
        m.powf(-1.0 / self.gamma)
    }
}

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
    }
}

/// Probabilists' Gauss-Hermite rule with 5 nodes: `E f(ζ) ≈ Σ wᵢ f(xᵢ)`.
const HERMITE_NODES: [f64; 5] = [
    -2.856_970_013_872_805_6,
    -1.355_626_179_974_266,
    0.0,
    1.355_626_179_974_266,
    2.856_970_013_872_805_6,
];
const HERMITE_WEIGHTS: [f64; 5] = [
    0.011_257_411_327_720_69,
    0.222_075_922_005_612_65,
    0.533_333_333_333_333_3,
    0.222_075_922_005_612_65,
    0.011_257_411_327_720_69,
];

#[derive(Debug, Clone, PartialEq)]
pub struct IfpModel {
    pub beta: f64,
    pub utility: Crra,
    pub a_r: f64,
    pub b_r: f64,
    /// Row-stochastic transition matrix of the exogenous state.
    pub transition: Vec<Vec<f64>>,
    /// Labor income in each exogenous state.
    pub income_of_state: Vec<f64>,
    /// Strictly increasing savings grid starting at 0.
    pub savings_grid: Vec<f64>,
}

impl IfpModel {
    pub fn n_states(&self) -> usize {
        self.income_of_state.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta", format!("{} not in (0, 1)", self.beta)));
        }
        if !self.a_r.is_finite() || !self.b_r.is_finite() || self.a_r < 0.0 {
            return Err(Error::param("a_r/b_r", "must be finite with a_r >= 0"));
        }
        let n = self.n_states();
        if n == 0 || self.transition.len() != n {
            return Err(Error::param("transition", "must be square with one row per state"));
        }
        for row in &self.transition {
            if row.len() != n || row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::param("transition", "rows must be non-negative with one entry per state"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::param("transition", format!("row sums to {sum}")));
            }
        }
        if self.income_of_state.iter().any(|y| !(y.is_finite() && *y >= 0.0)) {
            return Err(Error::param("income_of_state", "incomes must be finite and >= 0"));
        }
        let grid = &self.savings_grid;
        if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("savings_grid", "must start at 0 and strictly increase"));
        }
        Ok(())
    }

    /// Return draws and their probabilities.
    fn return_nodes(&self) -> Vec<(f64, f64)> {
        if self.a_r == 0.0 {
            return vec![(self.b_r.exp(), 1.0)];
        }
        HERMITE_NODES
            .iter()
            .zip(HERMITE_WEIGHTS)
            .map(|(x, w)| ((self.a_r * x + self.b_r).exp(), w))
            .collect()
    }

    /// Return used when no shock is drawn: `exp(b_r)`.
    pub fn deterministic_return(&self) -> f64 {
        self.b_r.exp()
    }
}

/// `size` savings points: 0 followed by a geometric sequence from
/// `max·first_fraction` to `max`.
pub fn geometric_grid(size: usize, max: f64, first_fraction: f64) -> Result<Vec<f64>> {
    if size < 2 || !(max > 0.0 && max.is_finite()) || !(first_fraction > 0.0 && first_fraction < 1.0) {
        return Err(Error::param("savings_grid", "need size >= 2, max > 0, fraction in (0, 1)"));
    }
    let mut grid = Vec::with_capacity(size);
    grid.push(0.0);
    if size == 2 {
        grid.push(max);
        return Ok(grid);
    }
    let first = max * first_fraction;
    let ratio = (max / first).powf(1.0 / (size - 2) as f64);
    for k in 0..size - 1 {
        grid.push(first * ratio.powi(k as i32));
    }
    *grid.last_mut().expect("non-empty") = max;
    Ok(grid)
}

/// Consumption as a function of assets, one piecewise-linear curve per
/// exogenous state. Below the first asset point the household consumes
/// everything; above the last point the final segment is extended.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionPolicy {
    assets: Vec<Vec<f64>>,
    consumption: Vec<Vec<f64>>,
}

impl ConsumptionPolicy {
    pub fn new(assets: Vec<Vec<f64>>, consumption: Vec<Vec<f64>>) -> Result<Self> {
        if assets.len() != consumption.len() || assets.is_empty() {
            return Err(Error::param("policy", "one curve per state required"));
        }
        for (a, c) in assets.iter().zip(&consumption) {
            if a.len() != c.len() || a.is_empty() {
                return Err(Error::param("policy", "asset and consumption grids differ in length"));
            }
            if a.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::param("policy", "asset grid must be non-decreasing"));
            }
        }
        Ok(Self { assets, consumption })
    }

    /// Consume-everything policy on the savings grid.
    pub fn consume_all(model: &IfpModel) -> Self {
        let grid = model.savings_grid.clone();
        let n = model.n_states();
        Self {
            assets: vec![grid.clone(); n],
            consumption: vec![grid; n],
        }
    }

    pub fn n_states(&self) -> usize {
        self.assets.len()
    }

    pub fn assets(&self, z: usize) -> &[f64] {
        &self.assets[z]
    }

    pub fn consumption(&self, z: usize) -> &[f64] {
        &self.consumption[z]
    }

    /// Optimal consumption at assets `a` in state `z`, never above `a`.
    pub fn evaluate(&self, a: f64, z: usize) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let xs = &self.assets[z];
        let ys = &self.consumption[z];
        if a <= xs[0] {
            return a;
        }
        let n = xs.len();
        if n == 1 {
            return ys[0].min(a);
        }
        let hi = xs.partition_point(|&x| x < a).clamp(1, n - 1);
        let (x0, x1, y0, y1) = (xs[hi - 1], xs[hi], ys[hi - 1], ys[hi]);
        let c = if x1 > x0 {
            y0 + (y1 - y0) * (a - x0) / (x1 - x0)
        } else {
            y1
        };
        c.min(a)
    }

    /// Largest absolute difference between consumption grids.
    pub fn distance(&self, other: &ConsumptionPolicy) -> f64 {
        self.consumption
            .iter()
            .zip(&other.consumption)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// `z,a,c` rows with a header, for inspection.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,a,c\n");
        for z in 0..self.n_states() {
            for (a, c) in self.assets[z].iter().zip(&self.consumption[z]) {
                let _ = writeln!(out, "{z},{a},{c}");
            }
        }
        out
    }
}

/// One Coleman-operator update via the endogenous grid.
pub fn egm_step(policy: &ConsumptionPolicy, model: &IfpModel) -> Result<ConsumptionPolicy> {
    let n = model.n_states();
    if policy.n_states() != n {
        return Err(Error::param("policy", "state count differs from model"));
    }
    let returns = model.return_nodes();
    let u = model.utility;
    let mut assets = Vec::with_capacity(n);
    let mut consumption = Vec::with_capacity(n);
    for z in 0..n {
        let mut a_z = Vec::with_capacity(model.savings_grid.len());
        let mut c_z = Vec::with_capacity(model.savings_grid.len());
        for &s in &model.savings_grid {
            let mut expectation = 0.0;
            for (z_next, &p) in model.transition[z].iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let y = model.income_of_state[z_next];
                for &(r, w) in &returns {
                    let c_next = policy.evaluate(r * s + y, z_next);
                    expectation += p * w * r * u.marginal_unchecked(c_next);
                }
            }
            let rhs = model.beta * expectation;
            if rhs.is_nan() || rhs <= 0.0 {
                return Err(Error::Domain(format!(
                    "expected marginal utility is {rhs} at s = {s}, z = {z}"
                )));
            }
            let c = u.marginal_inverse_unchecked(rhs);
            c_z.push(c);
            a_z.push(c + s);
        }
        assets.push(a_z);
        consumption.push(c_z);
    }
    Ok(ConsumptionPolicy { assets, consumption })
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: ConsumptionPolicy,
    pub distance: f64,
    pub iterations: usize,
    /// Distance after each iteration.
    pub history: Vec<f64>,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 5_000;

/// Iterates [`egm_step`] from the consume-all policy until successive
/// consumption grids are within `tol` in the sup norm.
pub fn solve_policy(model: &IfpModel, tol: f64, max_iter: usize) -> Result<Solution> {
    model.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param("tol", "must be > 0"));
    }
    let mut policy = ConsumptionPolicy::consume_all(model);
    let mut history = Vec::new();
    let mut distance = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next = egm_step(&policy, model)?;
        distance = next.distance(&policy);
        history.push(distance);
        policy = next;
        if distance < tol {
            log::debug!("policy converged after {iteration} iterations (distance {distance:e})");
            return Ok(Solution {
                policy,
                distance,
                iterations: iteration,
                history,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathStep {
    /// Assets entering the month.
    pub assets: f64,
    pub consumption: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsumptionPath {
    pub steps: Vec<PathStep>,
    pub final_assets: f64,
    /// Some month began with negative assets or with assets below basic needs.
    pub insolvent: bool,
}

/// Consumption for one month: the policy value, raised to basic needs when
/// assets cover them and capped by available assets. Returns the amount and
/// whether the household could not cover basic needs.
pub fn month_consumption(policy: &ConsumptionPolicy, assets: f64, z: usize, basic_needs: f64) -> (f64, bool) {
    if assets < 0.0 {
        return (0.0, true);
    }
    if assets < basic_needs {
        return (assets, true);
    }
    let c = policy.evaluate(assets, z).max(basic_needs).min(assets);
    (c, false)
}

/// Simulates consumption and assets month by month. `incomes[t]` and
/// `returns[t]` are the income and gross return realized at the end of month
/// `t`; consumption in month `t` depends only on `(a_t, z_t)`.
pub fn simulate_path(
    initial_assets: f64,
    basic_needs: f64,
    policy: &ConsumptionPolicy,
    z_path: &[usize],
    incomes: &[f64],
    returns: &[f64],
) -> Result<ConsumptionPath> {
    if incomes.len() != z_path.len() || returns.len() != z_path.len() {
        return Err(Error::param("simulate_path", "z, income and return paths differ in length"));
    }
    if let Some(&z) = z_path.iter().find(|&&z| z >= policy.n_states()) {
        return Err(Error::param("simulate_path", format!("state {z} outside policy")));
    }
    let mut a = initial_assets;
    let mut insolvent = false;
    let mut steps = Vec::with_capacity(z_path.len());
    for t in 0..z_path.len() {
        let (c, short) = month_consumption(policy, a, z_path[t], basic_needs);
        insolvent |= short;
        steps.push(PathStep {
            assets: a,
            consumption: c,
        });
        a = returns[t] * (a - c) + incomes[t];
    }
    Ok(ConsumptionPath {
        steps,
        final_assets: a,
        insolvent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state(beta: f64, income: f64, grid: Vec<f64>) -> IfpModel {
        IfpModel {
            beta,
            utility: Crra::new(2.0).unwrap(),
            a_r: 0.0,
            b_r: 0.0,
            transition: vec![vec![1.0]],
            income_of_state: vec![income],
            savings_grid: grid,
        }
    }

    #[test]
    fn crra_values() {
        let u = Crra::new(2.0).unwrap();
        assert_eq!(u.utility(1.0).unwrap(), -1.0);
        assert_eq!(u.marginal(1.0).unwrap(), 1.0);
        assert_eq!(u.marginal(2.0).unwrap(), 0.25);
        for c in [0.01, 0.7, 3.0, 1234.5] {
            let back = u.marginal_inverse(u.marginal(c).unwrap()).unwrap();
            assert!((back - c).abs() <= 1e-12 * c);
        }
        assert!(u.utility(0.0).is_err());
        assert!(u.marginal(-1.0).is_err());
        assert!(u.marginal_inverse(0.0).is_err());
        assert!(Crra::new(0.0).is_err());
    }

    #[test]
    fn hermite_rule_matches_normal_moments() {
        let m0: f64 = HERMITE_WEIGHTS.iter().sum();
        let m2: f64 = HERMITE_NODES.iter().zip(HERMITE_WEIGHTS).map(|(x, w)| w * x * x).sum();
        let m4: f64 = HERMITE_NODES.iter().zip(HERMITE_WEIGHTS).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m0 - 1.0).abs() < 1e-12);
        assert!((m2 - 1.0).abs() < 1e-12);
        assert!((m4 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn first_iterate_on_three_point_grid() {
        // beta = 1/2, gamma = 2, Y = 1, R = 1: c_i = (s_i + 1)·√2
        let model = one_state(0.5, 1.0, vec![0.0, 1.0, 2.0]);
        let next = egm_step(&ConsumptionPolicy::consume_all(&model), &model).unwrap();
        let r2 = 2f64.sqrt();
        let expected_c = [r2, 2.0 * r2, 3.0 * r2];
        for (i, want) in expected_c.iter().enumerate() {
            assert!((next.consumption(0)[i] - want).abs() < 1e-12);
            assert!((next.assets(0)[i] - (want + i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn first_iterate_two_states() {
        // P = [[.5, .5], [0, 1]], Y = (1, 3), beta = 0.9, s = 1:
        // z=0: E = .5·u'(2) + .5·u'(4) = .5/4 + .5/16 = 0.15625
        let model = IfpModel {
            transition: vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            income_of_state: vec![1.0, 3.0],
            ..one_state(0.9, 1.0, vec![0.0, 1.0, 5.0])
        };
        let next = egm_step(&ConsumptionPolicy::consume_all(&model), &model).unwrap();
        let c = (0.9f64 * 0.15625).powf(-0.5);
        assert!((next.consumption(0)[1] - c).abs() < 1e-12);
        let c = (0.9f64 / 16.0).powf(-0.5);
        assert!((next.consumption(1)[1] - c).abs() < 1e-12);
    }

    #[test]
    fn impatient_agent_consumes_everything() {
        let grid = geometric_grid(20, 100.0, 1e-3).unwrap();
        let model = one_state(1e-12, 1.0, grid);
        let sol = solve_policy(&model, 1e-6, 100).unwrap();
        let first = sol.policy.assets(0)[0];
        assert!(first > 1e4);
        for a in [0.5, 10.0, 99.0, 1000.0] {
            assert_eq!(sol.policy.evaluate(a, 0), a);
        }
    }

    #[test]
    fn loose_tolerance_stops_after_one_step() {
        let model = one_state(0.9, 1.0, geometric_grid(30, 20.0, 1e-3).unwrap());
        let sol = solve_policy(&model, 1e9, 10).unwrap();
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn non_convergence_reports_distance() {
        let model = one_state(0.99, 1.0, geometric_grid(30, 20.0, 1e-3).unwrap());
        match solve_policy(&model, 1e-12, 3) {
            Err(Error::NonConvergence { iterations, distance }) => {
                assert_eq!(iterations, 3);
                assert!(distance > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn geometric_grid_shape() {
        let g = geometric_grid(100, 1_000.0, 1e-4).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.1).abs() < 1e-12);
        assert_eq!(g[99], 1_000.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_assets_zero_income_path() {
        let model = one_state(0.9, 1.0, geometric_grid(10, 10.0, 1e-2).unwrap());
        let policy = solve_policy(&model, 1e-8, 1000).unwrap().policy;
        let path = simulate_path(0.0, 0.0, &policy, &[0; 5], &[0.0; 5], &[1.0; 5]).unwrap();
        assert!(path.steps.iter().all(|s| s.assets == 0.0 && s.consumption == 0.0));
        assert_eq!(path.final_assets, 0.0);
    }

    #[test]
    fn basic_needs_floor_and_insolvency() {
        let model = one_state(0.9, 1.0, geometric_grid(10, 10.0, 1e-2).unwrap());
        let policy = solve_policy(&model, 1e-8, 1000).unwrap().policy;
        assert_eq!(month_consumption(&policy, -5.0, 0, 1.0), (0.0, true));
        assert_eq!(month_consumption(&policy, 0.5, 0, 1.0), (0.5, true));
        let (c, short) = month_consumption(&policy, 8.0, 0, 3.0);
        assert!(!short && (3.0..=8.0).contains(&c));
    }

    #[test]
    fn rejects_bad_models() {
        let mut m = one_state(1.2, 1.0, vec![0.0, 1.0]);
        assert!(m.validate().is_err());
        m.beta = 0.9;
        m.savings_grid = vec![0.5, 1.0];
        assert!(m.validate().is_err());
        m.savings_grid = vec![0.0, 1.0];
        m.transition = vec![vec![0.7]];
        assert!(m.validate().is_err());
    }
}
