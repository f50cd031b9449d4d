#![allow(dead_code)]

use std::collections::BTreeMap;

/// Straight-from-definition precarity index, written without reference to
/// the library's helpers.
pub fn oracle_index(states: &[usize], size: usize, lambda: f64, alpha: f64, gamma: f64) -> f64 {
    let top = size as f64 - 1.0;
    let r = (top - states[0] as f64) / top;
    if states.len() == 1 {
        return lambda * r;
    }

    let best = states.iter().copied().fold(0, usize::max);
    let mut down = 0.0;
    let mut up = 0.0;
    let mut all = 0.0;
    for i in 1..states.len() {
        let w = 1.0 + best as f64 - states[i] as f64;
        all += w;
        if states[i] < states[i - 1] {
            down += w;
        }
        if states[i] > states[i - 1] {
            up += w;
        }
    }
    let q = down / all - up / all;

    let mut freq: BTreeMap<usize, f64> = BTreeMap::new();
    for &s in states {
        *freq.entry(s).or_default() += 1.0;
    }
    let n = states.len() as f64;
    let mut h = 0.0;
    for k in freq.values() {
        h += (k / n) * (n / k).ln();
    }
    let h = h / (size as f64).ln();
    let mut changes = 0.0;
    for i in 1..states.len() {
        if states[i] != states[i - 1] {
            changes += 1.0;
        }
    }
    let t = changes / (n - 1.0);
    let c = (h * t).sqrt();
    lambda * r + (1.0 - lambda) * c.powf(alpha) * (1.0 + q).powf(gamma)
}

/// Every sequence over `0..size` with length in `1..=max_len`.
pub fn all_sequences(size: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = (0..size).map(|s| vec![s]).collect();
    for _ in 0..max_len {
        out.extend(layer.iter().cloned());
        layer = layer
            .iter()
            .flat_map(|v| {
                (0..size).map(move |s| {
                    let mut w = v.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out
}

pub struct VfiSolution {
    pub grid: Vec<f64>,
    pub value: Vec<Vec<f64>>,
    pub consumption: Vec<Vec<f64>>,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    let i = xs.partition_point(|&v| v < x).clamp(1, n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
}

/// Value function iteration for `V(a, z) = max_{0 ≤ s ≤ a} u(a − s) + β E V(R s + y', z')`
/// with CRRA utility, a uniform asset grid, linear interpolation of `V` and a
/// golden-section search over savings.
#[allow(clippy::too_many_arguments)]
pub fn vfi(
    beta: f64,
    gamma: f64,
    gross_return: f64,
    transition: &[Vec<f64>],
    incomes: &[f64],
    a_max: f64,
    points: usize,
    iterations: usize,
) -> VfiSolution {
    let u = |c: f64| {
        if gamma == 1.0 {
            c.ln()
        } else {
            c.powf(1.0 - gamma) / (1.0 - gamma)
        }
    };
    let n = incomes.len();
    let a_min = incomes.iter().copied().fold(f64::INFINITY, f64::min);
    let grid: Vec<f64> = (0..points)
        .map(|i| a_min + (a_max - a_min) * i as f64 / (points - 1) as f64)
        .collect();
    let mut value: Vec<Vec<f64>> = (0..n).map(|_| grid.iter().map(|&a| u(a)).collect()).collect();
    let mut consumption = vec![grid.clone(); n];
    let s_cap = (a_max - incomes.iter().copied().fold(0.0, f64::max)) / gross_return;
    for _ in 0..iterations {
        let objective = |z: usize, a: f64, s: f64, value: &[Vec<f64>]| {
            let mut ev = 0.0;
            for (zn, &p) in transition[z].iter().enumerate() {
                ev += p * interp(&grid, &value[zn], gross_return * s + incomes[zn]);
            }
            u(a - s) + beta * ev
        };
        let mut next = value.clone();
        for z in 0..n {
            for (i, &a) in grid.iter().enumerate() {
                let (mut lo, mut hi) = (0.0, (a * (1.0 - 1e-12)).min(s_cap));
                let g = (5f64.sqrt() - 1.0) / 2.0;
                let mut x1 = hi - g * (hi - lo);
                let mut x2 = lo + g * (hi - lo);
                let mut f1 = objective(z, a, x1, &value);
                let mut f2 = objective(z, a, x2, &value);
                while hi - lo > 1e-10 {
                    if f1 < f2 {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + g * (hi - lo);
                        f2 = objective(z, a, x2, &value);
                    } else {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - g * (hi - lo);
                        f1 = objective(z, a, x1, &value);
                    }
                }
                let mut s = 0.5 * (lo + hi);
                let mut best = objective(z, a, s, &value);
                let corner = objective(z, a, 0.0, &value);
                if corner >= best {
                    s = 0.0;
                    best = corner;
                }
                next[z][i] = best;
                consumption[z][i] = a - s;
            }
        }
        value = next;
    }
    VfiSolution {
        grid,
        value,
        consumption,
    }
}

impl VfiSolution {
    pub fn consumption_at(&self, a: f64, z: usize) -> f64 {
        interp(&self.grid, &self.consumption[z], a)
    }
}
