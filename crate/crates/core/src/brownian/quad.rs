use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::domain::{Cell1D, ExtReal};

/// Node layout for the chained integrals behind `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quadrature {
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Slot `k` is integrated over `[-c sqrt(t_k), c sqrt(t_k)]` at most.
    pub truncation: f64,
    /// Kernel contributions beyond `c` standard deviations are dropped.
    pub window: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            nodes_per_panel: 16,
            truncation: 8.0,
            window: 9.0,
            max_panels: 4096,
        }
    }
}

fn rule(n: usize) -> Vec<(f64, f64)> {
    static R16: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let make = |n: usize| {
        let mut v = GaussLegendre::new(n.max(2))
            .expect("degree >= 2")
            .into_node_weight_pairs();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    };
    if n == 16 {
        R16.get_or_init(|| make(16)).clone()
    } else {
        make(n)
    }
}

/// `P(Z <= z)` for a standard normal `Z`.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Mass of `]lo, hi]` under `N(mean, var)`, using the tail on the cell's side of the mean.
pub fn normal_mass(cell: &Cell1D, mean: f64, var: f64) -> f64 {
    let s = var.sqrt();
    let z = |x: ExtReal| match x {
        ExtReal::NegInf => f64::NEG_INFINITY,
        ExtReal::PosInf => f64::INFINITY,
        ExtReal::Finite(v) => (v - mean) / s,
    };
    let (a, b) = (z(cell.lo()), z(cell.hi()));
    let upper = |x: f64| 0.5 * libm::erfc(x / SQRT_2);
    let lower = |x: f64| 0.5 * libm::erfc(-x / SQRT_2);
    let m = if a >= 0.0 {
        upper(a) - upper(b)
    } else if b <= 0.0 {
        lower(b) - lower(a)
    } else {
        1.0 - lower(a) - upper(b)
    };
    m.max(0.0)
}

fn density(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
}

fn panel_nodes(cell: &Cell1D, t: f64, width: f64, q: &Quadrature, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let r = q.truncation * t.sqrt();
    let a = cell.lo().to_f64().max(-r);
    let b = cell.hi().to_f64().min(r);
    if !(a < b) {
        return Vec::new();
    }
    let n = (((b - a) / width).ceil() as usize).clamp(1, q.max_panels);
    let h = (b - a) / n as f64;
    let mut out = Vec::with_capacity(n * rule.len());
    for p in 0..n {
        let left = a + h * p as f64;
        for &(x, w) in rule {
            out.push((left + h * 0.5 * (x + 1.0), w * h * 0.5));
        }
    }
    out
}

/// `P(X_{t_j} in slots[j] for all j)` for a one-dimensional Brownian motion started at 0.
///
/// Full-line slots are dropped (their increments merge into the next step). The last
/// remaining slot is a closed-form normal mass; earlier ones are integrated backwards on
/// composite Gauss-Legendre nodes.
pub fn row_mass(times: &[f64], slots: &[Cell1D], q: &Quadrature) -> f64 {
    debug_assert_eq!(times.len(), slots.len());
    let mut steps: Vec<(f64, f64, Cell1D)> = Vec::with_capacity(slots.len());
    let mut prev = 0.0;
    for (&t, s) in times.iter().zip(slots) {
        if *s == Cell1D::line() {
            continue;
        }
        steps.push((t, t - prev, *s));
        prev = t;
    }
    let m = steps.len();
    match m {
        0 => return 1.0,
        1 => return normal_mass(&steps[0].2, 0.0, steps[0].1),
        _ => {}
    }
    let rule = rule(q.nodes_per_panel);
    let mut levels = Vec::with_capacity(m - 1);
    for k in 0..m - 1 {
        let (t, dt, cell) = steps[k];
        let width = 0.5 * dt.sqrt().min(steps[k + 1].1.sqrt());
        let nodes = panel_nodes(&cell, t, width, q, &rule);
        if nodes.is_empty() {
            return 0.0;
        }
        levels.push(nodes);
    }
    let (_, dt_last, last) = steps[m - 1];
    let mut v: Vec<f64> = levels[m - 2]
        .iter()
        .map(|&(z, _)| normal_mass(&last, z, dt_last))
        .collect();
    for k in (0..m - 2).rev() {
        let dt = steps[k + 1].1;
        let reach = q.window * dt.sqrt();
        let next = &levels[k + 1];
        v = levels[k]
            .iter()
            .map(|&(y, _)| {
                let from = next.partition_point(|&(z, _)| z < y - reach);
                let mut acc = 0.0;
                for (idx, &(z, w)) in next.iter().enumerate().skip(from) {
                    if z > y + reach {
                        break;
                    }
                    acc += w * density(z - y, dt) * v[idx];
                }
                acc
            })
            .collect();
    }
    let dt0 = steps[0].1;
    levels[0]
        .iter()
        .zip(&v)
        .map(|(&(z, w), &vz)| w * density(z, dt0) * vz)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}
