//! Brownian distribution functions on cylinder cells, barrier payoffs and their expected
//! values, plus a Monte Carlo oracle.
//!
//! The process has `d` independent coordinates started at 0 and read at the grid
//! `t_1 < ... < t_n`. In a cell, slot `(i, j)` is the interval constraining coordinate `i`
//! at time `t_j`. On the cylinder domain these slots carry the labels `tj.si` (or `tj` when
//! `d = 1`).

mod payoff;
mod quad;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AxisLabel, Cell, Cell1D, DomainSpec, ExtReal, PointT};

pub use payoff::{
    expected_payoff, expected_payoff_with, mc_oracle, payoff, OracleResult, PayoffMode, PayoffOptions, PayoffSpec,
};
pub use quad::{normal_mass, row_mass, std_normal_cdf, Quadrature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BrownianError {
    #[error("invalid Brownian spec: {0}")]
    Spec(String),
    #[error("cell does not match the spec: {0}")]
    Slot(String),
    #[error("invalid payoff: {0}")]
    Payoff(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianSpec {
    /// Number of spatial coordinates.
    pub d: usize,
    /// Read times, strictly increasing and positive.
    pub times: Vec<f64>,
}

impl BrownianSpec {
    pub fn new(d: usize, times: Vec<f64>) -> Result<Self, BrownianError> {
        let s = BrownianSpec { d, times };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), BrownianError> {
        if self.d == 0 {
            return Err(BrownianError::Spec("d must be at least 1".into()));
        }
        if self.times.is_empty() {
            return Err(BrownianError::Spec("at least one read time is needed".into()));
        }
        let mut prev = 0.0;
        for &t in &self.times {
            if !(t > prev) || !t.is_finite() {
                return Err(BrownianError::Spec(format!(
                    "times must be positive, finite and strictly increasing; got {:?}",
                    self.times
                )));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    /// `R^T` for `d = 1`, `(R^d)^T` otherwise; index `tj` stands for `t_j`.
    pub fn domain(&self) -> DomainSpec {
        let line = DomainSpec::Interval(Cell1D::line());
        if self.d == 1 {
            DomainSpec::countable_power("t", line)
        } else {
            DomainSpec::countable_power(
                "t",
                DomainSpec::Product((1..=self.d).map(|i| (format!("s{i}"), line.clone())).collect()),
            )
        }
    }

    /// Label of slot `(i, j)` (zero-based).
    pub fn label(&self, i: usize, j: usize) -> AxisLabel {
        if self.d == 1 {
            AxisLabel::new(format!("t{}", j + 1))
        } else {
            AxisLabel::new(format!("t{}.s{}", j + 1, i + 1))
        }
    }

    fn slot_of(&self, label: &AxisLabel) -> Result<(usize, usize), BrownianError> {
        let bad = || BrownianError::Slot(format!("label `{label}` is not a slot of this spec"));
        let mut parts = label.as_str().split('.');
        let j: usize = parts
            .next()
            .and_then(|s| s.strip_prefix('t'))
            .and_then(|s| s.parse().ok())
            .ok_or_else(bad)?;
        let i: usize = match (self.d, parts.next()) {
            (1, None) => 1,
            (_, Some(s)) if self.d > 1 => s.strip_prefix('s').and_then(|s| s.parse().ok()).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
        if parts.next().is_some() || i == 0 || i > self.d || j == 0 || j > self.n() {
            return Err(bad());
        }
        Ok((i - 1, j - 1))
    }

    /// Coordinates `x[i][j]` read from a tag (unlisted slots take the tail value).
    pub fn read(&self, tag: &PointT) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|i| (0..self.n()).map(|j| tag.get(&self.label(i, j)).to_f64()).collect())
            .collect()
    }
}

/// Slot intervals `edges[i][j]`; full lines where unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianCell {
    pub edges: Vec<Vec<Cell1D>>,
}

impl BrownianCell {
    pub fn full(spec: &BrownianSpec) -> Self {
        BrownianCell {
            edges: vec![vec![Cell1D::line(); spec.n()]; spec.d],
        }
    }

    pub fn with(mut self, i: usize, j: usize, edge: Cell1D) -> Self {
        self.edges[i][j] = edge;
        self
    }

    /// Reads a cylinder cell of `spec.domain()`.
    pub fn from_cell(spec: &BrownianSpec, cell: &Cell) -> Result<Self, BrownianError> {
        let mut out = BrownianCell::full(spec);
        for (label, edge) in cell.edges() {
            let (i, j) = spec.slot_of(label)?;
            out.edges[i][j] = *edge;
        }
        Ok(out)
    }

    fn check(&self, spec: &BrownianSpec) -> Result<(), BrownianError> {
        if self.edges.len() != spec.d || self.edges.iter().any(|r| r.len() != spec.n()) {
            return Err(BrownianError::Slot(format!(
                "expected {} rows of {} slots",
                spec.d,
                spec.n()
            )));
        }
        Ok(())
    }
}

/// The distribution function `G` of the Brownian motion on a cell: the probability that
/// every coordinate lies in its slot at every read time.
pub fn g(spec: &BrownianSpec, cell: &BrownianCell) -> Result<f64, BrownianError> {
    g_with(spec, cell, &Quadrature::default())
}

pub fn g_with(spec: &BrownianSpec, cell: &BrownianCell, q: &Quadrature) -> Result<f64, BrownianError> {
    spec.validate()?;
    cell.check(spec)?;
    Ok(cell.edges.iter().map(|row| row_mass(&spec.times, row, q)).product())
}

/// `G` of a cylinder cell of `spec.domain()`.
pub fn g_of_cell(spec: &BrownianSpec, cell: &Cell, q: &Quadrature) -> Result<f64, BrownianError> {
    g_with(spec, &BrownianCell::from_cell(spec, cell)?, q)
}

/// `P(Z > x)` style helper used by closed-form checks: the one-time, one-coordinate
/// exceedance probability of level `l` at time `t`.
pub fn exceed_once(l: ExtReal, t: f64) -> f64 {
    match l {
        ExtReal::NegInf => 1.0,
        ExtReal::PosInf => 0.0,
        ExtReal::Finite(l) => 1.0 - std_normal_cdf(l / t.sqrt()),
    }
}
