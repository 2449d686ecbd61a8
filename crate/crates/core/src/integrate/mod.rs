//! Riemann sums of cell functions `h(x, I)` over divisions, and the gauge-refinement loop
//! that turns them into integral estimates.

mod registry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brownian::BrownianError;
use crate::division::{
    cousin_box_with, cousin_cylinder_with, slice_division_with, BuildOptions, Division, DivisionError, TagPolicy,
};
use crate::domain::{AxisLabel, Cell, Cell1D, DomainSpec, PointT};
use crate::gauge::{Gauge, Gauge1D, GaugeB, GaugeError};
use crate::par::map_chunks;
use crate::sum::NeumaierSum;

pub use registry::{Factor, IntegrandSpec};

#[derive(Debug, Clone, Error)]
pub enum IntegrateError {
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Division(#[from] DivisionError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Brownian(#[from] BrownianError),
    #[error("integrand is {value} on item {item} (tag {tag:?})")]
    NonFinite { item: usize, value: f64, tag: PointT },
    #[error("{0}")]
    Mismatch(String),
}

/// A function of a tagged cell, `h(x, I)`. Implementations must be pure.
pub trait CellFunction: Send + Sync {
    fn eval(&self, tag: &PointT, cell: &Cell, domain: &DomainSpec) -> f64;
}

/// Wraps a closure as a [`CellFunction`].
pub struct FnCell<F>(pub F);

impl<F> CellFunction for FnCell<F>
where
    F: Fn(&PointT, &Cell, &DomainSpec) -> f64 + Send + Sync,
{
    fn eval(&self, tag: &PointT, cell: &Cell, domain: &DomainSpec) -> f64 {
        (self.0)(tag, cell, domain)
    }
}

/// Product of edge lengths; axes of a finite domain that the cell leaves unrestricted count
/// with their base length.
pub fn volume(cell: &Cell, domain: &DomainSpec) -> f64 {
    match domain.axes() {
        Some(axes) => axes
            .iter()
            .map(|a| match cell.edge(a) {
                Some(e) => e.length(),
                None => domain.base_of(a).map_or(f64::NAN, |b| b.length()),
            })
            .product(),
        None => cell.edges().values().map(|e| e.length()).product(),
    }
}

const ITEMS_PER_CHUNK: usize = 4096;

/// `sum h(x, I)` over the division, compensated and reduced in a fixed order.
pub fn riemann_sum(h: &dyn CellFunction, d: &Division) -> Result<f64, IntegrateError> {
    let chunks = d.items.len().div_ceil(ITEMS_PER_CHUNK);
    let parts = map_chunks(chunks, |c| {
        let lo = c * ITEMS_PER_CHUNK;
        let hi = (lo + ITEMS_PER_CHUNK).min(d.items.len());
        let mut acc = NeumaierSum::new();
        for (k, it) in d.items[lo..hi].iter().enumerate() {
            let v = h.eval(&it.tag, &it.cell, &d.domain);
            if !v.is_finite() {
                return Err((lo + k, v));
            }
            acc += v;
        }
        Ok(acc)
    });
    let mut total = NeumaierSum::new();
    for p in parts {
        match p {
            Ok(s) => total = total + s,
            Err((item, value)) => {
                return Err(IntegrateError::NonFinite {
                    item,
                    value,
                    tag: d.items[item].tag.clone(),
                })
            }
        }
    }
    Ok(total.total())
}

/// How each round's division is built.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Box bisection for point and axis gauges, cylinder construction otherwise.
    #[default]
    Auto,
    Box,
    /// Dimension-at-a-time; axes in domain order unless given.
    Slice { order: Option<Vec<AxisLabel>> },
    Cylinder,
}

/// Gauges of successive rounds: round `k` uses `initial` scaled by `shrink^k` (deltas
/// multiplied, tail thresholds divided).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeSchedule {
    pub initial: Gauge,
    #[serde(default = "half")]
    pub shrink: f64,
    #[serde(default)]
    pub construction: Construction,
    #[serde(default = "split_first")]
    pub policy: TagPolicy,
    #[serde(default = "cell_cap")]
    pub max_cells: usize,
}

fn half() -> f64 {
    0.5
}

fn split_first() -> TagPolicy {
    TagPolicy::SplitVertexFirst
}

fn cell_cap() -> usize {
    2_000_000
}

impl GaugeSchedule {
    pub fn new(initial: Gauge) -> Self {
        GaugeSchedule {
            initial,
            shrink: half(),
            construction: Construction::Auto,
            policy: split_first(),
            max_cells: cell_cap(),
        }
    }

    pub fn with_construction(mut self, c: Construction) -> Self {
        self.construction = c;
        self
    }

    pub fn with_policy(mut self, p: TagPolicy) -> Self {
        self.policy = p;
        self
    }

    pub fn gauge(&self, round: usize) -> Gauge {
        self.initial.scaled(self.shrink.powi(round as i32))
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(IntegrateError::Mismatch(format!(
                "shrink factor must lie in ]0, 1[, got {}",
                self.shrink
            )));
        }
        Ok(())
    }

    pub fn division(&self, round: usize, domain: &DomainSpec) -> Result<Division, DivisionError> {
        let g = self.gauge(round);
        let opts = BuildOptions {
            policy: self.policy,
            max_cells: self.max_cells,
            ..Default::default()
        };
        let cylinder = matches!(g, Gauge::Cylinder(_) | Gauge::Compound(_));
        match &self.construction {
            Construction::Auto if cylinder => cousin_cylinder_with(&g, domain, &opts),
            Construction::Cylinder => cousin_cylinder_with(&g, domain, &opts),
            Construction::Auto | Construction::Box => cousin_box_with(&g, domain, &opts),
            Construction::Slice { order } => {
                let order = match order {
                    Some(o) => o.clone(),
                    None => domain.axes().ok_or_else(|| {
                        DivisionError::Unsupported("slicing needs a finite-dimensional domain".into())
                    })?,
                };
                slice_division_with(&g, domain, &order, &opts)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub cells: usize,
    pub estimate: f64,
    pub delta_prev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub estimate: f64,
    /// Difference between the last two estimates (infinite after a single round).
    pub tolerance_achieved: f64,
    pub refinement_depth: usize,
    pub division_size: usize,
    pub converged: bool,
    pub rounds: Vec<RoundRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
}

/// Runs rounds `0..=max_depth` until two successive estimates differ by less than `tol`.
/// A cell budget exhausted after some rounds have completed ends the loop unconverged;
/// other failures propagate.
pub fn refine<F>(tol: f64, max_depth: usize, mut round: F) -> Result<IntegralResult, IntegrateError>
where
    F: FnMut(usize) -> Result<(f64, usize), IntegrateError>,
{
    if !(tol > 0.0) {
        return Err(IntegrateError::InvalidTolerance(tol));
    }
    let mut rounds: Vec<RoundRecord> = Vec::new();
    let mut stop_reason = None;
    for r in 0..=max_depth {
        let (estimate, cells) = match round(r) {
            Ok(v) => v,
            Err(IntegrateError::Division(DivisionError::TooManyCells(n))) if !rounds.is_empty() => {
                stop_reason = Some(format!("cell budget of {n} reached"));
                break;
            }
            Err(e) => return Err(e),
        };
        let delta_prev = rounds.last().map(|p| (estimate - p.estimate).abs());
        rounds.push(RoundRecord {
            round: r,
            cells,
            estimate,
            delta_prev,
        });
        if delta_prev.is_some_and(|d| d < tol) {
            break;
        }
    }
    let last = rounds.last().expect("at least one round");
    let tolerance_achieved = last.delta_prev.unwrap_or(f64::INFINITY);
    let converged = tolerance_achieved < tol;
    if !converged && stop_reason.is_none() {
        stop_reason = Some(format!("no agreement within {tol} after {} rounds", rounds.len()));
    }
    Ok(IntegralResult {
        estimate: last.estimate,
        tolerance_achieved,
        refinement_depth: last.round,
        division_size: last.cells,
        converged,
        rounds,
        stop_reason,
    })
}

/// Integrates `h` over `domain` by building a division per round of `schedule`.
pub fn integrate(
    h: &dyn CellFunction,
    domain: &DomainSpec,
    schedule: &GaugeSchedule,
    tol: f64,
    max_depth: usize,
) -> Result<IntegralResult, IntegrateError> {
    schedule.validate()?;
    schedule.initial.validate(domain)?;
    refine(tol, max_depth, |r| {
        let d = schedule.division(r, domain)?;
        Ok((riemann_sum(h, &d)?, d.len()))
    })
}

/// Evaluates a one-axis cell function on the projection of a tagged cell onto `axis`.
pub struct OnAxis<'a> {
    pub axis: AxisLabel,
    pub f: &'a dyn CellFunction,
}

impl CellFunction for OnAxis<'_> {
    fn eval(&self, tag: &PointT, cell: &Cell, domain: &DomainSpec) -> f64 {
        let base = domain.base_of(&self.axis).unwrap_or_else(|_| Cell1D::line());
        let edge = cell.edge(&self.axis).copied().unwrap_or(base);
        let t = PointT::from_coords([("x", tag.get(&self.axis))]);
        self.f.eval(&t, &Cell::from_edges([("x", edge)]), &DomainSpec::Interval(base))
    }
}

/// Product of one-axis factors, each seeing only its own axis.
pub struct Separable<'a>(pub Vec<OnAxis<'a>>);

impl CellFunction for Separable<'_> {
    fn eval(&self, tag: &PointT, cell: &Cell, domain: &DomainSpec) -> f64 {
        self.0.iter().map(|f| f.eval(tag, cell, domain)).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FubiniResult {
    /// Product of the two one-dimensional integrals.
    pub iterated: f64,
    /// Two-dimensional integral of the product integrand.
    pub direct: f64,
    pub first: IntegralResult,
    pub second: IntegralResult,
    pub joint: IntegralResult,
}

/// Integrates `h1(x1, I1) h2(x2, I2)` over a two-axis product both directly and as the
/// product of the two one-axis integrals.
pub fn fubini_product(
    h1: &dyn CellFunction,
    h2: &dyn CellFunction,
    domain: &DomainSpec,
    gauges: (&Gauge1D, &Gauge1D),
    tol: f64,
    max_depth: usize,
) -> Result<FubiniResult, IntegrateError> {
    let axes = domain
        .axes()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| IntegrateError::Mismatch("fubini_product needs a two-axis product domain".into()))?;
    let one_d = |f: &dyn CellFunction, axis: &AxisLabel, g: &Gauge1D| -> Result<IntegralResult, IntegrateError> {
        let base = domain.base_of(axis).map_err(DivisionError::from)?;
        let sched = GaugeSchedule::new(Gauge::B(GaugeB::new([("x", g.clone())])));
        integrate(f, &DomainSpec::Interval(base), &sched, tol, max_depth)
    };
    let first = one_d(h1, &axes[0], gauges.0)?;
    let second = one_d(h2, &axes[1], gauges.1)?;
    let joint_fn = Separable(vec![
        OnAxis {
            axis: axes[0].clone(),
            f: h1,
        },
        OnAxis {
            axis: axes[1].clone(),
            f: h2,
        },
    ]);
    let sched = GaugeSchedule::new(Gauge::B(GaugeB::new([
        (axes[0].clone(), gauges.0.clone()),
        (axes[1].clone(), gauges.1.clone()),
    ])));
    let joint = integrate(&joint_fn, domain, &sched, tol, max_depth)?;
    if !(first.converged && second.converged && joint.converged) {
        return Err(IntegrateError::Mismatch(format!(
            "Fubini comparison needs converged integrals (first {}, second {}, joint {})",
            first.converged, second.converged, joint.converged
        )));
    }
    Ok(FubiniResult {
        iterated: first.estimate * second.estimate,
        direct: joint.estimate,
        first,
        second,
        joint,
    })
}

#[cfg(test)]
mod tests;
