//! Strength relations between point gauges and componentwise gauges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Gauge, GaugeA, GaugeB, GaugeError, InfRule, PointRule};
use crate::domain::{Cell, Cell1D, DomainSpec, PointT, TaggedCell};

/// The point gauge `delta(x) = min_j delta_j(x_j)`.
///
/// Every cell that is fine for the result is fine for `g`: each edge is shorter than the
/// minimum, hence shorter than its own component, and the tail thresholds are the largest
/// of the components'.
pub fn min_combine(g: &GaugeB) -> GaugeA {
    let inf = g
        .components
        .values()
        .map(|c| c.inf)
        .reduce(InfRule::max)
        .unwrap_or_default();
    GaugeA {
        delta: PointRule::Min(g.clone()),
        scale: 1.0,
        inf,
    }
}

/// Randomized search for a tagged cell that is `gb`-fine but not `ga`-fine on a bounded
/// finite-dimensional domain.
///
/// Each probe draws a tag uniformly, then per axis an edge length in `[delta_a, delta_j)`
/// when that window is non-empty (else in `(0, delta_j)`), and lays the edge off from the
/// tag in whichever direction fits. `Ok(None)` after `budget` probes is inconclusive.
pub fn find_b_not_a(
    gb: &GaugeB,
    ga: &GaugeA,
    domain: &DomainSpec,
    budget: usize,
    seed: u64,
) -> Result<Option<TaggedCell>, GaugeError> {
    let axes = domain
        .axes()
        .ok_or_else(|| GaugeError::Mismatch("search needs a finite-dimensional domain".into()))?;
    let bases = axes
        .iter()
        .map(|a| {
            let b = domain.base_of(a)?;
            match (b.lo().finite(), b.hi().finite()) {
                (Some(lo), Some(hi)) => Ok((lo, hi)),
                _ => Err(GaugeError::Mismatch(format!("axis `{a}` is unbounded"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let b_gauge = Gauge::B(gb.clone());
    let a_gauge = Gauge::A(ga.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for _ in 0..budget {
        let xs: Vec<f64> = bases.iter().map(|&(lo, hi)| rng.gen_range(lo..=hi)).collect();
        let tag = PointT::from_coords(axes.iter().cloned().zip(xs.iter().copied()));
        let da = ga.delta(&tag);
        let mut edges = Vec::with_capacity(axes.len());
        let mut exceeds = false;
        for ((axis, &x), &(lo, hi)) in axes.iter().zip(&xs).zip(&bases) {
            let dj = gb.component(axis)?.delta(x.into());
            let room = (hi - x).max(x - lo);
            if !(dj > 0.0) || room <= 0.0 {
                break;
            }
            let mut len = if da < dj && da > 0.0 {
                exceeds = true;
                rng.gen_range(da..dj)
            } else {
                dj * rng.gen_range(f64::EPSILON..1.0)
            };
            len = len.min(room);
            let edge = if x + len <= hi {
                Cell1D::new(x, x + len)
            } else {
                Cell1D::new(x - len, x)
            };
            match edge {
                Ok(e) => edges.push((axis.clone(), e)),
                Err(_) => break,
            }
        }
        if !exceeds || edges.len() != axes.len() {
            continue;
        }
        let tc = TaggedCell::new(tag, Cell::from_edges(edges));
        if b_gauge.is_fine(domain, &tc)? && !a_gauge.is_fine(domain, &tc)? {
            return Ok(Some(tc));
        }
    }
    Ok(None)
}
