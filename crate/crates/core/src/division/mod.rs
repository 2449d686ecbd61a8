//! Gauge-fine divisions: construction by successive bisection or dimension-at-a-time
//! slicing, and validation of arbitrary divisions.
//!
//! Bounded edges are bisected at their midpoint. Unbounded edges are cut at `0` (whole
//! line) or at the next integer towards the open end, so that repeated bisection walks
//! through the `(s, q)`-binary cells of [`BinaryCellScheme`].

mod binary;
mod build;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{AxisLabel, Cell, Cell1D, DomainError, DomainSpec, PointT, TaggedCell};
use crate::gauge::{CompoundGauge, Gauge, Gauge1D, GaugeB, GaugeError};

pub use binary::BinaryCellScheme;
pub use build::bisect_edge;
pub use validate::{validate, validate_with, DivisionCertificate, ValidateOptions, Violation, ViolationReport};

use build::{BoxFine, BuildFailure, PerAxis, Piece, Scalar};

/// A finite list of tagged cells meant to partition `domain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Division {
    pub domain: DomainSpec,
    pub items: Vec<TaggedCell>,
}

impl Division {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sorts items by their edges so that equal divisions compare equal.
    pub fn canonicalize(&mut self) {
        self.items.sort_by_cached_key(|it| {
            it.cell
                .edges()
                .iter()
                .map(|(a, e)| (a.clone(), e.lo(), e.hi()))
                .collect::<Vec<_>>()
        });
    }
}

/// Order in which the vertices of a cell are tried as tags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagPolicy {
    /// Lower-left vertex first, then the others in lexicographic order.
    #[default]
    LowerFirst,
    /// On each axis, the vertex created by the most recent cut first.
    SplitVertexFirst,
    /// On each axis, the vertex away from the most recent cut first.
    OuterFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Bisections allowed per axis before giving up.
    pub max_depth: u32,
    pub policy: TagPolicy,
    pub max_cells: usize,
    /// Enlargements of `N` tried by the cylinder construction before giving up on `L(tag) ⊆ N`.
    pub cylinder_retries: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_depth: 64,
            policy: TagPolicy::LowerFirst,
            max_cells: 4_000_000,
            cylinder_retries: 8,
        }
    }
}

impl BuildOptions {
    pub fn with_policy(policy: TagPolicy) -> Self {
        BuildOptions {
            policy,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum DivisionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error("bisection depth limit reached on axis `{axis}` after {} nested cells (gauge not positive?)", trail.len())]
    DepthExceeded { axis: AxisLabel, trail: Vec<Cell> },
    #[error("construction unsupported: {0}")]
    Unsupported(String),
    #[error("L(tag) not covered at node `{node}` after {retries} enlargements, missing {missing:?}")]
    LNotCovered {
        node: String,
        missing: BTreeSet<String>,
        retries: usize,
    },
    #[error("division would exceed {0} cells")]
    TooManyCells(usize),
}

fn lift_failure(f: BuildFailure, labels: &[AxisLabel]) -> DivisionError {
    match f {
        BuildFailure::TooMany(n) => DivisionError::TooManyCells(n),
        BuildFailure::Depth { axis, trail } => DivisionError::DepthExceeded {
            axis: labels[axis].clone(),
            trail: trail
                .into_iter()
                .map(|edges| Cell::from_edges(labels.iter().cloned().zip(edges)))
                .collect(),
        },
    }
}

fn assemble(domain: &DomainSpec, labels: &[AxisLabel], pieces: Vec<Piece>) -> Division {
    let items = pieces
        .into_iter()
        .map(|p| TaggedCell {
            tag: PointT::from_coords(labels.iter().cloned().zip(p.tag)),
            cell: Cell::from_edges(labels.iter().cloned().zip(p.edges)),
        })
        .collect();
    let mut d = Division {
        domain: domain.clone(),
        items,
    };
    d.canonicalize();
    d
}

fn finite_axes(domain: &DomainSpec) -> Result<(Vec<AxisLabel>, Vec<Cell1D>), DivisionError> {
    let labels = domain.axes().ok_or_else(|| {
        DivisionError::Unsupported("box constructions need a finite-dimensional domain".into())
    })?;
    let bases = labels
        .iter()
        .map(|a| domain.base_of(a))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((labels, bases))
}

fn box_view<'g>(gauge: &'g Gauge, domain: &DomainSpec, labels: &[AxisLabel]) -> Result<Box<dyn BoxFine + 'g>, DivisionError> {
    match gauge {
        Gauge::A(g) => Ok(Box::new(Scalar {
            gauge: g,
            labels: labels.to_vec(),
        })),
        Gauge::B(_) => Ok(Box::new(PerAxis(gauge.axis_components(domain, labels)?))),
        _ => Err(DivisionError::Unsupported(
            "cylinder and compound gauges are built with cousin_cylinder".into(),
        )),
    }
}

/// Fine division of a single interval; the axis is labelled `x`.
pub fn cousin_1d(g: &Gauge1D, base: Cell1D) -> Result<Division, DivisionError> {
    cousin_1d_with(g, base, &BuildOptions::default())
}

pub fn cousin_1d_with(g: &Gauge1D, base: Cell1D, opts: &BuildOptions) -> Result<Division, DivisionError> {
    g.validate().map_err(GaugeError::Invalid)?;
    let labels = vec![AxisLabel::from("x")];
    let pieces = build::simultaneous(&[base], &PerAxis(vec![g.clone()]), opts)
        .map_err(|f| lift_failure(f, &labels))?;
    Ok(assemble(&DomainSpec::Interval(base), &labels, pieces))
}

/// Fine division of a finite-dimensional domain by simultaneous bisection of every axis.
pub fn cousin_box(gauge: &Gauge, domain: &DomainSpec) -> Result<Division, DivisionError> {
    cousin_box_with(gauge, domain, &BuildOptions::default())
}

pub fn cousin_box_with(gauge: &Gauge, domain: &DomainSpec, opts: &BuildOptions) -> Result<Division, DivisionError> {
    gauge.validate(domain)?;
    let (labels, bases) = finite_axes(domain)?;
    let view = box_view(gauge, domain, &labels)?;
    let pieces = build::simultaneous(&bases, view.as_ref(), opts).map_err(|f| lift_failure(f, &labels))?;
    Ok(assemble(domain, &labels, pieces))
}

/// Fine division built one axis at a time, in `axis_order`.
pub fn slice_division(gauge: &Gauge, domain: &DomainSpec, axis_order: &[AxisLabel]) -> Result<Division, DivisionError> {
    slice_division_with(gauge, domain, axis_order, &BuildOptions::default())
}

pub fn slice_division_with(
    gauge: &Gauge,
    domain: &DomainSpec,
    axis_order: &[AxisLabel],
    opts: &BuildOptions,
) -> Result<Division, DivisionError> {
    gauge.validate(domain)?;
    let (labels, bases) = finite_axes(domain)?;
    let order = axis_order
        .iter()
        .map(|a| {
            labels
                .iter()
                .position(|l| l == a)
                .ok_or_else(|| DomainError::UnknownAxis(a.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let distinct: BTreeSet<usize> = order.iter().copied().collect();
    if order.len() != labels.len() || distinct.len() != labels.len() {
        return Err(DivisionError::Unsupported(
            "axis_order must be a permutation of the domain axes".into(),
        ));
    }
    let view = box_view(gauge, domain, &labels)?;
    let pieces = build::sliced(&bases, &order, view.as_ref(), opts).map_err(|f| lift_failure(f, &labels))?;
    Ok(assemble(domain, &labels, pieces))
}

/// Fine division of a cylinder or structured domain. Every cylinder node must carry a
/// uniform bound on `L`; cells are restricted exactly on the axes below those labels.
pub fn cousin_cylinder(gauge: &Gauge, domain: &DomainSpec) -> Result<Division, DivisionError> {
    cousin_cylinder_with(gauge, domain, &BuildOptions::default())
}

pub fn cousin_cylinder_with(gauge: &Gauge, domain: &DomainSpec, opts: &BuildOptions) -> Result<Division, DivisionError> {
    gauge.validate(domain)?;
    let tree = match gauge {
        Gauge::Cylinder(g) => CompoundGauge::Cylinder {
            l: g.l.clone(),
            l_bound: g.l_bound.clone(),
            factor: Box::new(CompoundGauge::Leaf(g.components.default.clone())),
        },
        Gauge::Compound(g) => g.clone(),
        _ => {
            return Err(DivisionError::Unsupported(
                "cousin_cylinder needs a cylinder or compound gauge".into(),
            ))
        }
    };
    let mut extra: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for attempt in 0..=opts.cylinder_retries {
        let mut labels = Vec::new();
        collect_restricted(&tree, domain, "", &extra, &mut labels)?;
        let bases = labels
            .iter()
            .map(|a| domain.base_of(a))
            .collect::<Result<Vec<_>, _>>()?;
        let comps = gauge.axis_components(domain, &labels)?;
        let pieces = build::simultaneous(&bases, &PerAxis(comps), opts).map_err(|f| lift_failure(f, &labels))?;
        let div = assemble(domain, &labels, pieces);
        let mut grew = false;
        let mut last_missing = (String::new(), BTreeSet::new());
        for item in &div.items {
            for check in gauge.witness(domain, item)?.l_checks {
                let missing = check.missing();
                if !missing.is_empty() {
                    let slot = extra.entry(check.node.clone()).or_default();
                    for m in &missing {
                        grew |= slot.insert(m.clone());
                    }
                    last_missing = (check.node, missing);
                }
            }
        }
        if last_missing.1.is_empty() {
            return Ok(div);
        }
        if !grew || attempt == opts.cylinder_retries {
            return Err(DivisionError::LNotCovered {
                node: last_missing.0,
                missing: last_missing.1,
                retries: attempt,
            });
        }
    }
    unreachable!("loop returns on its last attempt")
}

fn collect_restricted(
    g: &CompoundGauge,
    d: &DomainSpec,
    prefix: &str,
    extra: &BTreeMap<String, BTreeSet<String>>,
    out: &mut Vec<AxisLabel>,
) -> Result<(), DivisionError> {
    match (g, d) {
        (CompoundGauge::Leaf(_), DomainSpec::Interval(_)) => {
            out.push(AxisLabel::from(if prefix.is_empty() { "x" } else { prefix }));
            Ok(())
        }
        (CompoundGauge::Product(gs), DomainSpec::Product(ds)) => {
            for ((name, gc), (_, dc)) in gs.iter().zip(ds) {
                collect_restricted(gc, dc, AxisLabel::join(prefix, name).as_str(), extra, out)?;
            }
            Ok(())
        }
        (CompoundGauge::Cylinder { l_bound, factor, .. }, DomainSpec::Cylinder { index, factor: df }) => {
            let bound = l_bound.as_ref().ok_or_else(|| {
                DivisionError::Unsupported(format!(
                    "cylinder node `{prefix}` has no l_bound; constructing a division needs a uniform finite bound on L"
                ))
            })?;
            let mut n: BTreeSet<AxisLabel> = bound.iter().map(|s| AxisLabel::from(s.as_str())).collect();
            if let Some(more) = extra.get(prefix) {
                n.extend(more.iter().map(|s| AxisLabel::from(s.as_str())));
            }
            for s in &n {
                if !index.contains(s.as_str()) {
                    return Err(DomainError::UnknownAxis(AxisLabel::join(prefix, s.as_str())).into());
                }
                collect_restricted(factor, df, AxisLabel::join(prefix, s.as_str()).as_str(), extra, out)?;
            }
            Ok(())
        }
        _ => Err(GaugeError::Mismatch(format!("gauge node does not match domain node at `{prefix}`")).into()),
    }
}

/// Convenience: the gauge `B` with the same component on every axis of `domain`.
pub fn uniform_b(domain: &DomainSpec, g: Gauge1D) -> Result<Gauge, DivisionError> {
    Ok(Gauge::B(GaugeB::uniform(domain, g)?))
}
