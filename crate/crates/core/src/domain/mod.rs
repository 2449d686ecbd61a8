//! Extended reals, half-open cells, points with finite support, and product domain shapes.
//!
//! A tag is *associated* with a cell when, on every restricted axis, the tag coordinate is
//! one of the two vertices of the closed edge (the points at infinity count as vertices of
//! unbounded edges).

mod cell;
mod ext_real;
mod label;
mod point;
mod spec;

pub use cell::{Cell, Cell1D};
pub use ext_real::ExtReal;
pub use label::AxisLabel;
pub use point::PointT;
pub use spec::{DomainSpec, IndexSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("empty cell ]{lo}, {hi}]")]
    EmptyCell { lo: ExtReal, hi: ExtReal },
    #[error("cannot split {cell} at {at}: not an interior point")]
    InvalidSplit { cell: Cell1D, at: f64 },
    #[error("axis `{0}` is not part of the domain")]
    UnknownAxis(AxisLabel),
    #[error("edge {edge} on axis `{axis}` leaves the base interval {base}")]
    OutsideBase {
        axis: AxisLabel,
        edge: Cell1D,
        base: Cell1D,
    },
    #[error("domain has a countable factor below a cylinder node")]
    NestedInfinite,
    #[error("domain root is not a cylinder product")]
    NotCylinder,
}

/// A cell together with its tag point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedCell {
    pub tag: PointT,
    pub cell: Cell,
}

impl TaggedCell {
    pub fn new(tag: PointT, cell: Cell) -> Self {
        TaggedCell { tag, cell }
    }
}

/// Checks that every edge of `cell` names an axis of `domain` and stays inside its base.
pub fn check_cell(domain: &DomainSpec, cell: &Cell) -> Result<(), DomainError> {
    for (axis, edge) in cell.edges() {
        let base = domain.base_of(axis)?;
        if !base.contains_cell(edge) {
            return Err(DomainError::OutsideBase {
                axis: axis.clone(),
                edge: *edge,
                base,
            });
        }
    }
    Ok(())
}

fn check_point(domain: &DomainSpec, x: &PointT) -> Result<(), DomainError> {
    for axis in x.support().keys() {
        domain.base_of(axis)?;
    }
    Ok(())
}

/// Whether `tag` is a vertex of `cell` on every restricted axis.
pub fn associated(domain: &DomainSpec, tag: &PointT, cell: &Cell) -> Result<bool, DomainError> {
    check_cell(domain, cell)?;
    check_point(domain, tag)?;
    Ok(is_associated(tag, cell))
}

pub(crate) fn is_associated(tag: &PointT, cell: &Cell) -> bool {
    cell.edges()
        .iter()
        .all(|(axis, edge)| edge.is_vertex(tag.get(axis)))
}

/// Whether `x` lies in `cell`, looking only at the restricted axes.
pub fn cell_membership(domain: &DomainSpec, x: &PointT, cell: &Cell) -> Result<bool, DomainError> {
    check_cell(domain, cell)?;
    check_point(domain, x)?;
    Ok(contains_point(cell, x))
}

pub(crate) fn contains_point(cell: &Cell, x: &PointT) -> bool {
    cell.edges().iter().all(|(axis, edge)| edge.contains(x.get(axis)))
}
