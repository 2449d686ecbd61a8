use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AxisLabel, DomainError, ExtReal};

/// A half-open one-dimensional cell `]lo, hi]`.
///
/// When `hi` is `+inf` the cell is the open-ended `]lo, +inf[`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(ExtReal, ExtReal)", into = "(ExtReal, ExtReal)")]
pub struct Cell1D {
    lo: ExtReal,
    hi: ExtReal,
}

impl Cell1D {
    pub fn new(lo: impl Into<ExtReal>, hi: impl Into<ExtReal>) -> Result<Self, DomainError> {
        let (lo, hi) = (lo.into(), hi.into());
        if lo < hi && lo != ExtReal::PosInf && hi != ExtReal::NegInf {
            Ok(Cell1D { lo, hi })
        } else {
            Err(DomainError::EmptyCell { lo, hi })
        }
    }

    /// The whole line `]-inf, +inf[`.
    pub fn line() -> Self {
        Cell1D {
            lo: ExtReal::NegInf,
            hi: ExtReal::PosInf,
        }
    }

    pub fn lo(&self) -> ExtReal {
        self.lo
    }

    pub fn hi(&self) -> ExtReal {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn length(&self) -> f64 {
        match (self.lo, self.hi) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => b - a,
            _ => f64::INFINITY,
        }
    }

    /// Half-open membership: `lo < x <= hi`, with the `+inf` end open.
    pub fn contains(&self, x: ExtReal) -> bool {
        self.lo < x && x <= self.hi && x != ExtReal::PosInf
    }

    pub fn is_vertex(&self, x: ExtReal) -> bool {
        x == self.lo || x == self.hi
    }

    pub fn contains_cell(&self, other: &Cell1D) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Cell1D) -> bool {
        self.lo.max(other.lo) < self.hi.min(other.hi)
    }

    pub fn intersection(&self, other: &Cell1D) -> Option<Cell1D> {
        Cell1D::new(self.lo.max(other.lo), self.hi.min(other.hi)).ok()
    }

    /// Splits `]lo, hi]` into `]lo, at]` and `]at, hi]`.
    pub fn split(&self, at: f64) -> Result<(Cell1D, Cell1D), DomainError> {
        let p = ExtReal::new(at).filter(|p| p.is_finite() && self.lo < *p && *p < self.hi);
        match p {
            Some(p) => Ok((
                Cell1D { lo: self.lo, hi: p },
                Cell1D { lo: p, hi: self.hi },
            )),
            None => Err(DomainError::InvalidSplit { cell: *self, at }),
        }
    }
}

impl TryFrom<(ExtReal, ExtReal)> for Cell1D {
    type Error = DomainError;

    fn try_from((lo, hi): (ExtReal, ExtReal)) -> Result<Self, Self::Error> {
        Cell1D::new(lo, hi)
    }
}

impl From<Cell1D> for (ExtReal, ExtReal) {
    fn from(c: Cell1D) -> Self {
        (c.lo, c.hi)
    }
}

impl fmt::Display for Cell1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.hi == ExtReal::PosInf {
            write!(f, "]{}, +inf[", self.lo)
        } else {
            write!(f, "]{}, {}]", self.lo, self.hi)
        }
    }
}

/// A product of one-dimensional cells over a finite set of restricted axes.
///
/// On a finite-dimensional domain with every axis present this is a box cell; otherwise the
/// axes that are not listed carry their full base interval, which makes it a cylinder cell
/// `I[N] = I_N x R^{T \ N}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cell {
    edges: BTreeMap<AxisLabel, Cell1D>,
}

impl Cell {
    pub fn new(edges: BTreeMap<AxisLabel, Cell1D>) -> Self {
        Cell { edges }
    }

    pub fn from_edges<L: Into<AxisLabel>>(edges: impl IntoIterator<Item = (L, Cell1D)>) -> Self {
        Cell {
            edges: edges.into_iter().map(|(l, c)| (l.into(), c)).collect(),
        }
    }

    pub fn edges(&self) -> &BTreeMap<AxisLabel, Cell1D> {
        &self.edges
    }

    pub fn edge(&self, label: &AxisLabel) -> Option<&Cell1D> {
        self.edges.get(label)
    }

    pub fn restricted(&self) -> impl Iterator<Item = &AxisLabel> {
        self.edges.keys()
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    /// Replaces the edge at `axis` by its two halves split at `at`.
    pub fn split(&self, axis: &AxisLabel, at: f64) -> Result<(Cell, Cell), DomainError> {
        let edge = self
            .edges
            .get(axis)
            .ok_or_else(|| DomainError::UnknownAxis(axis.clone()))?;
        let (l, r) = edge.split(at)?;
        let mut left = self.clone();
        let mut right = self.clone();
        left.edges.insert(axis.clone(), l);
        right.edges.insert(axis.clone(), r);
        Ok((left, right))
    }
}
