use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AxisLabel, ExtReal};

/// A point of a (possibly infinite) product domain.
///
/// Only finitely many coordinates are stored; every other axis reads as `tail`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointT {
    support: BTreeMap<AxisLabel, ExtReal>,
    #[serde(default = "zero_tail")]
    tail: ExtReal,
}

fn zero_tail() -> ExtReal {
    ExtReal::Finite(0.0)
}

impl PointT {
    /// A point with the default zero tail.
    pub fn new(support: BTreeMap<AxisLabel, ExtReal>) -> Self {
        PointT {
            support,
            tail: zero_tail(),
        }
    }

    pub fn with_tail(support: BTreeMap<AxisLabel, ExtReal>, tail: ExtReal) -> Self {
        PointT { support, tail }
    }

    pub fn from_coords<L: Into<AxisLabel>, X: Into<ExtReal>>(
        coords: impl IntoIterator<Item = (L, X)>,
    ) -> Self {
        PointT::new(
            coords
                .into_iter()
                .map(|(l, x)| (l.into(), x.into()))
                .collect(),
        )
    }

    pub fn get(&self, label: &AxisLabel) -> ExtReal {
        self.support.get(label).copied().unwrap_or(self.tail)
    }

    pub fn support(&self) -> &BTreeMap<AxisLabel, ExtReal> {
        &self.support
    }

    pub fn tail(&self) -> ExtReal {
        self.tail
    }

    pub fn set(&mut self, label: AxisLabel, x: ExtReal) {
        self.support.insert(label, x);
    }
}

impl PartialEq for PointT {
    /// Equal iff the tails agree and the coordinates agree on the union of both supports.
    fn eq(&self, other: &Self) -> bool {
        self.tail == other.tail
            && self.support.keys().all(|l| self.get(l) == other.get(l))
            && other.support.keys().all(|l| self.get(l) == other.get(l))
    }
}

impl Eq for PointT {}
