use serde::{Deserialize, Serialize};

use super::{AxisLabel, Cell1D, DomainError};

/// Index set of a cylinder (infinite-product) factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSet {
    /// Explicit labels, e.g. the finitely many read times of a path.
    Finite(Vec<String>),
    /// `prefix1, prefix2, ...` without end.
    Countable { prefix: String },
}

impl IndexSet {
    pub fn contains(&self, segment: &str) -> bool {
        match self {
            IndexSet::Finite(v) => v.iter().any(|s| s == segment),
            IndexSet::Countable { prefix } => segment
                .strip_prefix(prefix.as_str())
                .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()) && !n.starts_with('0')),
        }
    }

    /// The `k`-th label (1-based) of the set, if it exists.
    pub fn nth(&self, k: usize) -> Option<String> {
        match self {
            IndexSet::Finite(v) => v.get(k.checked_sub(1)?).cloned(),
            IndexSet::Countable { prefix } => (k > 0).then(|| format!("{prefix}{k}")),
        }
    }
}

/// Shape of a product domain: a tree of one-dimensional base intervals, finite products and
/// cylinder (indexed) products.
///
/// Axis labels are the `.`-joined names along the path to each leaf. A bare interval at the
/// root has the single axis `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    Interval(Cell1D),
    Product(Vec<(String, DomainSpec)>),
    Cylinder { index: IndexSet, factor: Box<DomainSpec> },
}

impl DomainSpec {
    pub fn interval(base: Cell1D) -> Self {
        DomainSpec::Interval(base)
    }

    /// `base^n` with axes `x1..xn`.
    pub fn power(base: Cell1D, n: usize) -> Self {
        DomainSpec::Product(
            (1..=n)
                .map(|k| (format!("x{k}"), DomainSpec::Interval(base)))
                .collect(),
        )
    }

    /// The unit cube `]0,1]^n` with axes `x1..xn`.
    pub fn unit_cube(n: usize) -> Self {
        DomainSpec::power(Cell1D::new(0.0, 1.0).expect("valid"), n)
    }

    /// `factor^T` for the countable index set `prefix1, prefix2, ...`.
    pub fn countable_power(prefix: &str, factor: DomainSpec) -> Self {
        DomainSpec::Cylinder {
            index: IndexSet::Countable {
                prefix: prefix.to_string(),
            },
            factor: Box::new(factor),
        }
    }

    /// `factor^{labels}` for an explicit finite index set.
    pub fn finite_power(labels: &[&str], factor: DomainSpec) -> Self {
        DomainSpec::Cylinder {
            index: IndexSet::Finite(labels.iter().map(|s| s.to_string()).collect()),
            factor: Box::new(factor),
        }
    }

    /// Base interval of the axis named `label`, or an error if no leaf has that label.
    pub fn base_of(&self, label: &AxisLabel) -> Result<Cell1D, DomainError> {
        let path = if matches!(self, DomainSpec::Interval(_)) && label.as_str() == "x" {
            ""
        } else {
            label.as_str()
        };
        self.resolve(path)
            .ok_or_else(|| DomainError::UnknownAxis(label.clone()))
    }

    fn resolve(&self, path: &str) -> Option<Cell1D> {
        let (head, rest) = match path.split_once('.') {
            Some((a, b)) => (a, b),
            None => (path, ""),
        };
        match self {
            DomainSpec::Interval(c) => path.is_empty().then_some(*c),
            DomainSpec::Product(children) => children
                .iter()
                .find(|(name, _)| name == head)
                .and_then(|(_, child)| child.resolve(rest)),
            DomainSpec::Cylinder { index, factor } => {
                if index.contains(head) {
                    factor.resolve(rest)
                } else {
                    None
                }
            }
        }
    }

    pub fn contains_label(&self, label: &AxisLabel) -> bool {
        self.base_of(label).is_ok()
    }

    /// Whether every cylinder index set in the tree is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            DomainSpec::Interval(_) => true,
            DomainSpec::Product(c) => c.iter().all(|(_, d)| d.is_finite()),
            DomainSpec::Cylinder { index, factor } => {
                matches!(index, IndexSet::Finite(_)) && factor.is_finite()
            }
        }
    }

    /// All axis labels in tree order, or `None` when the domain has a countable factor.
    pub fn axes(&self) -> Option<Vec<AxisLabel>> {
        if !self.is_finite() {
            return None;
        }
        if let DomainSpec::Interval(_) = self {
            return Some(vec![AxisLabel::from("x")]);
        }
        let mut out = Vec::new();
        self.collect_axes("", &mut out);
        Some(out)
    }

    fn collect_axes(&self, prefix: &str, out: &mut Vec<AxisLabel>) {
        match self {
            DomainSpec::Interval(_) => out.push(AxisLabel::from(prefix)),
            DomainSpec::Product(children) => {
                for (name, child) in children {
                    child.collect_axes(AxisLabel::join(prefix, name).as_str(), out);
                }
            }
            DomainSpec::Cylinder { index, factor } => {
                if let IndexSet::Finite(labels) = index {
                    for l in labels {
                        factor.collect_axes(AxisLabel::join(prefix, l).as_str(), out);
                    }
                }
            }
        }
    }

    /// Labels of every leaf below the given index labels of the root cylinder, e.g. the three
    /// spatial axes `t1.s1, t1.s2, t1.s3` of `t1` in `(R^3)^T`. For non-cylinder roots the
    /// selection must be empty and the domain finite.
    pub fn axes_under(&self, selection: &[String]) -> Result<Vec<AxisLabel>, DomainError> {
        match self {
            DomainSpec::Cylinder { index, factor } => {
                let inner = factor.axes().ok_or(DomainError::NestedInfinite)?;
                let inner_is_leaf = matches!(**factor, DomainSpec::Interval(_));
                let mut out = Vec::new();
                for s in selection {
                    if !index.contains(s) {
                        return Err(DomainError::UnknownAxis(AxisLabel::from(s.as_str())));
                    }
                    if inner_is_leaf {
                        out.push(AxisLabel::from(s.as_str()));
                    } else {
                        out.extend(inner.iter().map(|l| AxisLabel::join(s, l.as_str())));
                    }
                }
                Ok(out)
            }
            _ if selection.is_empty() => self.axes().ok_or(DomainError::NestedInfinite),
            _ => Err(DomainError::NotCylinder),
        }
    }
}
