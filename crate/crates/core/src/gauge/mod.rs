//! Gauges and the fineness predicates that admit tagged cells into divisions.
//!
//! * [`GaugeA`]: one positive number `delta(x)` per point of a finite-dimensional domain;
//!   every edge must be shorter than it.
//! * [`GaugeB`]: one [`Gauge1D`] per axis; each edge is judged by its own axis gauge.
//! * [`CylinderGauge`]: the pair `(L, delta_N)` on `R^T`; a cell restricted on `N` is fine
//!   when `N` contains `L(tag)` and every restricted edge is fine.
//! * [`CompoundGauge`]: the same construction nested along a structured domain tree.
//!
//! Fineness is strict (`length < delta`). Unbounded edges are judged by the tail rule of
//! [`InfRule`].

mod rule;
mod strength;

pub use rule::{
    rational_rank, small_rational, DeltaFn, DeltaRule, EdgeTest, Gauge1D, InfRule,
};
pub use strength::{find_b_not_a, min_combine};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    check_cell, is_associated, AxisLabel, Cell, Cell1D, DomainError, DomainSpec, ExtReal, PointT,
    TaggedCell,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaugeError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("tag is not a vertex of its cell on axis `{axis}`")]
    NotAssociated { axis: AxisLabel },
    #[error("gauge has no component for axis `{0}`")]
    MissingComponent(AxisLabel),
    #[error("gauge does not match the domain: {0}")]
    Mismatch(String),
    #[error("invalid gauge: {0}")]
    Invalid(String),
}

/// User-supplied point gauge for [`GaugeA`].
#[derive(Clone)]
pub struct PointFn(pub Arc<dyn Fn(&PointT) -> f64 + Send + Sync>);

impl fmt::Debug for PointFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PointFn(..)")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointRule {
    Const(f64),
    /// `delta_1(x_1) * ... * delta_n(x_n)` over the components of a [`GaugeB`].
    Product(GaugeB),
    /// `min_j delta_j(x_j)` over the components of a [`GaugeB`].
    Min(GaugeB),
    #[serde(skip)]
    Custom(PointFn),
}

impl PointRule {
    pub fn eval(&self, x: &PointT) -> f64 {
        match self {
            PointRule::Const(c) => *c,
            PointRule::Product(g) => g
                .components
                .iter()
                .map(|(axis, c)| c.delta(x.get(axis)))
                .product(),
            PointRule::Min(g) => g
                .components
                .iter()
                .map(|(axis, c)| c.delta(x.get(axis)))
                .fold(f64::INFINITY, f64::min),
            PointRule::Custom(f) => (f.0)(x),
        }
    }
}

/// `delta(x) > 0` for points of a finite-dimensional domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeA {
    pub delta: PointRule,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub inf: InfRule,
}

fn one() -> f64 {
    1.0
}

impl GaugeA {
    pub fn constant(c: f64, b: f64) -> Self {
        GaugeA {
            delta: PointRule::Const(c),
            scale: 1.0,
            inf: InfRule::symmetric(b),
        }
    }

    pub fn custom(f: impl Fn(&PointT) -> f64 + Send + Sync + 'static, b: f64) -> Self {
        GaugeA {
            delta: PointRule::Custom(PointFn(Arc::new(f))),
            scale: 1.0,
            inf: InfRule::symmetric(b),
        }
    }

    pub fn delta(&self, x: &PointT) -> f64 {
        self.scale * self.delta.eval(x)
    }
}

/// Componentwise gauge `(delta_1(x_1), ..., delta_n(x_n))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugeB {
    pub components: BTreeMap<AxisLabel, Gauge1D>,
}

impl GaugeB {
    pub fn new<L: Into<AxisLabel>>(components: impl IntoIterator<Item = (L, Gauge1D)>) -> Self {
        GaugeB {
            components: components.into_iter().map(|(l, g)| (l.into(), g)).collect(),
        }
    }

    /// The same axis gauge on every axis of a finite domain.
    pub fn uniform(domain: &DomainSpec, g: Gauge1D) -> Result<Self, GaugeError> {
        let axes = domain
            .axes()
            .ok_or_else(|| GaugeError::Mismatch("componentwise gauge needs a finite domain".into()))?;
        Ok(GaugeB::new(axes.into_iter().map(|a| (a, g.clone()))))
    }

    pub fn component(&self, axis: &AxisLabel) -> Result<&Gauge1D, GaugeError> {
        self.components
            .get(axis)
            .ok_or_else(|| GaugeError::MissingComponent(axis.clone()))
    }
}

/// User-supplied `L` function.
#[derive(Clone)]
pub struct LFn(pub Arc<dyn Fn(&PointT) -> BTreeSet<String> + Send + Sync>);

impl fmt::Debug for LFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LFn(..)")
    }
}

/// The finite index set `L(x)` a fine cell must restrict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LRule {
    Const(BTreeSet<String>),
    /// `sets[k]` on the `k`-th piece of the coordinate on `axis` (relative to the cylinder
    /// node), cut by ascending `breaks`.
    Piecewise {
        axis: String,
        breaks: Vec<f64>,
        sets: Vec<BTreeSet<String>>,
    },
    #[serde(skip)]
    Custom(LFn),
}

impl LRule {
    pub fn constant<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        LRule::Const(labels.into_iter().map(Into::into).collect())
    }

    pub fn custom(f: impl Fn(&PointT) -> BTreeSet<String> + Send + Sync + 'static) -> Self {
        LRule::Custom(LFn(Arc::new(f)))
    }

    /// `L(x)` for the cylinder node found at `prefix`.
    pub fn eval(&self, x: &PointT, prefix: &str) -> BTreeSet<String> {
        match self {
            LRule::Const(s) => s.clone(),
            LRule::Piecewise { axis, breaks, sets } => {
                let y = x.get(&AxisLabel::join(prefix, axis));
                let k = match y {
                    ExtReal::NegInf => 0,
                    ExtReal::PosInf => breaks.len(),
                    ExtReal::Finite(y) => breaks.partition_point(|&b| b <= y),
                };
                sets.get(k).cloned().unwrap_or_default()
            }
            LRule::Custom(f) => (f.0)(x),
        }
    }

    fn validate(&self) -> Result<(), GaugeError> {
        match self {
            LRule::Const(s) if s.is_empty() => Err(GaugeError::Invalid("L must be non-empty".into())),
            LRule::Piecewise { breaks, sets, .. } => {
                if sets.len() != breaks.len() + 1 || sets.iter().any(|s| s.is_empty()) {
                    Err(GaugeError::Invalid(
                        "piecewise L needs one non-empty set per piece".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Axis gauges of a cylinder gauge: one default plus per-label overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Components {
    pub default: Gauge1D,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Gauge1D>,
}

impl Components {
    pub fn uniform(g: Gauge1D) -> Self {
        Components {
            default: g,
            overrides: BTreeMap::new(),
        }
    }

    pub fn get(&self, label: &str) -> &Gauge1D {
        self.overrides.get(label).unwrap_or(&self.default)
    }

    fn scaled(&self, f: f64) -> Self {
        Components {
            default: self.default.scaled(f),
            overrides: self
                .overrides
                .iter()
                .map(|(k, g)| (k.clone(), g.scaled(f)))
                .collect(),
        }
    }
}

/// Gauge `(L, delta_N)` on a cylinder domain `R^T` whose factor is a single interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderGauge {
    pub l: LRule,
    pub components: Components,
    /// Finite set known to contain every `L(x)`; required for constructing divisions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_bound: Option<BTreeSet<String>>,
}

/// Gauge mirroring a structured domain tree: leaf gauges at intervals, child gauges at
/// finite products, and `(L, factor gauge)` at cylinder nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompoundGauge {
    Leaf(Gauge1D),
    Product(Vec<(String, CompoundGauge)>),
    Cylinder {
        l: LRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l_bound: Option<BTreeSet<String>>,
        factor: Box<CompoundGauge>,
    },
}

impl CompoundGauge {
    fn scaled(&self, f: f64) -> Self {
        match self {
            CompoundGauge::Leaf(g) => CompoundGauge::Leaf(g.scaled(f)),
            CompoundGauge::Product(v) => {
                CompoundGauge::Product(v.iter().map(|(n, g)| (n.clone(), g.scaled(f))).collect())
            }
            CompoundGauge::Cylinder { l, l_bound, factor } => CompoundGauge::Cylinder {
                l: l.clone(),
                l_bound: l_bound.clone(),
                factor: Box::new(factor.scaled(f)),
            },
        }
    }
}

/// Every gauge variant behind one type.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gauge {
    A(GaugeA),
    B(GaugeB),
    Cylinder(CylinderGauge),
    Compound(CompoundGauge),
}

/// One edge judged at the tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWitness {
    pub axis: AxisLabel,
    pub tag: ExtReal,
    pub test: EdgeTest,
}

/// `N ⊇ L(tag)` at one cylinder node (`node` is the label prefix, empty at the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LCheck {
    pub node: String,
    pub restricted: BTreeSet<String>,
    pub required: BTreeSet<String>,
}

impl LCheck {
    pub fn missing(&self) -> BTreeSet<String> {
        self.required.difference(&self.restricted).cloned().collect()
    }
}

/// Re-derivable evidence of why a tagged cell is (or is not) fine.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FineWitness {
    pub edges: Vec<EdgeWitness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub l_checks: Vec<LCheck>,
}

impl FineWitness {
    pub fn is_fine(&self) -> bool {
        self.edges.iter().all(|e| e.test.passes())
            && self.l_checks.iter().all(|c| c.required.is_subset(&c.restricted))
    }
}

impl Gauge {
    /// Deltas times `factor`, tail thresholds divided by it; `L` is unchanged.
    pub fn scaled(&self, factor: f64) -> Gauge {
        match self {
            Gauge::A(g) => Gauge::A(GaugeA {
                delta: g.delta.clone(),
                scale: g.scale * factor,
                inf: InfRule {
                    neg: g.inf.neg / factor,
                    pos: g.inf.pos / factor,
                },
            }),
            Gauge::B(g) => Gauge::B(GaugeB {
                components: g
                    .components
                    .iter()
                    .map(|(a, c)| (a.clone(), c.scaled(factor)))
                    .collect(),
            }),
            Gauge::Cylinder(g) => Gauge::Cylinder(CylinderGauge {
                l: g.l.clone(),
                components: g.components.scaled(factor),
                l_bound: g.l_bound.clone(),
            }),
            Gauge::Compound(g) => Gauge::Compound(g.scaled(factor)),
        }
    }

    /// Structural and parameter checks against `domain`.
    pub fn validate(&self, domain: &DomainSpec) -> Result<(), GaugeError> {
        let bad = |e: String| GaugeError::Invalid(e);
        match self {
            Gauge::A(g) => {
                require_finite(domain)?;
                if let PointRule::Const(c) = g.delta {
                    if !(c > 0.0) {
                        return Err(bad(format!("constant delta must be positive, got {c}")));
                    }
                }
                Ok(())
            }
            Gauge::B(g) => {
                for axis in require_finite(domain)? {
                    g.component(&axis)?.validate().map_err(bad)?;
                }
                Ok(())
            }
            Gauge::Cylinder(g) => {
                match domain {
                    DomainSpec::Cylinder { factor, .. }
                        if matches!(**factor, DomainSpec::Interval(_)) => {}
                    _ => {
                        return Err(GaugeError::Mismatch(
                            "cylinder gauge needs a domain of the form R^T".into(),
                        ))
                    }
                }
                g.l.validate()?;
                g.components.default.validate().map_err(bad)?;
                for c in g.components.overrides.values() {
                    c.validate().map_err(bad)?;
                }
                Ok(())
            }
            Gauge::Compound(g) => validate_compound(g, domain),
        }
    }

    /// Judges `tagged` against the gauge and returns the per-edge and per-node evidence.
    pub fn witness(&self, domain: &DomainSpec, tagged: &TaggedCell) -> Result<FineWitness, GaugeError> {
        let TaggedCell { tag, cell } = tagged;
        check_cell(domain, cell)?;
        if !is_associated(tag, cell) {
            let axis = cell
                .edges()
                .iter()
                .find(|(a, e)| !e.is_vertex(tag.get(a)))
                .map(|(a, _)| a.clone())
                .expect("some edge fails association");
            return Err(GaugeError::NotAssociated { axis });
        }
        let mut w = FineWitness::default();
        match self {
            Gauge::A(g) => {
                let delta = g.delta(tag);
                for (axis, edge) in full_edges(domain, cell)? {
                    let t = tag.get(&axis);
                    w.edges.push(EdgeWitness {
                        test: EdgeTest::judge(t, &edge, delta, g.inf),
                        axis,
                        tag: t,
                    });
                }
            }
            Gauge::B(g) => {
                for (axis, edge) in full_edges(domain, cell)? {
                    let t = tag.get(&axis);
                    w.edges.push(EdgeWitness {
                        test: g.component(&axis)?.judge(t, &edge),
                        axis,
                        tag: t,
                    });
                }
            }
            Gauge::Cylinder(g) => {
                let restricted: BTreeSet<String> =
                    cell.restricted().map(|a| a.as_str().to_string()).collect();
                w.l_checks.push(LCheck {
                    node: String::new(),
                    required: g.l.eval(tag, ""),
                    restricted,
                });
                for (axis, edge) in cell.edges() {
                    let t = tag.get(axis);
                    w.edges.push(EdgeWitness {
                        axis: axis.clone(),
                        tag: t,
                        test: g.components.get(axis.as_str()).judge(t, edge),
                    });
                }
            }
            Gauge::Compound(g) => compound_witness(g, domain, "", tag, cell, &mut w)?,
        }
        Ok(w)
    }

    pub fn is_fine(&self, domain: &DomainSpec, tagged: &TaggedCell) -> Result<bool, GaugeError> {
        Ok(self.witness(domain, tagged)?.is_fine())
    }

    /// The uniform bound on `L` (top-level cylinder node), if the gauge has one.
    pub fn l_bound(&self) -> Option<&BTreeSet<String>> {
        match self {
            Gauge::Cylinder(g) => g.l_bound.as_ref(),
            Gauge::Compound(CompoundGauge::Cylinder { l_bound, .. }) => l_bound.as_ref(),
            _ => None,
        }
    }

    /// Axis gauges for the listed axes, for constructions that judge edges one by one.
    pub(crate) fn axis_components(
        &self,
        domain: &DomainSpec,
        axes: &[AxisLabel],
    ) -> Result<Vec<Gauge1D>, GaugeError> {
        axes.iter()
            .map(|a| match self {
                Gauge::B(g) => g.component(a).cloned(),
                Gauge::Cylinder(g) => Ok(g.components.get(a.as_str()).clone()),
                Gauge::Compound(g) => compound_leaf(g, domain, a.as_str()).cloned(),
                Gauge::A(_) => Err(GaugeError::Mismatch(
                    "point gauges have no axis components".into(),
                )),
            })
            .collect()
    }
}

/// Fineness of a single tagged cell (see [`Gauge::witness`]).
pub fn is_fine(gauge: &Gauge, domain: &DomainSpec, tagged: &TaggedCell) -> Result<bool, GaugeError> {
    gauge.is_fine(domain, tagged)
}

fn require_finite(domain: &DomainSpec) -> Result<Vec<AxisLabel>, GaugeError> {
    domain
        .axes()
        .ok_or_else(|| GaugeError::Mismatch("this gauge needs a finite-dimensional domain".into()))
}

/// Every axis of a finite domain with its edge, unrestricted axes carrying the base.
fn full_edges(domain: &DomainSpec, cell: &Cell) -> Result<Vec<(AxisLabel, Cell1D)>, GaugeError> {
    require_finite(domain)?
        .into_iter()
        .map(|a| {
            let e = match cell.edge(&a) {
                Some(e) => *e,
                None => domain.base_of(&a)?,
            };
            Ok((a, e))
        })
        .collect()
}

fn leaf_label(prefix: &str) -> AxisLabel {
    if prefix.is_empty() {
        AxisLabel::from("x")
    } else {
        AxisLabel::from(prefix)
    }
}

/// First segments (below `prefix`) of the restricted labels of `cell`.
fn restricted_children(cell: &Cell, prefix: &str) -> BTreeSet<String> {
    cell.restricted()
        .filter_map(|a| {
            let rest = if prefix.is_empty() {
                Some(a.as_str())
            } else {
                a.as_str()
                    .strip_prefix(prefix)
                    .and_then(|r| r.strip_prefix('.'))
            }?;
            Some(rest.split('.').next().unwrap_or(rest).to_string())
        })
        .collect()
}

fn compound_witness(
    g: &CompoundGauge,
    d: &DomainSpec,
    prefix: &str,
    tag: &PointT,
    cell: &Cell,
    w: &mut FineWitness,
) -> Result<(), GaugeError> {
    match (g, d) {
        (CompoundGauge::Leaf(g1), DomainSpec::Interval(base)) => {
            let axis = leaf_label(prefix);
            let edge = cell.edge(&axis).copied().unwrap_or(*base);
            let t = tag.get(&axis);
            w.edges.push(EdgeWitness {
                test: g1.judge(t, &edge),
                axis,
                tag: t,
            });
            Ok(())
        }
        (CompoundGauge::Product(gs), DomainSpec::Product(ds)) if gs.len() == ds.len() => {
            for ((gn, gc), (dn, dc)) in gs.iter().zip(ds) {
                if gn != dn {
                    return Err(GaugeError::Mismatch(format!("factor `{gn}` vs `{dn}`")));
                }
                compound_witness(gc, dc, AxisLabel::join(prefix, gn).as_str(), tag, cell, w)?;
            }
            Ok(())
        }
        (CompoundGauge::Cylinder { l, factor, .. }, DomainSpec::Cylinder { factor: df, .. }) => {
            let restricted = restricted_children(cell, prefix);
            w.l_checks.push(LCheck {
                node: prefix.to_string(),
                required: l.eval(tag, prefix),
                restricted: restricted.clone(),
            });
            for s in &restricted {
                compound_witness(factor, df, AxisLabel::join(prefix, s).as_str(), tag, cell, w)?;
            }
            Ok(())
        }
        _ => Err(GaugeError::Mismatch(format!(
            "gauge node does not match domain node at `{prefix}`"
        ))),
    }
}

fn compound_leaf<'g>(g: &'g CompoundGauge, d: &DomainSpec, path: &str) -> Result<&'g Gauge1D, GaugeError> {
    let (head, rest) = match path.split_once('.') {
        Some((a, b)) => (a, b),
        None => (path, ""),
    };
    let missing = || GaugeError::MissingComponent(AxisLabel::from(path));
    match (g, d) {
        (CompoundGauge::Leaf(g1), DomainSpec::Interval(_)) => {
            if rest.is_empty() && (head.is_empty() || head == "x") {
                Ok(g1)
            } else {
                Err(missing())
            }
        }
        (CompoundGauge::Product(gs), DomainSpec::Product(ds)) => {
            let k = ds.iter().position(|(n, _)| n == head).ok_or_else(missing)?;
            compound_leaf(&gs.get(k).ok_or_else(missing)?.1, &ds[k].1, rest)
        }
        (CompoundGauge::Cylinder { factor, .. }, DomainSpec::Cylinder { index, factor: df }) => {
            if !index.contains(head) {
                return Err(missing());
            }
            compound_leaf(factor, df, rest)
        }
        _ => Err(GaugeError::Mismatch(format!("at `{path}`"))),
    }
}

fn validate_compound(g: &CompoundGauge, d: &DomainSpec) -> Result<(), GaugeError> {
    match (g, d) {
        (CompoundGauge::Leaf(g1), DomainSpec::Interval(_)) => g1.validate().map_err(GaugeError::Invalid),
        (CompoundGauge::Product(gs), DomainSpec::Product(ds)) => {
            if gs.len() != ds.len() || gs.iter().zip(ds).any(|((a, _), (b, _))| a != b) {
                return Err(GaugeError::Mismatch("product factors differ".into()));
            }
            gs.iter()
                .zip(ds)
                .try_for_each(|((_, gc), (_, dc))| validate_compound(gc, dc))
        }
        (CompoundGauge::Cylinder { l, factor, .. }, DomainSpec::Cylinder { factor: df, .. }) => {
            l.validate()?;
            validate_compound(factor, df)
        }
        _ => Err(GaugeError::Mismatch("gauge tree does not mirror the domain tree".into())),
    }
}
