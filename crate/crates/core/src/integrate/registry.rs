use serde::{Deserialize, Serialize};

use super::{volume, CellFunction, IntegrateError, OnAxis};
use crate::brownian::{g_of_cell, normal_mass, payoff, BrownianSpec, PayoffOptions, PayoffSpec, Quadrature};
use crate::domain::{AxisLabel, Cell, Cell1D, DomainSpec, ExtReal, PointT};
use crate::gauge::{
    small_rational, CompoundGauge, Components, CylinderGauge, DeltaRule, Gauge, Gauge1D, GaugeB, InfRule, LRule,
};

/// Named integrands for job files. Point-function integrands are `f(x) * |I|`, where `x`
/// is the tag coordinate on `axis` (the first domain axis when omitted) and `|I|` the cell
/// volume.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum IntegrandSpec {
    /// `sum_k coeffs[k] x^k`.
    Poly {
        coeffs: Vec<f64>,
        #[serde(default)]
        axis: Option<AxisLabel>,
    },
    Length,
    /// Indicator of the rationals `p/q` with `q <= max_denominator`.
    Dirichlet {
        #[serde(default = "default_q")]
        max_denominator: u32,
        #[serde(default)]
        axis: Option<AxisLabel>,
    },
    /// `1 / (2 sqrt(x))` for `x > 0`, and `0` at `x <= 0`.
    InvSqrt {
        #[serde(default)]
        axis: Option<AxisLabel>,
    },
    /// `N(0, variance)` mass of the edge on `axis`: a distribution function, not a density.
    GaussMass {
        #[serde(default = "one")]
        variance: f64,
        #[serde(default)]
        axis: Option<AxisLabel>,
    },
    /// Product of one-axis integrands, each evaluated on its own axis.
    Separable { factors: Vec<Factor> },
    Scaled { factor: f64, inner: Box<IntegrandSpec> },
    /// Brownian distribution function `G(I)` on the spec's cylinder domain.
    BrownianG {
        spec: BrownianSpec,
        #[serde(default)]
        quadrature: Quadrature,
    },
    /// `payoff(x) G(I)`; jobs route it to the expected-payoff integrator.
    BrownianPayoff {
        spec: BrownianSpec,
        payoff: PayoffSpec,
        #[serde(default)]
        options: PayoffOptions,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Factor {
    pub axis: AxisLabel,
    pub f: IntegrandSpec,
}

fn default_q() -> u32 {
    64
}

fn one() -> f64 {
    1.0
}

fn pick_axis(axis: &Option<AxisLabel>, domain: &DomainSpec) -> AxisLabel {
    axis.clone()
        .or_else(|| domain.axes().and_then(|a| a.into_iter().next()))
        .unwrap_or_else(|| AxisLabel::from("x"))
}

fn edge_on(cell: &Cell, axis: &AxisLabel, domain: &DomainSpec) -> Cell1D {
    cell.edge(axis)
        .copied()
        .unwrap_or_else(|| domain.base_of(axis).unwrap_or_else(|_| Cell1D::line()))
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

impl CellFunction for IntegrandSpec {
    fn eval(&self, tag: &PointT, cell: &Cell, domain: &DomainSpec) -> f64 {
        let x = |axis: &Option<AxisLabel>| tag.get(&pick_axis(axis, domain));
        match self {
            IntegrandSpec::Poly { coeffs, axis } => horner(coeffs, x(axis).to_f64()) * volume(cell, domain),
            IntegrandSpec::Length => volume(cell, domain),
            IntegrandSpec::Dirichlet { max_denominator, axis } => {
                let v = x(axis).to_f64();
                if small_rational(v, *max_denominator).is_some() {
                    volume(cell, domain)
                } else {
                    0.0
                }
            }
            IntegrandSpec::InvSqrt { axis } => {
                let f = match x(axis) {
                    ExtReal::Finite(v) if v > 0.0 => 0.5 / v.sqrt(),
                    _ => 0.0,
                };
                f * volume(cell, domain)
            }
            IntegrandSpec::GaussMass { variance, axis } => {
                normal_mass(&edge_on(cell, &pick_axis(axis, domain), domain), 0.0, *variance)
            }
            IntegrandSpec::Separable { factors } => factors
                .iter()
                .map(|fac| {
                    OnAxis {
                        axis: fac.axis.clone(),
                        f: &fac.f,
                    }
                    .eval(tag, cell, domain)
                })
                .product(),
            IntegrandSpec::Scaled { factor, inner } => factor * inner.eval(tag, cell, domain),
            IntegrandSpec::BrownianG { spec, quadrature } => {
                g_of_cell(spec, cell, quadrature).unwrap_or(f64::NAN)
            }
            IntegrandSpec::BrownianPayoff { spec, payoff: pay, options } => {
                let p = payoff(pay, &spec.read(tag));
                if p == 0.0 {
                    0.0
                } else {
                    p * g_of_cell(spec, cell, &options.quadrature).unwrap_or(f64::NAN)
                }
            }
        }
    }
}

impl IntegrandSpec {
    /// The domain the integrand lives on, when it fixes one.
    pub fn natural_domain(&self) -> Option<DomainSpec> {
        match self {
            IntegrandSpec::BrownianG { spec, .. } | IntegrandSpec::BrownianPayoff { spec, .. } => Some(spec.domain()),
            IntegrandSpec::Scaled { inner, .. } => inner.natural_domain(),
            _ => None,
        }
    }

    fn axis_rule(&self, axis: &AxisLabel, domain: &DomainSpec, tol: f64) -> Option<Gauge1D> {
        let mine = |a: &Option<AxisLabel>| &pick_axis(a, domain) == axis;
        match self {
            IntegrandSpec::Dirichlet { max_denominator, axis: a } if mine(a) => Some(Gauge1D::new(
                DeltaRule::Dirichlet {
                    tol,
                    max_denominator: *max_denominator,
                    other: 0.25,
                },
                InfRule::symmetric(2.0),
            )),
            IntegrandSpec::InvSqrt { axis: a } if mine(a) => Some(Gauge1D::new(
                DeltaRule::Affine {
                    a: 0.5,
                    b: 0.0,
                    eps: 1e-9,
                    max: 0.25,
                },
                InfRule::symmetric(2.0),
            )),
            IntegrandSpec::Separable { factors } => factors
                .iter()
                .filter(|f| &f.axis == axis)
                .find_map(|f| f.f.axis_rule(&AxisLabel::from("x"), &DomainSpec::Interval(Cell1D::line()), tol)),
            IntegrandSpec::Scaled { inner, .. } => inner.axis_rule(axis, domain, tol),
            _ => None,
        }
    }

    /// A starting gauge suited to the integrand: tiny deltas at the rationals for the
    /// Dirichlet indicator, deltas proportional to `x` near the singularity of `InvSqrt`,
    /// constants elsewhere.
    pub fn default_gauge(&self, domain: &DomainSpec, tol: f64) -> Result<Gauge, IntegrateError> {
        match self {
            IntegrandSpec::BrownianG { spec, .. } | IntegrandSpec::BrownianPayoff { spec, .. } => {
                return Ok(brownian_gauge(spec))
            }
            IntegrandSpec::Scaled { inner, .. } if inner.natural_domain().is_some() => {
                return inner.default_gauge(domain, tol)
            }
            _ => {}
        }
        let axes = domain
            .axes()
            .ok_or_else(|| IntegrateError::Mismatch("this integrand needs a finite-dimensional domain".into()))?;
        let comps = axes.into_iter().map(|a| {
            let g = self
                .axis_rule(&a, domain, tol)
                .unwrap_or_else(|| Gauge1D::constant(0.25, 2.0));
            (a, g)
        });
        Ok(Gauge::B(GaugeB::new(comps)))
    }
}

/// Cylinder gauge restricting every read time, with steps matched to the grid spacing.
pub(crate) fn brownian_gauge(spec: &BrownianSpec) -> Gauge {
    let mut prev = 0.0;
    let mut dmin = f64::INFINITY;
    for &t in &spec.times {
        dmin = dmin.min(t - prev);
        prev = t;
    }
    let leaf = Gauge1D::constant(0.5 * dmin.sqrt(), 3.0 * prev.sqrt());
    let labels: Vec<String> = (1..=spec.n()).map(|j| format!("t{j}")).collect();
    let l = LRule::constant(labels.clone());
    let l_bound = Some(labels.into_iter().collect());
    if spec.d == 1 {
        Gauge::Cylinder(CylinderGauge {
            l,
            components: Components::uniform(leaf),
            l_bound,
        })
    } else {
        Gauge::Compound(CompoundGauge::Cylinder {
            l,
            l_bound,
            factor: Box::new(CompoundGauge::Product(
                (1..=spec.d)
                    .map(|i| (format!("s{i}"), CompoundGauge::Leaf(leaf.clone())))
                    .collect(),
            )),
        })
    }
}
