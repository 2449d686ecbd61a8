use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{Cell1D, ExtReal};

/// User-supplied one-dimensional gauge function.
#[derive(Clone)]
pub struct DeltaFn(pub Arc<dyn Fn(ExtReal) -> f64 + Send + Sync>);

impl DeltaFn {
    pub fn new(f: impl Fn(ExtReal) -> f64 + Send + Sync + 'static) -> Self {
        DeltaFn(Arc::new(f))
    }
}

impl fmt::Debug for DeltaFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DeltaFn(..)")
    }
}

/// Named gauge formulas for one axis. Only `Custom` is not serializable.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaRule {
    /// `delta(y) = c`.
    Const(f64),
    /// `delta(y) = a*y + b` clipped to `[eps, max]`.
    Affine { a: f64, b: f64, eps: f64, max: f64 },
    /// `delta(y) = a*|y - center| + b` clipped to `[eps, max]`.
    AbsAffine {
        center: f64,
        a: f64,
        b: f64,
        eps: f64,
        max: f64,
    },
    /// `values[k]` on the `k`-th piece cut by the ascending `breaks` (a break belongs to the
    /// piece on its right).
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    /// `tol * 2^-r` at rationals `p/q` with `q <= max_denominator`, where `r` is the rank of
    /// `p/q` in a fixed enumeration of the rationals; `other` everywhere else.
    Dirichlet {
        tol: f64,
        max_denominator: u32,
        #[serde(default = "one")]
        other: f64,
    },
    #[serde(skip)]
    Custom(DeltaFn),
}

fn one() -> f64 {
    1.0
}

impl DeltaRule {
    pub fn eval(&self, y: ExtReal) -> f64 {
        let clip = |v: f64, eps: f64, max: f64| v.max(eps).min(max);
        match self {
            DeltaRule::Const(c) => *c,
            DeltaRule::Affine { a, b, eps, max } => match y {
                ExtReal::Finite(y) => clip(a * y + b, *eps, *max),
                _ => *max,
            },
            DeltaRule::AbsAffine {
                center,
                a,
                b,
                eps,
                max,
            } => match y {
                ExtReal::Finite(y) => clip(a * (y - center).abs() + b, *eps, *max),
                _ => *max,
            },
            DeltaRule::Piecewise { breaks, values } => {
                let k = match y {
                    ExtReal::NegInf => 0,
                    ExtReal::PosInf => breaks.len(),
                    ExtReal::Finite(y) => breaks.partition_point(|&b| b <= y),
                };
                values.get(k).copied().unwrap_or(f64::NAN)
            }
            DeltaRule::Dirichlet {
                tol,
                max_denominator,
                other,
            } => match y.finite().and_then(|y| small_rational(y, *max_denominator)) {
                Some((p, q)) => {
                    let r = rational_rank(p, q);
                    let d = if r > 1100 { 0.0 } else { tol * (-(r as f64)).exp2() };
                    d.max(f64::MIN_POSITIVE)
                }
                None => *other,
            },
            DeltaRule::Custom(f) => (f.0)(y),
        }
    }

    /// Checks the rule's parameters (custom rules are trusted).
    pub fn validate(&self) -> Result<(), String> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{what} must be positive and finite, got {v}"))
            }
        };
        match self {
            DeltaRule::Const(c) => pos(*c, "constant delta"),
            DeltaRule::Affine { eps, max, .. } | DeltaRule::AbsAffine { eps, max, .. } => {
                pos(*eps, "eps")?;
                pos(*max, "max")?;
                if eps > max {
                    return Err(format!("eps {eps} exceeds max {max}"));
                }
                Ok(())
            }
            DeltaRule::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(format!(
                        "piecewise rule needs {} values for {} breaks, got {}",
                        breaks.len() + 1,
                        breaks.len(),
                        values.len()
                    ));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err("piecewise breaks must be strictly increasing".into());
                }
                values.iter().try_for_each(|v| pos(*v, "piecewise value"))
            }
            DeltaRule::Dirichlet {
                tol,
                max_denominator,
                other,
            } => {
                pos(*tol, "tol")?;
                pos(*other, "other")?;
                if *max_denominator == 0 {
                    return Err("max_denominator must be at least 1".into());
                }
                Ok(())
            }
            DeltaRule::Custom(_) => Ok(()),
        }
    }
}

/// `Some((p, q))` with `q` minimal when `y == p/q` exactly in floating point for some
/// `q <= max_q`.
pub fn small_rational(y: f64, max_q: u32) -> Option<(i64, u64)> {
    if !y.is_finite() || y.abs() > 1e15 {
        return None;
    }
    (1..=max_q as u64).find_map(|q| {
        let p = (y * q as f64).round();
        (p / q as f64 == y).then_some((p as i64, q))
    })
}

/// Position of `p/q` (lowest terms) in the enumeration of `Z x N+` by Cantor pairing of
/// the zigzag-coded numerator with `q - 1`.
pub fn rational_rank(p: i64, q: u64) -> u64 {
    let a = if p >= 0 { 2 * p as u64 } else { 2 * p.unsigned_abs() - 1 };
    let b = q - 1;
    (a + b) * (a + b + 1) / 2 + b
}

/// Thresholds for unbounded edges: `]b, +inf[` tagged at `+inf` is fine iff `b > pos`, and
/// `]-inf, a]` tagged at `-inf` is fine iff `a < -neg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "InfRuleRepr", into = "InfRuleRepr")]
pub struct InfRule {
    pub neg: f64,
    pub pos: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InfRuleRepr {
    Symmetric(f64),
    Split { neg: f64, pos: f64 },
}

impl From<InfRuleRepr> for InfRule {
    fn from(r: InfRuleRepr) -> Self {
        match r {
            InfRuleRepr::Symmetric(b) => InfRule::symmetric(b),
            InfRuleRepr::Split { neg, pos } => InfRule { neg, pos },
        }
    }
}

impl From<InfRule> for InfRuleRepr {
    fn from(r: InfRule) -> Self {
        if r.neg == r.pos {
            InfRuleRepr::Symmetric(r.pos)
        } else {
            InfRuleRepr::Split {
                neg: r.neg,
                pos: r.pos,
            }
        }
    }
}

impl InfRule {
    pub fn symmetric(b: f64) -> Self {
        InfRule { neg: b, pos: b }
    }

    pub fn max(self, other: InfRule) -> InfRule {
        InfRule {
            neg: self.neg.max(other.neg),
            pos: self.pos.max(other.pos),
        }
    }
}

impl Default for InfRule {
    fn default() -> Self {
        InfRule::symmetric(1.0)
    }
}

/// How an edge was judged against a gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EdgeTest {
    /// Bounded edge: `length < delta(tag)`.
    Length { length: f64, delta: f64 },
    /// `]b, +inf[` at tag `+inf`: `b > threshold`.
    UpperTail { end: f64, threshold: f64 },
    /// `]-inf, a]` at tag `-inf`: `a < -threshold`.
    LowerTail { end: f64, threshold: f64 },
    /// Unbounded edge tagged at a finite vertex, or the whole line: never fine.
    Unbounded,
}

impl EdgeTest {
    pub fn passes(&self) -> bool {
        match *self {
            EdgeTest::Length { length, delta } => length < delta,
            EdgeTest::UpperTail { end, threshold } => end > threshold,
            EdgeTest::LowerTail { end, threshold } => end < -threshold,
            EdgeTest::Unbounded => false,
        }
    }

    /// Judges `edge` tagged at `tag` given the gauge value at the tag and the tail rule.
    pub fn judge(tag: ExtReal, edge: &Cell1D, delta: f64, inf: InfRule) -> EdgeTest {
        match (edge.lo(), edge.hi()) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => EdgeTest::Length {
                length: b - a,
                delta,
            },
            (ExtReal::Finite(a), ExtReal::PosInf) if tag == ExtReal::PosInf => {
                EdgeTest::UpperTail {
                    end: a,
                    threshold: inf.pos,
                }
            }
            (ExtReal::NegInf, ExtReal::Finite(b)) if tag == ExtReal::NegInf => {
                EdgeTest::LowerTail {
                    end: b,
                    threshold: inf.neg,
                }
            }
            _ => EdgeTest::Unbounded,
        }
    }
}

/// A gauge on one axis: `scale * delta(y)` for finite tags plus the tail rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gauge1D {
    pub delta: DeltaRule,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default)]
    pub inf: InfRule,
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl Gauge1D {
    pub fn new(delta: DeltaRule, inf: InfRule) -> Self {
        Gauge1D {
            delta,
            scale: 1.0,
            inf,
        }
    }

    /// Constant gauge `c` with tail threshold `b`.
    pub fn constant(c: f64, b: f64) -> Self {
        Gauge1D::new(DeltaRule::Const(c), InfRule::symmetric(b))
    }

    pub fn custom(f: impl Fn(ExtReal) -> f64 + Send + Sync + 'static, b: f64) -> Self {
        Gauge1D::new(DeltaRule::Custom(DeltaFn::new(f)), InfRule::symmetric(b))
    }

    pub fn delta(&self, y: ExtReal) -> f64 {
        self.scale * self.delta.eval(y)
    }

    pub fn judge(&self, tag: ExtReal, edge: &Cell1D) -> EdgeTest {
        let delta = if edge.is_bounded() { self.delta(tag) } else { f64::NAN };
        EdgeTest::judge(tag, edge, delta, self.inf)
    }

    pub fn fine(&self, tag: ExtReal, edge: &Cell1D) -> bool {
        self.judge(tag, edge).passes()
    }

    /// Multiplies deltas by `factor` and divides the tail thresholds by it, so `factor < 1`
    /// gives a stricter gauge.
    pub fn scaled(&self, factor: f64) -> Self {
        Gauge1D {
            delta: self.delta.clone(),
            scale: self.scale * factor,
            inf: InfRule {
                neg: self.inf.neg / factor,
                pos: self.inf.pos / factor,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.delta.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.inf.neg.is_finite() && self.inf.pos.is_finite()) {
            return Err("tail thresholds must be finite".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        let a = DeltaRule::Affine {
            a: 1.0,
            b: 0.1,
            eps: 1e-3,
            max: 1.0,
        };
        assert!((a.eval(0.05.into()) - 0.15).abs() < 1e-15);
        assert_eq!(a.eval((-5.0).into()), 1e-3);
        let p = DeltaRule::Piecewise {
            breaks: vec![0.0, 1.0],
            values: vec![0.1, 0.2, 0.3],
        };
        assert_eq!(p.eval((-1.0).into()), 0.1);
        assert_eq!(p.eval(0.0.into()), 0.2);
        assert_eq!(p.eval(1.0.into()), 0.3);
        assert_eq!(p.eval(ExtReal::PosInf), 0.3);
    }

    #[test]
    fn dirichlet_rule_small_at_rationals() {
        let r = DeltaRule::Dirichlet {
            tol: 1e-9,
            max_denominator: 64,
            other: 1.0,
        };
        assert_eq!(r.eval(0.0.into()), 1e-9);
        assert_eq!(r.eval(1.0.into()), 1e-9 * 2f64.powi(-3));
        assert!(r.eval(0.5.into()) < 1e-9);
        assert_eq!(r.eval((1.0 / 128.0).into()), 1.0);
        assert!(r.eval((63.0 / 64.0).into()) > 0.0);
        assert_eq!(small_rational(0.75, 64), Some((3, 4)));
        assert_eq!(small_rational(std::f64::consts::PI, 64), None);
    }

    #[test]
    fn ranks_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for q in 1..40u64 {
            for p in -60i64..60 {
                assert!(seen.insert(rational_rank(p, q)));
            }
        }
    }

    #[test]
    fn tail_rule_is_strict() {
        let g = Gauge1D::constant(0.5, 3.0);
        let up = |b: f64| Cell1D::new(b, ExtReal::PosInf).unwrap();
        assert!(!g.fine(ExtReal::PosInf, &up(3.0)));
        assert!(g.fine(ExtReal::PosInf, &up(3.5)));
        assert!(!g.fine(3.5.into(), &up(3.5)));
        let down = Cell1D::new(ExtReal::NegInf, -4.0).unwrap();
        assert!(g.fine(ExtReal::NegInf, &down));
        assert!(!g.fine(ExtReal::PosInf, &Cell1D::line()));
        assert!(!g.fine(ExtReal::NegInf, &Cell1D::line()));
        let s = g.scaled(0.5);
        assert_eq!(s.delta(0.0.into()), 0.25);
        assert_eq!(s.inf, InfRule::symmetric(6.0));
    }

    #[test]
    fn json_shapes() {
        let g: Gauge1D = serde_json::from_str(r#"{"delta":{"const":0.5},"inf":3}"#).unwrap();
        assert_eq!(g.inf, InfRule::symmetric(3.0));
        let g: Gauge1D =
            serde_json::from_str(r#"{"delta":{"const":0.5},"inf":{"neg":1,"pos":2}}"#).unwrap();
        assert_eq!(g.inf, InfRule { neg: 1.0, pos: 2.0 });
        assert!(serde_json::to_string(&Gauge1D::custom(|_| 1.0, 1.0)).is_err());
        assert!(DeltaRule::Piecewise {
            breaks: vec![0.0],
            values: vec![1.0]
        }
        .validate()
        .is_err());
    }
}
