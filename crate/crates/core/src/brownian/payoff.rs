use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{row_mass, BrownianError, BrownianSpec, Quadrature};
use crate::division::{slice_division_with, BuildOptions, TagPolicy};
use crate::domain::{Cell1D, DomainSpec, ExtReal};
use crate::gauge::{DeltaRule, Gauge, Gauge1D, GaugeB, InfRule};
use crate::integrate::{refine, IntegralResult, IntegrateError, RoundRecord};
use crate::par::map_chunks;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMode {
    /// All coordinates read at a common time: pays if `sum_i x_i(t) > lambda` for some `t`.
    #[default]
    Synchronized,
    /// Each coordinate read at its own time: pays if `sum_i x_i(t^i) > lambda` for some
    /// choice of times, i.e. if the per-coordinate maxima sum above `lambda`.
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kappa: f64,
    pub lambda: ExtReal,
    #[serde(default)]
    pub mode: PayoffMode,
}

impl PayoffSpec {
    pub fn validate(&self) -> Result<(), BrownianError> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(BrownianError::Payoff(format!("kappa must be finite and >= 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

/// Payoff of one path; `values[i]` holds coordinate `i` at its read times.
pub fn payoff(pay: &PayoffSpec, values: &[Vec<f64>]) -> f64 {
    let l = match pay.lambda {
        ExtReal::NegInf => return pay.kappa,
        ExtReal::PosInf => return 0.0,
        ExtReal::Finite(l) => l,
    };
    let hit = match pay.mode {
        PayoffMode::Synchronized => {
            let n = values.iter().map(|r| r.len()).min().unwrap_or(0);
            (0..n).any(|j| values.iter().map(|r| r[j]).sum::<f64>() > l)
        }
        PayoffMode::Asynchronous => {
            values
                .iter()
                .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .sum::<f64>()
                > l
        }
    };
    if hit {
        pay.kappa
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PayoffOptions {
    /// Gauge halvings tried before giving up.
    pub max_rounds: usize,
    /// Gauge on each time axis of a spatial row; derived from the time grid when absent.
    pub row_gauge: Option<Gauge1D>,
    pub quadrature: Quadrature,
    pub policy: TagPolicy,
    pub max_row_cells: usize,
}

impl Default for PayoffOptions {
    fn default() -> Self {
        PayoffOptions {
            max_rounds: 6,
            row_gauge: None,
            quadrature: Quadrature::default(),
            policy: TagPolicy::SplitVertexFirst,
            max_row_cells: 400_000,
        }
    }
}

fn default_row_gauge(spec: &BrownianSpec) -> Gauge1D {
    let mut prev = 0.0;
    let mut dmin = f64::INFINITY;
    for &t in &spec.times {
        dmin = dmin.min(t - prev);
        prev = t;
    }
    let h = 0.5 * dmin.sqrt();
    let reach = prev.sqrt();
    Gauge1D::new(
        DeltaRule::AbsAffine {
            center: 0.0,
            a: 0.25,
            b: h,
            eps: 1e-3 * h,
            max: 2.0 * reach,
        },
        InfRule::symmetric(3.0 * reach),
    )
}

/// Expected payoff `E = sum payoff(tag) G(I)` over fine divisions of the grid cylinder.
///
/// The integrand factorizes over the spatial coordinates except through the barrier, so the
/// sum is taken row by row: rows `1..d-1` run over a sliced fine division of `R^n` (one axis per
/// read time), and for the last row the cells are cut at the barrier left by the tags of
/// the earlier rows. On that last row the payoff is constant on each cell, so its sum is
/// `kappa (1 - G(orthant))` exactly for any refinement.
pub fn expected_payoff(spec: &BrownianSpec, pay: &PayoffSpec, tol: f64) -> Result<IntegralResult, IntegrateError> {
    expected_payoff_with(spec, pay, tol, &PayoffOptions::default())
}

pub fn expected_payoff_with(
    spec: &BrownianSpec,
    pay: &PayoffSpec,
    tol: f64,
    opts: &PayoffOptions,
) -> Result<IntegralResult, IntegrateError> {
    spec.validate()?;
    pay.validate()?;
    if !(tol > 0.0) {
        return Err(IntegrateError::InvalidTolerance(tol));
    }
    let exact = match pay.lambda {
        ExtReal::PosInf => Some(0.0),
        ExtReal::NegInf => Some(pay.kappa),
        ExtReal::Finite(_) => None,
    };
    if let Some(v) = exact {
        return Ok(IntegralResult {
            estimate: v,
            tolerance_achieved: 0.0,
            refinement_depth: 0,
            division_size: 1,
            converged: true,
            rounds: vec![RoundRecord {
                round: 0,
                cells: 1,
                estimate: v,
                delta_prev: None,
            }],
            stop_reason: None,
        });
    }
    let base = opts.row_gauge.clone().unwrap_or_else(|| default_row_gauge(spec));
    // tails past 8 sqrt(t_n) hold no visible mass; growing them further only lengthens the
    // unit-step walk into the tail
    let reach = 8.0 * spec.times[spec.n() - 1].sqrt();
    refine(tol, opts.max_rounds, |r| {
        let mut g = base.scaled(0.5f64.powi(r as i32));
        g.inf.neg = g.inf.neg.min(base.inf.neg.max(reach));
        g.inf.pos = g.inf.pos.min(base.inf.pos.max(reach));
        round_estimate(spec, pay, &g, opts)
    })
}

fn key_into(buf: &mut Vec<u64>, c: &[f64]) {
    buf.clear();
    buf.extend(c.iter().map(|&x| if x.is_nan() { f64::NAN.to_bits() } else { (x + 0.0).to_bits() }));
}

struct Rows<'a> {
    spec: &'a BrownianSpec,
    pay: &'a PayoffSpec,
    lambda: f64,
    q: Quadrature,
    /// Distinct row tags (reduced to the payoff state) with their total `G` weight.
    weights: Vec<(Vec<f64>, f64)>,
    memo: Vec<HashMap<Vec<u64>, f64>>,
}

impl Rows<'_> {
    /// Last-row value given the state accumulated by the earlier rows.
    fn last(&self, c: &[f64]) -> f64 {
        let n = self.spec.n();
        let bound = |x: f64| -> Option<Cell1D> {
            // None: this read can never exceed
            if x.is_nan() || x == f64::NEG_INFINITY {
                return None;
            }
            Some(Cell1D::new(ExtReal::NegInf, self.lambda - x).expect("finite upper bound"))
        };
        let slots: Vec<Cell1D> = match self.pay.mode {
            PayoffMode::Synchronized => {
                if c.iter().any(|&x| x == f64::INFINITY) {
                    return self.pay.kappa;
                }
                c.iter().map(|&x| bound(x).unwrap_or_else(Cell1D::line)).collect()
            }
            PayoffMode::Asynchronous => {
                if c[0] == f64::INFINITY {
                    return self.pay.kappa;
                }
                match bound(c[0]) {
                    None => return 0.0,
                    Some(b) => vec![b; n],
                }
            }
        };
        self.pay.kappa * (1.0 - row_mass(&self.spec.times, &slots, &self.q))
    }

    /// Sum over rows `level..d-1` of the weights times the last-row value.
    fn value(&mut self, level: usize, c: &[f64], buf: &mut Vec<u64>) -> f64 {
        key_into(buf, c);
        if let Some(v) = self.memo[level].get(buf.as_slice()) {
            return *v;
        }
        let key = buf.clone();
        let v = if level + 1 == self.spec.d {
            self.last(c)
        } else {
            let mut acc = NeumaierSum::new();
            let mut next = vec![0.0; c.len()];
            for k in 0..self.weights.len() {
                let w = self.weights[k].1;
                for (slot, (a, b)) in next.iter_mut().zip(c.iter().zip(&self.weights[k].0)) {
                    *slot = a + b;
                }
                acc += w * self.value(level + 1, &next, buf);
            }
            acc.total()
        };
        self.memo[level].insert(key, v);
        v
    }
}

fn round_estimate(
    spec: &BrownianSpec,
    pay: &PayoffSpec,
    g: &Gauge1D,
    opts: &PayoffOptions,
) -> Result<(f64, usize), IntegrateError> {
    let n = spec.n();
    let dom = DomainSpec::power(Cell1D::line(), n);
    let labels = dom.axes().expect("finite power");
    let gauge = Gauge::B(GaugeB::uniform(&dom, g.clone())?);
    let build = BuildOptions {
        policy: opts.policy,
        max_cells: opts.max_row_cells,
        ..Default::default()
    };
    let div = if spec.d > 1 {
        Some(slice_division_with(&gauge, &dom, &labels, &build)?)
    } else {
        None
    };

    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut weights: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut buf = Vec::new();
    let row_cells = div.as_ref().map_or(1, |d| d.len());
    if let Some(div) = &div {
        for it in &div.items {
            let slots: Vec<Cell1D> = labels.iter().map(|a| *it.cell.edge(a).expect("box cell")).collect();
            let w = row_mass(&spec.times, &slots, &opts.quadrature);
            let tag: Vec<f64> = labels.iter().map(|a| it.tag.get(a).to_f64()).collect();
            let state = match pay.mode {
                PayoffMode::Synchronized => tag,
                PayoffMode::Asynchronous => vec![tag.iter().copied().fold(f64::NEG_INFINITY, f64::max)],
            };
            key_into(&mut buf, &state);
            match index.get(buf.as_slice()) {
                Some(&k) => weights[k].1 += w,
                None => {
                    index.insert(buf.clone(), weights.len());
                    weights.push((state, w));
                }
            }
        }
    }
    weights.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let width = match pay.mode {
        PayoffMode::Synchronized => n,
        PayoffMode::Asynchronous => 1,
    };
    let mut rows = Rows {
        spec,
        pay,
        lambda: pay.lambda.to_f64(),
        q: opts.quadrature,
        weights,
        memo: vec![HashMap::new(); spec.d],
    };
    let start = vec![0.0; width];
    let est = rows.value(0, &start, &mut buf);
    let size = (row_cells as f64).powi(spec.d as i32 - 1) * (1u64 << n.min(60)) as f64;
    Ok((est, size.min(usize::MAX as f64) as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

const PATHS_PER_CHUNK: usize = 1 << 15;

/// Monte Carlo estimate of the expected payoff. Paths are simulated in fixed-size chunks,
/// each from its own ChaCha stream of `seed`, and reduced in chunk order.
pub fn mc_oracle(spec: &BrownianSpec, pay: &PayoffSpec, n_paths: usize, seed: u64) -> Result<OracleResult, BrownianError> {
    spec.validate()?;
    pay.validate()?;
    if n_paths < 10_000 {
        return Err(BrownianError::Spec(format!("the oracle needs at least 10^4 paths, got {n_paths}")));
    }
    let exact = match pay.lambda {
        ExtReal::PosInf => Some(0.0),
        ExtReal::NegInf => Some(pay.kappa),
        ExtReal::Finite(_) => None,
    };
    if let Some(mean) = exact {
        return Ok(OracleResult {
            mean,
            stderr: 0.0,
            n_paths,
        });
    }
    let steps: Vec<f64> = spec
        .times
        .iter()
        .scan(0.0, |prev, &t| {
            let s = (t - *prev).sqrt();
            *prev = t;
            Some(s)
        })
        .collect();
    let chunks = n_paths.div_ceil(PATHS_PER_CHUNK);
    let partial = map_chunks(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = PATHS_PER_CHUNK.min(n_paths - c * PATHS_PER_CHUNK);
        let mut values = vec![vec![0.0; spec.n()]; spec.d];
        let mut s1 = NeumaierSum::new();
        let mut s2 = NeumaierSum::new();
        for _ in 0..count {
            for row in values.iter_mut() {
                let mut x = 0.0;
                for (slot, s) in row.iter_mut().zip(&steps) {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    x += s * z;
                    *slot = x;
                }
            }
            let p = payoff(pay, &values);
            s1 += p;
            s2 += p * p;
        }
        (s1, s2)
    });
    let (s1, s2) = partial
        .into_iter()
        .fold((NeumaierSum::new(), NeumaierSum::new()), |(a, b), (x, y)| (a + x, b + y));
    let n = n_paths as f64;
    let mean = s1.total() / n;
    let var = ((s2.total() - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(OracleResult {
        mean,
        stderr: (var / n).sqrt(),
        n_paths,
    })
}
