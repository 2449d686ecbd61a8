use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{check_cell, is_associated, AxisLabel, Cell1D, ExtReal, PointT};
use crate::gauge::{FineWitness, Gauge, GaugeError};

use super::Division;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Monte Carlo cover samples.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            samples: 1024,
            seed: 0x5eed,
        }
    }
}

/// One failed check; `item` indices refer to `Division::items`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    Domain { item: usize, message: String },
    NotAssociated { item: usize, axis: AxisLabel },
    Gauge { item: usize, message: String },
    NotFine { item: usize, witness: FineWitness },
    Overlap { a: usize, b: usize },
    Gap { point: PointT },
    MultiCover { point: PointT, items: Vec<usize> },
    ProjectionGap { axis: AxisLabel, lo: ExtReal, hi: ExtReal },
    VolumeMismatch { covered: f64, expected: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    pub samples_checked: usize,
}

/// A division that passed every check, with the per-item evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisionCertificate {
    pub division: Division,
    pub gauge: Gauge,
    pub witnesses: Vec<FineWitness>,
    pub samples_checked: usize,
}

impl DivisionCertificate {
    /// Recomputes the witnesses from the division and gauge and compares.
    pub fn recheck(&self) -> bool {
        self.division.items.len() == self.witnesses.len()
            && self
                .division
                .items
                .iter()
                .zip(&self.witnesses)
                .all(|(it, w)| {
                    self.gauge
                        .witness(&self.division.domain, it)
                        .map_or(false, |x| &x == w && x.is_fine())
                })
    }
}

/// Sampled violations beyond this many are counted but not listed.
const MAX_SAMPLED: usize = 16;

pub fn validate(d: &Division, g: &Gauge) -> Result<DivisionCertificate, ViolationReport> {
    validate_with(d, g, &ValidateOptions::default())
}

pub fn validate_with(d: &Division, g: &Gauge, opts: &ValidateOptions) -> Result<DivisionCertificate, ViolationReport> {
    let mut v = Vec::new();
    if d.items.is_empty() {
        v.push(Violation::Empty);
        return Err(ViolationReport {
            violations: v,
            samples_checked: 0,
        });
    }

    let mut witnesses = Vec::with_capacity(d.items.len());
    let mut cells_ok = true;
    for (i, item) in d.items.iter().enumerate() {
        if let Err(e) = check_cell(&d.domain, &item.cell) {
            v.push(Violation::Domain {
                item: i,
                message: e.to_string(),
            });
            cells_ok = false;
            continue;
        }
        if !is_associated(&item.tag, &item.cell) {
            let axis = item
                .cell
                .edges()
                .iter()
                .find(|(a, e)| !e.is_vertex(item.tag.get(a)))
                .map(|(a, _)| a.clone())
                .expect("an edge fails association");
            v.push(Violation::NotAssociated { item: i, axis });
            continue;
        }
        match g.witness(&d.domain, item) {
            Ok(w) if w.is_fine() => witnesses.push(w),
            Ok(w) => v.push(Violation::NotFine { item: i, witness: w }),
            Err(GaugeError::NotAssociated { axis }) => v.push(Violation::NotAssociated { item: i, axis }),
            Err(e) => v.push(Violation::Gauge {
                item: i,
                message: e.to_string(),
            }),
        }
    }

    let mut samples_checked = 0;
    if cells_ok {
        let dense = Dense::new(d);
        dense.overlaps(&mut v);
        dense.projections(&mut v);
        dense.volume(&mut v);
        samples_checked = dense.sample_cover(opts, &mut v);
    }

    if v.is_empty() {
        Ok(DivisionCertificate {
            division: d.clone(),
            gauge: g.clone(),
            witnesses,
            samples_checked,
        })
    } else {
        Err(ViolationReport {
            violations: v,
            samples_checked,
        })
    }
}

/// Every item's edges over the union of restricted axes, unrestricted ones at their base.
struct Dense {
    axes: Vec<AxisLabel>,
    bases: Vec<Cell1D>,
    edges: Vec<Vec<Cell1D>>,
    restricts: Vec<Vec<bool>>,
}

impl Dense {
    fn new(d: &Division) -> Self {
        let axes: Vec<AxisLabel> = d
            .items
            .iter()
            .flat_map(|it| it.cell.restricted().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let bases: Vec<Cell1D> = axes
            .iter()
            .map(|a| d.domain.base_of(a).expect("checked against the domain"))
            .collect();
        let mut edges = Vec::with_capacity(d.items.len());
        let mut restricts = Vec::with_capacity(d.items.len());
        for it in &d.items {
            let mut e = Vec::with_capacity(axes.len());
            let mut r = Vec::with_capacity(axes.len());
            for (a, b) in axes.iter().zip(&bases) {
                match it.cell.edge(a) {
                    Some(x) => {
                        e.push(*x);
                        r.push(true);
                    }
                    None => {
                        e.push(*b);
                        r.push(false);
                    }
                }
            }
            edges.push(e);
            restricts.push(r);
        }
        Dense {
            axes,
            bases,
            edges,
            restricts,
        }
    }

    fn overlaps(&self, v: &mut Vec<Violation>) {
        let n = self.edges.len();
        if self.axes.is_empty() {
            // every item is the whole domain
            for b in 1..n {
                v.push(Violation::Overlap { a: 0, b });
            }
            return;
        }
        let k = (0..self.axes.len())
            .max_by_key(|&k| {
                self.edges
                    .iter()
                    .map(|e| e[k].lo())
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .expect("at least one axis");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (self.edges[i][k].lo(), i));
        for (pos, &i) in order.iter().enumerate() {
            let hi = self.edges[i][k].hi();
            for &j in &order[pos + 1..] {
                if self.edges[j][k].lo() >= hi {
                    break;
                }
                if self.edges[i].iter().zip(&self.edges[j]).all(|(a, b)| a.intersects(b)) {
                    v.push(Violation::Overlap {
                        a: i.min(j),
                        b: i.max(j),
                    });
                }
            }
        }
    }

    /// On each axis the union of the edges must be the base interval.
    fn projections(&self, v: &mut Vec<Violation>) {
        for (k, axis) in self.axes.iter().enumerate() {
            if self.restricts.iter().any(|r| !r[k]) {
                continue;
            }
            let mut es: Vec<Cell1D> = self.edges.iter().map(|e| e[k]).collect();
            es.sort_by_key(|e| (e.lo(), e.hi()));
            let base = self.bases[k];
            let mut reach = base.lo();
            for e in es {
                if e.lo() > reach {
                    v.push(Violation::ProjectionGap {
                        axis: axis.clone(),
                        lo: reach,
                        hi: e.lo(),
                    });
                }
                reach = reach.max(e.hi());
            }
            if reach < base.hi() {
                v.push(Violation::ProjectionGap {
                    axis: axis.clone(),
                    lo: reach,
                    hi: base.hi(),
                });
            }
        }
    }

    /// For bounded restricted axes, total volume must match the base box.
    fn volume(&self, v: &mut Vec<Violation>) {
        if self.axes.is_empty() || !self.bases.iter().all(|b| b.is_bounded()) {
            return;
        }
        let expected: f64 = self.bases.iter().map(|b| b.length()).product();
        let covered: f64 = self
            .edges
            .iter()
            .map(|e| e.iter().map(|c| c.length()).product::<f64>())
            .sum::<crate::sum::NeumaierSum>()
            .total();
        if (covered - expected).abs() > 1e-9 * expected {
            v.push(Violation::VolumeMismatch { covered, expected });
        }
    }

    fn sample_cover(&self, opts: &ValidateOptions, v: &mut Vec<Violation>) -> usize {
        if self.axes.is_empty() {
            return 0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let n = self.edges.len();
        let mut listed = 0;
        let mut x = vec![0.0; self.axes.len()];
        for _ in 0..opts.samples {
            for (k, slot) in x.iter_mut().enumerate() {
                let e = if rng.gen_bool(0.25) {
                    self.bases[k]
                } else {
                    self.edges[rng.gen_range(0..n)][k]
                };
                *slot = sample_in(&e, &mut rng);
            }
            let hits: Vec<usize> = (0..n)
                .filter(|&i| {
                    self.edges[i]
                        .iter()
                        .zip(&x)
                        .all(|(e, &c)| e.contains(ExtReal::Finite(c)))
                })
                .collect();
            if hits.len() != 1 && listed < MAX_SAMPLED {
                listed += 1;
                let point = PointT::from_coords(self.axes.iter().cloned().zip(x.iter().copied()));
                v.push(if hits.is_empty() {
                    Violation::Gap { point }
                } else {
                    Violation::MultiCover { point, items: hits }
                });
            }
        }
        opts.samples
    }
}

/// A finite point of `]lo, hi]` (never `lo` itself).
fn sample_in(e: &Cell1D, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    let x = match (e.lo(), e.hi()) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a + (b - a) * u,
        (ExtReal::Finite(a), _) => a + 4.0 * Distribution::<f64>::sample(&Exp1, rng),
        (_, ExtReal::Finite(b)) => b - 4.0 * Distribution::<f64>::sample(&Exp1, rng),
        _ => 4.0 * Distribution::<f64>::sample(&StandardNormal, rng),
    };
    if e.contains(ExtReal::Finite(x)) {
        x
    } else {
        e.hi().finite().unwrap_or_else(|| e.lo().to_f64().next_up())
    }
}
