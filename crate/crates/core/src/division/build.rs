//! Successive-bisection constructions on a finite list of axes.

use crate::domain::{Cell1D, ExtReal, PointT};
use crate::gauge::{EdgeTest, Gauge1D, GaugeA};

use super::{BuildOptions, TagPolicy};

pub(crate) enum BuildFailure {
    Depth { axis: usize, trail: Vec<Vec<Cell1D>> },
    TooMany(usize),
}

/// Fineness judged on a subset of the axes of a box, with the full tag available.
pub(crate) trait BoxFine {
    fn fine_axes(&self, tag: &[ExtReal], edges: &[Cell1D], axes: &[usize]) -> bool;
}

/// Independent axis gauges.
pub(crate) struct PerAxis(pub Vec<Gauge1D>);

impl BoxFine for PerAxis {
    fn fine_axes(&self, tag: &[ExtReal], edges: &[Cell1D], axes: &[usize]) -> bool {
        axes.iter().all(|&k| self.0[k].fine(tag[k], &edges[k]))
    }
}

/// One point gauge judging every edge.
pub(crate) struct Scalar<'a> {
    pub gauge: &'a GaugeA,
    pub labels: Vec<crate::domain::AxisLabel>,
}

impl BoxFine for Scalar<'_> {
    fn fine_axes(&self, tag: &[ExtReal], edges: &[Cell1D], axes: &[usize]) -> bool {
        let x = PointT::from_coords(self.labels.iter().cloned().zip(tag.iter().copied()));
        let delta = self.gauge.delta(&x);
        axes.iter()
            .all(|&k| EdgeTest::judge(tag[k], &edges[k], delta, self.gauge.inf).passes())
    }
}

/// Splits an edge in two: midpoint for bounded edges; `0` for the whole line; the next
/// integer towards the unbounded end otherwise, which steps through the `(s, q)`-binary
/// cells as the depth grows.
pub fn bisect_edge(e: &Cell1D) -> Option<(Cell1D, Cell1D)> {
    let at = match (e.lo(), e.hi()) {
        (ExtReal::Finite(a), ExtReal::Finite(b)) => a + (b - a) / 2.0,
        (ExtReal::NegInf, ExtReal::PosInf) => 0.0,
        (ExtReal::Finite(a), ExtReal::PosInf) => a.floor() + 1.0,
        (ExtReal::NegInf, ExtReal::Finite(b)) => b.ceil() - 1.0,
        _ => return None,
    };
    e.split(at).ok()
}

/// Which end of an edge a trial tag prefers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    Lo,
    Hi,
}

impl Side {
    fn flip(self, b: bool) -> Side {
        match (self, b) {
            (s, false) => s,
            (Side::Lo, true) => Side::Hi,
            (Side::Hi, true) => Side::Lo,
        }
    }

    fn pick(self, e: &Cell1D) -> ExtReal {
        match self {
            Side::Lo => e.lo(),
            Side::Hi => e.hi(),
        }
    }
}

/// Trial tags for a box in the order fixed by `policy`; `axes` selects the edges that vary.
fn vertex_trials<'a>(
    policy: TagPolicy,
    edges: &'a [Cell1D],
    pref: &'a [Side],
    axes: &[usize],
) -> impl Iterator<Item = Vec<(usize, ExtReal)>> + 'a {
    let n = axes.len();
    let owned: Vec<usize> = axes.to_vec();
    (0u64..(1u64 << n)).map(move |m| {
        owned
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let bit = (m >> (n - 1 - i)) & 1 == 1;
                let base = match policy {
                    TagPolicy::LowerFirst => Side::Lo,
                    TagPolicy::SplitVertexFirst => pref[k],
                    TagPolicy::OuterFirst => pref[k].flip(true),
                };
                (k, base.flip(bit).pick(&edges[k]))
            })
            .collect()
    })
}

pub(crate) struct Piece {
    pub tag: Vec<ExtReal>,
    pub edges: Vec<Cell1D>,
}

struct Work {
    edges: Vec<Cell1D>,
    pref: Vec<Side>,
    depth: u32,
}

fn depth_error(axis: usize, bases: &[Cell1D], stuck: &[Cell1D]) -> BuildFailure {
    // replay the bisection from the root to recover the nested cell sequence
    let mut trail = vec![bases.to_vec()];
    let mut cur = bases.to_vec();
    while cur != stuck {
        let next: Option<Vec<Cell1D>> = cur
            .iter()
            .zip(stuck)
            .map(|(e, s)| {
                if e == s {
                    Some(*e)
                } else {
                    let (l, r) = bisect_edge(e)?;
                    Some(if l.contains_cell(s) { l } else { r })
                }
            })
            .collect();
        match next {
            Some(n) if n != cur => {
                trail.push(n.clone());
                cur = n;
            }
            _ => break,
        }
    }
    BuildFailure::Depth { axis, trail }
}

/// Simultaneous bisection of every axis, trying vertex tags at every stage.
pub(crate) fn simultaneous(
    bases: &[Cell1D],
    fine: &dyn BoxFine,
    opts: &BuildOptions,
) -> Result<Vec<Piece>, BuildFailure> {
    let n = bases.len();
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    let mut stack = vec![Work {
        edges: bases.to_vec(),
        pref: vec![Side::Lo; n],
        depth: 0,
    }];
    let mut tag = vec![ExtReal::Finite(0.0); n];
    while let Some(w) = stack.pop() {
        let mut done = false;
        for trial in vertex_trials(opts.policy, &w.edges, &w.pref, &all) {
            for (k, v) in trial {
                tag[k] = v;
            }
            if fine.fine_axes(&tag, &w.edges, &all) {
                out.push(Piece {
                    tag: tag.clone(),
                    edges: w.edges.clone(),
                });
                done = true;
                break;
            }
        }
        if done {
            if out.len() > opts.max_cells {
                return Err(BuildFailure::TooMany(opts.max_cells));
            }
            continue;
        }
        if w.depth >= opts.max_depth {
            return Err(depth_error(0, bases, &w.edges));
        }
        let halves: Vec<(Cell1D, Cell1D)> = match w.edges.iter().map(bisect_edge).collect() {
            Some(h) => h,
            None => return Err(depth_error(0, bases, &w.edges)),
        };
        // push children in reverse lexicographic order so they pop in order
        for m in (0u64..(1u64 << n)).rev() {
            let mut edges = Vec::with_capacity(n);
            let mut pref = Vec::with_capacity(n);
            for (k, (l, r)) in halves.iter().enumerate() {
                if (m >> (n - 1 - k)) & 1 == 0 {
                    edges.push(*l);
                    pref.push(Side::Hi);
                } else {
                    edges.push(*r);
                    pref.push(Side::Lo);
                }
            }
            stack.push(Work {
                edges,
                pref,
                depth: w.depth + 1,
            });
        }
    }
    Ok(out)
}

/// Dimension-at-a-time construction: slices along `order[0]`, and inside every slice a
/// division of the remaining axes built with the slice's tag coordinate held fixed. A slice
/// is accepted once its thickness is fine at every tag of the inner division; otherwise it
/// is bisected again.
pub(crate) fn sliced(
    bases: &[Cell1D],
    order: &[usize],
    fine: &dyn BoxFine,
    opts: &BuildOptions,
) -> Result<Vec<Piece>, BuildFailure> {
    let n = bases.len();
    let mut tag = vec![ExtReal::Finite(0.0); n];
    let mut edges = bases.to_vec();
    let mut count = 0usize;
    slice_level(bases, order, 0, fine, opts, &mut tag, &mut edges, &mut count)
}

#[allow(clippy::too_many_arguments)]
fn slice_level(
    bases: &[Cell1D],
    order: &[usize],
    level: usize,
    fine: &dyn BoxFine,
    opts: &BuildOptions,
    tag: &mut Vec<ExtReal>,
    edges: &mut Vec<Cell1D>,
    count: &mut usize,
) -> Result<Vec<Piece>, BuildFailure> {
    let axis = order[level];
    let mut out = Vec::new();
    let mut stack = vec![(bases[axis], Side::Lo, 0u32)];
    while let Some((slab, pref, depth)) = stack.pop() {
        edges[axis] = slab;
        let mut accepted = None;
        let trials: Vec<ExtReal> = vertex_trials(opts.policy, edges, &{
            let mut p = vec![Side::Lo; edges.len()];
            p[axis] = pref;
            p
        }, &[axis])
        .map(|t| t[0].1)
        .collect();
        for y in trials {
            tag[axis] = y;
            if level + 1 == order.len() {
                if fine.fine_axes(tag, edges, &[axis]) {
                    accepted = Some(vec![Piece {
                        tag: tag.clone(),
                        edges: edges.clone(),
                    }]);
                    break;
                }
            } else {
                let before = *count;
                let inner = slice_level(bases, order, level + 1, fine, opts, tag, edges, count)?;
                edges[axis] = slab;
                tag[axis] = y;
                if inner.iter().all(|p| fine.fine_axes(&p.tag, &p.edges, &[axis])) {
                    accepted = Some(inner);
                    break;
                }
                *count = before;
            }
        }
        match accepted {
            Some(pieces) => {
                // inner levels have already counted their pieces
                if level + 1 == order.len() {
                    *count += 1;
                    if *count > opts.max_cells {
                        return Err(BuildFailure::TooMany(opts.max_cells));
                    }
                }
                out.extend(pieces);
            }
            None => {
                let stuck = {
                    let mut s = bases.to_vec();
                    s[axis] = slab;
                    s
                };
                if depth >= opts.max_depth {
                    return Err(depth_error(axis, bases, &stuck));
                }
                let (l, r) = bisect_edge(&slab).ok_or_else(|| depth_error(axis, bases, &stuck))?;
                stack.push((r, Side::Lo, depth + 1));
                stack.push((l, Side::Hi, depth + 1));
            }
        }
    }
    edges[axis] = bases[axis];
    Ok(out)
}
