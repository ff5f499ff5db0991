use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::points::{DiscBox, Endpoint, FractionalPointSet, Interval};
use crate::{Error, Result};

/// Largest distinct-point count for the exact algorithm in dimension 2.
pub const EXACT_GUARD_2D: u128 = 5000;
/// Largest distinct-point count for the exact algorithm in dimension 3.
pub const EXACT_GUARD_3D: u128 = 300;

/// Extreme discrepancy as the exact fraction `num / den` (`den = N q^n`), with
/// a box attaining it in the limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactDiscrepancy {
    pub value: f64,
    pub num: i128,
    pub den: i128,
    pub witness: Option<DiscBox>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    /// `A/N - λ`.
    Over,
    /// `λ - A/N`.
    Under,
}

type Pt<'a> = (&'a [u32], i128);

struct Ctx {
    n: usize,
    q: i128,
    total: i128,
    qn: i128,
    side: Side,
}

/// Best value with the intervals for the dimensions handled so far (last
/// dimension first).
#[derive(Clone)]
struct Best {
    val: i128,
    ivs: Vec<Interval>,
}

impl Best {
    fn empty() -> Self {
        Best {
            val: 0,
            ivs: Vec::new(),
        }
    }

    fn take(&mut self, val: i128, f: impl FnOnce() -> Vec<Interval>) {
        if val > self.val || self.ivs.is_empty() {
            self.val = val;
            self.ivs = f();
        }
    }
}

/// Distinct values along dimension `d` of points sorted by it, with ranges.
fn groups(pts: &[Pt], d: usize) -> Vec<(u64, usize, usize, i128)> {
    let mut out: Vec<(u64, usize, usize, i128)> = Vec::new();
    for (i, (c, w)) in pts.iter().enumerate() {
        let v = c[d] as u64;
        match out.last_mut() {
            Some(g) if g.0 == v => {
                g.2 = i + 1;
                g.3 += w;
            }
            _ => out.push((v, i, i + 1, *w)),
        }
    }
    out
}

/// One-dimensional sweep on the last coordinate. `c = N · Π` (lengths chosen
/// in the earlier dimensions).
fn sweep_1d(ctx: &Ctx, pts: &[Pt], c: i128) -> Best {
    let d = ctx.n - 1;
    let s = ctx.qn;
    let mut best = Best::empty();
    let iv = |lo, hi| vec![Interval { lo, hi }];
    let mut prefix = 0i128;
    match ctx.side {
        Side::Over => {
            let mut min_h: Option<(i128, u64)> = None;
            for (v, _, _, w) in groups(pts, d) {
                let h = prefix * s - c * v as i128;
                if min_h.is_none_or(|m| h < m.0) {
                    min_h = Some((h, v));
                }
                prefix += w;
                let (mh, lo) = min_h.unwrap();
                best.take(prefix * s - c * v as i128 - mh, || iv(Endpoint::at(lo), Endpoint::above(v)));
            }
            if best.ivs.is_empty() {
                best.ivs = iv(Endpoint::at(0), Endpoint::at(0));
            }
        }
        Side::Under => {
            let mut min_h = (0i128, Endpoint::at(0));
            for (v, _, _, w) in groups(pts, d) {
                let g = c * v as i128 - prefix * s;
                best.take(g - min_h.0, || iv(min_h.1, Endpoint::at(v)));
                prefix += w;
                let h = c * v as i128 - prefix * s;
                if h < min_h.0 {
                    min_h = (h, Endpoint::above(v));
                }
            }
            let g = c * ctx.q - prefix * s;
            best.take(g - min_h.0, || iv(min_h.1, Endpoint::at(ctx.q as u64)));
        }
    }
    best
}

fn merge_sorted<'a>(acc: &mut Vec<Pt<'a>>, batch: &[Pt<'a>], d: usize) {
    let mut batch = batch.to_vec();
    batch.sort_by(|a, b| a.0[d].cmp(&b.0[d]));
    let old = std::mem::take(acc);
    let (mut i, mut j) = (0, 0);
    acc.reserve(old.len() + batch.len());
    while i < old.len() || j < batch.len() {
        if j == batch.len() || (i < old.len() && old[i].0[d] <= batch[j].0[d]) {
            acc.push(old[i]);
            i += 1;
        } else {
            acc.push(batch[j]);
            j += 1;
        }
    }
}

/// Slab starts along one dimension: `(lo endpoint, first group index)`.
fn slab_starts(side: Side, gs: &[(u64, usize, usize, i128)]) -> Vec<(Endpoint, usize)> {
    match side {
        Side::Over => (0..gs.len()).map(|i| (Endpoint::at(gs[i].0), i)).collect(),
        Side::Under => std::iter::once((Endpoint::at(0), 0))
            .chain((0..gs.len()).map(|i| (Endpoint::above(gs[i].0), i + 1)))
            .collect(),
    }
}

/// All slabs from one start: sweeps the end, maintaining the slab's points
/// sorted by dimension `d + 1`.
fn slabs_from(ctx: &Ctx, pts: &[Pt], d: usize, c: i128, gs: &[(u64, usize, usize, i128)], start: (Endpoint, usize)) -> Best {
    let (lo, g0) = start;
    let mut sub: Vec<Pt> = Vec::new();
    let mut best = Best::empty();
    let consider = |sub: &[Pt], hi: Endpoint, best: &mut Best| {
        let len = hi.num as i128 - lo.num as i128;
        let inner = search(ctx, sub, d + 1, c * len);
        best.take(inner.val, || {
            let mut ivs = inner.ivs.clone();
            ivs.push(Interval { lo, hi });
            ivs
        });
    };
    match ctx.side {
        Side::Over => {
            for g in &gs[g0..] {
                merge_sorted(&mut sub, &pts[g.1..g.2], d + 1);
                consider(&sub, Endpoint::above(g.0), &mut best);
            }
        }
        Side::Under => {
            for g in &gs[g0..] {
                consider(&sub, Endpoint::at(g.0), &mut best);
                merge_sorted(&mut sub, &pts[g.1..g.2], d + 1);
            }
            consider(&sub, Endpoint::at(ctx.q as u64), &mut best);
        }
    }
    best
}

/// Best box for points sorted by dimension `d`.
fn search(ctx: &Ctx, pts: &[Pt], d: usize, c: i128) -> Best {
    if d == ctx.n - 1 {
        return sweep_1d(ctx, pts, c);
    }
    let gs = groups(pts, d);
    let mut best = Best::empty();
    for start in slab_starts(ctx.side, &gs) {
        let b = slabs_from(ctx, pts, d, c, &gs, start);
        best.take(b.val, || b.ivs);
    }
    if best.ivs.is_empty() {
        // no slab at all (over-full side with no points)
        best.ivs = vec![Interval { lo: Endpoint::at(0), hi: Endpoint::at(0) }; ctx.n - d];
    }
    best
}

fn search_top(ctx: &Ctx, pts: &[Pt]) -> Best {
    if ctx.n == 1 {
        return sweep_1d(ctx, pts, ctx.total);
    }
    let gs = groups(pts, 0);
    let starts = slab_starts(ctx.side, &gs);
    let results: Vec<Best> = starts
        .par_iter()
        .map(|&s| slabs_from(ctx, pts, 0, ctx.total, &gs, s))
        .collect();
    let mut best = Best::empty();
    for b in results {
        best.take(b.val, || b.ivs);
    }
    if best.ivs.is_empty() {
        best.ivs = vec![Interval { lo: Endpoint::at(0), hi: Endpoint::at(0) }; ctx.n];
    }
    best
}

/// Exact extreme discrepancy `sup_Π |A(Π)/N - λ(Π)|` over half-open boxes
/// without wrap-around. The supremum is a maximum over boxes whose sides
/// sit at point coordinates (or their right limits) and at `0`, `1`.
///
/// The empty set has discrepancy 1.
pub fn extreme_discrepancy_exact(pts: &FractionalPointSet) -> Result<ExactDiscrepancy> {
    let n = pts.n();
    let k = pts.distinct() as u128;
    match n {
        1 => {}
        2 => crate::error::guard("exact discrepancy points (n = 2)", k, EXACT_GUARD_2D)?,
        3 => crate::error::guard("exact discrepancy points (n = 3)", k, EXACT_GUARD_3D)?,
        _ => {
            return Err(Error::Guard {
                what: "exact discrepancy dimension",
                needed: n as u128,
                limit: 3,
            })
        }
    }
    if pts.is_empty() {
        return Ok(ExactDiscrepancy {
            value: 1.0,
            num: 1,
            den: 1,
            witness: None,
        });
    }
    let q = pts.denom() as i128;
    let total = pts.len() as i128;
    let qn = q.pow(n as u32);
    let sorted: Vec<Pt> = pts.points().iter().map(|(c, w)| (c.as_slice(), *w as i128)).collect();
    // points() is sorted lexicographically, hence by the first coordinate
    let run = |side| {
        let ctx = Ctx {
            n,
            q,
            total,
            qn,
            side,
        };
        search_top(&ctx, &sorted)
    };
    let (over, under) = rayon::join(|| run(Side::Over), || run(Side::Under));
    let best = if under.val > over.val { under } else { over };
    let mut ivs = best.ivs;
    ivs.reverse();
    let den = total * qn;
    Ok(ExactDiscrepancy {
        value: best.val as f64 / den as f64,
        num: best.val,
        den,
        witness: Some(DiscBox {
            denom: pts.denom(),
            intervals: ivs,
        }),
    })
}
