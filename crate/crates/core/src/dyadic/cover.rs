use std::collections::HashSet;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grid_index, Anchor, AnchoredCube};
use crate::region::{CubeRelation, Region};
use crate::{error::guard, Error, Result, LATTICE_GUARD};

/// Largest grid size accepted by [`grid_cubes_inside`].
pub const MAX_GRID_K: u64 = 1 << 20;

fn level_of(k: u64) -> Result<u32> {
    if k == 0 || !k.is_power_of_two() {
        return Err(Error::NonDyadicLevel(k));
    }
    Ok(k.trailing_zeros())
}

/// `C(k)`: the cubes of the anchored grid of side `1/k` certified inside the
/// region, in lexicographic index order. Every one of the `k^m` grid cubes is
/// tested.
pub fn grid_cubes_inside(region: &Region, k: u64, anchor: &Arc<Anchor>) -> Result<Vec<AnchoredCube>> {
    let level = level_of(k)?;
    if k > MAX_GRID_K {
        return Err(Error::Guard {
            what: "grid size k",
            needed: k as u128,
            limit: MAX_GRID_K as u128,
        });
    }
    let m = region.m();
    if anchor.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: anchor.m(),
        });
    }
    guard("grid cubes k^m", (k as u128).saturating_pow(m as u32), LATTICE_GUARD)?;
    let rows: Vec<Result<Vec<AnchoredCube>>> = (0..k)
        .into_par_iter()
        .map(|u0| {
            let mut out = Vec::new();
            let mut u = vec![0u64; m];
            u[0] = u0;
            for _ in 0..k.pow(m as u32 - 1) {
                let cube = AnchoredCube::new_unchecked(anchor.clone(), level, u.clone());
                if region.cube_inside(&cube)? {
                    out.push(cube);
                }
                for j in (1..m).rev() {
                    u[j] += 1;
                    if u[j] < k {
                        break;
                    }
                    u[j] = 0;
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for row in rows {
        all.extend(row?);
    }
    Ok(all)
}

/// Layered dyadic cover `B_1, …, B_M` of a region: `B_1 = C(2)` and `B_i`
/// holds the cubes of `C(2^i)` whose parent is not in `C(2^{i-1})`.
#[derive(Clone, Debug)]
pub struct DyadicCover {
    m: usize,
    anchor: Arc<Anchor>,
    layers: Vec<Vec<AnchoredCube>>,
    members: HashSet<(u32, Vec<u64>)>,
}

/// Builds the cover to depth `m_depth`.
///
/// Only cubes whose relation to the region is undecided are refined: a child
/// of an inside cube is inside (and so is not in the next layer), and a child
/// of a certified-outside cube is outside.
pub fn build_cover(region: &Region, m_depth: u32, anchor: &Arc<Anchor>) -> Result<DyadicCover> {
    if m_depth == 0 {
        return Err(Error::Config("cover depth M must be at least 1".into()));
    }
    if m_depth > super::MAX_LEVEL {
        return Err(Error::Guard {
            what: "cover depth",
            needed: m_depth as u128,
            limit: super::MAX_LEVEL as u128,
        });
    }
    let m = region.m();
    if anchor.m() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: anchor.m(),
        });
    }
    let root = AnchoredCube::new_unchecked(anchor.clone(), 0, vec![0; m]);
    let mut frontier = vec![root];
    let mut layers = Vec::with_capacity(m_depth as usize);
    for _ in 1..=m_depth {
        let classified: Vec<Result<Vec<(AnchoredCube, CubeRelation)>>> = frontier
            .par_iter()
            .map(|parent| {
                parent
                    .children()
                    .into_iter()
                    .map(|c| region.classify_cube(&c).map(|rel| (c, rel)))
                    .collect()
            })
            .collect();
        let mut layer = Vec::new();
        let mut next = Vec::new();
        for group in classified {
            for (cube, rel) in group? {
                match rel {
                    CubeRelation::Inside => layer.push(cube),
                    CubeRelation::Boundary => next.push(cube),
                    CubeRelation::Outside => {}
                }
            }
        }
        layer.sort_by(|a, b| a.coords().cmp(b.coords()));
        next.sort_by(|a, b| a.coords().cmp(b.coords()));
        layers.push(layer);
        frontier = next;
    }
    let members = layers
        .iter()
        .flatten()
        .map(|c| (c.level(), c.coords().to_vec()))
        .collect();
    Ok(DyadicCover {
        m,
        anchor: anchor.clone(),
        layers,
        members,
    })
}

impl DyadicCover {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn anchor(&self) -> &Arc<Anchor> {
        &self.anchor
    }

    /// `B_i` for `1 <= i <= M`.
    pub fn layer(&self, i: u32) -> &[AnchoredCube] {
        &self.layers[i as usize - 1]
    }

    pub fn layers(&self) -> &[Vec<AnchoredCube>] {
        &self.layers
    }

    pub fn layer_counts(&self) -> Vec<u64> {
        self.layers.iter().map(|l| l.len() as u64).collect()
    }

    pub fn cubes(&self) -> impl Iterator<Item = &AnchoredCube> {
        self.layers.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Σ_i #B_i 2^{-im}`, exact because the cubes are disjoint.
    pub fn union_measure(&self) -> f64 {
        self.layers
            .iter()
            .enumerate()
            .map(|(i, l)| l.len() as f64 * 2f64.powi(-((i as i32 + 1) * self.m as i32)))
            .sum()
    }

    /// The cover cube containing `x/p`, if any.
    pub fn locate(&self, x: &[u64], p: u64) -> Option<(u32, Vec<u64>)> {
        let idx = grid_index(&self.anchor, self.depth(), x, p);
        (1..=self.depth()).find_map(|level| {
            let key = (level, idx.iter().map(|u| u >> (self.depth() - level)).collect::<Vec<_>>());
            self.members.contains(&key).then_some(key)
        })
    }

    /// Membership of an arbitrary torus point (floating point, used for
    /// sampling checks).
    pub fn contains_point(&self, u: &[f64]) -> bool {
        let depth = self.depth();
        let idx: Vec<u64> = u
            .iter()
            .zip(self.anchor.to_f64())
            .map(|(&x, g)| {
                let t = (x - g).rem_euclid(1.0);
                ((t * (1u64 << depth) as f64) as u64).min((1 << depth) - 1)
            })
            .collect();
        (1..=depth).any(|level| {
            self.members
                .contains(&(level, idx.iter().map(|v| v >> (depth - level)).collect()))
        })
    }

    /// One JSON object per cube: `{"level": k, "coords": [...], "layer": i}`.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            level: u64,
            coords: &'a [u64],
            layer: usize,
        }
        for (i, layer) in self.layers.iter().enumerate() {
            for c in layer {
                let line = Line {
                    level: c.k(),
                    coords: c.coords(),
                    layer: i + 1,
                };
                serde_json::to_writer(&mut w, &line).map_err(|e| Error::Io(e.to_string()))?;
                w.write_all(b"\n")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDiagnostics {
    pub i: u32,
    pub count: u64,
    /// `#B_i / 2^{i(m-1)}`.
    pub ratio_ws: f64,
    /// `#B_i / (1 + μ^{(m-1)/m} 2^{i(m-1)})`.
    pub ratio_vws: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverDiagnostics {
    pub depth: u32,
    pub measure: f64,
    pub layers: Vec<LayerDiagnostics>,
    pub union_measure: f64,
    /// `μ(Ω) - μ(∪ B_i)`.
    pub deficiency: f64,
    /// deficiency / 2^{-M}
    pub deficiency_ratio_ws: f64,
    /// deficiency / (μ^{(m-1)/m} 2^{-M} + 2^{-Mm})
    pub deficiency_ratio_vws: f64,
}

impl CoverDiagnostics {
    pub fn max_ratio_ws(&self) -> f64 {
        self.layers.iter().map(|l| l.ratio_ws).fold(0.0, f64::max)
    }

    pub fn max_ratio_vws(&self) -> f64 {
        self.layers.iter().map(|l| l.ratio_vws).fold(0.0, f64::max)
    }

    /// CSV with header `i,count,ratio_ws,ratio_vws`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,count,ratio_ws,ratio_vws")?;
        for l in &self.layers {
            writeln!(w, "{},{},{:e},{:e}", l.i, l.count, l.ratio_ws, l.ratio_vws)?;
        }
        Ok(())
    }
}

pub fn cover_diagnostics(cover: &DyadicCover, region: &Region) -> CoverDiagnostics {
    let m = cover.m() as i32;
    let mu = region.measure();
    let mu_pow = mu.powf((m - 1) as f64 / m as f64);
    let layers = cover
        .layers()
        .iter()
        .enumerate()
        .map(|(idx, l)| {
            let i = idx as i32 + 1;
            let count = l.len() as u64;
            let grow = 2f64.powi(i * (m - 1));
            LayerDiagnostics {
                i: i as u32,
                count,
                ratio_ws: count as f64 / grow,
                ratio_vws: count as f64 / (1.0 + mu_pow * grow),
            }
        })
        .collect();
    let depth = cover.depth() as i32;
    let union_measure = cover.union_measure();
    let deficiency = mu - union_measure;
    CoverDiagnostics {
        depth: depth as u32,
        measure: mu,
        layers,
        union_measure,
        deficiency,
        deficiency_ratio_ws: deficiency / 2f64.powi(-depth),
        deficiency_ratio_vws: deficiency / (mu_pow * 2f64.powi(-depth) + 2f64.powi(-depth * m)),
    }
}

/// How the cover depth `M` is chosen for a prime `p` and `n` polynomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthPolicy {
    /// `2^M <= p^{1/2} < 2^{M+1}`.
    Thm1,
    /// `2^M <= p < 2^{M+1}`.
    Thm2,
    /// `2^{-M} <= p^{-1/(2(n+1))} log p < 2^{-M+1}`.
    Thm3,
    Explicit(u32),
}

impl DepthPolicy {
    /// The depth, never below 1.
    pub fn depth(self, p: u64, n: usize) -> u32 {
        let log2_floor = |v: u64| 63 - v.max(1).leading_zeros();
        let m = match self {
            DepthPolicy::Thm1 => log2_floor(p) / 2,
            DepthPolicy::Thm2 => log2_floor(p),
            DepthPolicy::Thm3 => {
                let pf = p as f64;
                let t = pf.powf(-1.0 / (2.0 * (n as f64 + 1.0))) * pf.ln();
                let mm = (-t.log2()).ceil();
                if mm < 1.0 {
                    1
                } else {
                    mm as u32
                }
            }
            DepthPolicy::Explicit(m) => m,
        };
        m.max(1)
    }
}
