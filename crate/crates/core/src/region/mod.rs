//! Regions of the torus `T_m = (R/Z)^m`.
//!
//! Every region answers exact membership queries, reports its Lebesgue
//! measure, measures its `ε`-shells and, for the kinds whose geometry is kept
//! in fixed point, certifies whether an anchored cube lies inside it.

mod polytope;
mod shell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use polytope::Polytope;
pub use shell::{measure_monte_carlo, shell_measure, MeasureEstimate, ShellEstimate};

use crate::dyadic::AnchoredCube;
use crate::fixed::{circ_dist, Fx, HALF, ONE};
use crate::{error::guard, Error, Result, LATTICE_GUARD};

/// Default sample count for Monte-Carlo measures.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;
/// Seed for measures of regions without a closed form.
pub const MEASURE_SEED: u64 = 0x0005_eed0_f9e0;

/// Region parameters as written in configuration files. Coordinates are
/// decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionDescriptor {
    Full,
    Box {
        corners: [Vec<String>; 2],
    },
    Ball {
        center: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<String>,
        /// Alternative to `radius`: the ball's measure.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measure: Option<String>,
    },
    Polytope {
        vertices: Vec<Vec<String>>,
    },
    Complement {
        inner: Box<RegionDescriptor>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionKind {
    FullTorus,
    /// Half-open box `Π [lo_j, hi_j)`, no wrap-around.
    AxisBox { lo: Vec<Fx>, hi: Vec<Fx> },
    /// Closed torus ball, `radius <= 1/2`.
    Ball {
        center: Vec<Fx>,
        radius: Fx,
        center_f: Vec<f64>,
        radius_f: f64,
    },
    Polytope(Polytope),
    Complement(Box<Region>),
}

/// Certified relation between an anchored cube and a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeRelation {
    Inside,
    Outside,
    /// Neither inside nor certified disjoint.
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    m: usize,
    kind: RegionKind,
    shape_constant: Option<f64>,
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    let k = d / 2;
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    if d % 2 == 0 {
        PI.powi(k as i32) / fact(k)
    } else {
        2f64.powi(d as i32) * fact(k) * PI.powi(k as i32) / fact(d)
    }
}

fn parse_point(coords: &[String]) -> Result<Vec<Fx>> {
    coords.iter().map(|s| Fx::parse(s)).collect()
}

impl Region {
    pub fn full(m: usize) -> Self {
        Region {
            m,
            kind: RegionKind::FullTorus,
            shape_constant: None,
        }
    }

    pub fn axis_box(lo: Vec<Fx>, hi: Vec<Fx>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidRegion("box corners must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidRegion("box needs lo <= hi in every coordinate".into()));
        }
        Ok(Region {
            m: lo.len(),
            kind: RegionKind::AxisBox { lo, hi },
            shape_constant: None,
        })
    }

    pub fn ball(center: Vec<Fx>, radius: Fx) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidRegion("ball center is empty".into()));
        }
        if center.iter().any(|c| c.raw() >= ONE) {
            return Err(Error::InvalidRegion("ball center must lie in [0, 1)^m".into()));
        }
        if radius.raw() > HALF {
            return Err(Error::InvalidRegion("ball radius must be at most 1/2".into()));
        }
        Ok(Region {
            m: center.len(),
            kind: RegionKind::Ball {
                center_f: center.iter().map(|c| c.to_f64()).collect(),
                radius_f: radius.to_f64(),
                center,
                radius,
            },
            shape_constant: None,
        })
    }

    /// Ball of the given measure (rounded to the fixed-point radius grid).
    pub fn ball_with_measure(center: Vec<Fx>, measure: f64) -> Result<Self> {
        let m = center.len();
        if !(0.0..=unit_ball_volume(m) * 0.5f64.powi(m as i32)).contains(&measure) {
            return Err(Error::InvalidRegion(format!(
                "no torus ball of radius <= 1/2 has measure {measure}"
            )));
        }
        let r = (measure / unit_ball_volume(m)).powf(1.0 / m as f64);
        Self::ball(center, Fx::from_f64(r.min(0.5))?)
    }

    pub fn polytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let poly = Polytope::new(vertices)?;
        Ok(Region {
            m: poly.m(),
            kind: RegionKind::Polytope(poly),
            shape_constant: None,
        })
    }

    /// `T_m \ region`; complementing twice returns the original region.
    pub fn complement(region: Region) -> Self {
        match region.kind {
            RegionKind::Complement(inner) => *inner,
            _ => Region {
                m: region.m,
                shape_constant: region.shape_constant,
                kind: RegionKind::Complement(Box::new(region)),
            },
        }
    }

    pub fn with_shape_constant(mut self, c: f64) -> Self {
        self.shape_constant = Some(c);
        self
    }

    pub fn from_descriptor(desc: &RegionDescriptor, m: usize) -> Result<Self> {
        let region = match desc {
            RegionDescriptor::Full => Region::full(m),
            RegionDescriptor::Box { corners } => {
                Region::axis_box(parse_point(&corners[0])?, parse_point(&corners[1])?)?
            }
            RegionDescriptor::Ball {
                center,
                radius,
                measure,
            } => match (radius, measure) {
                (Some(r), None) => Region::ball(parse_point(center)?, Fx::parse(r)?)?,
                (None, Some(mu)) => {
                    let mu: f64 = mu
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidRegion(format!("bad measure `{mu}`")))?;
                    Region::ball_with_measure(parse_point(center)?, mu)?
                }
                _ => {
                    return Err(Error::InvalidRegion(
                        "a ball needs exactly one of `radius` and `measure`".into(),
                    ))
                }
            },
            RegionDescriptor::Polytope { vertices } => Region::polytope(
                vertices
                    .iter()
                    .map(|v| Ok(parse_point(v)?.into_iter().map(Fx::to_f64).collect()))
                    .collect::<Result<Vec<_>>>()?,
            )?,
            RegionDescriptor::Complement { inner } => {
                Region::complement(Region::from_descriptor(inner, m)?)
            }
        };
        if region.m != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: region.m,
            });
        }
        Ok(region)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn shape_constant(&self) -> Option<f64> {
        self.shape_constant
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            RegionKind::FullTorus => "full-torus",
            RegionKind::AxisBox { .. } => "axis-box",
            RegionKind::Ball { .. } => "euclidean-ball",
            RegionKind::Polytope(_) => "convex-polytope",
            RegionKind::Complement(_) => "complement",
        }
    }

    /// Short human-readable description.
    pub fn label(&self) -> String {
        let pt = |v: &[Fx]| {
            v.iter()
                .map(|c| format!("{}", c.to_f64()))
                .collect::<Vec<_>>()
                .join(",")
        };
        match &self.kind {
            RegionKind::FullTorus => format!("full(m={})", self.m),
            RegionKind::AxisBox { lo, hi } => format!("box([{}],[{}])", pt(lo), pt(hi)),
            RegionKind::Ball { center, radius, .. } => {
                format!("ball([{}],{})", pt(center), radius.to_f64())
            }
            RegionKind::Polytope(p) => format!("polytope({} vertices)", p.vertices().len()),
            RegionKind::Complement(inner) => format!("complement({})", inner.label()),
        }
    }

    /// Ball-like kinds for which the very-well-shaped shell bound holds.
    pub fn is_very_well_shaped(&self) -> bool {
        match &self.kind {
            RegionKind::FullTorus | RegionKind::Ball { .. } => true,
            RegionKind::Complement(inner) => inner.is_very_well_shaped(),
            _ => false,
        }
    }

    pub fn contains(&self, u: &[f64]) -> Result<bool> {
        if u.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: u.len(),
            });
        }
        Ok(self.contains_point(u))
    }

    /// Membership without the dimension check; `u ∈ [0, 1)^m`.
    pub fn contains_point(&self, u: &[f64]) -> bool {
        match &self.kind {
            RegionKind::FullTorus => true,
            RegionKind::AxisBox { lo, hi } => u
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&x, (a, b))| a.to_f64() <= x && x < b.to_f64()),
            RegionKind::Ball {
                center_f, radius_f, ..
            } => torus_dist2(u, center_f) <= radius_f * radius_f,
            RegionKind::Polytope(poly) => {
                if poly.contains_flat(u) {
                    return true;
                }
                // points with a zero coordinate are also represented by 1
                let zeros: Vec<usize> = (0..u.len()).filter(|&j| u[j] == 0.0).collect();
                (1..1u32 << zeros.len()).any(|mask| {
                    let mut v = u.to_vec();
                    for (b, &j) in zeros.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            v[j] = 1.0;
                        }
                    }
                    poly.contains_flat(&v)
                })
            }
            RegionKind::Complement(inner) => !inner.contains_point(u),
        }
    }

    /// Distance from `u` to the other side of the boundary: to `T_m \ Ω`
    /// when `u ∈ Ω`, to `Ω` otherwise. Infinite when that set is empty.
    ///
    /// For polytopes the metric is flat inside the unit cube; facets on
    /// opposite faces of the cube are not merged across the seam.
    pub fn boundary_distance(&self, u: &[f64]) -> f64 {
        match &self.kind {
            RegionKind::FullTorus => f64::INFINITY,
            RegionKind::AxisBox { lo, hi } => {
                let lo: Vec<f64> = lo.iter().map(|v| v.to_f64()).collect();
                let hi: Vec<f64> = hi.iter().map(|v| v.to_f64()).collect();
                if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
                    return f64::INFINITY;
                }
                if self.contains_point(u) {
                    (0..self.m)
                        .filter(|&j| hi[j] - lo[j] < 1.0)
                        .map(|j| (u[j] - lo[j]).min(hi[j] - u[j]))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    (0..self.m)
                        .map(|j| {
                            if lo[j] <= u[j] && u[j] <= hi[j] {
                                0.0
                            } else {
                                circ_f(u[j], lo[j]).min(circ_f(u[j], hi[j]))
                            }
                        })
                        .map(|d| d * d)
                        .sum::<f64>()
                        .sqrt()
                }
            }
            RegionKind::Ball {
                center_f, radius_f, ..
            } => (torus_dist2(u, center_f).sqrt() - radius_f).abs(),
            RegionKind::Polytope(poly) => {
                if self.contains_point(u) {
                    poly.depth_flat(u)
                } else {
                    let m = self.m;
                    (0..3usize.pow(m as u32))
                        .map(|mut code| {
                            let v: Vec<f64> = (0..m)
                                .map(|j| {
                                    let s = (code % 3) as f64 - 1.0;
                                    code /= 3;
                                    u[j] + s
                                })
                                .collect();
                            poly.distance_flat(&v)
                        })
                        .fold(f64::INFINITY, f64::min)
                }
            }
            RegionKind::Complement(inner) => inner.boundary_distance(u),
        }
    }

    /// Lebesgue measure: closed form where one exists, otherwise a
    /// Monte-Carlo estimate with a fixed seed.
    pub fn measure(&self) -> f64 {
        self.measure_estimate().value
    }

    pub fn measure_estimate(&self) -> MeasureEstimate {
        match &self.kind {
            RegionKind::FullTorus => MeasureEstimate::exact(1.0),
            RegionKind::AxisBox { lo, hi } => MeasureEstimate::exact(
                lo.iter()
                    .zip(hi)
                    .map(|(a, b)| b.to_f64() - a.to_f64())
                    .product(),
            ),
            RegionKind::Ball { radius_f, .. } => {
                MeasureEstimate::exact(unit_ball_volume(self.m) * radius_f.powi(self.m as i32))
            }
            RegionKind::Polytope(_) => measure_monte_carlo(self, DEFAULT_SAMPLES, MEASURE_SEED),
            RegionKind::Complement(inner) => {
                let e = inner.measure_estimate();
                MeasureEstimate {
                    value: 1.0 - e.value,
                    ..e
                }
            }
        }
    }

    /// Certified relation of a cube to this region using exact fixed-point
    /// arithmetic (floating point only for polytope facets).
    pub fn classify_cube(&self, cube: &AnchoredCube) -> Result<CubeRelation> {
        if cube.m() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: cube.m(),
            });
        }
        self.classify_intervals(&cube.intervals())
    }

    fn classify_intervals(&self, iv: &[(u128, u128)]) -> Result<CubeRelation> {
        Ok(match &self.kind {
            RegionKind::FullTorus => CubeRelation::Inside,
            RegionKind::AxisBox { lo, hi } => classify_box(iv, lo, hi),
            RegionKind::Ball { center, radius, .. } => classify_ball(iv, center, *radius),
            RegionKind::Polytope(poly) => classify_polytope(iv, poly),
            RegionKind::Complement(inner) => {
                if matches!(inner.kind, RegionKind::Polytope(_)) {
                    return Err(Error::Uncertifiable("complement-of-polytope"));
                }
                match inner.classify_intervals(iv)? {
                    CubeRelation::Inside => CubeRelation::Outside,
                    CubeRelation::Outside => CubeRelation::Inside,
                    CubeRelation::Boundary => CubeRelation::Boundary,
                }
            }
        })
    }

    /// Whether the closed cube lies inside the region (exact certificate).
    pub fn cube_inside(&self, cube: &AnchoredCube) -> Result<bool> {
        Ok(self.classify_cube(cube)? == CubeRelation::Inside)
    }

    /// Integer vectors `x ∈ {0..p-1}^m` with `x/p` in the region, sorted
    /// lexicographically.
    pub fn lattice_points(&self, p: u64) -> Result<Vec<Vec<u64>>> {
        let mut out = Vec::new();
        self.visit_lattice_points(p, |x| out.push(x.to_vec()))?;
        Ok(out)
    }

    pub fn count_lattice_points(&self, p: u64) -> Result<u64> {
        let mut n = 0;
        self.visit_lattice_points(p, |_| n += 1)?;
        Ok(n)
    }

    /// Calls `f` on every lattice point of `pΩ` in lexicographic order. The
    /// scan is split by first coordinate across workers.
    pub fn visit_lattice_points<F: FnMut(&[u64])>(&self, p: u64, mut f: F) -> Result<()> {
        let m = self.m;
        guard("lattice scan p^m", (p as u128).saturating_pow(m as u32), LATTICE_GUARD)?;
        if p == 0 {
            return Ok(());
        }
        let inv = 1.0 / p as f64;
        let rows: Vec<Vec<u64>> = (0..p)
            .into_par_iter()
            .map(|x0| {
                let mut found = Vec::new();
                let mut x = vec![0u64; m];
                let mut u = vec![0f64; m];
                x[0] = x0;
                u[0] = x0 as f64 * inv;
                let inner = p.pow(m as u32 - 1);
                for _ in 0..inner {
                    if self.contains_point(&u) {
                        found.extend_from_slice(&x);
                    }
                    for j in (1..m).rev() {
                        x[j] += 1;
                        if x[j] < p {
                            u[j] = x[j] as f64 * inv;
                            break;
                        }
                        x[j] = 0;
                        u[j] = 0.0;
                    }
                }
                found
            })
            .collect();
        for row in rows {
            for x in row.chunks(m) {
                f(x);
            }
        }
        Ok(())
    }
}

fn circ_f(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().fract();
    d.min(1.0 - d)
}

/// Squared torus distance (minimum over unit shifts per coordinate).
pub fn torus_dist2(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| circ_f(a, b).powi(2)).sum()
}

fn contains_lifted(a: u128, b: u128, t: u128) -> bool {
    let one = ONE as u128;
    (a <= t && t <= b) || (a <= t + one && t + one <= b)
}

fn classify_ball(iv: &[(u128, u128)], center: &[Fx], radius: Fx) -> CubeRelation {
    let r2 = (radius.raw() as u128).pow(2);
    let mut far = 0u128;
    let mut near = 0u128;
    for (&(a, b), c) in iv.iter().zip(center) {
        let c = c.raw() as u128;
        let anti = (c + HALF as u128) % ONE as u128;
        let da = circ_dist(a, c);
        let db = circ_dist(b, c);
        let dmax = if contains_lifted(a, b, anti) { HALF as u128 } else { da.max(db) };
        let dmin = if contains_lifted(a, b, c) { 0 } else { da.min(db) };
        far = far.saturating_add(dmax * dmax);
        near = near.saturating_add(dmin * dmin);
    }
    if far <= r2 {
        CubeRelation::Inside
    } else if near > r2 {
        CubeRelation::Outside
    } else {
        CubeRelation::Boundary
    }
}

fn classify_box(iv: &[(u128, u128)], lo: &[Fx], hi: &[Fx]) -> CubeRelation {
    let one = ONE as u128;
    let mut inside = true;
    for (&(a, b), (l, h)) in iv.iter().zip(lo.iter().zip(hi)) {
        let (l, h) = (l.raw() as u128, h.raw() as u128);
        if l >= h {
            return CubeRelation::Outside;
        }
        let full = l == 0 && h == one;
        if !(full || (b < one && l <= a && b < h)) {
            inside = false;
        }
        let meets = (a < h && b >= l) || (b >= one && b - one >= l);
        if !meets {
            return CubeRelation::Outside;
        }
    }
    if inside {
        CubeRelation::Inside
    } else {
        CubeRelation::Boundary
    }
}

fn classify_polytope(iv: &[(u128, u128)], poly: &Polytope) -> CubeRelation {
    let one = ONE as u128;
    // Split seam-straddling coordinates into two pieces and test the corners
    // of every piece; convexity makes corner membership sufficient.
    let pieces: Vec<Vec<(f64, f64)>> = iv
        .iter()
        .map(|&(a, b)| {
            let f = |v: u128| v as f64 / ONE as f64;
            if b <= one {
                vec![(f(a), f(b))]
            } else {
                vec![(f(a), 1.0), (0.0, f(b - one))]
            }
        })
        .collect();
    let m = iv.len();
    let mut choice = vec![0usize; m];
    loop {
        let boxed: Vec<(f64, f64)> = (0..m).map(|j| pieces[j][choice[j]]).collect();
        for mask in 0..1u32 << m {
            let v: Vec<f64> = (0..m)
                .map(|j| if mask >> j & 1 == 1 { boxed[j].1 } else { boxed[j].0 })
                .collect();
            if !poly.contains_flat(&v) {
                return CubeRelation::Boundary;
            }
        }
        let mut j = 0;
        loop {
            if j == m {
                return CubeRelation::Inside;
            }
            choice[j] += 1;
            if choice[j] < pieces[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}
