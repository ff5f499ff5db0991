//! Convex polytopes in `[0, 1]^m` for `m <= 3`, given by vertices.

use crate::{Error, Result};

const TOL: f64 = 1e-12;

/// Convex hull of a vertex list, with its facet half-spaces `a·x <= b`
/// (`|a| = 1`) and the boundary pieces needed for point distances.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    m: usize,
    vertices: Vec<Vec<f64>>,
    halfspaces: Vec<(Vec<f64>, f64)>,
    /// Boundary simplices: segments in 2-D, triangles in 3-D.
    pieces: Vec<Vec<Vec<f64>>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Polytope {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let m = vertices.first().map(Vec::len).unwrap_or(0);
        if !(1..=3).contains(&m) {
            return Err(Error::InvalidRegion("polytopes are supported for 1 <= m <= 3".into()));
        }
        for v in &vertices {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::InvalidRegion("polytope vertices must lie in [0, 1]^m".into()));
            }
        }
        let (halfspaces, pieces) = match m {
            1 => hull_1d(&vertices),
            2 => hull_2d(&vertices),
            _ => hull_3d(&vertices),
        }?;
        Ok(Polytope {
            m,
            vertices,
            halfspaces,
            pieces,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Closed membership in `R^m`.
    pub fn contains_flat(&self, x: &[f64]) -> bool {
        self.halfspaces.iter().all(|(a, b)| dot(a, x) <= b + TOL)
    }

    /// Euclidean distance from an outside point to the polytope in `R^m`.
    pub fn distance_flat(&self, x: &[f64]) -> f64 {
        if self.contains_flat(x) {
            return 0.0;
        }
        self.pieces
            .iter()
            .map(|piece| match piece.len() {
                1 => norm(&sub(x, &piece[0])),
                2 => segment_distance(x, &piece[0], &piece[1]),
                _ => triangle_distance(x, &piece[0], &piece[1], &piece[2]),
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from an inside point to the complement in `R^m`.
    pub fn depth_flat(&self, x: &[f64]) -> f64 {
        self.halfspaces
            .iter()
            .map(|(a, b)| b - dot(a, x))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }
}

type Hull = (Vec<(Vec<f64>, f64)>, Vec<Vec<Vec<f64>>>);

fn hull_1d(vs: &[Vec<f64>]) -> Result<Hull> {
    let lo = vs.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let hi = vs.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= TOL {
        return Err(Error::InvalidRegion("degenerate polytope".into()));
    }
    Ok((
        vec![(vec![1.0], hi), (vec![-1.0], -lo)],
        vec![vec![vec![lo]], vec![vec![hi]]],
    ))
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn hull_2d(vs: &[Vec<f64>]) -> Result<Hull> {
    let mut pts: Vec<Vec<f64>> = vs.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::InvalidRegion("degenerate polytope".into()));
    }
    // Andrew's monotone chain, counter-clockwise.
    let mut hull: Vec<Vec<f64>> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 && cross2(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= TOL {
                hull.pop();
            }
            hull.push(p.clone());
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::InvalidRegion("degenerate polytope".into()));
    }
    let mut hs = Vec::new();
    let mut pieces = Vec::new();
    for i in 0..hull.len() {
        let a = &hull[i];
        let b = &hull[(i + 1) % hull.len()];
        let e = sub(b, a);
        let n = vec![e[1], -e[0]];
        let len = norm(&n);
        let n: Vec<f64> = n.iter().map(|c| c / len).collect();
        hs.push((n.clone(), dot(&n, a)));
        pieces.push(vec![a.clone(), b.clone()]);
    }
    Ok((hs, pieces))
}

fn cross3(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn hull_3d(vs: &[Vec<f64>]) -> Result<Hull> {
    let mut pts: Vec<Vec<f64>> = vs.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let k = pts.len();
    let mut hs: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut pieces = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                let n = cross3(&sub(&pts[j], &pts[i]), &sub(&pts[l], &pts[i]));
                let len = norm(&n);
                if len <= 1e-10 {
                    continue;
                }
                let mut n: Vec<f64> = n.iter().map(|c| c / len).collect();
                let mut b = dot(&n, &pts[i]);
                let side: Vec<f64> = pts.iter().map(|v| dot(&n, v) - b).collect();
                if side.iter().all(|&s| s >= -1e-10) {
                    n.iter_mut().for_each(|c| *c = -*c);
                    b = -b;
                } else if !side.iter().all(|&s| s <= 1e-10) {
                    continue;
                }
                pieces.push(vec![pts[i].clone(), pts[j].clone(), pts[l].clone()]);
                if !hs
                    .iter()
                    .any(|(a, c)| (c - b).abs() < 1e-10 && norm(&sub(a, &n)) < 1e-10)
                {
                    hs.push((n, b));
                }
            }
        }
    }
    if hs.len() < 4 {
        return Err(Error::InvalidRegion("degenerate polytope".into()));
    }
    Ok((hs, pieces))
}

fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let t = (dot(&sub(x, a), &ab) / dot(&ab, &ab)).clamp(0.0, 1.0);
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(ai, di)| ai + t * di).collect();
    norm(&sub(x, &proj))
}

fn triangle_distance(x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let n = cross3(&sub(b, a), &sub(c, a));
    let nn = dot(&n, &n);
    let edges = segment_distance(x, a, b)
        .min(segment_distance(x, b, c))
        .min(segment_distance(x, c, a));
    if nn <= 0.0 {
        return edges;
    }
    // projection onto the plane, kept if it falls inside the triangle
    let t = dot(&sub(x, a), &n) / nn;
    let q: Vec<f64> = x.iter().zip(&n).map(|(xi, ni)| xi - t * ni).collect();
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|(u, v)| dot(&cross3(&sub(v, u), &sub(&q, u)), &n) >= 0.0);
    if inside {
        edges.min(norm(&sub(x, &q)))
    } else {
        edges
    }
}
