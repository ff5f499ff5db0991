use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{unit_ball_volume, Region, RegionKind};
use crate::{Error, Result};

/// Two-sided 99% normal quantile.
const Z99: f64 = 2.575_829_303_548_901;
const CHUNK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub value: f64,
    /// 99% half-width; zero for closed forms.
    pub half_width: f64,
    pub sample_count: u64,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            value,
            half_width: 0.0,
            sample_count: 0,
        }
    }
}

/// Measures of the outer shell `Ω_ε^+` and inner shell `Ω_ε^-`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellEstimate {
    pub epsilon: f64,
    pub plus_measure: f64,
    pub minus_measure: f64,
    pub half_width: f64,
    pub sample_count: u64,
    /// `μ(Ω_ε^+) / (μ(Ω)^{1-1/m} ε + ε^m)`.
    pub vws_ratio_plus: f64,
    pub vws_ratio_minus: f64,
}

fn half_width(hits: u64, n: u64) -> f64 {
    let nf = n as f64;
    let ph = hits as f64 / nf;
    Z99 * ((ph * (1.0 - ph) + 1.0 / nf) / nf).sqrt()
}

/// Runs `per_sample` on `samples` uniform points of `T_m`, in fixed-size
/// chunks with one ChaCha stream per chunk, and sums the returned counters.
fn monte_carlo<F>(m: usize, samples: u64, seed: u64, per_sample: F) -> [u64; 2]
where
    F: Fn(&[f64]) -> [u64; 2] + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut u = vec![0.0; m];
            let mut acc = [0u64; 2];
            for _ in 0..len {
                for x in u.iter_mut() {
                    *x = rng.gen::<f64>();
                }
                let r = per_sample(&u);
                acc[0] += r[0];
                acc[1] += r[1];
            }
            acc
        })
        .reduce(|| [0, 0], |a, b| [a[0] + b[0], a[1] + b[1]])
}

/// Monte-Carlo measure with a 99% half-width.
pub fn measure_monte_carlo(region: &Region, samples: u64, seed: u64) -> MeasureEstimate {
    let samples = samples.max(1);
    let [hits, _] = monte_carlo(region.m(), samples, seed, |u| {
        [region.contains_point(u) as u64, 0]
    });
    MeasureEstimate {
        value: hits as f64 / samples as f64,
        half_width: half_width(hits, samples),
        sample_count: samples,
    }
}

/// Elementary symmetric polynomial `e_k` of `xs`.
fn elementary_symmetric(xs: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &x in xs {
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e[k]
}

/// Closed-form shell measures `(plus, minus)` when the geometry allows.
fn closed_form(region: &Region, eps: f64) -> Option<(f64, f64)> {
    let m = region.m();
    match region.kind() {
        RegionKind::FullTorus => Some((0.0, 0.0)),
        RegionKind::Ball { radius_f: r, .. } => {
            if r + eps > 0.5 {
                return None;
            }
            let v = unit_ball_volume(m);
            let mi = m as i32;
            Some((
                v * ((r + eps).powi(mi) - r.powi(mi)),
                v * (r.powi(mi) - (r - eps).max(0.0).powi(mi)),
            ))
        }
        RegionKind::AxisBox { lo, hi } => {
            let sides: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b.to_f64() - a.to_f64()).collect();
            if sides.iter().any(|&s| s <= 0.0) {
                return Some((0.0, 0.0));
            }
            // coordinates spanning the whole circle carry no boundary
            let active: Vec<f64> = sides.iter().copied().filter(|&s| s < 1.0).collect();
            let d = active.len();
            if d == 0 {
                return Some((0.0, 0.0));
            }
            if active.iter().any(|&s| s + 2.0 * eps >= 1.0) {
                return None;
            }
            // Steiner formula for the parallel body of a box
            let plus = (0..d)
                .map(|k| elementary_symmetric(&active, k) * unit_ball_volume(d - k) * eps.powi((d - k) as i32))
                .sum();
            let minus = active.iter().product::<f64>()
                - active.iter().map(|&s| (s - 2.0 * eps).max(0.0)).product::<f64>();
            Some((plus, minus))
        }
        RegionKind::Polytope(_) => None,
        RegionKind::Complement(inner) => closed_form(inner, eps).map(|(p, q)| (q, p)),
    }
}

/// Shell measures `μ(Ω_ε^±)`: closed forms for balls and boxes (and their
/// complements), Monte-Carlo classification by boundary distance otherwise.
pub fn shell_measure(region: &Region, epsilon: f64, samples: u64, seed: u64) -> Result<ShellEstimate> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidRegion(format!("shell width {epsilon} not in (0, 1/2)")));
    }
    let m = region.m();
    let (plus, minus, hw, n) = match closed_form(region, epsilon) {
        Some((p, q)) => (p, q, 0.0, 0),
        None => {
            let n = samples.max(1);
            let [hp, hm] = monte_carlo(m, n, seed, |u| {
                if region.boundary_distance(u) >= epsilon {
                    return [0, 0];
                }
                if region.contains_point(u) {
                    [0, 1]
                } else {
                    [1, 0]
                }
            });
            (
                hp as f64 / n as f64,
                hm as f64 / n as f64,
                half_width(hp, n).max(half_width(hm, n)),
                n,
            )
        }
    };
    let mu = region.measure();
    let scale = mu.powf(1.0 - 1.0 / m as f64) * epsilon + epsilon.powi(m as i32);
    Ok(ShellEstimate {
        epsilon,
        plus_measure: plus,
        minus_measure: minus,
        half_width: hw,
        sample_count: n,
        vws_ratio_plus: plus / scale,
        vws_ratio_minus: minus / scale,
    })
}
