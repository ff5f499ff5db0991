use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::points::{DiscBox, Endpoint, FractionalPointSet, Interval};

fn random_box(pts: &FractionalPointSet, rng: &mut ChaCha8Rng) -> DiscBox {
    let q = pts.denom();
    let n = pts.n();
    let intervals = if rng.gen_bool(0.5) || pts.distinct() == 0 {
        // grid corners
        (0..n)
            .map(|_| {
                let (a, b) = (rng.gen_range(0..=q), rng.gen_range(0..=q));
                Interval {
                    lo: Endpoint::at(a.min(b)),
                    hi: Endpoint::at(a.max(b)),
                }
            })
            .collect()
    } else {
        // box spanned by two points, each side closed, open or pushed out
        let p1 = &pts.points()[rng.gen_range(0..pts.distinct())].0;
        let p2 = &pts.points()[rng.gen_range(0..pts.distinct())].0;
        (0..n)
            .map(|j| {
                let (a, b) = (p1[j].min(p2[j]) as u64, p1[j].max(p2[j]) as u64);
                let lo = match rng.gen_range(0..4) {
                    0 => Endpoint::at(0),
                    1 => Endpoint::above(a),
                    _ => Endpoint::at(a),
                };
                let hi = match rng.gen_range(0..4) {
                    0 => Endpoint::at(q),
                    1 => Endpoint::at(b),
                    _ => Endpoint::above(b),
                };
                if lo.num == hi.num && lo.plus && !hi.plus {
                    Interval { lo, hi: lo }
                } else {
                    Interval { lo, hi }
                }
            })
            .collect()
    };
    DiscBox {
        denom: q,
        intervals,
    }
}

/// Lower bound for the extreme discrepancy: the largest deviation over
/// `trials` candidate boxes drawn from `seed` (random grid boxes and boxes
/// spanned by random pairs of points). Every candidate is a genuine box (or a
/// limit of boxes), so the result never exceeds the exact value.
pub fn sampled_discrepancy_lower_bound(pts: &FractionalPointSet, trials: u64, seed: u64) -> f64 {
    if pts.is_empty() {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boxes: Vec<DiscBox> = (0..trials.max(1)).map(|_| random_box(pts, &mut rng)).collect();
    boxes
        .par_iter()
        .map(|b| b.deviation(pts))
        .reduce(|| 0.0, f64::max)
}
