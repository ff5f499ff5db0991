//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --release -p equilab --test acceptance`.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use equilab::discrepancy::{extreme_discrepancy_exact, FractionalPointSet};
use equilab::dyadic::{
    boundary_denominators, build_cover, draw_anchor, grid_cubes_inside, AnchoredCube, DyadicCover,
};
use equilab::expsum::{exp_sum_cube, exp_sum_cube_naive, fk_ratio};
use equilab::field_poly::{is_prime, primes_in, PolySystem, PrimeModulus, SystemKind};
use equilab::fixed::Fx;
use equilab::harness::{record_or_check, run, write_outputs, Baseline, ExperimentConfig, Tolerance};
use equilab::region::Region;
use equilab::stats::{log_log_slope, ols_slope};
use equilab::variety::{count_in_region, solve_system, theorem3_residual_from_count};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances and thresholds.
const EXPSUM_REL_TOL: f64 = 1e-9;
const GAUSS_ABS_TOL: f64 = 1e-6;
const FK_MAX_RATIO: f64 = 4.0;
const FK_MAX_SLOPE: f64 = 0.05;
const COVER_DEFICIENCY_C: f64 = 8.0;
const COVER_LAYER_C: f64 = 32.0;
const GRID_LAW_C: f64 = 16.0;
const THM2_BASELINE_FACTOR: f64 = 1.5;
const THM2_MAX_SLOPE: f64 = 0.1;
const THM3_MAX_ABS: f64 = 8.0;
/// Slope of `|residual|` against `ln p` may not exceed this many standard
/// errors above zero.
const THM3_SLOPE_SIGMAS: f64 = 2.0;

type Outcome = Result<String, String>;
/// Name, check and time budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);
/// Interval end: value and whether it is closed.
type End = (u64, bool);

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn pm(p: u64) -> PrimeModulus {
    PrimeModulus::new(p).unwrap()
}

fn ball(c: &str, r: Option<&str>, mu: Option<f64>) -> Region {
    let center = vec![Fx::parse(c).unwrap(); 2];
    match (r, mu) {
        (Some(r), None) => Region::ball(center, Fx::parse(r).unwrap()).unwrap(),
        (None, Some(mu)) => Region::ball_with_measure(center, mu).unwrap(),
        _ => unreachable!(),
    }
}

fn random_poly(rng: &mut ChaCha8Rng, m: usize) -> String {
    let terms = rng.gen_range(1..=4);
    let mut out = Vec::new();
    for _ in 0..terms {
        let c: i64 = rng.gen_range(1..=9) * if rng.gen() { 1 } else { -1 };
        let mut deg_left = rng.gen_range(1..=4u32);
        let mut mono = vec![c.to_string()];
        for v in 1..=m {
            let e = rng.gen_range(0..=deg_left);
            deg_left -= e;
            if e > 0 {
                mono.push(format!("X{v}^{e}"));
            }
        }
        out.push(mono.join("*"));
    }
    out.join(" + ").replace("+ -", "- ")
}

fn c1_expsum_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let primes = primes_in(3, 101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let m = rng.gen_range(1..=2);
        let n = rng.gen_range(1..=2);
        let text: Vec<String> = (0..n).map(|_| random_poly(&mut rng, m)).collect();
        let sys = PolySystem::parse(&text.join("; "), SystemKind::Value, Some(m)).unwrap();
        let a: Vec<i64> = (0..n).map(|_| rng.gen_range(-(p as i64)..p as i64)).collect();
        let w = rng.gen_range(1..p);
        let u: Vec<u64> = (0..m).map(|_| rng.gen_range(0..p)).collect();
        let fast = exp_sum_cube(&sys, &a, pm(p), &u, w).unwrap();
        let slow = exp_sum_cube_naive(&sys, &a, pm(p), &u, w).unwrap();
        let err = (fast.value() - slow.value()).norm() / fast.points as f64;
        worst = worst.max(err);
    }
    check(
        worst <= EXPSUM_REL_TOL,
        format!("1000 instances, worst relative gap {worst:.2e}"),
        format!("worst relative gap {worst:.2e} > {EXPSUM_REL_TOL:e}"),
    )
}

fn c2_gauss() -> Outcome {
    let sys = PolySystem::parse("X1^2", SystemKind::Value, Some(1)).unwrap();
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in primes_in(5, 97) {
        for a in 1..p as i64 {
            let s = exp_sum_cube(&sys, &[a], pm(p), &[0], p - 1).unwrap();
            assert_eq!(s.points, p);
            worst = worst.max((s.abs() - (p as f64).sqrt()).abs());
            count += 1;
        }
    }
    check(
        worst <= GAUSS_ABS_TOL,
        format!("{count} sums, worst | |S| - sqrt(p) | = {worst:.2e}"),
        format!("worst deviation {worst:.2e}"),
    )
}

fn c3_fouvry_katz() -> Outcome {
    let sys = PolySystem::parse("X1*X2", SystemKind::Value, Some(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let primes = [53u64, 101, 199, 401];
    let mut per_prime = Vec::new();
    for &p in &primes {
        let mut best = fk_ratio(&sys, pm(p), &[0, 0], p - 1, 10).unwrap().ratio;
        for _ in 0..10 {
            let w = rng.gen_range(2..p);
            let u = [rng.gen_range(0..p), rng.gen_range(0..p)];
            best = best.max(fk_ratio(&sys, pm(p), &u, w, 10).unwrap().ratio);
        }
        per_prime.push(best);
    }
    let max = per_prime.iter().copied().fold(0.0, f64::max);
    let ps: Vec<f64> = primes.iter().map(|&p| p as f64).collect();
    let slope = log_log_slope(&ps, &per_prime).unwrap();
    check(
        max <= FK_MAX_RATIO && slope <= FK_MAX_SLOPE,
        format!("max ratio {max:.3}, log-log slope {slope:.3}"),
        format!("max ratio {max:.3} (<= {FK_MAX_RATIO}), slope {slope:.3} (<= {FK_MAX_SLOPE})"),
    )
}

/// Integer-exact pairwise disjointness through the nesting of dyadic cells.
fn cover_disjoint(cover: &DyadicCover) -> bool {
    let mut seen: HashSet<(u32, Vec<u64>)> = HashSet::new();
    for c in cover.cubes() {
        if !seen.insert((c.level(), c.coords().to_vec())) {
            return false;
        }
    }
    cover.cubes().all(|c| {
        let mut a: Option<AnchoredCube> = c.parent();
        while let Some(q) = a {
            if seen.contains(&(q.level(), q.coords().to_vec())) {
                return false;
            }
            a = q.parent();
        }
        true
    })
}

/// Every corner of the cube within distance `r` of the center, in exact
/// integer arithmetic on the lifted coordinates.
fn corners_in_ball(c: &AnchoredCube, center: u128, r: u128) -> bool {
    let one = 1u128 << 63;
    let iv = c.intervals();
    let m = iv.len();
    (0..1u32 << m).all(|mask| {
        let mut d2 = 0u128;
        for (j, &(lo, hi)) in iv.iter().enumerate() {
            let v = if mask >> j & 1 == 1 { hi } else { lo } % one;
            let d = v.abs_diff(center).min(one - v.abs_diff(center));
            d2 += (d >> 31) * (d >> 31);
        }
        d2 <= (r >> 31) * (r >> 31)
    })
}

fn c4_cover() -> Outcome {
    let mut notes = Vec::new();
    let mut worst_def = 0.0f64;
    let mut worst_layer = 0.0f64;
    for r in ["0.2", "0.3", "0.4"] {
        let region = ball("0.5", Some(r), None);
        let mu = region.measure();
        let rr = Fx::parse(r).unwrap().raw() as u128;
        for seed in 0..3u64 {
            let anchor = Arc::new(draw_anchor(2, seed, &boundary_denominators(101, 20)));
            for depth in 1..=10u32 {
                let cover = build_cover(&region, depth, &anchor).unwrap();
                if !cover.cubes().all(|c| corners_in_ball(c, 1u128 << 62, rr)) {
                    notes.push(format!("r={r} M={depth}: cube outside ball"));
                }
                if !cover_disjoint(&cover) {
                    notes.push(format!("r={r} M={depth}: overlapping cubes"));
                }
                let bound = COVER_DEFICIENCY_C * (mu.sqrt() * 2f64.powi(-(depth as i32)) + 4f64.powi(-(depth as i32)));
                let def = mu - cover.union_measure();
                worst_def = worst_def.max(def / bound);
                for (i, n) in cover.layer_counts().iter().enumerate() {
                    let ratio = *n as f64 / (1.0 + mu.sqrt() * 2f64.powi(i as i32 + 1));
                    worst_layer = worst_layer.max(ratio / COVER_LAYER_C);
                }
            }
        }
    }
    if worst_def > 1.0 {
        notes.push(format!("deficiency at {worst_def:.2} of bound"));
    }
    if worst_layer > 1.0 {
        notes.push(format!("layer count at {worst_layer:.2} of bound"));
    }
    check(
        notes.is_empty(),
        format!(
            "90 covers; worst deficiency {:.3} of bound, worst #B_i {:.3} of bound",
            worst_def, worst_layer
        ),
        notes.join("; "),
    )
}

fn c5_grid_law() -> Outcome {
    let region = ball("0.5", Some("0.3"), None);
    let mu = region.measure();
    let anchor = Arc::new(draw_anchor(2, 5, &[]));
    let mut worst = 0.0f64;
    let mut k = 2u64;
    while k <= 256 {
        let n = grid_cubes_inside(&region, k, &anchor).unwrap().len() as f64;
        let kf = k as f64;
        worst = worst.max((n - kf * kf * mu).abs() / kf);
        k *= 2;
    }
    check(
        worst <= GRID_LAW_C,
        format!("max |#C(k) - k^2 mu| / k = {worst:.3}"),
        format!("max |#C(k) - k^2 mu| / k = {worst:.3} > {GRID_LAW_C}"),
    )
}

/// Exhaustive candidate boxes: every end at `0`, `1` or a coordinate,
/// open or closed, counted point by point.
fn brute_force_disc(n: usize, q: u64, pts: &[Vec<u64>]) -> (i128, i128) {
    let total = pts.len() as i128;
    let qn = (q as i128).pow(n as u32);
    if pts.is_empty() {
        return (1, 1);
    }
    // (value, closed)
    let mut ends: Vec<Vec<(End, End)>> = Vec::new();
    for j in 0..n {
        let mut vals: Vec<u64> = pts.iter().map(|x| x[j]).collect();
        vals.push(0);
        vals.push(q);
        vals.sort_unstable();
        vals.dedup();
        let mut ivs = Vec::new();
        for &lo in &vals {
            for &hi in &vals {
                if lo <= hi {
                    for lc in [true, false] {
                        for hc in [true, false] {
                            ivs.push(((lo, lc), (hi, hc)));
                        }
                    }
                }
            }
        }
        ends.push(ivs);
    }
    let mut best = 0i128;
    let mut idx = vec![0usize; n];
    loop {
        let mut count = 0i128;
        for x in pts {
            let inside = (0..n).all(|j| {
                let ((lo, lc), (hi, hc)) = ends[j][idx[j]];
                let above = if lc { x[j] >= lo } else { x[j] > lo };
                let below = if hc { x[j] <= hi } else { x[j] < hi };
                above && below
            });
            count += inside as i128;
        }
        let vol: i128 = (0..n).map(|j| (ends[j][idx[j]].1 .0 - ends[j][idx[j]].0 .0) as i128).product();
        best = best.max((count * qn - total * vol).abs());
        let mut j = 0;
        loop {
            if j == n {
                return (best, total * qn);
            }
            idx[j] += 1;
            if idx[j] < ends[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn c6_discrepancy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut bad = Vec::new();
    for t in 0..200 {
        let n = 1 + t % 2;
        let q = [7u64, 11, 31, 97][rng.gen_range(0..4)];
        let len = rng.gen_range(1..=30);
        let pts: Vec<Vec<u64>> = (0..len).map(|_| (0..n).map(|_| rng.gen_range(0..q)).collect()).collect();
        let set = FractionalPointSet::new(n, q, &pts).unwrap();
        let e = extreme_discrepancy_exact(&set).unwrap();
        let (num, den) = brute_force_disc(n, q, &pts);
        if e.num * den != num * e.den {
            bad.push(format!("set {t}"));
        }
    }
    for nn in 1..=64u64 {
        let pts: Vec<Vec<u64>> = (0..nn).map(|i| vec![i]).collect();
        let e = extreme_discrepancy_exact(&FractionalPointSet::new(1, nn, &pts).unwrap()).unwrap();
        if e.num * nn as i128 != e.den {
            bad.push(format!("equal spacing N={nn}: {}/{}", e.num, e.den));
        }
    }
    let empty = extreme_discrepancy_exact(&FractionalPointSet::new(2, 7, &[]).unwrap()).unwrap();
    if empty.value != 1.0 {
        bad.push(format!("empty set gives {}", empty.value));
    }
    check(
        bad.is_empty(),
        "200 random sets exact, 1/N for N <= 64, empty set 1".into(),
        bad.join(", "),
    )
}

const THM2_SWEEP: &str = r#"
kind = "discrepancy"
seed = 2024
system = "X1*X2"
primes = [101, 211, 401, 809]
regions = [
  { kind = "ball", center = ["0.5", "0.5"], measure = "0.05" },
  { kind = "ball", center = ["0.5", "0.5"], measure = "0.1" },
  { kind = "ball", center = ["0.5", "0.5"], measure = "0.2" },
]
"#;

fn baseline_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/baselines/thm2_sweep.json")
}

fn c7_thm2() -> Outcome {
    let plan = ExperimentConfig::from_toml(THM2_SWEEP).unwrap().validate().unwrap();
    let result = run(&plan).result;
    if result.cells.len() != 12 {
        return Err(format!("{} cells", result.cells.len()));
    }
    let path = baseline_path();
    let fresh = !path.exists();
    let report = record_or_check(&result, &path, Tolerance::default()).map_err(|e| e.to_string())?;
    let base = Baseline::load(&path).map_err(|e| e.to_string())?;
    let mut bad = Vec::new();
    let ratio = |c: &equilab::harness::CellResult| c.fields.get("thm2_ratio").and_then(|v| v.as_f64());
    for cell in &result.cells {
        let Some(r) = ratio(cell) else {
            bad.push(format!("{}: no thm2_ratio", cell.key));
            continue;
        };
        let frozen = base.cells.iter().find(|b| b.key == cell.key).and_then(ratio);
        match frozen {
            Some(f) if r <= f * THM2_BASELINE_FACTOR => {}
            Some(f) => bad.push(format!("{}: {r:.4} > 1.5 x {f:.4}", cell.key)),
            None => bad.push(format!("{}: missing from baseline", cell.key)),
        }
    }
    let mut slopes = Vec::new();
    for region in ["0.05", "0.1", "0.2"] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for cell in &result.cells {
            let mu = cell.fields["measure"].as_f64().unwrap();
            if (mu - region.parse::<f64>().unwrap()).abs() < 1e-9 {
                xs.push(cell.p as f64);
                ys.push(ratio(cell).unwrap());
            }
        }
        let s = log_log_slope(&xs, &ys).unwrap();
        if s > THM2_MAX_SLOPE {
            bad.push(format!("mu={region}: slope {s:.3}"));
        }
        slopes.push(format!("{s:.3}"));
    }
    if !report.passed() {
        bad.push("baseline regression".into());
    }
    let max = result.cells.iter().filter_map(ratio).fold(0.0, f64::max);
    check(
        bad.is_empty(),
        format!(
            "12 cells, max thm2_ratio {max:.4}, slopes [{}]{}",
            slopes.join(", "),
            if fresh { ", baseline recorded" } else { "" }
        ),
        bad.join("; "),
    )
}

/// Independent brute-force count of `f(x, y) = 0 mod p`.
fn brute_count(p: u64, f: impl Fn(u64, u64) -> u64) -> u64 {
    let mut n = 0;
    for x in 0..p {
        for y in 0..p {
            n += (f(x, y) % p == 0) as u64;
        }
    }
    n
}

fn c8_lang_weil() -> Outcome {
    let hyp = PolySystem::parse("X1*X2 - 1", SystemKind::Zero, Some(2)).unwrap();
    let circ = PolySystem::parse("X1^2 + X2^2 - 1", SystemKind::Zero, Some(2)).unwrap();
    let mut bad = Vec::new();
    let primes = primes_in(2, 997);
    for &p in &primes {
        let h = solve_system(&hyp, pm(p)).unwrap().len();
        let hb = brute_count(p, |x, y| x * y + p - 1);
        if h != p - 1 || h != hb {
            bad.push(format!("hyperbola p={p}: {h} (brute {hb})"));
        }
        if p > 2 {
            let c = solve_system(&circ, pm(p)).unwrap().len();
            let cb = brute_count(p, |x, y| x * x + y * y + p - 1);
            if c.abs_diff(p) != 1 || c != cb {
                bad.push(format!("circle p={p}: {c} (brute {cb})"));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("{} primes up to 997", primes.len()),
        bad.join(", "),
    )
}

fn c9_theorem3() -> Outcome {
    let hyp = PolySystem::parse("X1*X2 - 1", SystemKind::Zero, Some(2)).unwrap();
    let primes = [101u64, 199, 307, 401, 503, 601, 701, 809, 907, 997];
    assert!(primes.iter().all(|&p| is_prime(p)));
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    let mut trend = Vec::new();
    for mu in [0.05, 0.1, 0.2] {
        let region = ball("0.5", None, Some(mu));
        let comp = Region::complement(region.clone());
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &p in &primes {
            let sol = solve_system(&hyp, pm(p)).unwrap().with_nu(1).unwrap();
            let t = count_in_region(&sol, &region).unwrap();
            let tc = count_in_region(&sol, &comp).unwrap();
            if t + tc != sol.len() {
                bad.push(format!("partition fails at p={p}, mu={mu}"));
            }
            let r = theorem3_residual_from_count(&sol, t, region.measure());
            worst = worst.max(r.abs());
            xs.push((p as f64).ln());
            ys.push(r.abs());
        }
        let (slope, se) = slope_with_stderr(&xs, &ys);
        if slope > THM3_SLOPE_SIGMAS * se {
            bad.push(format!("mu={mu}: |residual| slope {slope:.3} > {THM3_SLOPE_SIGMAS} x se {se:.3}"));
        }
        trend.push(format!("{slope:.3}±{se:.3}"));
    }
    if worst > THM3_MAX_ABS {
        bad.push(format!("max |residual| {worst:.3}"));
    }
    check(
        bad.is_empty(),
        format!("30 cells, max |residual| {worst:.3}, slopes vs ln p [{}]", trend.join(", ")),
        bad.join("; "),
    )
}

fn slope_with_stderr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let slope = ols_slope(xs, ys).unwrap();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    (slope, (sse / (n - 2.0) / sxx).sqrt())
}

fn c10_determinism() -> Outcome {
    let plan = ExperimentConfig::from_toml(THM2_SWEEP).unwrap().validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}"));
        write_outputs(&run(&plan), &out).unwrap();
        files.push((
            std::fs::read(out.join("result.json")).unwrap(),
            std::fs::read(out.join("cells.csv")).unwrap(),
        ));
    }
    check(
        files[0] == files[1],
        format!("result.json ({} bytes) and cells.csv identical across reruns", files[0].0.len()),
        "reruns differ".into(),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exponential-sum oracle equivalence", c1_expsum_oracle, 60),
        ("Gauss-sum magnitude", c2_gauss, 10),
        ("Fouvry-Katz ratio", c3_fouvry_katz, 300),
        ("dyadic cover soundness", c4_cover, 120),
        ("grid-count law", c5_grid_law, 60),
        ("discrepancy oracle", c6_discrepancy, 120),
        ("thm2 ratio stability", c7_thm2, 600),
        ("Lang-Weil counts", c8_lang_weil, 60),
        ("thm3 residual", c9_theorem3, 300),
        ("determinism", c10_determinism, 600),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let over = took > Duration::from_secs(*budget);
        match out {
            Ok(msg) if !over => println!("PASS {:>2} {name}: {msg} [{:.1}s]", i + 1, took.as_secs_f64()),
            Ok(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{:.1}s over {budget}s budget]", i + 1, took.as_secs_f64());
            }
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{:.1}s]", i + 1, took.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
