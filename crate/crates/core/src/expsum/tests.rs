use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::dyadic::{boundary_denominators, build_cover, draw_anchor, MAX_LEVEL};
use crate::field_poly::SystemKind;
use crate::fixed::Fx;

fn sys(text: &str) -> PolySystem {
    PolySystem::parse(text, SystemKind::Value, None).unwrap()
}

fn sys_m(text: &str, m: usize) -> PolySystem {
    PolySystem::parse(text, SystemKind::Value, Some(m)).unwrap()
}

fn pm(p: u64) -> PrimeModulus {
    PrimeModulus::new(p).unwrap()
}

fn ball(c: &[f64], r: f64) -> Region {
    Region::ball(
        c.iter().map(|&x| Fx::from_f64(x).unwrap()).collect(),
        Fx::from_f64(r).unwrap(),
    )
    .unwrap()
}

#[test]
fn vanishing_combination_sums_to_point_count() {
    // 2(X1^2 + X1) + 4(2 X1^2) = 10 X1^2 + 2 X1; use a combination that kills
    // everything: (1, 2) on {X1^2 + X1, 2X1^2 + 2X1} mod 5 is 5X1^2 + 5X1 = 0
    let s = sys("X1^2 + X1; 2*X1^2 + 2*X1");
    let r = exp_sum_cube(&s, &[3, 1], pm(5), &[0], 4).unwrap();
    assert_eq!(r.re, 5.0);
    assert_eq!(r.im, 0.0);
    let r = exp_sum_cube(&sys_m("X1*X2", 2), &[0], pm(7), &[2, 3], 3).unwrap();
    assert_eq!((r.re, r.points), (16.0, 16));
}

#[test]
fn full_linear_sum_vanishes() {
    for p in [3u64, 13, 101] {
        let r = exp_sum_cube(&sys("X1"), &[1], pm(p), &[0], p - 1).unwrap();
        assert!(r.abs() < 1e-9, "{p}: {}", r.abs());
    }
}

#[test]
fn gauss_sum_magnitude() {
    let r = exp_sum_cube(&sys("X1^2"), &[1], pm(13), &[0], 12).unwrap();
    assert!((r.abs() - 13f64.sqrt()).abs() < 1e-9);
    // brute-force complex summation as a second opinion
    let direct: Complex64 = (0..13u64)
        .map(|x| Complex64::from_polar(1.0, TAU * ((x * x) % 13) as f64 / 13.0))
        .sum();
    assert!((direct - r.value()).norm() < 1e-9);
    assert!((direct.norm() - 3.605551275).abs() < 1e-8);
}

#[test]
fn region_sums() {
    let full = Region::full(1);
    let r = exp_sum_region(&sys("X1"), &[1], pm(31), &full).unwrap();
    assert!(r.abs() < 1e-9);
    let s = sys_m("X1*X2 + X2^3", 2);
    let a = exp_sum_region(&s, &[3], pm(29), &Region::full(2)).unwrap();
    let b = exp_sum_cube(&s, &[3], pm(29), &[0, 0], 28).unwrap();
    assert!((a.value() - b.value()).norm() < 1e-9);
    assert_eq!(a.points, 29 * 29);
}

#[test]
fn ball_sum_matches_direct_loop() {
    let region = ball(&[0.5, 0.5], 0.3);
    let p = 53u64;
    let r = exp_sum_region(&sys("X1*X2"), &[1], pm(p), &region).unwrap();
    let mut direct = Complex64::new(0.0, 0.0);
    let mut count = 0;
    for x1 in 0..p {
        for x2 in 0..p {
            let (d1, d2) = (x1 as f64 / p as f64 - 0.5, x2 as f64 / p as f64 - 0.5);
            if d1 * d1 + d2 * d2 <= 0.09 {
                direct += Complex64::from_polar(1.0, TAU * ((x1 * x2) % p) as f64 / p as f64);
                count += 1;
            }
        }
    }
    assert_eq!(r.points, count);
    assert!((r.value() - direct).norm() < 1e-9 * count as f64);
}

#[test]
fn cover_assembly_reproduces_region_sum() {
    let region = ball(&[0.4, 0.55], 0.3);
    let p = 53u64;
    let a = Arc::new(draw_anchor(2, 8, &boundary_denominators(p, MAX_LEVEL)));
    let cover = build_cover(&region, 4, &a).unwrap();
    let s = sys("X1*X2 + X1");
    let (on_cubes, rest) = exp_sum_region_split(&s, &[2], pm(p), &region, &cover).unwrap();
    let whole = exp_sum_region(&s, &[2], pm(p), &region).unwrap();
    assert!((on_cubes + rest - whole.value()).norm() < 1e-9 * whole.points as f64);
}

#[test]
fn max_sum_examples() {
    let t = cube_table(&sys("X1"), pm(37), &[0], 36).unwrap();
    let best = max_exp_sum(&t, 10).unwrap();
    assert!(best.s_star < 1e-9);
    assert_eq!(best.scanned, 10);

    let t = cube_table(&sys("X1*X2"), pm(53), &[0, 0], 52).unwrap();
    let best = max_exp_sum(&t, 5).unwrap();
    assert!((best.s_star - 53.0).abs() < 1e-9, "{}", best.s_star);
    assert!(best.argmax[0] > 0);
    assert!(max_exp_sum(&t, 0).is_err());
    assert!(max_exp_sum(&t, 53).is_err());
}

#[test]
fn scan_guard_and_admissible_l() {
    let t = cube_table(&sys("X1; X1^2; X1^3"), pm(1009), &[0], 10).unwrap();
    assert!(max_exp_sum(&t, 200).is_err());
    let l = admissible_l(3, 504, 1009);
    assert!(((2 * l + 1) as u128).pow(3) - 1 <= SCAN_GUARD);
    assert!(((2 * l + 3) as u128).pow(3) - 1 > SCAN_GUARD);
    assert_eq!(admissible_l(1, 504, 1009), 504);
}

#[test]
fn canonical_coefficients_cover_half_the_box() {
    for n in 1..=3 {
        for l in 1..=3u64 {
            let cs = canonical_coefficients(n, l);
            assert_eq!(cs.len() as u64, ((2 * l + 1).pow(n as u32) - 1) / 2);
            assert!(cs.windows(2).all(|w| w[0] < w[1]));
            assert!(cs.iter().all(|a| !cs.contains(&a.iter().map(|c| -c).collect())));
        }
    }
}

#[test]
fn parseval_identity() {
    for (text, p) in [("X1^2", 11u64), ("X1^3 + X1", 13), ("X1^4", 17), ("X1^5 + 3*X1^2", 23)] {
        let s = sys(text);
        let t = cube_table(&s, pm(p), &[0], p - 1).unwrap();
        let roots = RootsOfUnity::new(p);
        let lhs: f64 = (0..p as i64).map(|a| sum_from_table(&t, &[a], &roots).norm_sqr()).sum();
        let rhs = p as f64 * t.histogram(&[1]).iter().map(|&c| (c * c) as f64).sum::<f64>();
        assert!((lhs - rhs).abs() <= 1e-6 * rhs, "{text}");
    }
}

#[test]
fn fk_ratio_requires_independence() {
    let dep = sys("X1 + X2");
    assert!(matches!(
        fk_ratio(&dep, pm(101), &[0, 0], 100, 10),
        Err(Error::DependentSystem { .. })
    ));
    let r = fk_ratio(&sys("X1*X2"), pm(101), &[0, 0], 100, DEFAULT_L_SCAN).unwrap();
    assert!(r.ratio > 0.0 && r.ratio <= 4.0, "{}", r.ratio);
    assert_eq!(r.l_scan, 10);
    // small primes clamp the scan below p
    assert_eq!(fk_ratio(&sys("X1*X2"), pm(7), &[0, 0], 6, 10).unwrap().l_scan, 6);
}

#[test]
fn scan_csv_has_one_row_per_vector() {
    let t = cube_table(&sys("X1^2; X1*X2"), pm(11), &[0, 0], 10).unwrap();
    let mut out = Vec::new();
    write_scan_csv(&t, 2, 1.0, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "a1,a2,re,im,abs,ratio");
    assert_eq!(lines.count(), 12);
}

#[test]
fn input_validation() {
    let s = sys("X1*X2");
    assert!(exp_sum_cube(&s, &[1, 2], pm(7), &[0, 0], 3).is_err());
    assert!(exp_sum_cube(&s, &[1], pm(7), &[0], 3).is_err());
    assert!(exp_sum_cube(&s, &[1], pm(7), &[0, 0], 7).is_err());
    assert!(exp_sum_cube(&s, &[1], pm(7), &[0, 0], 0).is_err());
    let big = sys("X1*X2*X3");
    assert!(exp_sum_cube(&big, &[1], pm(2003), &[0, 0, 0], 2000).is_err());
}

fn arb_instance() -> impl Strategy<Value = (String, usize, u64, Vec<i64>, Vec<u64>, u64)> {
    let primes = vec![2u64, 3, 5, 7, 11, 13, 31, 53, 97, 101];
    (proptest::sample::select(primes), 1usize..=2, 1usize..=2).prop_flat_map(|(p, m, n)| {
        let mono = (0u32..=4, 0u32..=4, -5i64..=5).prop_map(move |(e1, e2, c)| {
            if m == 1 {
                format!("{c}*X1^{e1}")
            } else {
                format!("{c}*X1^{e1}*X2^{}", e2.min(4 - e1.min(4)))
            }
        });
        let poly = proptest::collection::vec(mono, 1..4).prop_map(|ts| ts.join(" + ").replace("+ -", "- "));
        (
            proptest::collection::vec(poly, n).prop_map(|ps| ps.join("; ")),
            Just(m),
            Just(p),
            proptest::collection::vec(-20i64..=20, n),
            proptest::collection::vec(0..p, m),
            1..p,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn naive_and_histogram_agree((text, m, p, a, u, w) in arb_instance()) {
        let s = sys_m(&text, m);
        let h = exp_sum_cube(&s, &a, pm(p), &u, w).unwrap();
        let d = exp_sum_cube_naive(&s, &a, pm(p), &u, w).unwrap();
        prop_assert_eq!(h.points, d.points);
        prop_assert!((h.value() - d.value()).norm() <= 1e-9 * h.points as f64);
        prop_assert!(h.abs() <= h.points as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn conjugate_symmetry((text, m, p, a, u, w) in arb_instance()) {
        let s = sys_m(&text, m);
        let neg: Vec<i64> = a.iter().map(|c| -c).collect();
        let x = exp_sum_cube(&s, &a, pm(p), &u, w).unwrap();
        let y = exp_sum_cube(&s, &neg, pm(p), &u, w).unwrap();
        prop_assert!((x.value() - y.value().conj()).norm() <= 1e-12 * x.points as f64);
    }
}
