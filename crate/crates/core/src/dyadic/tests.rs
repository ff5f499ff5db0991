use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::fixed::Fx;
use crate::region::{measure_monte_carlo, Region};

fn fx(v: &[f64]) -> Vec<Fx> {
    v.iter().map(|&x| Fx::from_f64(x).unwrap()).collect()
}

fn anchor(m: usize, seed: u64, p: u64) -> Arc<Anchor> {
    Arc::new(draw_anchor(m, seed, &boundary_denominators(p, MAX_LEVEL)))
}

/// `C(2^i)` and the parent filter, straight from the definition.
fn naive_layers(region: &Region, depth: u32, a: &Arc<Anchor>) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    let mut prev: Vec<Vec<u64>> = Vec::new();
    for i in 1..=depth {
        let c: Vec<Vec<u64>> = grid_cubes_inside(region, 1 << i, a)
            .unwrap()
            .into_iter()
            .map(|c| c.coords().to_vec())
            .collect();
        let layer = c
            .iter()
            .filter(|u| {
                let parent: Vec<u64> = u.iter().map(|v| v >> 1).collect();
                i == 1 || !prev.contains(&parent)
            })
            .cloned()
            .collect();
        out.push(layer);
        prev = c;
    }
    out
}

#[test]
fn full_torus_cover_is_first_layer() {
    let a = anchor(2, 1, 101);
    let cover = build_cover(&Region::full(2), 5, &a).unwrap();
    assert_eq!(cover.layer_counts(), vec![4, 0, 0, 0, 0]);
    assert_eq!(cover.union_measure(), 1.0);
    assert_eq!(grid_cubes_inside(&Region::full(2), 4, &a).unwrap().len(), 16);
}

#[test]
fn non_dyadic_grid_rejected() {
    let a = anchor(2, 1, 101);
    assert_eq!(
        grid_cubes_inside(&Region::full(2), 6, &a).unwrap_err(),
        crate::Error::NonDyadicLevel(6)
    );
    assert!(grid_cubes_inside(&Region::full(2), 0, &a).is_err());
}

#[test]
fn refinement_matches_definition() {
    let regions = [
        Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.3).unwrap()).unwrap(),
        Region::ball(fx(&[0.05, 0.9]), Fx::from_f64(0.21).unwrap()).unwrap(),
        Region::axis_box(fx(&[0.1, 0.2]), fx(&[0.8, 0.65])).unwrap(),
        Region::complement(Region::ball(fx(&[0.3, 0.6]), Fx::from_f64(0.25).unwrap()).unwrap()),
        Region::polytope(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.4, 0.85]]).unwrap(),
    ];
    for (s, region) in regions.iter().enumerate() {
        let a = anchor(2, s as u64, 101);
        let cover = build_cover(region, 6, &a).unwrap();
        let got: Vec<Vec<Vec<u64>>> = cover
            .layers()
            .iter()
            .map(|l| l.iter().map(|c| c.coords().to_vec()).collect())
            .collect();
        assert_eq!(got, naive_layers(region, 6, &a), "region {}", region.label());
    }
}

#[test]
fn cover_cubes_are_disjoint() {
    let region = Region::ball(fx(&[0.5, 0.5, 0.5]), Fx::from_f64(0.35).unwrap()).unwrap();
    let cover = build_cover(&region, 4, &anchor(3, 9, 101)).unwrap();
    let cubes: Vec<_> = cover.cubes().collect();
    for (i, c) in cubes.iter().enumerate() {
        for d in &cubes[i + 1..] {
            assert!(c.interiors_disjoint(d));
        }
    }
}

#[test]
fn lattice_points_in_cover_are_in_region_and_off_faces() {
    for p in [2u64, 3, 5, 31, 53, 101] {
        let region = Region::ball(fx(&[0.4, 0.55]), Fx::from_f64(0.33).unwrap()).unwrap();
        let a = anchor(2, p, p);
        let cover = build_cover(&region, DepthPolicy::Thm2.depth(p, 1), &a).unwrap();
        let mut covered = 0;
        for x0 in 0..p {
            for x1 in 0..p {
                let x = [x0, x1];
                let u = [x0 as f64 / p as f64, x1 as f64 / p as f64];
                let hits: Vec<_> = cover.cubes().filter(|c| c.contains_lattice_point(&x, p)).collect();
                assert!(hits.len() <= 1);
                for c in &hits {
                    assert!(!c.touches_lattice_point(&x, p));
                    assert!(region.contains_point(&u));
                    covered += 1;
                }
                assert_eq!(cover.locate(&x, p).is_some(), !hits.is_empty());
            }
        }
        let counted: u64 = cover.cubes().map(|c| c.lattice_count(p)).sum();
        assert_eq!(counted, covered);
    }
}

#[test]
fn union_measure_matches_sampling() {
    let region = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.3).unwrap()).unwrap();
    let a = anchor(2, 3, 101);
    let cover = build_cover(&region, 6, &a).unwrap();
    let mut hit = 0u32;
    let n = 200_000;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    for _ in 0..n {
        let u: [f64; 2] = [rand::Rng::gen(&mut rng), rand::Rng::gen(&mut rng)];
        if cover.contains_point(&u) {
            hit += 1;
            assert!(region.contains_point(&u));
        }
    }
    let est = hit as f64 / n as f64;
    let hw = 4.0 * (est * (1.0 - est) / n as f64).sqrt();
    assert!((est - cover.union_measure()).abs() < hw, "{est} vs {}", cover.union_measure());
    let mu = measure_monte_carlo(&region, 10_000, 1).value;
    assert!(cover.union_measure() <= mu + 0.05);
}

#[test]
fn diagnostics_and_exports() {
    let region = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.3).unwrap()).unwrap();
    let cover = build_cover(&region, 5, &anchor(2, 4, 101)).unwrap();
    let d = cover_diagnostics(&cover, &region);
    assert_eq!(d.layers.len(), 5);
    assert!(d.deficiency > 0.0 && d.deficiency < region.measure());
    assert!(d.deficiency_ratio_ws < 8.0);
    let mut csv = Vec::new();
    d.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("i,count,ratio_ws,ratio_vws\n"));
    assert_eq!(csv.lines().count(), 6);
    let mut jl = Vec::new();
    cover.write_jsonl(&mut jl).unwrap();
    let jl = String::from_utf8(jl).unwrap();
    assert_eq!(jl.lines().count(), cover.len());
    let first: serde_json::Value = serde_json::from_str(jl.lines().next().unwrap()).unwrap();
    assert!(first["level"].as_u64().unwrap().is_power_of_two());
    assert!(first["layer"].as_u64().unwrap() >= 1);
}

#[test]
fn depth_policies() {
    assert_eq!(DepthPolicy::Thm1.depth(101, 1), 3);
    assert_eq!(DepthPolicy::Thm1.depth(1024, 1), 5);
    assert_eq!(DepthPolicy::Thm1.depth(1031, 1), 5);
    assert_eq!(DepthPolicy::Thm2.depth(101, 1), 6);
    assert_eq!(DepthPolicy::Thm2.depth(2, 1), 1);
    assert_eq!(DepthPolicy::Thm3.depth(1009, 1), 1);
    assert_eq!(DepthPolicy::Explicit(7).depth(3, 2), 7);
    // large primes do reach deeper levels
    assert!(DepthPolicy::Thm3.depth(2_147_483_647, 1) >= 2);
}

#[test]
fn complement_of_polytope_is_uncertifiable() {
    let poly = Region::polytope(vec![vec![0.1, 0.1], vec![0.9, 0.2], vec![0.4, 0.85]]).unwrap();
    assert!(build_cover(&Region::complement(poly), 3, &anchor(2, 1, 101)).is_err());
}

#[test]
fn tiny_ball_holds_no_half_cube() {
    let region = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.3).unwrap()).unwrap();
    assert!(grid_cubes_inside(&region, 2, &anchor(2, 1, 101)).unwrap().is_empty());
    let cover = build_cover(&region, 1, &anchor(2, 1, 101)).unwrap();
    assert!(cover.is_empty());
}

#[test]
fn grid_count_matches_vertex_oracle() {
    let region = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.4).unwrap()).unwrap();
    for seed in 0..5 {
        let a = anchor(2, seed, 101);
        let g = a.to_f64();
        let mut oracle = 0;
        for u0 in 0..8u64 {
            for u1 in 0..8u64 {
                let far = (0..4u32)
                    .map(|mask| {
                        (0..2)
                            .map(|j| {
                                let u = [u0, u1][j] + (mask >> j & 1) as u64;
                                let t = (g[j] + u as f64 / 8.0).rem_euclid(1.0);
                                let d = (t - 0.5).abs();
                                d.min(1.0 - d).powi(2)
                            })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
                if far <= 0.16 {
                    oracle += 1;
                }
            }
        }
        assert_eq!(grid_cubes_inside(&region, 8, &a).unwrap().len(), oracle);
    }
}

#[test]
fn ball_deficiency_and_layer_ratios() {
    let r04 = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.4).unwrap()).unwrap();
    let cover = build_cover(&r04, 8, &anchor(2, 2, 101)).unwrap();
    let d = cover_diagnostics(&cover, &r04);
    // shell constant of the ball: the perimeter 2πr times the collar √2·2^-M
    let c = 2.0 * std::f64::consts::PI * 0.4 * 2f64.sqrt();
    assert!(d.deficiency <= c * 2f64.powi(-8), "{}", d.deficiency);

    let r03 = Region::ball(fx(&[0.5, 0.5]), Fx::from_f64(0.3).unwrap()).unwrap();
    let cover = build_cover(&r03, 10, &anchor(2, 3, 101)).unwrap();
    let d = cover_diagnostics(&cover, &r03);
    assert!(d.max_ratio_vws() <= 32.0);
    let mut last = 0.0;
    for depth in 1..=10 {
        let u = build_cover(&r03, depth, &anchor(2, 3, 101)).unwrap().union_measure();
        assert!(u >= last);
        last = u;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_index_locates_the_point(seed in 0u64..1000, x0 in 0u64..97, x1 in 0u64..97, level in 1u32..8) {
        let a = anchor(2, seed, 97);
        let x = [x0, x1];
        let idx = grid_index(&a, level, &x, 97);
        let cube = AnchoredCube::new(a.clone(), level, idx).unwrap();
        prop_assert!(cube.contains_lattice_point(&x, 97));
        prop_assert!(!cube.touches_lattice_point(&x, 97));
    }

    #[test]
    fn inside_cubes_lie_in_ball(cx in 0.0f64..1.0, cy in 0.0f64..1.0, r in 0.05f64..0.5, seed in 0u64..100) {
        let region = Region::ball(fx(&[cx, cy]), Fx::from_f64(r).unwrap()).unwrap();
        let a = anchor(2, seed, 101);
        for c in grid_cubes_inside(&region, 8, &a).unwrap() {
            let g = a.to_f64();
            for mask in 0..4u32 {
                let u: Vec<f64> = (0..2)
                    .map(|j| (g[j] + (c.coords()[j] + (mask >> j & 1) as u64) as f64 / 8.0).rem_euclid(1.0))
                    .collect();
                prop_assert!(region.contains_point(&u) || crate::region::torus_dist2(&u, &[cx, cy]).sqrt() <= r + 1e-12);
            }
        }
    }
}
