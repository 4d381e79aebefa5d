use jm_core::jm::robustness;
use jm_core::quantum::{random_effect_tuple, NoiseModel, ScalingVector};
use jm_core::regions::{clone_boundary_along, clone_membership, f_map, symmetric_clone_value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn clone_region_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    while checked < 2000 {
        let g = rng.random_range(2..=4);
        let d = rng.random_range(2..=6);
        let a: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
        if clone_membership(g, d, &a).unwrap().member && clone_membership(g, d, &b).unwrap().member {
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            assert!(clone_membership(g, d, &mid).unwrap().member, "g={g} d={d} {a:?} {b:?}");
            checked += 1;
        }
    }
}

#[test]
fn doubled_dimension_clone_points_are_certified_by_the_sdp() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..40u64 {
        let g = 2 + k as usize % 2;
        let d = 2 + (k as usize / 2) % 2;
        let dir: Vec<f64> = (0..g).map(|_| rng.random_range(0.05..1.0)).collect();
        // The farthest clone point along `dir` is the hardest case.
        let lam = clone_boundary_along(g, 2 * d, &dir).unwrap();
        let s: Vec<f64> = dir.iter().map(|v| v * lam).collect();
        assert!(clone_membership(g, 2 * d, &s).unwrap().member);
        let t = random_effect_tuple(g, d, 50 + k);
        let r = robustness(&t, &ScalingVector::new(s.clone()).unwrap(), &NoiseModel::Balanced, None).unwrap();
        assert!(r.t_star >= 1.0 - 1e-5, "instance {k}: s = {s:?}, t* = {}", r.t_star);
    }
}

#[test]
fn f_map_carries_linear_robustness_to_balanced() {
    for seed in 0..20u64 {
        let g = 2 + seed as usize % 3;
        let t = random_effect_tuple(g, 2 + seed as usize % 2, 700 + seed);
        let ones = ScalingVector::uniform(g, 1.0).unwrap();
        let lin = robustness(&t, &ones, &NoiseModel::Linear, None).unwrap().t_star;
        let f = f_map(&ScalingVector::uniform(g, lin).unwrap()).unwrap();
        let bal = robustness(&t, &ones, &NoiseModel::Balanced, None).unwrap().t_star;
        assert!(bal >= f.as_slice()[0] - 1e-5, "seed {seed}: balanced {bal} < F({lin})");
    }
}

#[test]
fn symmetric_clone_value_beats_the_quarter_circle_exactly_below_sqrt_g() {
    for g in 2..=100usize {
        for d in 2..=20usize {
            let gamma = symmetric_clone_value(g, d);
            let qc = 1.0 / (g as f64).sqrt();
            match (d * d).cmp(&g) {
                std::cmp::Ordering::Less => assert!(gamma > qc, "g={g} d={d}"),
                std::cmp::Ordering::Equal => assert!((gamma - qc).abs() <= 1e-15, "g={g} d={d}"),
                std::cmp::Ordering::Greater => assert!(gamma < qc, "g={g} d={d}"),
            }
        }
    }
}

#[test]
fn doubled_dimension_clone_value_never_beats_both_bounds() {
    for g in 2..=50usize {
        for d in 2..=50usize {
            let v = symmetric_clone_value(g, 2 * d);
            let best = (1.0 / (g as f64).sqrt()).max(1.0 / (2.0 * d as f64));
            assert!(v <= best + 1e-15, "g={g} d={d}: {v} > {best}");
        }
    }
}
