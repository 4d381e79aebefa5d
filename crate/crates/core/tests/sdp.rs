use jm_core::linalg::HermitianMatrix;
use jm_core::sdp::{solve, BlockTerm, SdpProblem, SdpStatus, Sense, SolverOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> HermitianMatrix {
    HermitianMatrix::from_upper_fn(d, |i, j| {
        let re = rng.random_range(-1.0..1.0);
        if i == j { Complex64::new(re, 0.0) } else { Complex64::new(re, rng.random_range(-1.0..1.0)) }
    })
}

// min <C, X> s.t. tr X = 1, X ⪰ 0: the optimum is the projector on the bottom
// eigenvector, unique when the smallest eigenvalue is simple.
fn bottom_eigen_problem(c: &HermitianMatrix) -> SdpProblem {
    let mut p = SdpProblem::new(vec![c.dim()], Sense::Minimize);
    p.set_objective(0, c.clone());
    p.add_constraint(vec![BlockTerm { block: 0, matrix: HermitianMatrix::identity(c.dim()) }], 1.0);
    p
}

#[test]
fn scaling_the_objective_keeps_the_optimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = SolverOptions::default();
    for _ in 0..10 {
        let c = random_hermitian(&mut rng, 4);
        let base = solve(&bottom_eigen_problem(&c), &opts).unwrap();
        assert_eq!(base.status, SdpStatus::Optimal);
        assert!((base.objective_value - c.min_eigenvalue().unwrap()).abs() <= 1e-7);
        for scale in [0.01, 3.0, 250.0] {
            let scaled = solve(&bottom_eigen_problem(&c.scale(scale)), &opts).unwrap();
            assert!((scaled.objective_value - scale * base.objective_value).abs() <= 1e-7 * scale.max(1.0));
            let diff = (&scaled.block_values[0] - &base.block_values[0]).max_abs();
            assert!(diff <= 1e-7, "scale {scale}: block values moved by {diff:e}");
        }
    }
}

#[test]
fn optimal_blocks_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let d = rng.random_range(2..=5);
        let c = random_hermitian(&mut rng, d);
        let a = random_hermitian(&mut rng, d);
        let mut p = bottom_eigen_problem(&c);
        // A second constraint keeps the problem feasible at X = I/d.
        let rhs = a.trace() / d as f64;
        p.add_constraint(vec![BlockTerm { block: 0, matrix: a }], rhs);
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.block_values[0].min_eigenvalue().unwrap() >= -1e-8);
    }
}

#[test]
fn contradictory_constraints_are_infeasible() {
    let mut p = SdpProblem::new(vec![2], Sense::Minimize);
    p.set_objective(0, HermitianMatrix::identity(2));
    let id = HermitianMatrix::identity(2);
    p.add_constraint(vec![BlockTerm { block: 0, matrix: id.clone() }], 1.0);
    p.add_constraint(vec![BlockTerm { block: 0, matrix: id }], -1.0);
    let sol = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(sol.status, SdpStatus::Infeasible);
    assert!(sol.certificate.is_some());
}
