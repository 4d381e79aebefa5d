//! Small dense semidefinite programs in standard primal form.
//!
//! ```text
//! minimize / maximize   Σ_k ⟨C_k, X_k⟩
//! subject to            Σ_k ⟨A_jk, X_k⟩ = b_j      j = 1..m
//!                       X_k ⪰ 0 (Hermitian)
//! ```
//!
//! Problems are stated over Hermitian blocks, mapped to real symmetric blocks by
//! [`realify`], and solved by a primal-dual interior-point method on the
//! homogeneous self-dual embedding (see [`ipm`]), so infeasible and unbounded
//! problems terminate with certificates instead of running out of iterations.
//!
//! Dual conventions: for a minimization the duals satisfy `C − Σ y_j A_j ⪰ 0`
//! with dual objective `b'y`; for a maximization, `Σ y_j A_j − C ⪰ 0`.

mod ipm;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{HermitianMatrix, C64};

pub use ipm::IterationRecord;

/// Cap on `Σ_k (2 d_k)²` real variable entries.
pub const DEFAULT_VARIABLE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// One block's share of a linear functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTerm {
    pub block: usize,
    pub matrix: HermitianMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<BlockTerm>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    /// Block dimensions.
    pub blocks: Vec<usize>,
    /// Cost matrices; blocks without a term have zero cost.
    pub objective: Vec<BlockTerm>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variable_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, variable_cap: DEFAULT_VARIABLE_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// `max_j |⟨A_j, X⟩ − b_j| / (1 + max_j |b_j|)`.
    pub primal_eq: f64,
    /// Smallest eigenvalue over all blocks of `X`.
    pub min_block_eig: f64,
    /// `|p − d| / (1 + |p| + |d|)` for primal and dual objectives `p`, `d`.
    pub duality_gap: f64,
}

/// Proof that a problem has no solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// `y` with `b'y = 1` and `−Σ y_j A_j ⪰ 0` up to `dual_residual`
    /// (the most negative eigenvalue of `−Σ y_j A_j`, clipped at 0).
    PrimalInfeasible { y: Vec<f64>, dual_residual: f64 },
    /// `X ⪰ 0` with `⟨C, X⟩ = −1` (minimization sense) and `‖A(X)‖_∞ = primal_residual`.
    DualInfeasible { x: Vec<HermitianMatrix>, primal_residual: f64 },
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective_value: f64,
    pub block_values: Vec<HermitianMatrix>,
    pub duals: Vec<f64>,
    pub residuals: Residuals,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    /// Indices of constraints dropped as linearly dependent.
    pub dropped_constraints: Vec<usize>,
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("problem too large: {entries} real variable entries exceeds cap {cap}")]
    TooLarge { entries: usize, cap: usize },
    #[error("numerical breakdown at iteration {iteration}: {reason}")]
    NumericalBreakdown { iteration: usize, reason: String, residuals: Residuals },
}

pub type Result<T> = std::result::Result<T, SdpError>;

impl SdpProblem {
    pub fn new(blocks: Vec<usize>, sense: Sense) -> Self {
        Self { blocks, objective: Vec::new(), constraints: Vec::new(), sense }
    }

    pub fn set_objective(&mut self, block: usize, matrix: HermitianMatrix) {
        self.objective.retain(|t| t.block != block);
        self.objective.push(BlockTerm { block, matrix });
    }

    pub fn add_constraint(&mut self, terms: Vec<BlockTerm>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    /// Adds the `d²` real equalities expressing the Hermitian matrix identity
    /// `Σ c_k X_k + Σ x_l D_l = B`, where `matrix_terms` holds `(k, c_k)` for
    /// `d × d` blocks and `scalar_terms` holds `(l, D_l)` for `1 × 1` blocks.
    pub fn add_hermitian_equality(
        &mut self,
        matrix_terms: &[(usize, f64)],
        scalar_terms: &[(usize, HermitianMatrix)],
        rhs: &HermitianMatrix,
    ) {
        let d = rhs.dim();
        for basis in hermitian_basis(d) {
            let mut terms: Vec<BlockTerm> = matrix_terms
                .iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|&(k, c)| BlockTerm { block: k, matrix: basis.scale(c) })
                .collect();
            for (l, dl) in scalar_terms {
                let coef = basis.inner(dl);
                if coef != 0.0 {
                    terms.push(BlockTerm { block: *l, matrix: HermitianMatrix::from_diag(&[coef]) });
                }
            }
            self.add_constraint(terms, basis.inner(rhs));
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.contains(&0) {
            return Err(SdpError::InvalidProblem("zero-dimensional block".into()));
        }
        let check = |t: &BlockTerm, what: &str| -> Result<()> {
            let Some(&d) = self.blocks.get(t.block) else {
                return Err(SdpError::InvalidProblem(format!("{what} references missing block {}", t.block)));
            };
            if t.matrix.dim() != d {
                return Err(SdpError::InvalidProblem(format!(
                    "{what} matrix for block {} has dim {}, block has dim {d}",
                    t.block,
                    t.matrix.dim()
                )));
            }
            if t.matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(SdpError::InvalidProblem(format!("{what} has non-finite entries")));
            }
            Ok(())
        };
        for t in &self.objective {
            check(t, "objective")?;
        }
        for (j, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(SdpError::InvalidProblem(format!("constraint {j} has non-finite rhs")));
            }
            for t in &c.terms {
                check(t, &format!("constraint {j}"))?;
            }
        }
        Ok(())
    }

    /// Evaluates `Σ_k ⟨C_k, X_k⟩`.
    pub fn objective_at(&self, x: &[HermitianMatrix]) -> f64 {
        self.objective.iter().map(|t| t.matrix.inner(&x[t.block])).sum()
    }

    /// Evaluates `(⟨A_j, X⟩)_j`.
    pub fn constraint_values(&self, x: &[HermitianMatrix]) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| c.terms.iter().map(|t| t.matrix.inner(&x[t.block])).sum())
            .collect()
    }

    /// `Σ_j y_j A_j` per block.
    pub fn adjoint_apply(&self, y: &[f64]) -> Vec<HermitianMatrix> {
        let mut out: Vec<HermitianMatrix> = self.blocks.iter().map(|&d| HermitianMatrix::zeros(d)).collect();
        for (c, &yj) in self.constraints.iter().zip(y) {
            if yj == 0.0 {
                continue;
            }
            for t in &c.terms {
                out[t.block] = out[t.block].add_scaled(yj, &t.matrix);
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Orthogonal basis of `d × d` Hermitian matrices whose functionals read
/// `X_aa`, `Re X_ab` and `Im X_ab` (`a < b`) through `⟨·, X⟩`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        out.push(HermitianMatrix::from_upper_fn(d, |i, j| {
            if i == a && j == a {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }));
    }
    for a in 0..d {
        for b in (a + 1)..d {
            out.push(HermitianMatrix::from_upper_fn(d, |i, j| {
                if i == a && j == b {
                    C64::new(0.5, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
            out.push(HermitianMatrix::from_upper_fn(d, |i, j| {
                if i == a && j == b {
                    C64::new(0.0, 0.5)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
        }
    }
    out
}

/// Real symmetric embedding `[[Re M, −Im M], [Im M, Re M]]`.
///
/// The spectrum of the embedding is that of `M` with every multiplicity doubled,
/// and `⟨embed(A), embed(X)⟩ = 2 ⟨A, X⟩`.
pub fn embed(m: &HermitianMatrix) -> DMatrix<f64> {
    let d = m.dim();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = m.get(i, j);
            out[(i, j)] = z.re;
            out[(i + d, j + d)] = z.re;
            out[(i, j + d)] = -z.im;
            out[(i + d, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed`] after projecting onto the embedding's image.
pub fn unembed(r: &DMatrix<f64>) -> HermitianMatrix {
    let d = r.nrows() / 2;
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let re = 0.5 * (r[(i, j)] + r[(i + d, j + d)]);
            let im = 0.5 * (r[(i + d, j)] - r[(i, j + d)]);
            data.push(C64::new(re, im));
        }
    }
    HermitianMatrix::from_raw_symmetrize(d, data)
}

/// Internal real symmetric problem, always a minimization.
///
/// Bookkeeping: every Hermitian block of dimension `d` becomes a real block of
/// dimension `2d`; constraint right-hand sides are doubled and costs embedded,
/// so the real objective is twice the complex one (and negated when the
/// complex problem is a maximization). Dual vectors coincide.
#[derive(Debug, Clone)]
pub struct RealProblem {
    pub blocks: Vec<usize>,
    pub cost: Vec<DMatrix<f64>>,
    pub constraints: Vec<Vec<(usize, DMatrix<f64>)>>,
    pub rhs: Vec<f64>,
    /// `+1` for minimization, `−1` for maximization.
    pub sign: f64,
}

pub fn realify(p: &SdpProblem) -> RealProblem {
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let blocks: Vec<usize> = p.blocks.iter().map(|&d| 2 * d).collect();
    let mut cost: Vec<DMatrix<f64>> = blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    for t in &p.objective {
        cost[t.block] += embed(&t.matrix) * sign;
    }
    let mut constraints = Vec::with_capacity(p.constraints.len());
    let mut rhs = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let mut merged: Vec<(usize, DMatrix<f64>)> = Vec::new();
        for t in &c.terms {
            let e = embed(&t.matrix);
            match merged.iter_mut().find(|(k, _)| *k == t.block) {
                Some((_, acc)) => *acc += e,
                None => merged.push((t.block, e)),
            }
        }
        constraints.push(merged);
        rhs.push(2.0 * c.rhs);
    }
    RealProblem { blocks, cost, constraints, rhs, sign }
}

/// Solves `p`. Infeasibility and unboundedness are reported through
/// [`SdpSolution::status`] with a certificate; `Err` is reserved for malformed
/// input and numerical breakdown.
pub fn solve(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let entries: usize = p.blocks.iter().map(|&d| 4 * d * d).sum();
    if entries > opts.variable_cap {
        return Err(SdpError::TooLarge { entries, cap: opts.variable_cap });
    }
    let real = realify(p);
    let out = ipm::solve_real(&real, opts).map_err(|e| match e {
        ipm::IpmError::Breakdown { iteration, reason } => {
            SdpError::NumericalBreakdown { iteration, reason, residuals: Residuals::default() }
        }
    })?;

    let block_values: Vec<HermitianMatrix> = out.x.iter().map(unembed).collect();
    let b_max = p.constraints.iter().fold(0.0f64, |m, c| m.max(c.rhs.abs()));
    let values = p.constraint_values(&block_values);
    let primal_eq = values
        .iter()
        .zip(&p.constraints)
        .fold(0.0f64, |m, (v, c)| m.max((v - c.rhs).abs()))
        / (1.0 + b_max);
    let min_block_eig = block_values
        .iter()
        .map(|x| x.min_eigenvalue().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    let objective_value = p.objective_at(&block_values);
    // Real duals are for the sign-adjusted minimization.
    let duals: Vec<f64> = out.y.iter().map(|&v| v * real.sign).collect();
    let dual_objective: f64 = duals.iter().zip(&p.constraints).map(|(y, c)| y * c.rhs).sum();
    let duality_gap =
        (objective_value - dual_objective).abs() / (1.0 + objective_value.abs() + dual_objective.abs());

    let certificate = match out.status {
        SdpStatus::Infeasible => {
            let y: Vec<f64> = out.y.clone();
            let by: f64 = y.iter().zip(&p.constraints).map(|(y, c)| y * c.rhs).sum();
            let y: Vec<f64> = if by != 0.0 { y.iter().map(|v| v / by).collect() } else { y };
            let dual_residual = p
                .adjoint_apply(&y)
                .iter()
                .map(|m| (-(-m).min_eigenvalue().unwrap_or(f64::NEG_INFINITY)).max(0.0))
                .fold(0.0f64, f64::max);
            Some(Certificate::PrimalInfeasible { y, dual_residual })
        }
        SdpStatus::Unbounded => {
            let x: Vec<HermitianMatrix> = out.x.iter().map(unembed).collect();
            let mut cx: f64 = p.objective_at(&x);
            if p.sense == Sense::Maximize {
                cx = -cx;
            }
            let x: Vec<HermitianMatrix> = if cx < 0.0 { x.iter().map(|m| m.scale(-1.0 / cx)).collect() } else { x };
            let primal_residual = p.constraint_values(&x).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Some(Certificate::DualInfeasible { x, primal_residual })
        }
        _ => None,
    };

    Ok(SdpSolution {
        status: out.status,
        objective_value,
        block_values,
        duals,
        residuals: Residuals { primal_eq, min_block_eig, duality_gap },
        certificate,
        iterations: out.iterations,
        dropped_constraints: out.dropped,
        history: out.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> HermitianMatrix {
        HermitianMatrix::from_diag(&[x])
    }

    #[test]
    fn one_by_one_minimization() {
        let mut p = SdpProblem::new(vec![1], Sense::Minimize);
        p.set_objective(0, scalar(1.0));
        p.add_constraint(vec![BlockTerm { block: 0, matrix: scalar(1.0) }], 1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-8);
        assert!((s.block_values[0].get(0, 0).re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn maximize_t_with_identity_minus_t_sigma_z() {
        // Blocks: X (2x2), t (1x1). Constraint X + t·σ_Z = I entrywise.
        let mut p = SdpProblem::new(vec![2, 1], Sense::Maximize);
        p.set_objective(1, scalar(1.0));
        p.add_hermitian_equality(&[(0, 1.0)], &[(1, HermitianMatrix::pauli_z())], &HermitianMatrix::identity(2));
        assert_eq!(p.constraints.len(), 4);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-7, "{}", s.objective_value);
        assert!(s.residuals.primal_eq <= 1e-8);
        assert!(s.residuals.min_block_eig >= -1e-8);
        assert!(s.residuals.duality_gap <= 1e-7);
    }

    #[test]
    fn detects_primal_infeasibility() {
        // x ⪰ 0, x = -1.
        let mut p = SdpProblem::new(vec![1], Sense::Minimize);
        p.add_constraint(vec![BlockTerm { block: 0, matrix: scalar(1.0) }], -1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
        match s.certificate {
            Some(Certificate::PrimalInfeasible { y, dual_residual }) => {
                assert!((-y[0] - 1.0).abs() < 1e-9);
                assert!(dual_residual <= 1e-8);
            }
            other => panic!("unexpected certificate {other:?}"),
        }
    }

    #[test]
    fn detects_unboundedness() {
        // minimize -x11 with x22 = 1 on a 2x2 block (x12 free to grow with x11).
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        p.set_objective(0, HermitianMatrix::from_diag(&[-1.0, 0.0]));
        p.add_constraint(vec![BlockTerm { block: 0, matrix: HermitianMatrix::from_diag(&[0.0, 1.0]) }], 1.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
        assert!(matches!(s.certificate, Some(Certificate::DualInfeasible { .. })));
    }

    #[test]
    fn drops_dependent_rows() {
        // x = 1 stated twice, plus 2x = 2.
        let mut p = SdpProblem::new(vec![1], Sense::Minimize);
        p.set_objective(0, scalar(1.0));
        for (c, r) in [(1.0, 1.0), (1.0, 1.0), (2.0, 2.0)] {
            p.add_constraint(vec![BlockTerm { block: 0, matrix: scalar(c) }], r);
        }
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_eq!(s.dropped_constraints.len(), 2);
        assert!((s.objective_value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inconsistent_dependent_rows_are_infeasible() {
        let mut p = SdpProblem::new(vec![1], Sense::Minimize);
        p.add_constraint(vec![BlockTerm { block: 0, matrix: scalar(1.0) }], 1.0);
        p.add_constraint(vec![BlockTerm { block: 0, matrix: scalar(1.0) }], 2.0);
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn realify_sigma_y() {
        let e = embed(&HermitianMatrix::pauli_y());
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, -1.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn realify_real_input_is_block_diagonal_copy() {
        let m = HermitianMatrix::from_real(2, &[1.0, 2.0, 2.0, 3.0]);
        let e = embed(&m);
        let expected = DMatrix::from_row_slice(4, 4, &[
            1.0, 2.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0, 3.0,
        ]);
        assert_eq!(e, expected);
        assert_eq!(unembed(&e), m);
    }

    #[test]
    fn realify_doubles_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = HermitianMatrix::from_upper_fn(3, |i, j| {
            if i == j {
                C64::new(rng.random_range(-1.0..1.0), 0.0)
            } else {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }
        });
        let ev = eigenvalues(&m).unwrap();
        let re = embed(&m).symmetric_eigen();
        let mut got: Vec<f64> = re.eigenvalues.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = ev.iter().flat_map(|&x| [x, x]).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn realified_objective_is_doubled() {
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        p.set_objective(0, HermitianMatrix::pauli_y());
        let r = realify(&p);
        let x = HermitianMatrix::from_upper_fn(2, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.2, 0.3) });
        let real_obj = r.cost[0].dot(&embed(&x));
        assert!((real_obj - 2.0 * p.objective_at(&[x])).abs() < 1e-14);
    }

    #[test]
    fn json_dump_round_trip() {
        let mut p = SdpProblem::new(vec![2, 1], Sense::Maximize);
        p.set_objective(1, scalar(1.0));
        p.add_hermitian_equality(&[(0, 1.0)], &[(1, HermitianMatrix::pauli_z())], &HermitianMatrix::identity(2));
        let back = SdpProblem::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn validate_rejects_bad_blocks() {
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        p.set_objective(0, scalar(1.0));
        assert!(matches!(solve(&p, &SolverOptions::default()), Err(SdpError::InvalidProblem(_))));
        let mut p = SdpProblem::new(vec![1], Sense::Minimize);
        p.add_constraint(vec![BlockTerm { block: 3, matrix: scalar(1.0) }], 1.0);
        assert!(matches!(solve(&p, &SolverOptions::default()), Err(SdpError::InvalidProblem(_))));
    }

    #[test]
    fn variable_cap_enforced() {
        let p = SdpProblem::new(vec![10], Sense::Minimize);
        let opts = SolverOptions { variable_cap: 100, ..Default::default() };
        assert!(matches!(solve(&p, &opts), Err(SdpError::TooLarge { entries: 400, cap: 100 })));
    }
}
