//! Witness families and criteria: spin systems, mutually unbiased bases for
//! prime dimensions, and Zhu's incompatibility bound.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{kron_with_cap, ComplexMatrix, HermitianMatrix, LinalgError, C64, DEFAULT_DIM_CAP};
use crate::quantum::{EffectTuple, QuantumError};
use crate::sdp::{self, SdpError, SdpProblem, SdpStatus, Sense, SolverOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} is not prime")]
    NotPrime(usize),
    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("subset {index} is empty or the whole basis")]
    TrivialSubset { index: usize },
    #[error("no outcome with nonzero trace in POVM {0}")]
    DegenerateOutcome(usize),
    #[error("Zhu SDP ended with status {0:?}")]
    SolverStatus(SdpStatus),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, ConstructionError>;

/// Pairwise anti-commuting Hermitian unitaries `F_1..F_g` of dimension `2^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    pub k: usize,
    pub dim: usize,
    pub matrices: Vec<HermitianMatrix>,
}

/// Worst-case deviations from the spin-system relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinDefects {
    pub anticommutation: f64,
    pub unitarity: f64,
    pub trace: f64,
}

impl SpinSystem {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Entrywise sup norms of `F_iF_j + F_jF_i` (i ≠ j), `F_i² − I` and `tr F_i`.
    /// The trace defect is 0 for the 1×1 system.
    pub fn defects(&self) -> SpinDefects {
        let n = self.dim;
        let cm: Vec<ComplexMatrix> = self.matrices.iter().map(ComplexMatrix::from_hermitian).collect();
        let sup = |m: &ComplexMatrix, shift: f64| {
            let mut worst = 0.0f64;
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    let target = if i == j { shift } else { 0.0 };
                    worst = worst.max((m.get(i, j) - C64::new(target, 0.0)).norm());
                }
            }
            worst
        };
        let mut out = SpinDefects { anticommutation: 0.0, unitarity: 0.0, trace: 0.0 };
        for i in 0..cm.len() {
            out.unitarity = out.unitarity.max(sup(&cm[i].matmul(&cm[i]), 1.0));
            if n > 1 {
                out.trace = out.trace.max(self.matrices[i].trace().abs());
            }
            for j in i + 1..cm.len() {
                let ab = cm[i].matmul(&cm[j]);
                let ba = cm[j].matmul(&cm[i]);
                let sum = ComplexMatrix::from_fn(n, n, |r, c| ab.get(r, c) + ba.get(r, c));
                out.anticommutation = out.anticommutation.max(sup(&sum, 0.0));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::quantum::SCHEMA,
            "g": self.matrices.len(),
            "dim": self.dim,
            "k": self.k,
            "matrices": self.matrices,
        })
    }
}

/// Level needed to fit `g` anti-commuting matrices: `⌈(g − 1)/2⌉`.
pub fn spin_level(g: usize) -> usize {
    g.saturating_sub(1).div_ceil(2)
}

/// First `g` matrices of the recursive Pauli construction
/// `F^{(k+1)}_i = σ_X ⊗ F^{(k)}_i`, `F^{(k+1)}_{2k+2} = σ_Y ⊗ I`, `F^{(k+1)}_{2k+3} = σ_Z ⊗ I`.
pub fn spin_system(g: usize) -> Result<SpinSystem> {
    spin_system_with_cap(g, DEFAULT_DIM_CAP)
}

pub fn spin_system_with_cap(g: usize, cap: usize) -> Result<SpinSystem> {
    if g == 0 {
        return Err(ConstructionError::InvalidArgument("a spin system needs g >= 1".into()));
    }
    let k = spin_level(g);
    if k >= usize::BITS as usize - 1 || 1usize << k > cap {
        return Err(ConstructionError::DimensionOverflow { dim: 1usize.checked_shl(k as u32).unwrap_or(usize::MAX), cap });
    }
    let mut level = vec![HermitianMatrix::identity(1)];
    let mut dim = 1;
    for _ in 0..k {
        let id = HermitianMatrix::identity(dim);
        let mut next = Vec::with_capacity(level.len() + 2);
        for f in &level {
            next.push(kron_with_cap(&HermitianMatrix::pauli_x(), f, cap)?);
        }
        next.push(kron_with_cap(&HermitianMatrix::pauli_y(), &id, cap)?);
        next.push(kron_with_cap(&HermitianMatrix::pauli_z(), &id, cap)?);
        level = next;
        dim *= 2;
    }
    level.truncate(g);
    Ok(SpinSystem { k, dim, matrices: level })
}

/// Effects `(I + F_i)/2` of the spin system with `g` matrices.
pub fn extremal_effect_tuple(g: usize) -> Result<EffectTuple> {
    if g < 2 {
        return Err(ConstructionError::InvalidArgument("extremal tuples need g >= 2".into()));
    }
    let sys = spin_system(g)?;
    let id = HermitianMatrix::identity(sys.dim);
    Ok(EffectTuple::new(sys.matrices.iter().map(|f| (&id + f).scale(0.5)).collect())?)
}

/// `(‖Σ a_i conj(F_i) ⊗ F_i‖, Σ a_i)`.
pub fn conjugate_norm_identity_check(a: &[f64], sys: &SpinSystem) -> Result<(f64, f64)> {
    if a.len() > sys.len() {
        return Err(ConstructionError::InvalidArgument(format!(
            "{} coefficients for {} matrices",
            a.len(),
            sys.len()
        )));
    }
    if let Some(v) = a.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(ConstructionError::InvalidArgument(format!("coefficient {v} is not a nonnegative number")));
    }
    let n = sys.dim * sys.dim;
    if n > DEFAULT_DIM_CAP {
        return Err(ConstructionError::DimensionOverflow { dim: n, cap: DEFAULT_DIM_CAP });
    }
    let mut acc = HermitianMatrix::zeros(n);
    for (ai, f) in a.iter().zip(&sys.matrices) {
        if *ai != 0.0 {
            acc += &kron_with_cap(&f.conj_entrywise(), f, DEFAULT_DIM_CAP)?.scale(*ai);
        }
    }
    Ok((acc.op_norm()?, a.iter().sum()))
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|p| p * p <= n).all(|p| !n.is_multiple_of(p))
}

/// `d + 1` mutually unbiased bases of `C^d`; basis vectors are matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct MubFamily {
    pub d: usize,
    pub bases: Vec<ComplexMatrix>,
}

impl MubFamily {
    /// `(max within-basis |⟨x_i, x_j⟩ − δ_ij|, max cross-basis ||⟨x, y⟩|² − 1/d|)`.
    pub fn defects(&self) -> (f64, f64) {
        let inv_d = 1.0 / self.d as f64;
        let (mut ortho, mut unbiased) = (0.0f64, 0.0f64);
        for (a, ba) in self.bases.iter().enumerate() {
            for (b, bb) in self.bases.iter().enumerate().skip(a) {
                let overlaps = ba.adjoint().matmul(bb);
                for i in 0..self.d {
                    for j in 0..self.d {
                        let z = overlaps.get(i, j);
                        if a == b {
                            let target = if i == j { 1.0 } else { 0.0 };
                            ortho = ortho.max((z - C64::new(target, 0.0)).norm());
                        } else {
                            unbiased = unbiased.max((z.norm_sqr() - inv_d).abs());
                        }
                    }
                }
            }
        }
        (ortho, unbiased)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": crate::quantum::SCHEMA,
            "dim": self.d,
            "bases": self.bases.iter().map(ComplexMatrix::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Computational basis plus the `d` bases with vectors `ω^{a j² + b j}/√d`
/// (`a` indexes the basis, `b` the vector). For `d = 2` the phases are fourth
/// roots `i^{a j² + 2 b j}`, giving the Hadamard and circular bases.
pub fn mub_family(d: usize) -> Result<MubFamily> {
    if d > DEFAULT_DIM_CAP {
        return Err(ConstructionError::DimensionOverflow { dim: d, cap: DEFAULT_DIM_CAP });
    }
    if !is_prime(d) {
        return Err(ConstructionError::NotPrime(d));
    }
    let norm = 1.0 / (d as f64).sqrt();
    let (root, scale) = if d == 2 { (4, 2) } else { (d, 1) };
    let mut bases = vec![ComplexMatrix::identity(d)];
    for a in 0..d {
        bases.push(ComplexMatrix::from_fn(d, d, |j, b| {
            let e = (a * j * j + scale * b * j) % root;
            C64::from_polar(norm, 2.0 * PI * e as f64 / root as f64)
        }));
    }
    Ok(MubFamily { d, bases })
}

/// `E_i = Σ_{j ∈ J_i} |x_j⟩⟨x_j|` with `x` the vectors of basis `i`.
pub fn mub_effect_tuple(fam: &MubFamily, subsets: &[Vec<usize>]) -> Result<EffectTuple> {
    if subsets.is_empty() || subsets.len() > fam.bases.len() {
        return Err(ConstructionError::InvalidArgument(format!(
            "need between 1 and {} subsets, got {}",
            fam.bases.len(),
            subsets.len()
        )));
    }
    let d = fam.d;
    let mut effects = Vec::with_capacity(subsets.len());
    for (index, subset) in subsets.iter().enumerate() {
        let mut members = subset.clone();
        members.sort_unstable();
        members.dedup();
        if let Some(j) = members.iter().find(|&&j| j >= d) {
            return Err(ConstructionError::InvalidArgument(format!("vector index {j} out of range for d = {d}")));
        }
        if members.is_empty() || members.len() == d {
            return Err(ConstructionError::TrivialSubset { index });
        }
        let basis = &fam.bases[index];
        let mut e = HermitianMatrix::zeros(d);
        for &j in &members {
            e += &HermitianMatrix::outer(&basis.column(j));
        }
        effects.push(e);
    }
    Ok(EffectTuple::new_clamped(effects)?)
}

/// PSD `d² × d²` Gram-type matrix with its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ZhuGram {
    pub matrix: HermitianMatrix,
    pub trace: f64,
}

/// Outcomes with trace at or below this are skipped.
pub const ZHU_TRACE_FLOOR: f64 = 1e-10;

/// Column-stacking vectorization: entry `(i, j)` goes to index `i + j d`.
pub fn vectorize(a: &HermitianMatrix) -> Vec<C64> {
    let d = a.dim();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for j in 0..d {
        for i in 0..d {
            v[i + j * d] = a.get(i, j);
        }
    }
    v
}

/// `(G, Ḡ)` with `G = Σ |A⟩⟨A|/tr A` and `Ḡ = Σ |A°⟩⟨A°|/tr A` over the
/// outcomes, where `A° = A − (tr A/d) I`.
pub fn zhu_gram(outcomes: &[HermitianMatrix]) -> Result<(ZhuGram, ZhuGram)> {
    zhu_gram_indexed(outcomes, 0)
}

fn zhu_gram_indexed(outcomes: &[HermitianMatrix], povm: usize) -> Result<(ZhuGram, ZhuGram)> {
    let d = outcomes
        .first()
        .ok_or_else(|| ConstructionError::InvalidArgument("empty POVM".into()))?
        .dim();
    if outcomes.iter().any(|a| a.dim() != d) {
        return Err(ConstructionError::InvalidArgument("outcomes of different dimensions".into()));
    }
    let n = d * d;
    let mut g = HermitianMatrix::zeros(n);
    let mut gbar = HermitianMatrix::zeros(n);
    let mut used = 0;
    for (k, a) in outcomes.iter().enumerate() {
        let tr = a.trace();
        if tr <= ZHU_TRACE_FLOOR {
            log::warn!("zhu: skipping outcome {k} of POVM {povm} with trace {tr:e}");
            continue;
        }
        used += 1;
        let traceless = a.add_scaled(-tr / d as f64, &HermitianMatrix::identity(d));
        g += &HermitianMatrix::outer(&vectorize(a)).scale(1.0 / tr);
        gbar += &HermitianMatrix::outer(&vectorize(&traceless)).scale(1.0 / tr);
    }
    if used == 0 {
        return Err(ConstructionError::DegenerateOutcome(povm));
    }
    let (tg, tgbar) = (g.trace(), gbar.trace());
    Ok((ZhuGram { matrix: g, trace: tg }, ZhuGram { matrix: gbar, trace: tgbar }))
}

/// `(G, Ḡ)` for the binary POVM `{E, I − E}`.
pub fn binary_zhu_gram(e: &HermitianMatrix) -> Result<(ZhuGram, ZhuGram)> {
    zhu_gram(&[e.clone(), &HermitianMatrix::identity(e.dim()) - e])
}

#[derive(Debug, Clone)]
pub struct ZhuBound {
    /// `1 + min { tr H : H ⪰ Ḡ_i ∀ i }`. Above `d` certifies incompatibility.
    pub value: f64,
    /// Optimal `H`.
    pub h: HermitianMatrix,
    pub status: SdpStatus,
}

pub fn zhu_bound(povms: &[Vec<HermitianMatrix>]) -> Result<ZhuBound> {
    zhu_bound_with(povms, &SolverOptions::default())
}

/// Solved in the dual form `max Σ ⟨Ḡ_i, Y_i⟩ s.t. Σ Y_i = I, Y_i ⪰ 0`, whose
/// equality multipliers assemble into the optimal `H`.
pub fn zhu_bound_with(povms: &[Vec<HermitianMatrix>], opts: &SolverOptions) -> Result<ZhuBound> {
    if povms.is_empty() {
        return Err(ConstructionError::InvalidArgument("no POVMs given".into()));
    }
    let grams = povms
        .iter()
        .enumerate()
        .map(|(i, p)| zhu_gram_indexed(p, i).map(|(_, gbar)| gbar.matrix))
        .collect::<Result<Vec<_>>>()?;
    let n = grams[0].dim();
    if grams.iter().any(|g| g.dim() != n) {
        return Err(ConstructionError::InvalidArgument("POVMs of different dimensions".into()));
    }
    let mut p = SdpProblem::new(vec![n; grams.len()], Sense::Maximize);
    for (k, g) in grams.iter().enumerate() {
        p.set_objective(k, g.clone());
    }
    let all: Vec<(usize, f64)> = (0..grams.len()).map(|k| (k, 1.0)).collect();
    p.add_hermitian_equality(&all, &[], &HermitianMatrix::identity(n));
    let sol = sdp::solve(&p, opts)?;
    if sol.status != SdpStatus::Optimal {
        return Err(ConstructionError::SolverStatus(sol.status));
    }
    let mut h = HermitianMatrix::zeros(n);
    for (basis, y) in sdp::hermitian_basis(n).iter().zip(&sol.duals) {
        h += &basis.scale(*y);
    }
    Ok(ZhuBound { value: 1.0 + sol.objective_value, h, status: sol.status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::op_norm;
    use crate::quantum::{add_noise, NoiseModel, ScalingVector};

    fn proj(m: HermitianMatrix) -> HermitianMatrix {
        (&HermitianMatrix::identity(m.dim()) + &m).scale(0.5)
    }

    fn binary(e: &HermitianMatrix) -> Vec<HermitianMatrix> {
        vec![e.clone(), &HermitianMatrix::identity(e.dim()) - e]
    }

    fn same(a: &HermitianMatrix, b: &HermitianMatrix) -> bool {
        (a - b).max_abs() == 0.0
    }

    #[test]
    fn spin_examples() {
        let s1 = spin_system(1).unwrap();
        assert_eq!((s1.k, s1.dim), (0, 1));
        assert!(same(&s1.matrices[0], &HermitianMatrix::identity(1)));

        let s3 = spin_system(3).unwrap();
        assert_eq!(s3.dim, 2);
        assert!(same(&s3.matrices[0], &HermitianMatrix::pauli_x()));
        assert!(same(&s3.matrices[1], &HermitianMatrix::pauli_y()));
        assert!(same(&s3.matrices[2], &HermitianMatrix::pauli_z()));

        let (x, y, z, i2) = (
            HermitianMatrix::pauli_x(),
            HermitianMatrix::pauli_y(),
            HermitianMatrix::pauli_z(),
            HermitianMatrix::identity(2),
        );
        let kr = |a: &HermitianMatrix, b: &HermitianMatrix| crate::linalg::kron(a, b).unwrap();
        let expected = [kr(&x, &x), kr(&x, &y), kr(&x, &z), kr(&y, &i2), kr(&z, &i2)];
        let s5 = spin_system(5).unwrap();
        assert_eq!(s5.dim, 4);
        for (a, b) in s5.matrices.iter().zip(&expected) {
            assert!(same(a, b));
        }
        assert!(spin_system(0).is_err());
        assert!(matches!(spin_system_with_cap(9, 8), Err(ConstructionError::DimensionOverflow { .. })));
    }

    #[test]
    fn spin_relations_hold_exactly() {
        for g in 1..=9 {
            let s = spin_system(g).unwrap();
            assert_eq!(s.len(), g);
            assert_eq!(s.dim, 1 << spin_level(g));
            let d = s.defects();
            assert!(d.anticommutation <= 1e-12 && d.unitarity <= 1e-12 && d.trace <= 1e-12, "g={g}: {d:?}");
        }
    }

    #[test]
    fn extremal_tuples() {
        let t2 = extremal_effect_tuple(2).unwrap();
        assert!(same(t2.get(0), &proj(HermitianMatrix::pauli_x())));
        assert!(same(t2.get(1), &proj(HermitianMatrix::pauli_y())));
        let t3 = extremal_effect_tuple(3).unwrap();
        assert!(same(t3.get(2), &proj(HermitianMatrix::pauli_z())));
        for g in 2..=7 {
            for e in extremal_effect_tuple(g).unwrap().effects() {
                for l in e.eig().unwrap().eigenvalues {
                    assert!(l.abs() < 1e-12 || (l - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(extremal_effect_tuple(1).is_err());
    }

    #[test]
    fn norm_identity_examples() {
        let s3 = spin_system(3).unwrap();
        let (l, r) = conjugate_norm_identity_check(&[1.0], &s3).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && r == 1.0);
        let (l, r) = conjugate_norm_identity_check(&[0.0, 0.0, 0.0], &s3).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        let (l, r) = conjugate_norm_identity_check(&[1.0, 1.0, 1.0], &s3).unwrap();
        assert_eq!(r, 3.0);
        // Brute 4x4 oracle: the matrix is real symmetric with spectrum {3, -1, -1, -1}.
        let k = |a: HermitianMatrix| crate::linalg::kron(&a.conj_entrywise(), &a).unwrap();
        let m = &(&k(HermitianMatrix::pauli_x()) + &k(HermitianMatrix::pauli_y())) + &k(HermitianMatrix::pauli_z());
        assert!((op_norm(&m).unwrap() - l).abs() < 1e-12);
        assert!((l - 3.0).abs() < 1e-10);
        assert!(conjugate_norm_identity_check(&[1.0; 4], &s3).is_err());
        assert!(conjugate_norm_identity_check(&[-1.0], &s3).is_err());
    }

    #[test]
    fn mub_overlaps() {
        for d in [2, 3, 5, 7] {
            let fam = mub_family(d).unwrap();
            assert_eq!(fam.bases.len(), d + 1);
            let (ortho, unbiased) = fam.defects();
            assert!(ortho <= 1e-10 && unbiased <= 1e-10, "d={d}: {ortho:e} {unbiased:e}");
        }
        assert_eq!(mub_family(4), Err(ConstructionError::NotPrime(4)));
        assert_eq!(mub_family(1), Err(ConstructionError::NotPrime(1)));
    }

    #[test]
    fn qubit_mubs_are_the_standard_ones() {
        let fam = mub_family(2).unwrap();
        let r = 0.5f64.sqrt();
        let had = &fam.bases[1];
        assert!((had.get(0, 0) - C64::new(r, 0.0)).norm() < 1e-15);
        assert!((had.get(1, 1) - C64::new(-r, 0.0)).norm() < 1e-15);
        let circ = &fam.bases[2];
        assert!((circ.get(1, 0) - C64::new(0.0, r)).norm() < 1e-15);
        assert!((circ.get(1, 1) - C64::new(0.0, -r)).norm() < 1e-15);
    }

    #[test]
    fn mub_effects() {
        let fam = mub_family(2).unwrap();
        let t = mub_effect_tuple(&fam, &[vec![0], vec![0]]).unwrap();
        assert!((t.get(0) - &proj(HermitianMatrix::pauli_z())).max_abs() < 1e-15);
        assert!((t.get(1) - &proj(HermitianMatrix::pauli_x())).max_abs() < 1e-15);

        let fam3 = mub_family(3).unwrap();
        let t = mub_effect_tuple(&fam3, &[vec![0], vec![1, 2], vec![2], vec![0, 1]]).unwrap();
        assert!((t.get(0).trace() - 1.0).abs() < 1e-12);
        assert!((t.get(1).trace() - 2.0).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let lhs = 3.0 * t.get(i).inner(t.get(j));
                    let rhs = t.get(i).trace() * t.get(j).trace();
                    assert!((lhs - rhs).abs() <= 1e-10, "{i},{j}");
                }
            }
        }
        assert!(matches!(mub_effect_tuple(&fam, &[vec![]]), Err(ConstructionError::TrivialSubset { index: 0 })));
        assert!(matches!(
            mub_effect_tuple(&fam, &[vec![0], vec![0, 1]]),
            Err(ConstructionError::TrivialSubset { index: 1 })
        ));
        assert!(mub_effect_tuple(&fam, &vec![vec![0]; 4]).is_err());
        assert!(mub_effect_tuple(&fam, &[vec![5]]).is_err());
    }

    #[test]
    fn gram_traces() {
        let p0 = HermitianMatrix::from_diag(&[1.0, 0.0]);
        let (g, gbar) = binary_zhu_gram(&p0).unwrap();
        assert!((gbar.trace - 1.0).abs() <= 1e-12);
        assert!(g.matrix.is_psd(1e-9).unwrap() && gbar.matrix.is_psd(1e-9).unwrap());
        // G = |p0⟩⟨p0| + |p1⟩⟨p1|: trace 2.
        assert!((g.trace - 2.0).abs() <= 1e-12);

        let half = HermitianMatrix::identity(2).scale(0.5);
        assert_eq!(binary_zhu_gram(&half).unwrap().1.matrix.max_abs(), 0.0);

        for s in [0.0, 0.3, 0.9] {
            let noisy = p0.scale(s).add_scaled(1.0 - s, &half);
            let (_, gb) = binary_zhu_gram(&noisy).unwrap();
            assert!((gb.trace - s * s).abs() <= 1e-12);
            assert!((&gb.matrix - &gbar.matrix.scale(s * s)).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn gram_skips_zero_trace_outcomes() {
        let p0 = HermitianMatrix::from_diag(&[1.0, 0.0]);
        let with_zero = vec![p0.clone(), HermitianMatrix::zeros(2), &HermitianMatrix::identity(2) - &p0];
        assert_eq!(zhu_gram(&with_zero).unwrap(), binary_zhu_gram(&p0).unwrap());
        assert!(matches!(zhu_gram(&[HermitianMatrix::zeros(2)]), Err(ConstructionError::DegenerateOutcome(0))));
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let m = HermitianMatrix::from_real(2, &[1.0, 2.0, 2.0, 3.0]);
        let m = m.add_scaled(1.0, &HermitianMatrix::pauli_y());
        let v = vectorize(&m);
        assert_eq!(v[1], m.get(1, 0));
        assert_eq!(v[2], m.get(0, 1));
    }

    #[test]
    fn single_povm_bound_is_one_plus_trace() {
        let e = HermitianMatrix::from_diag(&[0.9, 0.2]);
        let (_, gbar) = binary_zhu_gram(&e).unwrap();
        let b = zhu_bound(&[binary(&e)]).unwrap();
        assert!((b.value - (1.0 + gbar.trace)).abs() < 1e-7, "{} vs {}", b.value, 1.0 + gbar.trace);
        assert!((b.h.trace() - gbar.trace).abs() < 1e-6);
        assert!((&b.h - &gbar.matrix).is_psd(1e-6).unwrap());
    }

    #[test]
    fn qubit_mub_pair_bound() {
        let z = proj(HermitianMatrix::pauli_z());
        let x = proj(HermitianMatrix::pauli_x());
        let b = zhu_bound(&[binary(&z), binary(&x)]).unwrap();
        assert!((b.value - 3.0).abs() < 1e-7);
        let t = EffectTuple::new(vec![z, x]).unwrap();
        for s in [0.2, 0.5, 0.8] {
            let noisy = add_noise(&t, &ScalingVector::uniform(2, s).unwrap(), &NoiseModel::Balanced).unwrap();
            let povms: Vec<_> = noisy.effects().iter().map(binary).collect();
            let b = zhu_bound(&povms).unwrap();
            assert!((b.value - (1.0 + 2.0 * s * s)).abs() < 1e-7);
        }
    }

    #[test]
    fn bound_grows_with_more_povms() {
        let t = crate::quantum::random_effect_tuple(3, 2, 21);
        let povms: Vec<_> = t.effects().iter().map(binary).collect();
        let mut last = 0.0;
        for k in 1..=3 {
            let v = zhu_bound(&povms[..k]).unwrap().value;
            assert!(v >= last - 1e-7);
            last = v;
        }
    }
}
