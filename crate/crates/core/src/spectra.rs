//! Free spectrahedra: the matrix diamond, the matrix ball, and the bridge
//! between diamond inclusion and joint measurability.
//!
//! The matrix diamond at level `n` is `{X : Σ ε_i X_i ⪯ I_n ∀ ε ∈ {±1}^g}`.
//! For an effect tuple `E`, the diamond is contained in the free spectrahedron
//! of `2E − I` at level 1 iff the `E_i` are effects, and at every level iff they
//! are jointly measurable, so the free inclusion check is the jm SDP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jm::{self, JmError, JmOptions, JmVerdict};
use crate::linalg::{HermitianMatrix, LinalgError, C64, DEFAULT_PSD_TOL};
use crate::quantum::{EffectTuple, ScalingVector, SCHEMA};

/// Default cap on `g` for sign enumeration.
pub const DEFAULT_SIGN_CAP: usize = 20;

/// Boundary tolerance for diamond and ball membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("{g} matrices exceed the sign-enumeration cap of {cap}")]
    TooManyMeasurements { g: usize, cap: usize },
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("matrix {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("a matrix tuple needs at least one matrix")]
    Empty,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SpectraError>;

/// `g` Hermitian matrices of a common size `n` (the level).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    level: usize,
    matrices: Vec<HermitianMatrix>,
}

impl MatrixTuple {
    pub fn new(matrices: Vec<HermitianMatrix>) -> Result<Self> {
        let level = matrices.first().ok_or(SpectraError::Empty)?.dim();
        for (index, m) in matrices.iter().enumerate() {
            if m.dim() != level {
                return Err(SpectraError::DimensionMismatch { index, expected: level, found: m.dim() });
            }
        }
        Ok(Self { level, matrices })
    }

    /// Level-1 tuple of scalars.
    pub fn scalars(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| HermitianMatrix::from_diag(&[v])).collect())
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn g(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[HermitianMatrix] {
        &self.matrices
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix tuples always serialize")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixTupleJson {
    #[serde(default)]
    schema: Option<String>,
    g: usize,
    level: usize,
    matrices: Vec<HermitianMatrix>,
}

impl Serialize for MatrixTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixTupleJson {
            schema: Some(SCHEMA.to_string()),
            g: self.g(),
            level: self.level,
            matrices: self.matrices.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixTuple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = MatrixTupleJson::deserialize(d)?;
        if j.schema.as_deref().is_some_and(|t| t != SCHEMA) {
            return Err(D::Error::custom(format!("unsupported schema tag {:?}", j.schema)));
        }
        if j.g != j.matrices.len() {
            return Err(D::Error::custom(SpectraError::LengthMismatch { expected: j.g, found: j.matrices.len() }));
        }
        let t = MatrixTuple::new(j.matrices).map_err(D::Error::custom)?;
        if t.level != j.level {
            return Err(D::Error::custom(format!("declared level {} but matrices are {}x{}", j.level, t.level, t.level)));
        }
        Ok(t)
    }
}

/// The matrix diamond of size `g`. Sign rows are generated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiamondSpec {
    pub g: usize,
}

impl DiamondSpec {
    pub fn new(g: usize) -> Result<Self> {
        if g == 0 {
            return Err(SpectraError::Empty);
        }
        Ok(Self { g })
    }

    /// Sign vectors with `ε_1 = +1`; the rest are their negatives.
    pub fn half_signs(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..1usize << (self.g - 1)).map(move |mask| {
            std::iter::once(1.0)
                .chain((0..self.g - 1).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }))
                .collect()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Nonnegative inside the set, zero on its boundary.
    pub margin: f64,
}

fn signed_sum(x: &MatrixTuple, eps: &[f64]) -> HermitianMatrix {
    let mut acc = HermitianMatrix::zeros(x.level);
    for (m, e) in x.matrices.iter().zip(eps) {
        acc = acc.add_scaled(*e, m);
    }
    acc
}

/// `max_ε λ_max(Σ ε_i X_i)`; the diamond is its unit sublevel set.
pub fn diamond_gauge(x: &MatrixTuple) -> Result<f64> {
    diamond_gauge_with_cap(x, DEFAULT_SIGN_CAP)
}

fn diamond_gauge_with_cap(x: &MatrixTuple, cap: usize) -> Result<f64> {
    let spec = DiamondSpec::new(x.g())?;
    if spec.g > cap {
        return Err(SpectraError::TooManyMeasurements { g: spec.g, cap });
    }
    let mut worst = f64::NEG_INFINITY;
    for eps in spec.half_signs() {
        let ev = signed_sum(x, &eps).eig()?.eigenvalues;
        // λ_max(−M) = −λ_min(M) covers the opposite sign vector.
        worst = worst.max(ev[ev.len() - 1]).max(-ev[0]);
    }
    Ok(worst)
}

pub fn diamond_membership(x: &MatrixTuple) -> Result<Membership> {
    let gauge = diamond_gauge(x)?;
    Ok(Membership { member: gauge <= 1.0 + MEMBERSHIP_TOL, margin: 1.0 - gauge })
}

/// `I − Σ X_i² ⪰ 0`.
pub fn matrix_ball_membership(x: &MatrixTuple) -> Result<Membership> {
    let mut rest = HermitianMatrix::identity(x.level);
    for m in &x.matrices {
        rest = &rest - &m.square();
    }
    let margin = rest.min_eigenvalue()?;
    Ok(Membership { member: margin >= -MEMBERSHIP_TOL, margin })
}

/// `A_i = 2E_i − I`, the tuple whose free spectrahedron encodes the effects.
pub fn defining_tuple(effects: &[HermitianMatrix]) -> Result<MatrixTuple> {
    MatrixTuple::new(
        effects
            .iter()
            .map(|e| e.scale(2.0).add_scaled(-1.0, &HermitianMatrix::identity(e.dim())))
            .collect(),
    )
}

/// Level-1 inclusion of the diamond in the spectrahedron of `2E − I`: checks
/// the vertices `±e_i`, i.e. `±(2E_i − I) ⪯ I`. Accepts arbitrary Hermitian
/// input so that non-effects can be rejected.
pub fn diamond_level1_inclusion(effects: &[HermitianMatrix]) -> Result<bool> {
    let a = defining_tuple(effects)?;
    let id = HermitianMatrix::identity(a.level);
    for m in a.matrices() {
        if !(&id - m).is_psd(DEFAULT_PSD_TOL)? || !(&id + m).is_psd(DEFAULT_PSD_TOL)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Free inclusion of the diamond in the spectrahedron of `2E − I`, decided by
/// the joint-measurability SDP.
pub fn diamond_free_inclusion(t: &EffectTuple) -> std::result::Result<JmVerdict, JmError> {
    diamond_free_inclusion_with(t, &JmOptions::default())
}

pub fn diamond_free_inclusion_with(t: &EffectTuple, opts: &JmOptions) -> std::result::Result<JmVerdict, JmError> {
    jm::check_compatibility_with(t, opts)
}

pub fn scale_tuple(x: &MatrixTuple, s: &ScalingVector) -> Result<MatrixTuple> {
    if s.len() != x.g() {
        return Err(SpectraError::LengthMismatch { expected: x.g(), found: s.len() });
    }
    Ok(MatrixTuple {
        level: x.level,
        matrices: x.matrices.iter().zip(s.as_slice()).map(|(m, si)| m.scale(*si)).collect(),
    })
}

/// `count` diamond members: Gaussian Hermitian tuples rescaled by a uniform
/// radius over their diamond gauge.
pub fn sample_diamond(g: usize, n: usize, seed: u64, count: usize) -> Result<Vec<MatrixTuple>> {
    if g == 0 || n == 0 {
        return Err(SpectraError::Empty);
    }
    if g > DEFAULT_SIGN_CAP {
        return Err(SpectraError::TooManyMeasurements { g, cap: DEFAULT_SIGN_CAP });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let matrices: Vec<HermitianMatrix> = (0..g)
            .map(|_| {
                HermitianMatrix::from_upper_fn(n, |i, j| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = if i == j { 0.0 } else { rng.sample(StandardNormal) };
                    C64::new(re, im)
                })
            })
            .collect();
        let x = MatrixTuple { level: n, matrices };
        let gauge = diamond_gauge(&x)?;
        let radius: f64 = rng.random_range(0.0..1.0);
        if gauge <= 0.0 {
            continue;
        }
        let s = ScalingVector::uniform(g, radius / gauge).expect("nonnegative scale");
        out.push(scale_tuple(&x, &s)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jm::check_compatibility;
    use crate::quantum::{add_noise, is_effect, random_effect_tuple, NoiseModel};

    #[test]
    fn diamond_examples() {
        let m = diamond_membership(&MatrixTuple::scalars(&[1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(m.member && m.margin.abs() < 1e-15);

        let half = |m: HermitianMatrix| m.scale(0.5);
        let x = MatrixTuple::new(vec![half(HermitianMatrix::pauli_x()), half(HermitianMatrix::pauli_z())]).unwrap();
        let m = diamond_membership(&x).unwrap();
        assert!(m.member);
        assert!((m.margin - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);

        let x = MatrixTuple::new(vec![HermitianMatrix::pauli_x(), HermitianMatrix::pauli_z()]).unwrap();
        let m = diamond_membership(&x).unwrap();
        assert!(!m.member);
        assert!((m.margin - (1.0 - 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn ball_examples() {
        let x = MatrixTuple::new(vec![HermitianMatrix::pauli_x()]).unwrap();
        let m = matrix_ball_membership(&x).unwrap();
        assert!(m.member && m.margin.abs() < 1e-15);
        let r = 0.5f64.sqrt();
        let x = MatrixTuple::new(vec![HermitianMatrix::pauli_x().scale(r), HermitianMatrix::pauli_y().scale(r)]).unwrap();
        let m = matrix_ball_membership(&x).unwrap();
        assert!(m.member && m.margin.abs() < 1e-12);
        let x = MatrixTuple::new(vec![HermitianMatrix::pauli_x(), HermitianMatrix::pauli_z()]).unwrap();
        assert!(!matrix_ball_membership(&x).unwrap().member);
    }

    #[test]
    fn level_one_diamond_is_the_l1_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let g = rng.random_range(1..5);
            let x: Vec<f64> = (0..g).map(|_| rng.random_range(-0.8..0.8)).collect();
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            let m = diamond_membership(&MatrixTuple::scalars(&x).unwrap()).unwrap();
            assert_eq!(m.member, l1 <= 1.0 + 1e-12, "{x:?}");
            assert!((m.margin - (1.0 - l1)).abs() < 1e-12);
        }
    }

    #[test]
    fn level1_inclusion_examples() {
        let t = random_effect_tuple(3, 3, 4);
        assert!(diamond_level1_inclusion(t.effects()).unwrap());
        assert!(!diamond_level1_inclusion(&[HermitianMatrix::identity(2).scale(2.0)]).unwrap());
        assert!(!diamond_level1_inclusion(&[HermitianMatrix::identity(2).scale(-0.1)]).unwrap());
    }

    #[test]
    fn level1_inclusion_matches_effect_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rejected = 0;
        for _ in 0..1000 {
            let d = rng.random_range(1..4);
            let g = rng.random_range(1..4);
            let ms: Vec<HermitianMatrix> = (0..g)
                .map(|_| {
                    HermitianMatrix::from_upper_fn(d, |i, j| {
                        let re = rng.random_range(-0.3..0.9);
                        C64::new(if i == j { re } else { re * 0.3 }, if i == j { 0.0 } else { rng.random_range(-0.2..0.2) })
                    })
                })
                .collect();
            let direct = ms.iter().all(|m| is_effect(m).unwrap());
            rejected += usize::from(!direct);
            assert_eq!(diamond_level1_inclusion(&ms).unwrap(), direct);
        }
        assert!(rejected > 100 && rejected < 900, "{rejected}");
    }

    #[test]
    fn free_inclusion_examples() {
        let proj = |m: HermitianMatrix| (&HermitianMatrix::identity(2) + &m).scale(0.5);
        let t = EffectTuple::new(vec![proj(HermitianMatrix::pauli_x()), proj(HermitianMatrix::pauli_z())]).unwrap();
        assert_eq!(diamond_free_inclusion(&t).unwrap().status, jm::Compatibility::Incompatible);
        let single = random_effect_tuple(1, 3, 8);
        assert_eq!(diamond_free_inclusion(&single).unwrap().status, jm::Compatibility::Compatible);
        let r = 0.5f64.sqrt() * 0.99;
        let inside = add_noise(&t, &ScalingVector::uniform(2, r).unwrap(), &NoiseModel::Balanced).unwrap();
        let v = diamond_free_inclusion(&inside).unwrap();
        assert_eq!(v.status, jm::Compatibility::Compatible);
        assert_eq!(v.status, check_compatibility(&inside).unwrap().status);
    }

    #[test]
    fn scaling_examples() {
        let x = MatrixTuple::new(vec![HermitianMatrix::pauli_x(), HermitianMatrix::pauli_y()]).unwrap();
        assert_eq!(scale_tuple(&x, &ScalingVector::uniform(2, 1.0).unwrap()).unwrap(), x);
        let zero = scale_tuple(&x, &ScalingVector::uniform(2, 0.0).unwrap()).unwrap();
        assert!(zero.matrices().iter().all(|m| m.max_abs() == 0.0));
        assert!(scale_tuple(&x, &ScalingVector::uniform(3, 1.0).unwrap()).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in sample_diamond(3, 3, 5, 200).unwrap() {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
            let y = scale_tuple(&x, &ScalingVector::new(s).unwrap()).unwrap();
            assert!(diamond_membership(&y).unwrap().member);
        }
    }

    #[test]
    fn samples_are_reproducible_members_of_the_ball() {
        let a = sample_diamond(3, 2, 9, 50).unwrap();
        assert_eq!(a, sample_diamond(3, 2, 9, 50).unwrap());
        for x in &a {
            let d = diamond_membership(x).unwrap();
            assert!(d.member && d.margin >= -1e-12);
            assert!(matrix_ball_membership(x).unwrap().margin >= -1e-9);
        }
    }

    #[test]
    fn json_round_trip() {
        let x = sample_diamond(2, 3, 1, 1).unwrap().remove(0);
        let text = x.to_json();
        assert!(text.contains(r#""level":3"#));
        assert_eq!(MatrixTuple::from_json(&text).unwrap(), x);
    }

    #[test]
    fn sign_cap() {
        let x = MatrixTuple::scalars(&[0.0; 21]).unwrap();
        assert!(matches!(diamond_membership(&x), Err(SpectraError::TooManyMeasurements { g: 21, .. })));
    }
}
