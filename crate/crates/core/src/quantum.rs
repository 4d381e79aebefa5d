//! Effects, binary measurement tuples, noise models and the embeddings and
//! compressions used to move tuples between dimensions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, HermitianMatrix, LinalgError, C64, DEFAULT_PSD_TOL};

/// Schema tag carried by every JSON document the crate writes.
pub const SCHEMA: &str = "specjm/1";

/// Accepted `‖V*V − I‖_∞` for [`compress`].
pub const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("an effect tuple needs at least one effect")]
    Empty,
    #[error("effect {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("effect {index} is not between 0 and I (spectrum [{min_eig:.3e}, {max_eig:.3e}])")]
    NotEffect { index: usize, min_eig: f64, max_eig: f64 },
    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("scaling component {index} = {value} is outside the allowed range")]
    OutOfRange { index: usize, value: f64 },
    #[error("scaling component {0} is zero")]
    ZeroScaling(usize),
    #[error("matrix is not an isometry (‖V*V − I‖ = {0:e})")]
    NotIsometry(f64),
    #[error("isometry has {rows} rows but the effects have dimension {dim}")]
    IsometryShape { rows: usize, dim: usize },
    #[error("unsupported schema tag {0:?}")]
    Schema(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Spectrum of `m`, as (min, max).
fn spectral_range(m: &HermitianMatrix) -> Result<(f64, f64)> {
    let ev = m.eig()?.eigenvalues;
    Ok((ev[0], ev[ev.len() - 1]))
}

/// Checks `0 ⪯ E ⪯ I` with the shared relative PSD tolerance.
pub fn is_effect(m: &HermitianMatrix) -> Result<bool> {
    let (lo, hi) = spectral_range(m)?;
    let slack = DEFAULT_PSD_TOL * m.max_abs().max(1.0);
    Ok(lo >= -slack && hi <= 1.0 + slack)
}

/// A single effect `0 ⪯ E ⪯ I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect(HermitianMatrix);

impl Effect {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        Self::validated(m, 0)
    }

    fn validated(m: HermitianMatrix, index: usize) -> Result<Self> {
        if is_effect(&m)? {
            Ok(Self(m))
        } else {
            let (min_eig, max_eig) = spectral_range(&m)?;
            Err(QuantumError::NotEffect { index, min_eig, max_eig })
        }
    }

    /// Projects the spectrum onto `[0, 1]`.
    pub fn clamped(m: &HermitianMatrix) -> Result<Self> {
        Ok(Self(m.eig()?.map_spectrum(|l| l.clamp(0.0, 1.0))))
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.0
    }
}

/// Effects `E_1..E_g` of a common dimension `d`, each describing the binary
/// measurement `{E_i, I − E_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectTuple {
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl EffectTuple {
    pub fn new(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let t = Self::shape_checked(effects)?;
        for (i, e) in t.effects.iter().enumerate() {
            if !is_effect(e)? {
                let (min_eig, max_eig) = spectral_range(e)?;
                return Err(QuantumError::NotEffect { index: i, min_eig, max_eig });
            }
        }
        Ok(t)
    }

    /// Like [`EffectTuple::new`] but projects every spectrum onto `[0, 1]`
    /// instead of rejecting small violations.
    pub fn new_clamped(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let t = Self::shape_checked(effects)?;
        let effects = t
            .effects
            .iter()
            .map(|e| Effect::clamped(e).map(Effect::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim: t.dim, effects })
    }

    fn shape_checked(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let dim = effects.first().ok_or(QuantumError::Empty)?.dim();
        for (index, e) in effects.iter().enumerate() {
            if e.dim() != dim {
                return Err(QuantumError::DimensionMismatch { index, expected: dim, found: e.dim() });
            }
        }
        Ok(Self { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of measurements `g`.
    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn get(&self, i: usize) -> &HermitianMatrix {
        &self.effects[i]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("effect tuples always serialize")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

#[derive(Serialize, Deserialize)]
struct EffectTupleJson {
    #[serde(default)]
    schema: Option<String>,
    g: usize,
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl Serialize for EffectTuple {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EffectTupleJson {
            schema: Some(SCHEMA.to_string()),
            g: self.len(),
            dim: self.dim,
            effects: self.effects.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EffectTuple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let j = EffectTupleJson::deserialize(d)?;
        if let Some(tag) = j.schema.as_deref() {
            if tag != SCHEMA {
                return Err(D::Error::custom(QuantumError::Schema(tag.to_string())));
            }
        }
        if j.g != j.effects.len() {
            return Err(D::Error::custom(QuantumError::LengthMismatch { expected: j.g, found: j.effects.len() }));
        }
        let t = EffectTuple::new(j.effects).map_err(D::Error::custom)?;
        if t.dim != j.dim {
            return Err(D::Error::custom(QuantumError::DimensionMismatch { index: 0, expected: j.dim, found: t.dim }));
        }
        Ok(t)
    }
}

/// Nonnegative scaling vector `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScalingVector(Vec<f64>);

impl ScalingVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        for (index, &value) in s.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(QuantumError::OutOfRange { index, value });
            }
        }
        Ok(Self(s))
    }

    pub fn uniform(g: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; g])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * t).collect())
    }

    /// Errors unless every component lies in `[0, 1]`.
    pub fn check_unit_cube(&self) -> Result<()> {
        match self.0.iter().position(|&v| v > 1.0) {
            Some(index) => Err(QuantumError::OutOfRange { index, value: self.0[index] }),
            None => Ok(()),
        }
    }

    /// Parses a comma-separated list such as `"1,0.5"`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let values = text
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(values).map_err(|e| e.to_string())
    }
}

impl TryFrom<Vec<f64>> for ScalingVector {
    type Error = QuantumError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScalingVector> for Vec<f64> {
    fn from(s: ScalingVector) -> Self {
        s.0
    }
}

/// What an effect is mixed with when noise is added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// `I/2`.
    Balanced,
    /// `tr[E]/d · I`.
    Linear,
    /// `a_i · I`, one coefficient in `[0, 1]` per effect.
    General(Vec<f64>),
}

impl NoiseModel {
    /// The trivial effect mixed into `e`, the `i`-th effect of the tuple.
    pub fn noise_operator(&self, e: &HermitianMatrix, i: usize) -> HermitianMatrix {
        let d = e.dim();
        let c = match self {
            NoiseModel::Balanced => 0.5,
            NoiseModel::Linear => e.trace() / d as f64,
            NoiseModel::General(a) => a[i],
        };
        HermitianMatrix::identity(d).scale(c)
    }

    fn validate(&self, g: usize) -> Result<()> {
        if let NoiseModel::General(a) = self {
            if a.len() != g {
                return Err(QuantumError::LengthMismatch { expected: g, found: a.len() });
            }
            if let Some(index) = a.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(QuantumError::OutOfRange { index, value: a[index] });
            }
        }
        Ok(())
    }
}

/// `E'_i = s_i E_i + (1 − s_i) N_i` with `N_i` given by `model`.
pub fn add_noise(t: &EffectTuple, s: &ScalingVector, model: &NoiseModel) -> Result<EffectTuple> {
    if s.len() != t.len() {
        return Err(QuantumError::LengthMismatch { expected: t.len(), found: s.len() });
    }
    s.check_unit_cube()?;
    model.validate(t.len())?;
    let effects = t
        .effects
        .iter()
        .zip(s.as_slice())
        .enumerate()
        .map(|(i, (e, &si))| e.scale(si).add_scaled(1.0 - si, &model.noise_operator(e, i)))
        .collect();
    Ok(EffectTuple { dim: t.dim, effects })
}

/// `E_i ↦ E_i ⊕ 0`.
pub fn embed_zero_pad(t: &EffectTuple) -> EffectTuple {
    let zero = HermitianMatrix::zeros(1);
    EffectTuple { dim: t.dim + 1, effects: t.effects.iter().map(|e| e.direct_sum(&zero)).collect() }
}

/// `E_i ↦ E_i ⊕ (I − E_i)`; every output effect has trace exactly `d`.
pub fn embed_unbias(t: &EffectTuple) -> EffectTuple {
    let id = HermitianMatrix::identity(t.dim);
    EffectTuple { dim: 2 * t.dim, effects: t.effects.iter().map(|e| e.direct_sum(&(&id - e))).collect() }
}

/// `E_i ↦ V* E_i V` for an isometry `V: C^k → C^d`.
pub fn compress(t: &EffectTuple, v: &ComplexMatrix) -> Result<EffectTuple> {
    if v.rows() != t.dim {
        return Err(QuantumError::IsometryShape { rows: v.rows(), dim: t.dim });
    }
    let defect = v.isometry_defect();
    if !(defect <= ISOMETRY_TOL) {
        return Err(QuantumError::NotIsometry(defect));
    }
    Ok(EffectTuple { dim: v.cols(), effects: t.effects.iter().map(|e| e.congruence(v)).collect() })
}

fn ginibre(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Q factor of a thin QR by modified Gram–Schmidt, with `R` given a positive
/// diagonal so that Ginibre input yields Haar-distributed columns.
fn orthonormal_columns(a: &ComplexMatrix) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..a.cols()).map(|j| a.column(j)).collect();
    for j in 0..cols.len() {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let q = &done[k];
            let r: C64 = q.iter().zip(rest[0].iter()).map(|(x, y)| x.conj() * y).sum();
            for (y, x) in rest[0].iter_mut().zip(q) {
                *y -= r * x;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    ComplexMatrix::from_columns(&cols)
}

fn random_isometry_with(rng: &mut ChaCha8Rng, d: usize, k: usize) -> ComplexMatrix {
    orthonormal_columns(&ginibre(rng, d, k))
}

/// Haar-random isometry `C^k → C^d` (a `d × k` matrix), seeded.
pub fn random_isometry(d: usize, k: usize, seed: u64) -> ComplexMatrix {
    assert!(k <= d, "an isometry C^{k} -> C^{d} needs k <= d");
    random_isometry_with(&mut ChaCha8Rng::seed_from_u64(seed), d, k)
}

/// `g` effects `U diag(λ) U*` with `U` Haar-random and `λ` uniform on `[0,1]^d`.
pub fn random_effect_tuple(g: usize, d: usize, seed: u64) -> EffectTuple {
    assert!(g >= 1 && d >= 1, "random_effect_tuple needs g, d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let effects = (0..g)
        .map(|_| {
            let u = random_isometry_with(&mut rng, d, d);
            let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
            HermitianMatrix::from_diag(&lambda).congruence(&u.adjoint())
        })
        .collect();
    EffectTuple { dim: d, effects }
}

/// Checks that each `E_i/s_i − (1 − s_i)/(2 s_i) I` is an effect, i.e. that the
/// tuple is the balanced `s`-noisy version of some tuple of effects. For `s` in
/// the compatibility region (e.g. the quarter circle), `true` implies the tuple
/// is compatible.
pub fn sufficient_compatibility_criterion(t: &EffectTuple, s: &ScalingVector) -> Result<bool> {
    if s.len() != t.len() {
        return Err(QuantumError::LengthMismatch { expected: t.len(), found: s.len() });
    }
    if let Some(i) = s.as_slice().iter().position(|&v| v == 0.0) {
        return Err(QuantumError::ZeroScaling(i));
    }
    let id = HermitianMatrix::identity(t.dim);
    for (e, &si) in t.effects.iter().zip(s.as_slice()) {
        let pre = e.scale(1.0 / si).add_scaled(-(1.0 - si) / (2.0 * si), &id);
        if !is_effect(&pre)? {
            return Ok(false);
        }
    }
    Ok(true)
}
