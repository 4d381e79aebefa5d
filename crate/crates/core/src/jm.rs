//! Joint measurability of binary measurements and noise robustness.
//!
//! A tuple `E_1..E_g` is compatible iff there are `2^g` operators `G_η ⪰ 0`,
//! indexed by sign vectors `η ∈ {±1}^g`, with `Σ_η G_η = I` and
//! `Σ_{η_i = +1} G_η = E_i`. Sign vectors are stored as bitmasks: bit `i` set
//! means `η_i = +1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{HermitianMatrix, LinalgError};
use crate::quantum::{EffectTuple, NoiseModel, QuantumError, ScalingVector, SCHEMA};
use crate::sdp::{self, BlockTerm, Certificate, SdpError, SdpProblem, SdpStatus, Sense, SolverOptions};

/// Default cap on the number of measurements (`2^g` SDP blocks).
pub const DEFAULT_G_CAP: usize = 6;

/// Tolerance for the independent witness re-check.
pub const WITNESS_TOL: f64 = 1e-8;

/// Robustness values this close to the cap are reported as capped.
const CAP_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JmError {
    #[error("{g} measurements exceed the cap of {cap}")]
    TooManyMeasurements { g: usize, cap: usize },
    #[error("robustness is not available for the general noise model")]
    UnsupportedModel,
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("invalid t_cap {t_cap}: must lie in [0, {max}]")]
    InvalidCap { t_cap: f64, max: f64 },
    #[error("robustness SDP ended with status {0:?}")]
    SolverStatus(SdpStatus),
    #[error("invalid joint POVM: {0}")]
    InvalidWitness(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

pub type Result<T> = std::result::Result<T, JmError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JmOptions {
    pub solver: SolverOptions,
    pub g_cap: usize,
}

impl Default for JmOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), g_cap: DEFAULT_G_CAP }
    }
}

/// `η ∈ {±1}^g`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(entries: Vec<i8>) -> std::result::Result<Self, String> {
        match entries.iter().find(|&&e| e != 1 && e != -1) {
            Some(e) => Err(format!("sign entries must be ±1, got {e}")),
            None => Ok(Self(entries)),
        }
    }

    pub fn from_mask(mask: usize, g: usize) -> Self {
        Self((0..g).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn mask(&self) -> usize {
        self.0.iter().enumerate().filter(|(_, &e)| e == 1).map(|(i, _)| 1 << i).sum()
    }

    pub fn entries(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = String;
    fn try_from(v: Vec<i8>) -> std::result::Result<Self, String> {
        Self::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(s: SignVector) -> Self {
        s.0
    }
}

/// Joint POVM `(G_η)`, stored by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPovm {
    g: usize,
    dim: usize,
    elements: Vec<HermitianMatrix>,
}

impl JointPovm {
    pub fn new(g: usize, elements: Vec<HermitianMatrix>) -> Result<Self> {
        if elements.len() != 1 << g {
            return Err(JmError::InvalidWitness(format!("expected {} elements, got {}", 1 << g, elements.len())));
        }
        let dim = elements[0].dim();
        if elements.iter().any(|e| e.dim() != dim) {
            return Err(JmError::InvalidWitness("elements of different dimensions".into()));
        }
        Ok(Self { g, dim, elements })
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn element(&self, eta: &SignVector) -> &HermitianMatrix {
        &self.elements[eta.mask()]
    }

    /// `Σ_{η_i = +1} G_η`.
    pub fn marginal(&self, i: usize) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.dim);
        for (mask, e) in self.elements.iter().enumerate() {
            if mask >> i & 1 == 1 {
                acc += e;
            }
        }
        acc
    }

    pub fn total(&self) -> HermitianMatrix {
        let mut acc = HermitianMatrix::zeros(self.dim);
        for e in &self.elements {
            acc += e;
        }
        acc
    }

    /// Equal-weight mixture of two joint POVMs.
    pub fn midpoint(&self, other: &Self) -> Result<Self> {
        if self.g != other.g || self.dim != other.dim {
            return Err(JmError::InvalidWitness("shape mismatch".into()));
        }
        let elements = self.elements.iter().zip(&other.elements).map(|(a, b)| (a + b).scale(0.5)).collect();
        Ok(Self { g: self.g, dim: self.dim, elements })
    }

    /// Re-checks positivity, normalization and marginals against `targets`,
    /// returning the margin `min(min eig G_η) − max residual`.
    pub fn validate(&self, targets: &EffectTuple) -> Result<f64> {
        if targets.len() != self.g || targets.dim() != self.dim {
            return Err(JmError::InvalidWitness("shape does not match the target tuple".into()));
        }
        let mut min_eig = f64::INFINITY;
        for (mask, e) in self.elements.iter().enumerate() {
            let m = e.min_eigenvalue()?;
            if m < -WITNESS_TOL {
                return Err(JmError::InvalidWitness(format!("G[{mask:b}] has eigenvalue {m:e}")));
            }
            min_eig = min_eig.min(m);
        }
        let mut residual = (&self.total() - &HermitianMatrix::identity(self.dim)).max_abs();
        if residual > WITNESS_TOL {
            return Err(JmError::InvalidWitness(format!("elements sum to I only up to {residual:e}")));
        }
        for (i, target) in targets.effects().iter().enumerate() {
            let r = (&self.marginal(i) - target).max_abs();
            if r > WITNESS_TOL {
                return Err(JmError::InvalidWitness(format!("marginal {i} off by {r:e}")));
            }
            residual = residual.max(r);
        }
        Ok(min_eig - residual)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let elements: Vec<serde_json::Value> = self
            .elements
            .iter()
            .enumerate()
            .map(|(mask, m)| serde_json::json!({ "eta": SignVector::from_mask(mask, self.g), "matrix": m }))
            .collect();
        serde_json::json!({ "schema": SCHEMA, "g": self.g, "dim": self.dim, "elements": elements })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Compatibility {
    Compatible,
    Incompatible,
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct JmVerdict {
    pub status: Compatibility,
    /// Present exactly when `status` is `Compatible`.
    pub witness: Option<JointPovm>,
    /// For a witness, `min(min eig G_η) − max residual`; otherwise the
    /// solver's `min_block_eig − primal_eq` at its final iterate.
    pub margin: f64,
    /// Farkas certificate when `status` is `Incompatible`.
    pub certificate: Option<Certificate>,
    pub iterations: usize,
}

impl JmVerdict {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({ "status": self.status, "margin": self.margin });
        if let Some(w) = &self.witness {
            v["witness"] = w.to_json();
        }
        v
    }
}

fn check_g(g: usize, cap: usize) -> Result<()> {
    if g > cap {
        Err(JmError::TooManyMeasurements { g, cap })
    } else {
        Ok(())
    }
}

/// Masks with bit `i` set.
fn plus_blocks(g: usize, i: usize) -> Vec<(usize, f64)> {
    (0..1usize << g).filter(|m| m >> i & 1 == 1).map(|m| (m, 1.0)).collect()
}

pub fn assemble_jm_sdp(t: &EffectTuple) -> Result<SdpProblem> {
    assemble_jm_sdp_with_cap(t, DEFAULT_G_CAP)
}

/// Feasibility SDP over the `2^g` blocks `G_η` (block index = mask).
pub fn assemble_jm_sdp_with_cap(t: &EffectTuple, g_cap: usize) -> Result<SdpProblem> {
    let g = t.len();
    check_g(g, g_cap)?;
    let d = t.dim();
    let n = 1usize << g;
    let mut p = SdpProblem::new(vec![d; n], Sense::Minimize);
    let all: Vec<(usize, f64)> = (0..n).map(|m| (m, 1.0)).collect();
    p.add_hermitian_equality(&all, &[], &HermitianMatrix::identity(d));
    for (i, e) in t.effects().iter().enumerate() {
        p.add_hermitian_equality(&plus_blocks(g, i), &[], e);
    }
    Ok(p)
}

pub fn check_compatibility(t: &EffectTuple) -> Result<JmVerdict> {
    check_compatibility_with(t, &JmOptions::default())
}

/// Solves the feasibility SDP. Solver failures become `Indeterminate`.
pub fn check_compatibility_with(t: &EffectTuple, opts: &JmOptions) -> Result<JmVerdict> {
    let p = assemble_jm_sdp_with_cap(t, opts.g_cap)?;
    let sol = match sdp::solve(&p, &opts.solver) {
        Ok(s) => s,
        Err(SdpError::NumericalBreakdown { residuals, iteration, reason }) => {
            log::warn!("jm: solver breakdown at iteration {iteration}: {reason}");
            return Ok(JmVerdict {
                status: Compatibility::Indeterminate,
                witness: None,
                margin: residuals.min_block_eig - residuals.primal_eq,
                certificate: None,
                iterations: iteration,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let solver_margin = sol.residuals.min_block_eig - sol.residuals.primal_eq;
    let verdict = match sol.status {
        SdpStatus::Optimal => {
            let witness = JointPovm::new(t.len(), sol.block_values)?;
            match witness.validate(t) {
                Ok(margin) => JmVerdict {
                    status: Compatibility::Compatible,
                    witness: Some(witness),
                    margin,
                    certificate: None,
                    iterations: sol.iterations,
                },
                Err(e) => {
                    log::warn!("jm: solver witness rejected: {e}");
                    JmVerdict {
                        status: Compatibility::Indeterminate,
                        witness: None,
                        margin: solver_margin,
                        certificate: None,
                        iterations: sol.iterations,
                    }
                }
            }
        }
        SdpStatus::Infeasible => JmVerdict {
            status: Compatibility::Incompatible,
            witness: None,
            margin: solver_margin,
            certificate: sol.certificate,
            iterations: sol.iterations,
        },
        SdpStatus::Unbounded | SdpStatus::MaxIter => JmVerdict {
            status: Compatibility::Indeterminate,
            witness: None,
            margin: solver_margin,
            certificate: None,
            iterations: sol.iterations,
        },
    };
    Ok(verdict)
}

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub t_star: f64,
    /// The cap the search was limited to.
    pub t_cap: f64,
    /// `t_star` reached `t_cap`; the true supremum may be larger.
    pub capped: bool,
    pub status: SdpStatus,
    /// Joint POVM for the noisy tuple at `t_star`.
    pub witness: Option<JointPovm>,
    pub iterations: usize,
}

impl RobustnessResult {
    pub fn to_json(&self) -> serde_json::Value {
        let status = if self.status == SdpStatus::Optimal { "Optimal" } else { "MaxIter" };
        let mut v = serde_json::json!({
            "status": status,
            "t_star": self.t_star,
            "t_cap": self.t_cap,
            "capped": self.capped,
        });
        if let Some(w) = &self.witness {
            v["witness"] = w.to_json();
        }
        v
    }
}

/// Largest `t ≤ t_cap` such that `add_noise(t, t·direction, model)` is
/// compatible. `t_cap` defaults to `1/max_i direction_i`.
pub fn robustness(
    t: &EffectTuple,
    direction: &ScalingVector,
    model: &NoiseModel,
    t_cap: Option<f64>,
) -> Result<RobustnessResult> {
    robustness_with(t, direction, model, t_cap, &JmOptions::default())
}

pub fn robustness_with(
    t: &EffectTuple,
    direction: &ScalingVector,
    model: &NoiseModel,
    t_cap: Option<f64>,
    opts: &JmOptions,
) -> Result<RobustnessResult> {
    let g = t.len();
    check_g(g, opts.g_cap)?;
    if matches!(model, NoiseModel::General(_)) {
        return Err(JmError::UnsupportedModel);
    }
    if direction.len() != g {
        return Err(JmError::InvalidDirection(format!("length {} for {g} effects", direction.len())));
    }
    let max_dir = direction.max();
    if max_dir <= 0.0 {
        return Err(JmError::InvalidDirection("direction is zero".into()));
    }
    let max_cap = 1.0 / max_dir;
    let cap = t_cap.unwrap_or(max_cap);
    if !(0.0..=max_cap * (1.0 + 1e-12)).contains(&cap) {
        return Err(JmError::InvalidCap { t_cap: cap, max: max_cap });
    }

    let d = t.dim();
    let n = 1usize << g;
    let noise: Vec<HermitianMatrix> =
        t.effects().iter().enumerate().map(|(i, e)| model.noise_operator(e, i)).collect();

    if cap == 0.0 {
        // Only the trivial noisy tuple is allowed; it always has a product joint POVM.
        let trivial = EffectTuple::new(noise)?;
        let witness = product_povm(&trivial);
        return Ok(RobustnessResult {
            t_star: 0.0,
            t_cap: 0.0,
            capped: true,
            status: SdpStatus::Optimal,
            witness: Some(witness),
            iterations: 0,
        });
    }

    // Blocks: G_η (0..n), t (n), slack u (n + 1) with t + u = cap.
    let (t_block, u_block) = (n, n + 1);
    let mut blocks = vec![d; n];
    blocks.extend([1, 1]);
    let mut p = SdpProblem::new(blocks, Sense::Maximize);
    p.set_objective(t_block, HermitianMatrix::identity(1));
    let all: Vec<(usize, f64)> = (0..n).map(|m| (m, 1.0)).collect();
    p.add_hermitian_equality(&all, &[], &HermitianMatrix::identity(d));
    for (i, (e, ni)) in t.effects().iter().zip(&noise).enumerate() {
        let slope = (e - ni).scale(-direction.as_slice()[i]);
        p.add_hermitian_equality(&plus_blocks(g, i), &[(t_block, slope)], ni);
    }
    p.add_constraint(
        vec![
            BlockTerm { block: t_block, matrix: HermitianMatrix::identity(1) },
            BlockTerm { block: u_block, matrix: HermitianMatrix::identity(1) },
        ],
        cap,
    );

    let sol = sdp::solve(&p, &opts.solver)?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::MaxIter => {}
        other => return Err(JmError::SolverStatus(other)),
    }
    if sol.status == SdpStatus::MaxIter {
        log::warn!("robustness: solver hit the iteration limit; reporting best iterate");
    }
    let t_star = sol.block_values[t_block].get(0, 0).re.clamp(0.0, cap);
    let witness = JointPovm::new(g, sol.block_values[..n].to_vec())?;
    Ok(RobustnessResult {
        t_star,
        t_cap: cap,
        capped: t_star >= cap - CAP_SLACK,
        status: sol.status,
        witness: Some(witness),
        iterations: sol.iterations,
    })
}

/// `G_η = Π_i (E_i if η_i = +1 else I − E_i)` for effects that are multiples of I.
fn product_povm(t: &EffectTuple) -> JointPovm {
    let g = t.len();
    let d = t.dim();
    let weights: Vec<f64> = t.effects().iter().map(|e| e.get(0, 0).re).collect();
    let elements = (0..1usize << g)
        .map(|mask| {
            let w: f64 = (0..g).map(|i| if mask >> i & 1 == 1 { weights[i] } else { 1.0 - weights[i] }).product();
            HermitianMatrix::identity(d).scale(w)
        })
        .collect();
    JointPovm { g, dim: d, elements }
}

#[derive(Debug)]
pub struct SweepEntry {
    pub direction: ScalingVector,
    pub result: Result<RobustnessResult>,
}

/// Robustness along each direction, in input order. Runs on the current rayon
/// pool; a failing direction is reported in its entry and does not stop the sweep.
pub fn region_sweep(
    t: &EffectTuple,
    directions: &[ScalingVector],
    model: &NoiseModel,
    opts: &JmOptions,
) -> Vec<SweepEntry> {
    directions
        .par_iter()
        .map(|dir| SweepEntry { direction: dir.clone(), result: robustness_with(t, dir, model, None, opts) })
        .collect()
}
