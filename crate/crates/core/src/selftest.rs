//! Acceptance checks with measured values, expectations and timings.
//!
//! Each check is independent and deterministic. Solver options are a parameter
//! so that a deliberately broken configuration can be shown to fail.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constructions::{
    binary_zhu_gram, conjugate_norm_identity_check, extremal_effect_tuple, mub_effect_tuple, mub_family,
    spin_system, zhu_bound_with,
};
use crate::jm::{self, check_compatibility_with, robustness_with, Compatibility, JmOptions};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::quantum::{
    add_noise, compress, random_effect_tuple, random_isometry, EffectTuple, NoiseModel, ScalingVector,
};
use crate::regions::{
    boundary_along, clone_membership, clone_pair_membership, symmetric_clone_value, BOUNDARY_TOL,
};
use crate::sdp::SolverOptions;
use crate::spectra::{diamond_free_inclusion_with, diamond_membership, matrix_ball_membership, sample_diamond};

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub id: u32,
    pub name: &'static str,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
    pub seconds: f64,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {} | measured {} | expected {} | {:.3} s",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.expected,
            self.seconds
        )
    }
}

pub const CHECKS: &[(u32, &str)] = &[
    (1, "Pauli pair robustness"),
    (2, "Pauli triple robustness"),
    (3, "Spin extremality at g = 4, 5"),
    (4, "Quarter-circle lower bound on random tuples"),
    (5, "1/(2d) symmetric bound on random tuples"),
    (6, "Zhu bound vs SDP threshold on a qubit MUB pair"),
    (7, "Zhu Gram traces"),
    (8, "Cloning region formulas"),
    (9, "Spin-system invariants and norm identity"),
    (10, "Matrix diamond inside the matrix ball"),
    (11, "Diamond inclusion matches joint measurability"),
    (12, "Compression preserves compatibility"),
];

struct Outcome {
    measured: String,
    expected: String,
    pass: bool,
}

type CheckResult = Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run_check(id: u32, solver: &SolverOptions) -> CheckReport {
    let name = CHECKS.iter().find(|(i, _)| *i == id).map_or("unknown check", |(_, n)| *n);
    let opts = JmOptions { solver: *solver, ..JmOptions::default() };
    let start = Instant::now();
    let result = match id {
        1 => pauli_pair(&opts),
        2 => pauli_triple(&opts),
        3 => spin_extremality(&opts),
        4 => qc_lower_bound(&opts),
        5 => helton_bound(&opts),
        6 => zhu_mub_pair(&opts),
        7 => zhu_traces(),
        8 => cloning_formulas(),
        9 => spin_invariants(),
        10 => diamond_in_ball(),
        11 => bridge(&opts),
        12 => compression(&opts),
        _ => Err(format!("no check with id {id}")),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (measured, expected, pass) = match result {
        Ok(o) => (o.measured, o.expected, o.pass),
        Err(e) => (format!("error: {e}"), "no error".into(), false),
    };
    let limit = time_limit(id);
    let pass = pass && seconds < limit;
    let expected = if limit.is_finite() { format!("{expected}, under {limit} s") } else { expected };
    CheckReport { id, name, measured, expected, pass, seconds }
}

/// Runs the selected checks (all when `only` is empty) in id order.
pub fn run_selftest(solver: &SolverOptions, only: &[u32]) -> Vec<CheckReport> {
    CHECKS
        .iter()
        .filter(|(id, _)| only.is_empty() || only.contains(id))
        .map(|(id, _)| run_check(*id, solver))
        .collect()
}

fn time_limit(id: u32) -> f64 {
    match id {
        1 => 1.0,
        2 => 2.0,
        3 => 60.0,
        4 | 5 => 300.0,
        _ => f64::INFINITY,
    }
}

fn proj(m: HermitianMatrix) -> HermitianMatrix {
    (&HermitianMatrix::identity(m.dim()) + &m).scale(0.5)
}

fn pauli_tuple(n: usize) -> EffectTuple {
    let all = [HermitianMatrix::pauli_x(), HermitianMatrix::pauli_y(), HermitianMatrix::pauli_z()];
    let picked: Vec<HermitianMatrix> = match n {
        2 => vec![proj(all[0].clone()), proj(all[2].clone())],
        _ => all.into_iter().map(proj).collect(),
    };
    EffectTuple::new(picked).expect("Pauli projections are effects")
}

fn symmetric_robustness(t: &EffectTuple, opts: &JmOptions) -> Result<f64, String> {
    let dir = ScalingVector::uniform(t.len(), 1.0).map_err(err)?;
    Ok(robustness_with(t, &dir, &NoiseModel::Balanced, None, opts).map_err(err)?.t_star)
}

fn pauli_pair(opts: &JmOptions) -> CheckResult {
    let t_star = symmetric_robustness(&pauli_tuple(2), opts)?;
    let target = 0.5f64.sqrt();
    Ok(Outcome {
        measured: format!("t* = {t_star:.9}"),
        expected: format!("{target:.9} ± 1e-5"),
        pass: (t_star - target).abs() <= 1e-5,
    })
}

fn pauli_triple(opts: &JmOptions) -> CheckResult {
    let t_star = symmetric_robustness(&pauli_tuple(3), opts)?;
    let target = (1.0f64 / 3.0).sqrt();
    Ok(Outcome {
        measured: format!("t* = {t_star:.9}"),
        expected: format!("{target:.9} ± 1e-5"),
        pass: (t_star - target).abs() <= 1e-5,
    })
}

fn spin_extremality(opts: &JmOptions) -> CheckResult {
    let mut measured = Vec::new();
    let mut pass = true;
    for g in [4usize, 5] {
        let start = Instant::now();
        let t = extremal_effect_tuple(g).map_err(err)?;
        if t.dim() != 4 {
            return Err(format!("extremal tuple for g = {g} has dimension {}", t.dim()));
        }
        let t_star = symmetric_robustness(&t, opts)?;
        let secs = start.elapsed().as_secs_f64();
        pass &= (t_star - 1.0 / (g as f64).sqrt()).abs() <= 1e-4 && secs < 30.0;
        measured.push(format!("g={g}: t* = {t_star:.7} in {secs:.2} s"));
    }
    Ok(Outcome {
        measured: measured.join("; "),
        expected: "1/√g ± 1e-4 (0.5, 0.4472136), each under 30 s".into(),
        pass,
    })
}

fn unit_direction(rng: &mut ChaCha8Rng, g: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn qc_lower_bound(opts: &JmOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let directions: Vec<ScalingVector> =
        (0..20).map(|_| ScalingVector::new(unit_direction(&mut rng, 3)).expect("nonnegative")).collect();
    let mut worst = f64::INFINITY;
    for seed in 0..50 {
        let t = random_effect_tuple(3, 3, 1000 + seed);
        for entry in jm::region_sweep(&t, &directions, &NoiseModel::Balanced, opts) {
            worst = worst.min(entry.result.map_err(err)?.t_star);
        }
    }
    Ok(Outcome {
        measured: format!("min t* = {worst:.7} over 1000 solves"),
        expected: "every t* ≥ 1 − 1e-4".into(),
        pass: worst >= 1.0 - 1e-4,
    })
}

fn helton_bound(opts: &JmOptions) -> CheckResult {
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let t = random_effect_tuple(4, 2, 5000 + seed);
        worst = worst.min(symmetric_robustness(&t, opts)?);
    }
    Ok(Outcome {
        measured: format!("min t* = {worst:.7} over 100 tuples"),
        expected: "every t* ≥ 1/(2d) = 0.25".into(),
        pass: worst >= 0.25,
    })
}

fn binary(e: &HermitianMatrix) -> Vec<HermitianMatrix> {
    vec![e.clone(), &HermitianMatrix::identity(e.dim()) - e]
}

fn zhu_mub_pair(opts: &JmOptions) -> CheckResult {
    let fam = mub_family(2).map_err(err)?;
    let pair = mub_effect_tuple(&fam, &[vec![0], vec![0]]).map_err(err)?;
    let zhu_at = |t: f64| -> Result<f64, String> {
        let noisy = add_noise(&pair, &ScalingVector::uniform(2, t).map_err(err)?, &NoiseModel::Balanced).map_err(err)?;
        let povms: Vec<_> = noisy.effects().iter().map(binary).collect();
        Ok(zhu_bound_with(&povms, &opts.solver).map_err(err)?.value)
    };
    let mut closed_form_gap = 0.0f64;
    for t in [0.25, 0.5, 0.75, 1.0] {
        closed_form_gap = closed_form_gap.max((zhu_at(t)? - (1.0 + 2.0 * t * t)).abs());
    }
    let mut failure = None;
    let crossing = boundary_along(1.0, |t| match zhu_at(t) {
        Ok(v) => Ok(v - 2.0),
        Err(e) => {
            failure.get_or_insert(e);
            Ok(f64::INFINITY)
        }
    })
    .map_err(err)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let t_star = symmetric_robustness(&pair, opts)?;
    let target = 0.5f64.sqrt();
    Ok(Outcome {
        measured: format!(
            "Zhu crossing {crossing:.9}, max |bound − (1 + 2t²)| = {closed_form_gap:.1e}, jm t* = {t_star:.9}"
        ),
        expected: format!("crossing {target:.9} ± 1e-6, jm t* within 1e-5 of it"),
        pass: (crossing - target).abs() <= 1e-6 && (t_star - crossing).abs() <= 1e-5 && closed_form_gap <= 1e-6,
    })
}

fn random_projection(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> HermitianMatrix {
    let v = random_isometry(d, rank, rng.random());
    HermitianMatrix::identity(rank).congruence(&v.adjoint())
}

fn zhu_traces() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut trace_err = 0.0f64;
    let mut scale_err = 0.0f64;
    let mut count = 0;
    for d in [2usize, 3] {
        for rank in 1..d {
            for _ in 0..25 {
                let e = random_projection(&mut rng, d, rank);
                let (_, gbar) = binary_zhu_gram(&e).map_err(err)?;
                trace_err = trace_err.max((gbar.trace - 1.0).abs());
                let s: f64 = rng.random_range(0.0..1.0);
                let noisy = e.scale(s).add_scaled((1.0 - s) * e.trace() / d as f64, &HermitianMatrix::identity(d));
                let (_, gs) = binary_zhu_gram(&noisy).map_err(err)?;
                scale_err = scale_err.max((gs.trace - s * s).abs());
                count += 1;
            }
        }
    }
    Ok(Outcome {
        measured: format!("{count} projections: max |tr Ḡ − 1| = {trace_err:.1e}, max |tr Ḡ_s − s²| = {scale_err:.1e}"),
        expected: "both ≤ 1e-10".into(),
        pass: trace_err <= 1e-10 && scale_err <= 1e-10,
    })
}

fn cloning_formulas() -> CheckResult {
    // Symmetric boundary by bisection on the diagonal.
    let mut sym_err = 0.0f64;
    for g in 2..=20usize {
        for d in 2..=20usize {
            let b = boundary_along(1.0, |l| clone_membership(g, d, &vec![l; g]).map(|v| v.slack)).map_err(err)?;
            sym_err = sym_err.max((b - symmetric_clone_value(g, d)).abs());
        }
    }
    // Vertices e_i.
    let mut vertex_slack = 0.0f64;
    for g in 2..=20usize {
        for d in 2..=20usize {
            for i in 0..g {
                let mut e = vec![0.0; g];
                e[i] = 1.0;
                vertex_slack = vertex_slack.max(clone_membership(g, d, &e).map_err(err)?.slack.abs());
            }
        }
    }
    // Pair closed form against the general form on a 100 × 100 grid.
    let mut pair_mismatch = 0;
    let mut grid_points = 0;
    for d in [2usize, 3, 5, 10] {
        for i in 0..100 {
            for j in 0..100 {
                let (s, t) = (i as f64 / 99.0, j as f64 / 99.0);
                let a = clone_pair_membership(d, s, t).map_err(err)?;
                let b = clone_membership(2, d, &[s, t]).map_err(err)?;
                pair_mismatch += usize::from(a.member != b.member);
                grid_points += 1;
            }
        }
    }
    // Both algebraic forms of the general inequality on random samples; a
    // disagreement surfaces as an error from clone_membership.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20_000 {
        let g = rng.random_range(2..=8);
        let d = rng.random_range(2..=20);
        let s: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..=1.0)).collect();
        clone_membership(g, d, &s).map_err(err)?;
    }
    Ok(Outcome {
        measured: format!(
            "symmetric boundary error {sym_err:.1e}; max |slack(e_i)| = {vertex_slack:.1e}; \
             pair/general mismatches {pair_mismatch} of {grid_points}; forms agree on 20000 samples"
        ),
        expected: format!("≤ 1e-12; ≤ {BOUNDARY_TOL:e}; 0; agreement"),
        pass: sym_err <= 1e-12 && vertex_slack <= BOUNDARY_TOL && pair_mismatch == 0,
    })
}

fn spin_invariants() -> CheckResult {
    let mut worst = 0.0f64;
    let mut hermiticity = 0.0f64;
    let systems: Vec<_> = (1..=9).map(spin_system).collect::<Result<_, _>>().map_err(err)?;
    for s in &systems {
        let d = s.defects();
        worst = worst.max(d.anticommutation).max(d.unitarity).max(d.trace);
        for m in &s.matrices {
            let c = ComplexMatrix::from_hermitian(m);
            let a = c.adjoint();
            for i in 0..c.rows() {
                for j in 0..c.cols() {
                    hermiticity = hermiticity.max((c.get(i, j) - a.get(i, j)).norm());
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut identity_err = 0.0f64;
    for k in 0..100 {
        let sys = &systems[k % 9];
        let a: Vec<f64> = (0..sys.len()).map(|_| rng.random_range(0.0..2.0)).collect();
        let (lhs, rhs) = conjugate_norm_identity_check(&a, sys).map_err(err)?;
        identity_err = identity_err.max((lhs - rhs).abs());
    }
    Ok(Outcome {
        measured: format!(
            "g ≤ 9: max relation defect {worst:.1e}, hermiticity defect {hermiticity:.1e}, \
             norm identity error {identity_err:.1e}"
        ),
        expected: "≤ 1e-12, ≤ 1e-12, ≤ 1e-8".into(),
        pass: worst <= 1e-12 && hermiticity <= 1e-12 && identity_err <= 1e-8,
    })
}

fn diamond_in_ball() -> CheckResult {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for g in 1..=4usize {
        for n in 1..=4usize {
            for x in sample_diamond(g, n, (10 * g + n) as u64, 625).map_err(err)? {
                if !diamond_membership(&x).map_err(err)?.member {
                    return Err("sampler produced a non-member".into());
                }
                worst = worst.min(matrix_ball_membership(&x).map_err(err)?.margin);
                count += 1;
            }
        }
    }
    Ok(Outcome {
        measured: format!("{count} samples, min ball margin {worst:.3e}"),
        expected: "10000 samples, margin ≥ -1e-9".into(),
        pass: count == 10_000 && worst >= -1e-9,
    })
}

fn bridge(opts: &JmOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut agree, mut compatible, mut incompatible) = (0, 0, 0);
    for k in 0..500 {
        let g = rng.random_range(2..=3);
        let d = rng.random_range(2..=3);
        // Half sharp projections (often incompatible), half generic effects.
        let base = if k % 2 == 0 {
            let effects = (0..g).map(|_| random_projection(&mut rng, d, 1)).collect();
            EffectTuple::new_clamped(effects).map_err(err)?
        } else {
            random_effect_tuple(g, d, rng.random())
        };
        let s = ScalingVector::uniform(g, rng.random_range(0.5..1.0)).map_err(err)?;
        let t = add_noise(&base, &s, &NoiseModel::Balanced).map_err(err)?;
        let a = diamond_free_inclusion_with(&t, opts).map_err(err)?.status;
        let b = check_compatibility_with(&t, opts).map_err(err)?.status;
        agree += usize::from(a == b);
        compatible += usize::from(b == Compatibility::Compatible);
        incompatible += usize::from(b == Compatibility::Incompatible);
    }
    Ok(Outcome {
        measured: format!("{agree} of 500 agree ({compatible} compatible, {incompatible} incompatible)"),
        expected: "500 of 500, both verdicts represented".into(),
        pass: agree == 500 && compatible > 0 && incompatible > 0,
    })
}

fn compression(opts: &JmOptions) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut ok = 0;
    let mut before_ok = 0;
    for k in 0..100u64 {
        let g = 3;
        let base = random_effect_tuple(g, 4, 7000 + k);
        // Inside the quarter circle, so compatible for every base tuple.
        let s = ScalingVector::new(unit_direction(&mut rng, g).iter().map(|v| 0.95 * v).collect()).map_err(err)?;
        let t = add_noise(&base, &s, &NoiseModel::Balanced).map_err(err)?;
        if check_compatibility_with(&t, opts).map_err(err)?.status != Compatibility::Compatible {
            continue;
        }
        before_ok += 1;
        let c = compress(&t, &random_isometry(4, 2, 9000 + k)).map_err(err)?;
        let v = check_compatibility_with(&c, opts).map_err(err)?;
        if v.status == Compatibility::Compatible {
            ok += 1;
        }
    }
    Ok(Outcome {
        measured: format!("{before_ok} tuples verified compatible, {ok} compressions compatible"),
        expected: "100 and 100".into(),
        pass: before_ok == 100 && ok == 100,
    })
}
