//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Embedding of `min ⟨C,X⟩ s.t. A(X) = b, X ⪰ 0`:
//!
//! ```text
//! A(X) − b τ            = 0
//! A*(y) + S − C τ       = 0
//! ⟨C,X⟩ − b'y + κ       = 0        X, S ⪰ 0,  τ, κ ≥ 0
//! ```
//!
//! Search directions use Nesterov–Todd scaling `W = G Gᵀ` with `Gᵀ S G =
//! G⁻¹ X G⁻ᵀ = Λ` diagonal, and a Mehrotra predictor-corrector. The Newton
//! system is reduced to the Schur complement `M_ij = ⟨A_i, W A_j W⟩` plus a
//! rank-one elimination for `τ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{RealProblem, SdpStatus, SolverOptions};

/// Per-iteration trace, in the internal (scaled, minimization) problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Complementarity `(⟨X,S⟩ + τκ) / (ν + 1)`.
    pub mu: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub tau: f64,
    pub kappa: f64,
    /// Step length taken after this record (0 for the final record).
    pub step: f64,
}

#[derive(Debug)]
pub(crate) enum IpmError {
    Breakdown { iteration: usize, reason: String },
}

pub(crate) struct RealOutcome {
    pub status: SdpStatus,
    /// Primal blocks, or the unboundedness ray when `status == Unbounded`.
    pub x: Vec<DMatrix<f64>>,
    /// Duals in the realified row space, or the Farkas ray when infeasible.
    pub y: Vec<f64>,
    pub iterations: usize,
    pub dropped: Vec<usize>,
    pub history: Vec<IterationRecord>,
}

const DEPENDENCY_TOL: f64 = 1e-10;
const STEP_FRACTION: f64 = 0.99;
// Fallback acceptance for the best iterate (max of relative primal and dual
// residuals and gap) when progress stalls or breaks down before `tol` is reached.
const FALLBACK_TOL: f64 = 1e-7;
const REFINE_STEPS: usize = 2;
// Iterations without improving on the best iterate before giving up.
const STALL_WINDOW: usize = 15;

struct Snapshot {
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    tau: f64,
    merit: f64,
    iteration: usize,
}

/// Row-normalized, dependency-free problem with `b` and `C` scaled to unit size.
struct Prepared {
    n_blocks: Vec<usize>,
    cost: Vec<DMatrix<f64>>,
    rows: Vec<Vec<(usize, DMatrix<f64>)>>,
    b: DVector<f64>,
    /// Original row index of each kept row.
    origin: Vec<usize>,
    row_norm: Vec<f64>,
    b_scale: f64,
    c_scale: f64,
    /// Nonzero entries of each row term, when it is sparse enough to matter.
    nz: Vec<Vec<Option<Vec<(usize, usize, f64)>>>>,
    /// `(row, term index)` pairs touching each block.
    by_block: Vec<Vec<(usize, usize)>>,
}

/// Entries of `a` if at most a quarter of them are nonzero.
fn sparse_entries(a: &DMatrix<f64>) -> Option<Vec<(usize, usize, f64)>> {
    let limit = a.len() / 4;
    let mut out = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let v = a[(i, j)];
            if v != 0.0 {
                if out.len() == limit {
                    return None;
                }
                out.push((i, j, v));
            }
        }
    }
    Some(out)
}

fn term_dot(nz: Option<&[(usize, usize, f64)]>, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    match nz {
        Some(entries) => entries.iter().map(|&(i, j, v)| v * b[(i, j)]).sum(),
        None => a.dot(b),
    }
}

enum Presolve {
    Ready(Prepared, Vec<usize>),
    /// Inconsistent linear system: Farkas ray on the original rows.
    Inconsistent(Vec<f64>, Vec<usize>),
}

fn presolve(p: &RealProblem) -> Presolve {
    let m = p.rhs.len();
    let norms: Vec<f64> = p
        .constraints
        .iter()
        .map(|terms| terms.iter().map(|(_, a)| a.norm_squared()).sum::<f64>().sqrt())
        .collect();
    let b_max = p.rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
    let consistency_tol = 1e-9 * (1.0 + b_max);

    let mut dropped = Vec::new();
    let mut live = Vec::new();
    for j in 0..m {
        if norms[j] == 0.0 {
            if p.rhs[j].abs() > consistency_tol {
                let mut y = vec![0.0; m];
                y[j] = p.rhs[j].signum();
                return Presolve::Inconsistent(y, dropped);
            }
            dropped.push(j);
        } else {
            live.push(j);
        }
    }

    let normalized: Vec<Vec<(usize, DMatrix<f64>)>> = live
        .iter()
        .map(|&j| p.constraints[j].iter().map(|(k, a)| (*k, a / norms[j])).collect())
        .collect();
    let b_norm: Vec<f64> = live.iter().map(|&j| p.rhs[j] / norms[j]).collect();

    let sparse: Vec<Vec<Option<Vec<(usize, usize, f64)>>>> =
        normalized.iter().map(|terms| terms.iter().map(|(_, a)| sparse_entries(a)).collect()).collect();

    // Gram matrix of the normalized rows.
    let ml = live.len();
    let mut touching: Vec<Vec<(usize, usize)>> = vec![Vec::new(); p.blocks.len()];
    for (r, terms) in normalized.iter().enumerate() {
        for (t, (k, _)) in terms.iter().enumerate() {
            touching[*k].push((r, t));
        }
    }
    let mut gram = DMatrix::<f64>::zeros(ml, ml);
    for list in &touching {
        for &(r1, t1) in list {
            for &(r2, t2) in list {
                if r2 < r1 {
                    continue;
                }
                let v = term_dot(sparse[r1][t1].as_deref(), &normalized[r1][t1].1, &normalized[r2][t2].1);
                gram[(r1, r2)] += v;
                if r1 != r2 {
                    gram[(r2, r1)] += v;
                }
            }
        }
    }

    // Greedy pivoted Cholesky picks a maximal well-conditioned row subset.
    let mut residual_diag: Vec<f64> = (0..ml).map(|i| gram[(i, i)]).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut factor: Vec<Vec<f64>> = Vec::new(); // columns of L, length ml
    let mut is_chosen = vec![false; ml];
    loop {
        let Some((piv, &dmax)) = residual_diag
            .iter()
            .enumerate()
            .filter(|(i, _)| !is_chosen[*i])
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            break;
        };
        if dmax <= DEPENDENCY_TOL {
            break;
        }
        let root = dmax.sqrt();
        let col: Vec<f64> = (0..ml)
            .map(|j| {
                if is_chosen[j] {
                    return 0.0;
                }
                let dot: f64 = factor.iter().map(|c| c[j] * c[piv]).sum();
                (gram[(j, piv)] - dot) / root
            })
            .collect();
        for j in 0..ml {
            if !is_chosen[j] {
                residual_diag[j] -= col[j] * col[j];
            }
        }
        is_chosen[piv] = true;
        chosen.push(piv);
        factor.push(col);
    }
    chosen.sort_unstable();

    if chosen.len() < ml {
        let kp = chosen.len();
        let k_pp = DMatrix::from_fn(kp, kp, |a, b| gram[(chosen[a], chosen[b])]);
        let chol = Cholesky::new(k_pp);
        for r in 0..ml {
            if is_chosen[r] {
                continue;
            }
            let z = match &chol {
                Some(c) => c.solve(&DVector::from_fn(kp, |a, _| gram[(chosen[a], r)])),
                None => DVector::zeros(kp),
            };
            let predicted: f64 = (0..kp).map(|a| z[a] * b_norm[chosen[a]]).sum();
            let mismatch = b_norm[r] - predicted;
            if mismatch.abs() > consistency_tol {
                // y = e_r − Σ z_a e_a annihilates A* and has b'y = mismatch.
                let s = mismatch.signum();
                let mut y = vec![0.0; m];
                y[live[r]] = s / norms[live[r]];
                for a in 0..kp {
                    let j = live[chosen[a]];
                    y[j] -= s * z[a] / norms[j];
                }
                return Presolve::Inconsistent(y, dropped);
            }
            dropped.push(live[r]);
        }
        dropped.sort_unstable();
        log::warn!("sdp: dropped {} linearly dependent constraint(s)", dropped.len());
    }

    let b_kept: Vec<f64> = chosen.iter().map(|&r| b_norm[r]).collect();
    let b_scale = b_kept.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let c_scale = p.cost.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt().max(1.0);

    let rows: Vec<Vec<(usize, DMatrix<f64>)>> = chosen.iter().map(|&r| normalized[r].clone()).collect();
    let nz: Vec<_> = chosen.iter().map(|&r| sparse[r].clone()).collect();
    let mut by_block: Vec<Vec<(usize, usize)>> = vec![Vec::new(); p.blocks.len()];
    for (r, terms) in rows.iter().enumerate() {
        for (t, (k, _)) in terms.iter().enumerate() {
            by_block[*k].push((r, t));
        }
    }
    let origin: Vec<usize> = chosen.iter().map(|&r| live[r]).collect();
    let row_norm: Vec<f64> = origin.iter().map(|&j| norms[j]).collect();
    Presolve::Ready(
        Prepared {
            n_blocks: p.blocks.clone(),
            cost: p.cost.iter().map(|c| c / c_scale).collect(),
            rows,
            b: DVector::from_iterator(b_kept.len(), b_kept.iter().map(|v| v / b_scale)),
            origin,
            row_norm,
            b_scale,
            c_scale,
            nz,
            by_block,
        },
        dropped,
    )
}

impl Prepared {
    fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().zip(&self.nz).map(|(terms, nz)| {
                terms.iter().zip(nz).map(|((k, a), e)| term_dot(e.as_deref(), a, &x[*k])).sum::<f64>()
            }),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.n_blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for ((terms, nz), &yj) in self.rows.iter().zip(&self.nz).zip(y.iter()) {
            if yj == 0.0 {
                continue;
            }
            for ((k, a), e) in terms.iter().zip(nz) {
                match e {
                    Some(entries) => {
                        for &(i, j, v) in entries {
                            out[*k][(i, j)] += v * yj;
                        }
                    }
                    None => out[*k] += a * yj,
                }
            }
        }
        out
    }

    fn cost_dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c.dot(x)).sum()
    }

    fn degree(&self) -> f64 {
        self.n_blocks.iter().sum::<usize>() as f64
    }
}

/// NT scaling data for one block.
struct Scaling {
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let lx = Cholesky::new(x.clone())?.unpack();
    let ls = Cholesky::new(s.clone())?.unpack();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let sv = svd.singular_values;
    if sv.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let inv_sqrt = sv.map(|v| 1.0 / v.sqrt());
    let g = &lx * &v * DMatrix::from_diagonal(&inv_sqrt);
    let g_inv = DMatrix::from_diagonal(&inv_sqrt) * u.transpose() * ls.transpose();
    let w = &g * g.transpose();
    Some(Scaling { g, g_inv, w, lambda: sv })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest `α` with `Λ + α D ⪰ 0` (infinite if unbounded).
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let inv = lambda.map(|v| 1.0 / v.sqrt());
    let mut m = DMatrix::from_fn(n, n, |i, j| inv[i] * d[(i, j)] * inv[j]);
    symmetrize(&mut m);
    let emin = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if emin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / emin
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    ds: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Residual {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rg: f64,
}

pub(crate) fn solve_real(p: &RealProblem, opts: &SolverOptions) -> Result<RealOutcome, IpmError> {
    let m_orig = p.rhs.len();
    let (pr, dropped) = match presolve(p) {
        Presolve::Ready(pr, dropped) => (pr, dropped),
        Presolve::Inconsistent(y, dropped) => {
            return Ok(RealOutcome {
                status: SdpStatus::Infeasible,
                x: p.blocks.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
                y,
                iterations: 0,
                dropped,
                history: Vec::new(),
            })
        }
    };
    let nb = pr.n_blocks.len();
    let m = pr.rows.len();
    let nu = pr.degree();
    let b_norm = pr.b.norm();
    let c_norm = pr.cost.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();

    let mut x: Vec<DMatrix<f64>> = pr.n_blocks.iter().map(|&n| DMatrix::identity(n, n)).collect();
    let mut s = x.clone();
    let mut y = DVector::<f64>::zeros(m);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;

    let mut history = Vec::new();
    let mut status = SdpStatus::MaxIter;
    let mut stalled = 0usize;
    let mut iteration = 0usize;
    let mut breakdown: Option<String> = None;
    let mut best: Option<Snapshot> = None;
    let mut since_best = 0usize;

    let residual = |x: &[DMatrix<f64>], s: &[DMatrix<f64>], y: &DVector<f64>, tau: f64, kappa: f64| {
        let rp = pr.apply(x) - &pr.b * tau;
        let aty = pr.adjoint(y);
        let rd: Vec<DMatrix<f64>> =
            (0..nb).map(|k| &aty[k] + &s[k] - &pr.cost[k] * tau).collect();
        let rg = pr.cost_dot(x) - pr.b.dot(y) + kappa;
        Residual { rp, rd, rg }
    };

    'ipm: loop {
        let r = residual(&x, &s, &y, tau, kappa);
        let xs: f64 = x.iter().zip(&s).map(|(a, b)| a.dot(b)).sum();
        let mu = (xs + tau * kappa) / (nu + 1.0);

        let pobj = pr.cost_dot(&x) / tau;
        let dobj = pr.b.dot(&y) / tau;
        let pres = r.rp.norm() / tau / (1.0 + b_norm);
        let dres = r.rd.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt() / tau / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        history.push(IterationRecord {
            iteration,
            mu,
            primal_objective: pobj * pr.c_scale * pr.b_scale,
            dual_objective: dobj * pr.c_scale * pr.b_scale,
            primal_residual: pres,
            dual_residual: dres,
            tau,
            kappa,
            step: 0.0,
        });

        log::trace!("ipm {iteration}: mu {mu:.3e} pres {pres:.3e} dres {dres:.3e} gap {gap:.3e} tau {tau:.3e} kappa {kappa:.3e}");
        if pres <= opts.tol && dres <= opts.tol && gap <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        let by = pr.b.dot(&y);
        if by > 0.0 {
            let aty = pr.adjoint(&y);
            let ray: f64 = (0..nb).map(|k| (&aty[k] + &s[k]).norm_squared()).sum::<f64>().sqrt();
            if ray / by <= opts.tol {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        let cx = pr.cost_dot(&x);
        if cx < 0.0 && pr.apply(&x).norm() / -cx <= opts.tol {
            status = SdpStatus::Unbounded;
            break;
        }
        let merit = pres.max(dres).max(gap);
        if best.as_ref().is_none_or(|b| merit < b.merit) {
            best = Some(Snapshot { x: x.clone(), y: y.clone(), tau, merit, iteration });
            since_best = 0;
        } else {
            since_best += 1;
        }
        if iteration >= opts.max_iter || stalled >= 5 || since_best >= STALL_WINDOW {
            break;
        }
        iteration += 1;

        // Scaling and Schur complement.
        let mut scal = Vec::with_capacity(nb);
        for k in 0..nb {
            match nt_scaling(&x[k], &s[k]) {
                Some(sc) => scal.push(sc),
                None => {
                    breakdown = Some(format!("iterate left the cone in block {k}"));
                    break 'ipm;
                }
            }
        }
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut a_wcw = DVector::<f64>::zeros(m);
        let mut cwc = 0.0;
        for k in 0..nb {
            let w = &scal[k].w;
            let wcw = w * &pr.cost[k] * w;
            cwc += pr.cost[k].dot(&wcw);
            for &(j, tj) in &pr.by_block[k] {
                let aj = &pr.rows[j][tj].1;
                let nz_j = pr.nz[j][tj].as_deref();
                a_wcw[j] += term_dot(nz_j, aj, &wcw);
                let mut t: Option<DMatrix<f64>> = None;
                for &(i, ti) in &pr.by_block[k] {
                    if i < j {
                        continue;
                    }
                    let ai = &pr.rows[i][ti].1;
                    // <A_i, W A_j W> = Σ A_i[p,q] A_j[r,s] W[q,r] W[s,p].
                    let v = match (pr.nz[i][ti].as_deref(), nz_j) {
                        (Some(ei), Some(ej)) => {
                            let mut acc = 0.0;
                            for &(p, q, a) in ei {
                                for &(r, s, b) in ej {
                                    acc += a * b * w[(q, r)] * w[(s, p)];
                                }
                            }
                            acc
                        }
                        (ei, _) => term_dot(ei, ai, t.get_or_insert_with(|| w * aj * w)),
                    };
                    schur[(i, j)] += v;
                    if i != j {
                        schur[(j, i)] += v;
                    }
                }
            }
        }
        let Some(chol) = factor_schur(schur.clone()) else {
            breakdown = Some("Schur complement not positive definite".into());
            break 'ipm;
        };
        // A few rounds of refinement against the unregularized matrix keep
        // the direction consistent when the system is badly conditioned.
        let schur_solve = |rhs: &DVector<f64>| {
            let mut sol = chol.solve(rhs);
            for _ in 0..REFINE_STEPS {
                let r = rhs - &schur * &sol;
                sol += chol.solve(&r);
            }
            sol
        };
        let q = schur_solve(&(&a_wcw + &pr.b));
        let a_minus_b = &a_wcw - &pr.b;
        let denom = a_minus_b.dot(&q) - cwc - kappa / tau;

        let solve_dir = |r1: &DVector<f64>, r2: &[DMatrix<f64>], r3: f64, rc: &[DMatrix<f64>], rtk: f64| {
            let h: Vec<DMatrix<f64>> = (0..nb).map(|k| &rc[k] - &scal[k].w * &r2[k] * &scal[k].w).collect();
            let pvec = schur_solve(&(r1 - pr.apply(&h)));
            let dtau = (r3 - pr.cost_dot(&h) - a_minus_b.dot(&pvec) - rtk / tau) / denom;
            let dy = &pvec + &q * dtau;
            let aty = pr.adjoint(&dy);
            let mut dx = Vec::with_capacity(nb);
            let mut ds = Vec::with_capacity(nb);
            for k in 0..nb {
                let w = &scal[k].w;
                let mut dsk = &r2[k] - &aty[k] + &pr.cost[k] * dtau;
                symmetrize(&mut dsk);
                let mut dxk = &h[k] + w * (&aty[k] - &pr.cost[k] * dtau) * w;
                symmetrize(&mut dxk);
                dx.push(dxk);
                ds.push(dsk);
            }
            let dkappa = (rtk - kappa * dtau) / tau;
            Direction { dx, ds, dy, dtau, dkappa }
        };

        let scaled_parts = |d: &Direction| -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let dxt = (0..nb).map(|k| &scal[k].g_inv * &d.dx[k] * scal[k].g_inv.transpose()).collect();
            let dst = (0..nb).map(|k| scal[k].g.transpose() * &d.ds[k] * &scal[k].g).collect();
            (dxt, dst)
        };
        let step_bound = |d: &Direction, dxt: &[DMatrix<f64>], dst: &[DMatrix<f64>]| -> f64 {
            let mut alpha = f64::INFINITY;
            for k in 0..nb {
                alpha = alpha.min(max_step(&scal[k].lambda, &dxt[k]));
                alpha = alpha.min(max_step(&scal[k].lambda, &dst[k]));
            }
            if d.dtau < 0.0 {
                alpha = alpha.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                alpha = alpha.min(-kappa / d.dkappa);
            }
            alpha
        };

        // Predictor.
        let neg_rd: Vec<DMatrix<f64>> = r.rd.iter().map(|m| -m).collect();
        let neg_x: Vec<DMatrix<f64>> = x.iter().map(|m| -m).collect();
        let aff = solve_dir(&(-&r.rp), &neg_rd, -r.rg, &neg_x, -tau * kappa);
        let (dxt_a, dst_a) = scaled_parts(&aff);
        let alpha_aff = step_bound(&aff, &dxt_a, &dst_a).min(1.0);
        let xs_aff: f64 = (0..nb)
            .map(|k| (&x[k] + &aff.dx[k] * alpha_aff).dot(&(&s[k] + &aff.ds[k] * alpha_aff)))
            .sum();
        let mu_aff = (xs_aff + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa)) / (nu + 1.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let eta = 1.0 - sigma;
        let mut rc = Vec::with_capacity(nb);
        for k in 0..nb {
            let lam = &scal[k].lambda;
            let n = lam.len();
            let prod = &dxt_a[k] * &dst_a[k];
            let sym = (&prod + prod.transpose()) * 0.5;
            let z = DMatrix::from_fn(n, n, |i, j| {
                let target = if i == j { sigma * mu - lam[i] * lam[i] } else { 0.0 };
                2.0 * (target - sym[(i, j)]) / (lam[i] + lam[j])
            });
            rc.push(&scal[k].g * z * scal[k].g.transpose());
        }
        let r2: Vec<DMatrix<f64>> = r.rd.iter().map(|m| m * -eta).collect();
        let rtk = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let dir = solve_dir(&(&r.rp * -eta), &r2, -eta * r.rg, &rc, rtk);
        let (dxt, dst) = scaled_parts(&dir);
        let alpha = (STEP_FRACTION * step_bound(&dir, &dxt, &dst)).min(1.0);
        if !alpha.is_finite() || alpha <= 0.0 {
            breakdown = Some("non-positive step length".into());
            break 'ipm;
        }
        // Roundoff can push a nearly-boundary step outside the cone; back off
        // until both updated blocks still factor.
        let mut alpha = alpha;
        let (mut x_new, mut s_new) = (Vec::with_capacity(nb), Vec::with_capacity(nb));
        for attempt in 0.. {
            x_new.clear();
            s_new.clear();
            for k in 0..nb {
                let mut xk = &x[k] + &dir.dx[k] * alpha;
                let mut sk = &s[k] + &dir.ds[k] * alpha;
                symmetrize(&mut xk);
                symmetrize(&mut sk);
                x_new.push(xk);
                s_new.push(sk);
            }
            let interior = x_new.iter().chain(&s_new).all(|m| Cholesky::new(m.clone()).is_some());
            if interior {
                break;
            }
            if attempt == 40 {
                breakdown = Some("no interior step along the search direction".into());
                break 'ipm;
            }
            alpha *= 0.5;
        }
        history.last_mut().expect("pushed above").step = alpha;
        x = x_new;
        s = s_new;
        y.axpy(alpha, &dir.dy, 1.0);
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;

        stalled = if alpha < 1e-8 { stalled + 1 } else { 0 };
    }

    // Ill-conditioned Newton systems near the boundary can throw a nearly
    // converged iterate off course; fall back to the best one seen.
    if !matches!(status, SdpStatus::Optimal | SdpStatus::Infeasible | SdpStatus::Unbounded) {
        if let Some(b) = best.filter(|b| b.merit <= FALLBACK_TOL) {
            log::debug!("ipm: accepting iterate {} with merit {:e}", b.iteration, b.merit);
            (x, y, tau) = (b.x, b.y, b.tau);
            status = SdpStatus::Optimal;
            breakdown = None;
        }
    }
    if let Some(reason) = breakdown {
        return Err(IpmError::Breakdown { iteration, reason });
    }

    // Map back to the realified row space.
    let mut y_out = vec![0.0; m_orig];
    let x_out: Vec<DMatrix<f64>> = match status {
        SdpStatus::Infeasible => {
            for (r, &j) in pr.origin.iter().enumerate() {
                y_out[j] = y[r] / pr.row_norm[r];
            }
            x.iter().map(|m| m * 0.0).collect()
        }
        SdpStatus::Unbounded => x.clone(),
        _ => {
            for (r, &j) in pr.origin.iter().enumerate() {
                y_out[j] = y[r] / tau * pr.c_scale / pr.row_norm[r];
            }
            x.iter().map(|m| m * (pr.b_scale / tau)).collect()
        }
    };
    Ok(RealOutcome { status, x: x_out, y: y_out, iterations: iteration, dropped, history })
}

fn factor_schur(mut schur: DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let m = schur.nrows();
    if m == 0 {
        return Cholesky::new(schur);
    }
    let scale = (0..m).map(|i| schur[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
    let mut reg = 0.0;
    for _ in 0..6 {
        if let Some(c) = Cholesky::new(schur.clone()) {
            return Some(c);
        }
        let bump = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
        for i in 0..m {
            schur[(i, i)] += bump - reg;
        }
        reg = bump;
    }
    None
}
