//! Closed-form compatibility regions: the quarter circle, the asymmetric
//! cloning region and its g = 2, 3 forms, the simplex limit, and the
//! maps and scalars relating them.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::ScalingVector;

/// Slack accepted on region boundaries; all regions are closed.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("component {index} = {value} is negative")]
    NegativeComponent { index: usize, value: f64 },
    #[error("component {index} = {value} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the two forms of the cloning inequality disagree: {original:e} vs {scaled:e}")]
    FormsDisagree { original: f64, scaled: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, RegionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    /// `Σ s_i² ≤ 1`.
    Qc,
    /// The asymmetric cloning region for `(g, d)`.
    CloneGeneral,
    /// The cube `[0, γ]^g` with `γ` the symmetric cloning value.
    CloneSymmetricValue,
    /// The `g = 2` closed form.
    ClonePair,
    /// `Σ s_i ≤ 1`, the cloning region as `d → ∞`.
    SimplexLimit,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Qc => "qc",
            RegionKind::CloneGeneral => "clone-general",
            RegionKind::CloneSymmetricValue => "clone-symmetric-value",
            RegionKind::ClonePair => "clone-pair",
            RegionKind::SimplexLimit => "simplex-limit",
        }
    }
}

/// Outcome of a membership test. `slack ≤ BOUNDARY_TOL` means member; the
/// boundary is at `slack = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionVerdict {
    pub member: bool,
    pub slack: f64,
}

impl RegionVerdict {
    fn from_slack(slack: f64) -> Self {
        Self { member: slack <= BOUNDARY_TOL, slack }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionQuery {
    pub kind: RegionKind,
    pub g: usize,
    /// Required by the cloning kinds.
    pub d: Option<usize>,
    pub s: ScalingVector,
}

impl RegionQuery {
    pub fn evaluate(&self) -> Result<RegionVerdict> {
        if self.s.len() != self.g {
            return Err(RegionError::InvalidParameter(format!("s has length {} but g = {}", self.s.len(), self.g)));
        }
        let s = self.s.as_slice();
        let need_d = || self.d.ok_or_else(|| RegionError::InvalidParameter("d is required".into()));
        match self.kind {
            RegionKind::Qc => Ok(RegionVerdict::from_slack(-qc_membership(s)?.1)),
            RegionKind::CloneGeneral => clone_membership(self.g, need_d()?, s),
            RegionKind::CloneSymmetricValue => {
                unit_interval(s)?;
                let gamma = symmetric_clone_value(self.g, need_d()?);
                Ok(RegionVerdict::from_slack(s.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v)) - gamma))
            }
            RegionKind::ClonePair => {
                if self.g != 2 {
                    return Err(RegionError::InvalidParameter("the pair form needs g = 2".into()));
                }
                clone_pair_membership(need_d()?, s[0], s[1])
            }
            RegionKind::SimplexLimit => {
                nonnegative(s)?;
                Ok(RegionVerdict::from_slack(s.iter().sum::<f64>() - 1.0))
            }
        }
    }
}

fn nonnegative(s: &[f64]) -> Result<()> {
    match s.iter().position(|v| !(*v >= 0.0)) {
        Some(index) => Err(RegionError::NegativeComponent { index, value: s[index] }),
        None => Ok(()),
    }
}

fn unit_interval(s: &[f64]) -> Result<()> {
    match s.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(RegionError::OutOfRange { index, value: s[index] }),
        None => Ok(()),
    }
}

fn check_gd(g: usize, d: usize) -> Result<()> {
    if g < 2 || d < 2 {
        return Err(RegionError::InvalidParameter(format!("need g, d >= 2, got g = {g}, d = {d}")));
    }
    Ok(())
}

/// Quarter-circle membership, with margin `1 − Σ s_i²`.
pub fn qc_membership(s: &[f64]) -> Result<(bool, f64)> {
    nonnegative(s)?;
    let margin = 1.0 - s.iter().map(|v| v * v).sum::<f64>();
    Ok((margin >= -BOUNDARY_TOL, margin))
}

/// Cloning-region membership via `t_i = s_i(d² − 1) + 1`:
/// `‖t‖₁ − (Σ √t_i)²/(g + d − 1) ≤ d(d − 1)`. The original form
/// `(g+d−1)[g − d² + d + (d²−1) Σ s_i] ≤ (Σ √t_i)²` is evaluated too and must
/// agree; the returned slack is that of the `t` form.
pub fn clone_membership(g: usize, d: usize, s: &[f64]) -> Result<RegionVerdict> {
    check_gd(g, d)?;
    if s.len() != g {
        return Err(RegionError::InvalidParameter(format!("s has length {} but g = {g}", s.len())));
    }
    unit_interval(s)?;
    let (gf, df) = (g as f64, d as f64);
    let d2m1 = df * df - 1.0;
    let t: Vec<f64> = s.iter().map(|si| si * d2m1 + 1.0).collect();
    let l1: f64 = t.iter().sum();
    let root_sum: f64 = t.iter().map(|v| v.sqrt()).sum();
    let half_norm = root_sum * root_sum;
    let m = gf + df - 1.0;
    let slack = l1 - half_norm / m - df * (df - 1.0);

    let original = m * (gf - df * df + df + d2m1 * s.iter().sum::<f64>()) - half_norm;
    let scale = (m * l1).max(half_norm).max(1.0);
    if (original - m * slack).abs() > 1e-9 * scale {
        return Err(RegionError::FormsDisagree { original, scaled: m * slack });
    }
    Ok(RegionVerdict::from_slack(slack))
}

/// `s + t − (2/d) √((1 − s)(1 − t)) ≤ 1`.
pub fn clone_pair_membership(d: usize, s: f64, t: f64) -> Result<RegionVerdict> {
    check_gd(2, d)?;
    unit_interval(&[s, t])?;
    let slack = s + t - 2.0 / d as f64 * ((1.0 - s) * (1.0 - t)).sqrt() - 1.0;
    Ok(RegionVerdict::from_slack(slack))
}

/// The `g = 3` inequality on the slice `(s, t, t)`:
/// `(d+2)[3 − d² + d + (d²−1)(s + 2t)] ≤ (√((d²−1)s+1) + 2√((d²−1)t+1))²`.
pub fn clone_triple_slice(d: usize, s: f64, t: f64) -> Result<RegionVerdict> {
    check_gd(3, d)?;
    unit_interval(&[s, t])?;
    let df = d as f64;
    let k = df * df - 1.0;
    let lhs = (df + 2.0) * (3.0 - df * df + df + k * (s + 2.0 * t));
    let root = (k * s + 1.0).sqrt() + 2.0 * (k * t + 1.0).sqrt();
    Ok(RegionVerdict::from_slack(lhs - root * root))
}

/// `F(s)_i = s_i/(2 − s_i)`.
pub fn f_map(s: &ScalingVector) -> Result<ScalingVector> {
    unit_interval(s.as_slice())?;
    Ok(ScalingVector::new(s.as_slice().iter().map(|v| v / (2.0 - v)).collect()).expect("maps [0,1] into [0,1]"))
}

/// `γ = (g + d)/(g(1 + d))`.
pub fn symmetric_clone_value(g: usize, d: usize) -> f64 {
    assert!(g >= 1 && d >= 1, "symmetric_clone_value needs g, d >= 1");
    (g + d) as f64 / (g as f64 * (1.0 + d as f64))
}

/// `√(d − 1)`; zero for `d = 1`.
pub fn zhu_region_scale(d: usize) -> f64 {
    (d.saturating_sub(1) as f64).sqrt()
}

/// Largest `λ ∈ [0, λ_max]` with `slack(λ·direction) ≤ 0`, assuming the
/// region is star-shaped around 0 along `direction`. Bisection to machine precision.
pub fn boundary_along(lambda_max: f64, mut slack: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    if slack(lambda_max)? <= 0.0 {
        return Ok(lambda_max);
    }
    let (mut lo, mut hi) = (0.0f64, lambda_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slack(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Boundary of the cloning region along `direction`, as a multiple of it.
pub fn clone_boundary_along(g: usize, d: usize, direction: &[f64]) -> Result<f64> {
    nonnegative(direction)?;
    let top = direction.iter().fold(0.0f64, |a, &v| a.max(v));
    if top == 0.0 {
        return Err(RegionError::InvalidParameter("direction is zero".into()));
    }
    boundary_along(1.0 / top, |lam| {
        let s: Vec<f64> = direction.iter().map(|v| (v * lam).min(1.0)).collect();
        clone_membership(g, d, &s).map(|v| v.slack)
    })
}

/// One CSV row: direction components, a value (`t_star` or slack) and a region label.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRow {
    pub components: Vec<f64>,
    pub value: f64,
    pub kind: String,
}

/// Writes `s1..sg,<value_column>,region` rows.
pub fn write_region_csv<W: Write>(out: W, value_column: &str, rows: &[RegionRow]) -> Result<()> {
    let g = rows.first().map_or(0, |r| r.components.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=g).map(|i| format!("s{i}")).collect();
    header.push(value_column.to_string());
    header.push("region".into());
    w.write_record(&header).map_err(|e| RegionError::Csv(e.to_string()))?;
    for r in rows {
        if r.components.len() != g {
            return Err(RegionError::InvalidParameter("rows of different lengths".into()));
        }
        let mut rec: Vec<String> = r.components.iter().map(|v| v.to_string()).collect();
        rec.push(r.value.to_string());
        rec.push(r.kind.clone());
        w.write_record(&rec).map_err(|e| RegionError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| RegionError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qc_examples() {
        assert_eq!(qc_membership(&[1.0, 0.0, 0.0]).unwrap(), (true, 0.0));
        let r = 1.0 / 3.0f64.sqrt();
        let (m, margin) = qc_membership(&[r, r, r]).unwrap();
        assert!(m && margin.abs() < 1e-15);
        let (m, margin) = qc_membership(&[0.8, 0.8]).unwrap();
        assert!(!m && (margin + 0.28).abs() < 1e-12);
        assert!(matches!(qc_membership(&[0.1, -0.1]), Err(RegionError::NegativeComponent { index: 1, .. })));
    }

    #[test]
    fn clone_examples() {
        let v = clone_membership(2, 2, &[2.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!(v.member && v.slack.abs() <= 1e-9);
        for g in 2..6 {
            for d in 2..6 {
                let mut e1 = vec![0.0; g];
                e1[0] = 1.0;
                let v = clone_membership(g, d, &e1).unwrap();
                assert!(v.member && v.slack.abs() <= 1e-12, "g={g} d={d}: {}", v.slack);
            }
        }
        let v = clone_membership(2, 2, &[1.0, 1.0]).unwrap();
        assert!(!v.member && v.slack > 0.0);
        assert!(clone_membership(2, 2, &[1.2, 0.0]).is_err());
        assert!(clone_membership(1, 2, &[0.5]).is_err());
        assert!(clone_membership(2, 2, &[0.5]).is_err());
    }

    #[test]
    fn pair_examples() {
        let v = clone_pair_membership(2, 1.0, 0.0).unwrap();
        assert!(v.member && v.slack.abs() < 1e-15);
        for d in 2..10 {
            let s = (2.0 + d as f64) / (2.0 * (1.0 + d as f64));
            assert!(clone_pair_membership(d, s, s).unwrap().slack.abs() < 1e-12);
        }
        // 1.8 − (2/2)·0.1 − 1 = 0.7 > 0.
        let v = clone_pair_membership(2, 0.9, 0.9).unwrap();
        assert!(!v.member && (v.slack - 0.7).abs() < 1e-12);
    }

    #[test]
    fn triple_examples() {
        for d in 2..10 {
            let s = (3.0 + d as f64) / (3.0 * (1.0 + d as f64));
            let v = clone_triple_slice(d, s, s).unwrap();
            assert!(v.member && v.slack.abs() < 1e-9, "d={d}: {}", v.slack);
        }
        let v = clone_triple_slice(3, 1.0, 0.0).unwrap();
        assert!(v.member && v.slack.abs() < 1e-9);
        assert!(!clone_triple_slice(2, 0.9, 0.9).unwrap().member);
    }

    #[test]
    fn triple_slice_matches_general_form() {
        for d in 2..6 {
            for i in 0..=40 {
                for j in 0..=40 {
                    let (s, t) = (i as f64 / 40.0, j as f64 / 40.0);
                    let a = clone_triple_slice(d, s, t).unwrap();
                    let b = clone_membership(3, d, &[s, t, t]).unwrap();
                    assert!((a.slack - (d as f64 + 2.0) * b.slack).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn f_map_examples() {
        let ones = ScalingVector::uniform(3, 1.0).unwrap();
        assert_eq!(f_map(&ones).unwrap(), ones);
        let zeros = ScalingVector::uniform(3, 0.0).unwrap();
        assert_eq!(f_map(&zeros).unwrap(), zeros);
        let v = f_map(&ScalingVector::new(vec![2.0 / 3.0]).unwrap()).unwrap();
        assert!((v.as_slice()[0] - 0.5).abs() < 1e-15);
        assert!(f_map(&ScalingVector::new(vec![1.5]).unwrap()).is_err());
    }

    #[test]
    fn symmetric_value_examples() {
        assert!((symmetric_clone_value(2, 2) - 2.0 / 3.0).abs() < 1e-15);
        for d in 1..20 {
            assert_eq!(symmetric_clone_value(1, d), 1.0);
        }
        let d = 3;
        assert!((symmetric_clone_value(1_000_000, d) - 0.25).abs() < 1e-5);
    }

    #[test]
    fn zhu_scale_examples() {
        assert_eq!(zhu_region_scale(2), 1.0);
        assert_eq!(zhu_region_scale(5), 2.0);
        assert_eq!(zhu_region_scale(1), 0.0);
    }

    #[test]
    fn symmetric_boundary_by_bisection() {
        for g in 2..=8 {
            for d in 2..=8 {
                let b = clone_boundary_along(g, d, &vec![1.0; g]).unwrap();
                assert!((b - symmetric_clone_value(g, d)).abs() < 1e-12, "g={g} d={d}");
            }
        }
    }

    #[test]
    fn clone_region_is_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut checked = 0;
        while checked < 2000 {
            let g = rng.random_range(2..=4);
            let d = rng.random_range(2..=5);
            let a: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
            let b: Vec<f64> = (0..g).map(|_| rng.random_range(0.0..1.0)).collect();
            if !(clone_membership(g, d, &a).unwrap().member && clone_membership(g, d, &b).unwrap().member) {
                continue;
            }
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            assert!(clone_membership(g, d, &mid).unwrap().member);
            checked += 1;
        }
    }

    #[test]
    fn query_dispatch() {
        let q = |kind, g, d, s: Vec<f64>| RegionQuery { kind, g, d, s: ScalingVector::new(s).unwrap() }.evaluate();
        assert!(q(RegionKind::Qc, 2, None, vec![0.6, 0.8]).unwrap().member);
        assert!(q(RegionKind::CloneGeneral, 2, Some(2), vec![0.6, 0.6]).unwrap().member);
        assert!(q(RegionKind::CloneGeneral, 2, None, vec![0.6, 0.6]).is_err());
        assert!(q(RegionKind::CloneSymmetricValue, 2, Some(2), vec![2.0 / 3.0, 0.1]).unwrap().member);
        assert!(!q(RegionKind::CloneSymmetricValue, 2, Some(2), vec![0.7, 0.1]).unwrap().member);
        assert!(q(RegionKind::ClonePair, 3, Some(2), vec![0.1, 0.1, 0.1]).is_err());
        assert!(q(RegionKind::SimplexLimit, 3, None, vec![0.5, 0.25, 0.25]).unwrap().member);
        assert!(!q(RegionKind::SimplexLimit, 3, None, vec![0.5, 0.25, 0.3]).unwrap().member);
        assert!(q(RegionKind::Qc, 3, None, vec![0.5]).is_err());
    }

    #[test]
    fn csv_output() {
        let rows = vec![
            RegionRow { components: vec![1.0, 0.0], value: 1.0, kind: "qc".into() },
            RegionRow { components: vec![0.5, 0.5], value: -0.5, kind: "qc".into() },
        ];
        let mut buf = Vec::new();
        write_region_csv(&mut buf, "slack", &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "s1,s2,slack,region\n1,0,1,qc\n0.5,0.5,-0.5,qc\n");
    }
}
