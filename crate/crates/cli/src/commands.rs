use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use jm_core::constructions::{extremal_effect_tuple, mub_effect_tuple, mub_family, spin_system, zhu_bound_with};
use jm_core::jm::{check_compatibility_with, region_sweep, robustness_with, Compatibility, JmOptions};
use jm_core::linalg::HermitianMatrix;
use jm_core::quantum::{EffectTuple, NoiseModel, ScalingVector};
use jm_core::regions::{
    clone_boundary_along, clone_membership, symmetric_clone_value, write_region_csv, RegionKind, RegionQuery,
    RegionRow,
};
use jm_core::sdp::SolverOptions;
use jm_core::selftest::run_selftest;
use jm_core::spectra::{diamond_gauge, diamond_membership, matrix_ball_membership, MatrixTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::{read_file, usage, with_schema, Command, DirectionSource, Failure, Format, Global, Noise, Output};

type Result<T> = std::result::Result<T, Failure>;

fn solver(g: &Global) -> SolverOptions {
    SolverOptions { tol: g.tol, max_iter: g.max_iter, ..SolverOptions::default() }
}

fn jm_options(g: &Global) -> JmOptions {
    JmOptions { solver: solver(g), g_cap: g.cap_g }
}

fn noise_model(n: Noise) -> NoiseModel {
    match n {
        Noise::Balanced => NoiseModel::Balanced,
        Noise::Linear => NoiseModel::Linear,
    }
}

fn load_effects(path: &Path) -> Result<EffectTuple> {
    let text = read_file(path)?;
    Ok(EffectTuple::from_json(&text).with_context(|| format!("parsing effect tuple {}", path.display()))?)
}

fn json_only(g: &Global, command: &str) -> Result<()> {
    match g.format {
        None | Some(Format::Json) => Ok(()),
        Some(f) => Err(usage(format!("{command} supports only --format json, got {f:?}"))),
    }
}

fn csv_text(value_column: &str, rows: &[RegionRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_region_csv(&mut buf, value_column, rows)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn dispatch(g: &Global, command: Command) -> Result<Output> {
    match command {
        Command::JmCheck { effects } => jm_check(g, &effects),
        Command::Robustness { effects, direction, noise, t_cap } => robustness(g, &effects, &direction, noise, t_cap),
        Command::Sweep { effects, noise, directions } => sweep(g, &effects, noise, &directions),
        Command::SpinGen { g: count, as_effects } => spin_gen(g, count, as_effects),
        Command::MubGen { d, subsets } => mub_gen(g, d, subsets.as_deref()),
        Command::Zhu { effects } => zhu(g, &effects),
        Command::CloneRegion { g: count, d, s, grid, boundary } => clone_region(g, count, d, s, grid, boundary),
        Command::DiamondCheck { matrices, effects } => diamond_check(g, matrices.as_deref(), effects.as_deref()),
        Command::Selftest { only } => selftest(g, &only),
    }
}

fn jm_check(g: &Global, path: &Path) -> Result<Output> {
    json_only(g, "jm-check")?;
    let t = load_effects(path)?;
    let verdict = check_compatibility_with(&t, &jm_options(g))?;
    let mut v = with_schema(verdict.to_json());
    v["g"] = json!(t.len());
    v["dim"] = json!(t.dim());
    v["iterations"] = json!(verdict.iterations);
    Ok(Output::json(&v))
}

fn robustness(g: &Global, path: &Path, dir: &ScalingVector, noise: Noise, t_cap: Option<f64>) -> Result<Output> {
    let t = load_effects(path)?;
    let r = robustness_with(&t, dir, &noise_model(noise), t_cap, &jm_options(g))?;
    match g.format {
        Some(Format::Csv) => {
            let rows = [RegionRow {
                components: dir.as_slice().to_vec(),
                value: r.t_star,
                kind: if r.capped { "capped" } else { "boundary" }.into(),
            }];
            Ok(Output { text: csv_text("t_star", &rows)?, ok: true })
        }
        Some(Format::Text) => Err(usage("robustness supports --format json or csv")),
        _ => {
            let mut v = with_schema(r.to_json());
            v["direction"] = json!(dir);
            v["noise"] = json!(noise_model(noise));
            Ok(Output::json(&v))
        }
    }
}

/// `(cos θ, sin θ)` with rounding noise at the axes removed.
fn quadrant_direction(th: f64) -> [f64; 2] {
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    [snap(th.cos()), snap(th.sin())]
}

fn unit_positive(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-3).then(|| v.into_iter().map(|x| x / n).collect())
}

fn directions(g: &Global, count: usize, src: &DirectionSource) -> Result<Vec<ScalingVector>> {
    let raw: Vec<Vec<f64>> = if let Some(n) = src.angles {
        if count != 2 {
            return Err(usage(format!("--angles needs g = 2, the tuple has g = {count}")));
        }
        if n < 2 {
            return Err(usage("--angles needs at least 2 directions"));
        }
        (0..n).map(|k| quadrant_direction(FRAC_PI_2 * k as f64 / (n - 1) as f64).to_vec()).collect()
    } else if let Some(n) = src.random {
        let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if let Some(v) = unit_positive((0..count).map(|_| rng.random_range(0.0..1.0)).collect()) {
                out.push(v);
            }
        }
        out
    } else if let Some(path) = &src.directions {
        let text = read_file(path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing directions {}", path.display()))?
    } else {
        return Err(usage("one of --angles, --random, --directions is required"));
    };
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v.len() != count {
                return Err(Failure::Domain(anyhow::anyhow!(
                    "direction {i} has length {} but the tuple has g = {count}",
                    v.len()
                )));
            }
            Ok(ScalingVector::new(v).with_context(|| format!("direction {i}"))?)
        })
        .collect()
}

fn sweep(g: &Global, path: &Path, noise: Noise, src: &DirectionSource) -> Result<Output> {
    let t = load_effects(path)?;
    let dirs = directions(g, t.len(), src)?;
    let model = noise_model(noise);
    let entries = region_sweep(&t, &dirs, &model, &jm_options(g));
    let ok = entries.iter().all(|e| e.result.is_ok());
    match g.format {
        Some(Format::Csv) => {
            let rows: Vec<RegionRow> = entries
                .iter()
                .map(|e| match &e.result {
                    Ok(r) => RegionRow {
                        components: e.direction.as_slice().to_vec(),
                        value: r.t_star,
                        kind: if r.capped { "capped" } else { "boundary" }.into(),
                    },
                    Err(_) => RegionRow {
                        components: e.direction.as_slice().to_vec(),
                        value: f64::NAN,
                        kind: "error".into(),
                    },
                })
                .collect();
            Ok(Output { text: csv_text("t_star", &rows)?, ok })
        }
        Some(Format::Text) => Err(usage("sweep supports --format json or csv")),
        None | Some(Format::Json) => {
            let list: Vec<Value> = entries
                .iter()
                .enumerate()
                .map(|(index, e)| match &e.result {
                    Ok(r) => json!({
                        "index": index,
                        "direction": e.direction,
                        "t_star": r.t_star,
                        "t_cap": r.t_cap,
                        "capped": r.capped,
                    }),
                    Err(err) => json!({ "index": index, "direction": e.direction, "error": err.to_string() }),
                })
                .collect();
            let v = json!({
                "schema": jm_core::quantum::SCHEMA,
                "g": t.len(),
                "dim": t.dim(),
                "noise": model,
                "entries": list,
            });
            Ok(Output { ok, ..Output::json(&v) })
        }
    }
}

fn spin_gen(g: &Global, count: usize, as_effects: bool) -> Result<Output> {
    json_only(g, "spin-gen")?;
    if as_effects {
        let t = extremal_effect_tuple(count)?;
        let v: Value = serde_json::from_str(&t.to_json()).expect("effect tuple JSON parses");
        return Ok(Output::json(&with_schema(v)));
    }
    let sys = spin_system(count)?;
    let mut v = sys.to_json();
    v["defects"] = json!(sys.defects());
    Ok(Output::json(&v))
}

fn parse_subsets(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(';')
        .map(|part| {
            part.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad subset entry {x:?} in {text:?}"))))
                .collect()
        })
        .collect()
}

fn mub_gen(g: &Global, d: usize, subsets: Option<&str>) -> Result<Output> {
    json_only(g, "mub-gen")?;
    let fam = mub_family(d)?;
    if let Some(text) = subsets {
        let t = mub_effect_tuple(&fam, &parse_subsets(text)?)?;
        let v: Value = serde_json::from_str(&t.to_json()).expect("effect tuple JSON parses");
        return Ok(Output::json(&with_schema(v)));
    }
    let (orthonormality, unbiasedness) = fam.defects();
    let mut v = fam.to_json();
    v["defects"] = json!({ "orthonormality": orthonormality, "unbiasedness": unbiasedness });
    Ok(Output::json(&v))
}

fn zhu(g: &Global, path: &Path) -> Result<Output> {
    json_only(g, "zhu")?;
    let t = load_effects(path)?;
    let povms: Vec<Vec<HermitianMatrix>> =
        t.effects().iter().map(|e| vec![e.clone(), &HermitianMatrix::identity(t.dim()) - e]).collect();
    let bound = zhu_bound_with(&povms, &solver(g))?;
    let v = json!({
        "schema": jm_core::quantum::SCHEMA,
        "g": t.len(),
        "dim": t.dim(),
        "value": bound.value,
        "certifies_incompatible": bound.value > t.dim() as f64,
        "h": bound.h,
    });
    Ok(Output::json(&v))
}

fn clone_region(
    g: &Global,
    count: usize,
    d: usize,
    s: Option<ScalingVector>,
    grid: Option<usize>,
    boundary: Option<usize>,
) -> Result<Output> {
    if count < 2 || d < 2 {
        return Err(usage("clone-region needs --g and --d of at least 2"));
    }
    if let Some(s) = s {
        json_only(g, "clone-region --s")?;
        let mut kinds = vec![
            RegionKind::Qc,
            RegionKind::CloneGeneral,
            RegionKind::CloneSymmetricValue,
            RegionKind::SimplexLimit,
        ];
        if count == 2 {
            kinds.push(RegionKind::ClonePair);
        }
        let mut regions = serde_json::Map::new();
        for kind in kinds {
            let verdict = RegionQuery { kind, g: count, d: Some(d), s: s.clone() }.evaluate()?;
            regions.insert(kind.name().into(), json!(verdict));
        }
        let v = json!({
            "schema": jm_core::quantum::SCHEMA,
            "g": count,
            "d": d,
            "s": s,
            "symmetric_clone_value": symmetric_clone_value(count, d),
            "regions": regions,
        });
        return Ok(Output::json(&v));
    }
    if count != 2 {
        return Err(usage("--grid and --boundary need g = 2; use --s for other g"));
    }
    let rows: Vec<RegionRow> = if let Some(n) = grid {
        if n < 2 {
            return Err(usage("--grid needs at least 2 points per side"));
        }
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let p = [i as f64 / (n - 1) as f64, j as f64 / (n - 1) as f64];
                let verdict = clone_membership(2, d, &p)?;
                let kind = if verdict.member { "inside" } else { "outside" };
                rows.push(RegionRow { components: p.to_vec(), value: verdict.slack, kind: kind.into() });
            }
        }
        rows
    } else if let Some(n) = boundary {
        if n < 2 {
            return Err(usage("--boundary needs at least 2 directions"));
        }
        (0..n)
            .map(|k| {
                let dir = quadrant_direction(FRAC_PI_2 * k as f64 / (n - 1) as f64);
                let lam = clone_boundary_along(2, d, &dir)?;
                Ok(RegionRow { components: dir.iter().map(|v| v * lam).collect(), value: lam, kind: "boundary".into() })
            })
            .collect::<std::result::Result<_, jm_core::regions::RegionError>>()?
    } else {
        return Err(usage("one of --s, --grid, --boundary is required"));
    };
    let value_column = if grid.is_some() { "slack" } else { "lambda" };
    match g.format {
        Some(Format::Text) => Err(usage("clone-region supports --format json or csv")),
        Some(Format::Csv) => Ok(Output { text: csv_text(value_column, &rows)?, ok: true }),
        None | Some(Format::Json) => {
            let list: Vec<Value> =
                rows.iter().map(|r| json!({ "s": r.components, value_column: r.value, "region": r.kind })).collect();
            Ok(Output::json(&json!({ "schema": jm_core::quantum::SCHEMA, "g": 2, "d": d, "rows": list })))
        }
    }
}

fn diamond_check(g: &Global, matrices: Option<&Path>, effects: Option<&Path>) -> Result<Output> {
    json_only(g, "diamond-check")?;
    if let Some(path) = matrices {
        let text = read_file(path)?;
        let x = MatrixTuple::from_json(&text).with_context(|| format!("parsing matrix tuple {}", path.display()))?;
        let v = json!({
            "schema": jm_core::quantum::SCHEMA,
            "g": x.g(),
            "level": x.level(),
            "gauge": diamond_gauge(&x)?,
            "diamond": diamond_membership(&x)?,
            "ball": matrix_ball_membership(&x)?,
        });
        return Ok(Output::json(&v));
    }
    let path = effects.ok_or_else(|| usage("one of --matrices, --effects is required"))?;
    let t = load_effects(path)?;
    let verdict = jm_core::spectra::diamond_free_inclusion_with(&t, &jm_options(g))?;
    let level1 = jm_core::spectra::diamond_level1_inclusion(t.effects())?;
    let v = json!({
        "schema": jm_core::quantum::SCHEMA,
        "g": t.len(),
        "dim": t.dim(),
        "level1_inclusion": level1,
        "free_inclusion": match verdict.status {
            Compatibility::Compatible => json!(true),
            Compatibility::Incompatible => json!(false),
            Compatibility::Indeterminate => Value::Null,
        },
        "verdict": verdict.to_json(),
    });
    Ok(Output::json(&v))
}

fn selftest(g: &Global, only: &[u32]) -> Result<Output> {
    if let Some(bad) = only.iter().find(|id| !jm_core::selftest::CHECKS.iter().any(|(i, _)| i == *id)) {
        return Err(usage(format!("no selftest check with id {bad}")));
    }
    let reports = run_selftest(&solver(g), only);
    let ok = reports.iter().all(|r| r.pass);
    let text = match g.format {
        Some(Format::Json) => {
            let v = json!({ "schema": jm_core::quantum::SCHEMA, "pass": ok, "checks": reports });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("JSON values serialize"))
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "name", "pass", "measured", "expected", "seconds"]).context("writing CSV")?;
            for r in &reports {
                w.write_record([
                    r.id.to_string(),
                    r.name.to_string(),
                    r.pass.to_string(),
                    r.measured.clone(),
                    r.expected.clone(),
                    format!("{:.3}", r.seconds),
                ])
                .context("writing CSV")?;
            }
            String::from_utf8(w.into_inner().context("writing CSV")?).expect("CSV output is UTF-8")
        }
        None | Some(Format::Text) => {
            let mut s = String::new();
            for r in &reports {
                let _ = writeln!(s, "{}", r.line());
            }
            let passed = reports.iter().filter(|r| r.pass).count();
            let _ = writeln!(s, "{passed}/{} checks passed", reports.len());
            s
        }
    };
    Ok(Output { text, ok })
}
