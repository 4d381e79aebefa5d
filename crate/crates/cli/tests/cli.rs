use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn jmsdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jmsdp")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn jm_check_reports_pauli_pair_incompatible() {
    let out = jmsdp(&["jm-check", "--effects", data("pauli-xz.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["status"], "Incompatible");
    assert_eq!(v["schema"], "specjm/1");
}

#[test]
fn robustness_of_pauli_pair() {
    let path = data("pauli-xz.json");
    let out = jmsdp(&["robustness", "--effects", path.to_str().unwrap(), "--direction", "1,1", "--noise", "balanced"]);
    assert_eq!(out.status.code(), Some(0));
    let t = json_stdout(&out)["t_star"].as_f64().unwrap();
    assert!((t - 0.5f64.sqrt()).abs() < 1e-5, "{t}");
}

#[test]
fn spin_gen_writes_a_valid_system() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("spins.json");
    let out = jmsdp(&["spin-gen", "--g", "5", "--out", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["g"], 5);
    assert_eq!(v["dim"], 4);
    assert_eq!(v["matrices"].as_array().unwrap().len(), 5);
    for key in ["anticommutation", "unitarity", "trace"] {
        assert!(v["defects"][key].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn generated_effects_feed_back_into_robustness() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("extremal.json");
    let out = jmsdp(&["spin-gen", "--g", "4", "--as-effects", "--out", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = jmsdp(&["robustness", "--effects", file.to_str().unwrap(), "--direction", "1,1,1,1"]);
    let t = json_stdout(&out)["t_star"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 1e-4, "{t}");
}

#[test]
fn effect_json_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let out = jmsdp(&["mub-gen", "--d", "3", "--subsets", "0;1;0,2", "--out", first.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&first).unwrap();
    let parsed = jm_core::quantum::EffectTuple::from_json(&text).unwrap();
    std::fs::write(&second, parsed.to_json()).unwrap();
    let again = jm_core::quantum::EffectTuple::from_json(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(parsed, again);
    // Both files give identical verdicts.
    let a = jmsdp(&["jm-check", "--effects", first.to_str().unwrap()]);
    let b = jmsdp(&["jm-check", "--effects", second.to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_is_ordered_and_byte_identical() {
    let path = data("pauli-xyz.json");
    let args = ["sweep", "--effects", path.to_str().unwrap(), "--random", "12", "--seed", "7"];
    let a = jmsdp(&args);
    let b = jmsdp(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json_stdout(&a);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 12);
    for (i, e) in entries.iter().enumerate() {
        assert_eq!(e["index"], i);
    }
}

#[test]
fn sweep_csv_has_one_row_per_direction() {
    let path = data("pauli-xz.json");
    let out = jmsdp(&["sweep", "--effects", path.to_str().unwrap(), "--angles", "9", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s1,s2,t_star,region"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let (x, y, t): (f64, f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        assert!((t * (x * x + y * y).sqrt() - 1.0).abs() < 1e-4, "{row}");
    }
}

#[test]
fn thread_count_does_not_change_sweep_output() {
    let path = data("pauli-xyz.json");
    let args = ["sweep", "--effects", path.to_str().unwrap(), "--random", "8"];
    let one = Command::new(env!("CARGO_BIN_EXE_jmsdp")).args(args).env("JMSDP_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_jmsdp")).args(args).env("JMSDP_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(jmsdp(&["no-such-command"]).status.code(), Some(2));
    let path = data("pauli-xz.json");
    assert_eq!(jmsdp(&["robustness", "--effects", path.to_str().unwrap(), "--direction", "1,x"]).status.code(), Some(2));
    assert_eq!(jmsdp(&["clone-region", "--g", "3", "--d", "2", "--grid", "4"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_jmsdp"))
        .args(["sweep", "--effects", path.to_str().unwrap(), "--angles", "3"])
        .env("JMSDP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_1() {
    assert_eq!(jmsdp(&["jm-check", "--effects", "/nonexistent/effects.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    // 2·I is not an effect.
    std::fs::write(&bad, r#"{"g":1,"dim":1,"effects":[{"dim":1,"re":[[2.0]],"im":[[0.0]]}]}"#).unwrap();
    assert_eq!(jmsdp(&["jm-check", "--effects", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(jmsdp(&["mub-gen", "--d", "4"]).status.code(), Some(1));
}

#[test]
fn clone_region_classifies_points() {
    let out = jmsdp(&["clone-region", "--g", "2", "--d", "2", "--s", "0.75,0.75"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    // (g + d)/(g(1 + d)) = 2/3 for g = d = 2.
    assert!((v["symmetric_clone_value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["regions"]["clone-general"]["member"], false);
    assert_eq!(v["regions"]["qc"]["member"], false);
}

#[test]
fn zhu_and_diamond_checks_agree_on_the_pauli_pair() {
    let path = data("pauli-xz.json");
    let z = json_stdout(&jmsdp(&["zhu", "--effects", path.to_str().unwrap()]));
    assert!((z["value"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(z["certifies_incompatible"], true);
    let d = json_stdout(&jmsdp(&["diamond-check", "--effects", path.to_str().unwrap()]));
    assert_eq!(d["free_inclusion"], false);
    assert_eq!(d["level1_inclusion"], true);
}

#[test]
fn selftest_subset_passes_and_reports_timings() {
    let out = jmsdp(&["selftest", "--only", "1,7", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    for c in checks {
        assert_eq!(c["pass"], true);
        assert!(c["seconds"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn corrupted_tolerance_fails_the_named_check() {
    let out = jmsdp(&["selftest", "--only", "1", "--tol", "0.2"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL [ 1] Pauli pair robustness"), "{text}");
}
