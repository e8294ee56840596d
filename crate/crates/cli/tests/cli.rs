use std::path::Path;
use std::process::Command;

use nehari_cli::config::{load_config, Mode, Overrides, RunConfig};
use nehari_core::symfun::TrajectoryCoeffs;
use nehari_core::{make_space, SymmetryClass};
use serde_json::Value;

fn nehari(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_nehari")).args(args).output().expect("binary runs");
    out.status.code().expect("exit code")
}

fn read_doc(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn without_timings(path: &Path) -> String {
    let mut v = read_doc(path);
    v.as_object_mut().unwrap().remove("timings");
    v["config"]["output"].as_object_mut().unwrap().remove("dir");
    serde_json::to_string(&v).unwrap()
}

#[test]
fn quartic_solve_exits_zero_with_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = nehari(&["solve-direct", "--set", "model.name=\"power\"", "--period", "1", "--out", out]);
    assert_eq!(code, 0);
    for ext in ["json", "csv", "svg"] {
        assert!(dir.path().join(format!("result.{ext}")).exists(), "missing .{ext}");
    }
    let doc = read_doc(&dir.path().join("result.json"));
    assert_eq!(doc["exit_code"], 0);
    assert_eq!(doc["certificate"]["certified"], true);
    assert_eq!(doc["certificate"]["minimal_period"]["certified_period"], 1.0);
    assert_eq!(doc["certificate"]["minimal_period"]["verdict"], "MINIMAL");
}

#[test]
fn trajectory_matches_resynthesis_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = nehari(&["solve-direct", "--set", "model.name=\"power\"", "--set", "check_truncation=false", "--period", "2", "--out", out]);
    assert_eq!(code, 0);
    let doc = read_doc(&dir.path().join("result.json"));
    let coeffs: Vec<f64> = serde_json::from_value(doc["candidate"]["coefficients"].clone()).unwrap();
    let n = doc["candidate"]["num_modes"].as_u64().unwrap() as usize;
    let sp = make_space(2.0, 1, SymmetryClass::E1, n).unwrap();
    let x = TrajectoryCoeffs::new(&sp, coeffs).unwrap();
    let s = x.synthesize();

    let mut rd = csv::Reader::from_path(dir.path().join("result.csv")).unwrap();
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "x_1", "v_1"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), sp.grid_points());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<f64>().unwrap(), sp.times()[i]);
        assert_eq!(r[1].parse::<f64>().unwrap(), s.values[i]);
        assert_eq!(r[2].parse::<f64>().unwrap(), s.derivs[i]);
    }
}

#[test]
fn quadratic_condition_check_exits_three_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(nehari(&["check-conditions", "--set", "model.name=\"quadratic\"", "--out", out]), 3);
    let doc = read_doc(&dir.path().join("result.json"));
    let v2 = doc["conditions"]["checks"].as_array().unwrap().iter().find(|c| c["id"] == "V2").unwrap().clone();
    assert_eq!(v2["verdict"], "fail");
    assert!(v2["witness"].is_object());
}

#[test]
fn missing_period_exits_one_without_document() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert_eq!(nehari(&["solve-direct", "--set", "model.name=\"power\"", "--out", out.to_str().unwrap()]), 1);
    assert!(!out.exists());
}

#[test]
fn malformed_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[model]\nname = \"power\"\nperiod = 1.0\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(nehari(&["solve-direct", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert!(!out.exists());
}

#[test]
fn unknown_flag_exits_one() {
    assert_eq!(nehari(&["solve-direct", "--bogus"]), 1);
}

#[test]
fn injected_third_harmonic_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = nehari(&[
        "certify",
        "--set",
        "model.name=\"power\"",
        "--set",
        "candidate.coefficients=[0.0, 1.0, 0.0, 0.0]",
        "--period",
        "1",
        "--modes",
        "4",
        "--out",
        out,
    ]);
    assert_eq!(code, 2);
    let doc = read_doc(&dir.path().join("result.json"));
    assert_eq!(doc["certificate"]["minimal_period"]["active_frequency_gcd"], 3);
    assert_eq!(doc["certificate"]["certified"], false);
}

#[test]
fn empty_sweep_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let code = nehari(&["sweep", "--set", "model.name=\"power\"", "--set", "sweep.periods=[]", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!out.exists());
}

#[test]
fn rerun_from_config_file_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "mode = \"solve_direct\"\nperiod_T = 1.0\n\n[model]\nname = \"power\"\nparams = { beta = 4.0 }\n\n[solver]\nseed = 11\nrestarts = 3\n")
        .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(nehari(&["solve-direct", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap()]), 0);
    }
    assert_eq!(without_timings(&a.join("result.json")), without_timings(&b.join("result.json")));
    assert_eq!(std::fs::read(a.join("result.csv")).unwrap(), std::fs::read(b.join("result.csv")).unwrap());

    // The document itself is an accepted config.
    let c = dir.path().join("c");
    assert_eq!(nehari(&["solve-direct", "--config", a.join("result.json").to_str().unwrap(), "--out", c.to_str().unwrap()]), 0);
    assert_eq!(without_timings(&a.join("result.json")), without_timings(&c.join("result.json")));
}

#[test]
fn echoed_config_round_trips() {
    let ov = Overrides {
        mode: Some(Mode::SolveDual),
        set: vec!["model.name=\"power\"".into(), "dimension=2".into(), "conditions.eps=2e-3".into()],
        period: Some(std::f64::consts::TAU),
        seed: Some(5),
        ..Default::default()
    };
    let cfg = load_config(None, &ov).unwrap();
    let doc = nehari_cli::document::ResultDocument::new(&cfg);
    let v: Value = serde_json::from_str(&doc.to_json()).unwrap();
    let back: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(back, cfg);
    let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);
}
