//! End-to-end checks of the scenario runner: exit codes, artifact layout,
//! seeded determinism and config validation.

use std::path::{Path, PathBuf};

use mobius_cli::{run_config_file, CliOverrides, RunStatus};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn temp_out(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mobius_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn jacobian_scenario_passes() {
    let out = temp_out("jac");
    let (status, report) = run_config_file(
        &configs_dir().join("jacobian_n3.json"),
        &out,
        &CliOverrides::default(),
    )
    .unwrap();
    assert_eq!(status, RunStatus::Pass);
    assert!(report.pass);
    let max = report.verdicts["max_residual"].as_f64().unwrap();
    assert!(max < 1e-6, "max residual {max}");
    assert!(out.join("jacobian-n3.report.json").exists());
}

#[test]
fn cone_scenario_writes_point_clouds() {
    let out = temp_out("cone");
    let (status, report) = run_config_file(
        &configs_dir().join("cone_homothety_up.json"),
        &out,
        &CliOverrides::default(),
    )
    .unwrap();
    assert_eq!(status, RunStatus::Pass);
    assert_eq!(report.verdicts["classification"]["case"], "ShrinkToVertex");
    // residual table decreasing
    let rows = &report.residuals;
    for w in rows.windows(2) {
        let a = w[0]["residual_rad"].as_f64().unwrap();
        let b = w[1]["residual_rad"].as_f64().unwrap();
        assert!(b <= a + 1e-9);
    }
    for name in ["cone-up.subcone.csv", "cone-up.subcone.chart.csv", "cone-up.image.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    // round-trip of the emitted cloud is bit-exact
    let set = mobius_cli::csvio::read_point_cloud(&out.join("cone-up.subcone.csv"), 0.01).unwrap();
    assert!(set.len() > 100);
}

#[test]
fn malformed_configs_are_rejected() {
    let out = temp_out("bad");
    let dir = temp_out("bad_cfg");
    // unknown field
    let p1 = dir.join("unknown_field.json");
    std::fs::write(
        &p1,
        r#"{ "schema": 1, "scenario": "jacobian-check", "n": 2, "bogus": true }"#,
    )
    .unwrap();
    assert!(run_config_file(&p1, &out, &CliOverrides::default()).is_err());
    // wrong schema version
    let p2 = dir.join("schema.json");
    std::fs::write(&p2, r#"{ "schema": 2, "scenario": "jacobian-check", "n": 2 }"#).unwrap();
    assert!(run_config_file(&p2, &out, &CliOverrides::default()).is_err());
    // unknown scenario
    let p3 = dir.join("scenario.json");
    std::fs::write(&p3, r#"{ "schema": 1, "scenario": "frobnicate", "n": 2 }"#).unwrap();
    assert!(run_config_file(&p3, &out, &CliOverrides::default()).is_err());
    // not json at all
    let p4 = dir.join("garbage.json");
    std::fs::write(&p4, "not json").unwrap();
    assert!(run_config_file(&p4, &out, &CliOverrides::default()).is_err());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mobius");
    let out = temp_out("exit");
    // exit 0 on a passing scenario
    let ok = std::process::Command::new(bin)
        .args(["--config"])
        .arg(configs_dir().join("jacobian_n3.json"))
        .args(["--out-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    // exit 2 on config errors
    let bad_cfg = out.join("bad.json");
    std::fs::write(&bad_cfg, "{}").unwrap();
    let bad = std::process::Command::new(bin)
        .args(["--config"])
        .arg(&bad_cfg)
        .args(["--out-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    // exit 1 on assertion failure: maximality with an inverted expectation
    let fail_cfg = out.join("fail.json");
    std::fs::write(
        &fail_cfg,
        r#"{
            "schema": 1, "scenario": "maximality", "n": 2, "out": "fail",
            "group": { "kind": "translation", "v": [1.0, 0.0] },
            "fixture": { "kind": "sphere-minus-point" },
            "expect_maximal": false
        }"#,
    )
    .unwrap();
    let failing = std::process::Command::new(bin)
        .args(["--config"])
        .arg(&fail_cfg)
        .args(["--out-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    // the failing run still wrote a structured report
    let report_text = std::fs::read_to_string(out.join("fail.report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&report_text).unwrap();
    assert_eq!(report["pass"], false);
    assert!(!report["failures"].as_array().unwrap().is_empty());
}

#[test]
fn reports_are_deterministic_modulo_wall_clock() {
    let cfg = configs_dir().join("limit_set_schottky.json");
    let out1 = temp_out("det1");
    let out2 = temp_out("det2");
    let overrides = CliOverrides { seed: Some(99), ..CliOverrides::default() };
    run_config_file(&cfg, &out1, &overrides).unwrap();
    run_config_file(&cfg, &out2, &overrides).unwrap();
    let a = std::fs::read_to_string(out1.join("schottky.report.json")).unwrap();
    let b = std::fs::read_to_string(out2.join("schottky.report.json")).unwrap();
    let na = mobius_cli::report::normalized_for_comparison(&a).unwrap();
    let nb = mobius_cli::report::normalized_for_comparison(&b).unwrap();
    assert_eq!(na, nb, "reports differ beyond the wall clock");
    // point clouds byte-identical
    let ca = std::fs::read(out1.join("schottky.points.csv")).unwrap();
    let cb = std::fs::read(out2.join("schottky.points.csv")).unwrap();
    assert_eq!(ca, cb);
}

#[test]
fn limit_set_chart_companion_has_equal_rows() {
    let out = temp_out("rows");
    run_config_file(&configs_dir().join("limit_set_schottky.json"), &out, &CliOverrides::default())
        .unwrap();
    let main = std::fs::read_to_string(out.join("schottky.points.csv")).unwrap();
    let chart = std::fs::read_to_string(out.join("schottky.points.chart.csv")).unwrap();
    assert_eq!(main.lines().count(), chart.lines().count());
}

#[test]
fn schedule_override_shortens_cone_runs() {
    let out = temp_out("sched");
    let overrides = CliOverrides { schedule_max_exp: Some(6), ..CliOverrides::default() };
    let (_, report) =
        run_config_file(&configs_dir().join("cone_homothety_up.json"), &out, &overrides).unwrap();
    assert_eq!(report.provenance.schedule.len(), 7);
}

#[test]
fn normal_domain_accepts_explicit_pair_lists() {
    let out = temp_out("pairlist");
    let cfg = out.join("pairs.json");
    std::fs::write(
        &cfg,
        r#"{
            "schema": 1, "scenario": "normal-domain", "n": 2, "out": "pairs",
            "domain": { "kind": "cone-graph", "slope": 1.0, "dim": 2 },
            "h": 0.02,
            "pair_list": [ { "x": [-1.0, -0.98], "y": [1.0, -0.98] } ]
        }"#,
    )
    .unwrap();
    let (status, report) = run_config_file(&cfg, &out, &CliOverrides::default()).unwrap();
    assert_eq!(status, RunStatus::Pass, "{:?}", report.failures);
    assert_eq!(report.residuals.len(), 1);
    let ratio = report.residuals[0]["ratio"].as_f64().unwrap();
    assert!(ratio > 1.2 && ratio < 1.6, "cone pair ratio {ratio}");
}

#[test]
fn cone_config_accepts_asserted_limits() {
    let out = temp_out("asserted");
    let cfg = out.join("asserted.json");
    // a rotating translation whose tails stabilize only along a subsequence;
    // the config asserts the limits instead
    std::fs::write(
        &cfg,
        r#"{
            "schema": 1, "scenario": "cone-dynamics", "n": 2, "out": "asserted",
            "cone": { "center": [0.0, 1.0], "alpha": 0.4, "lambda": 1.0 },
            "resolution": 0.02,
            "sequence": {
                "factors": [
                    { "kind": "translation", "dir": [1.0, 0.0], "speed": 1.0 },
                    { "kind": "rotation-pow", "angle": 0.3 }
                ],
                "schedule": "geometric",
                "asserted": { "lambda": 1.0, "mu": "inf", "ratio": "zero", "u": [1.0, 0.0], "rot_angle": 0.0 }
            }
        }"#,
    )
    .unwrap();
    let (_, report) = run_config_file(&cfg, &out, &CliOverrides::default()).unwrap();
    assert_eq!(report.verdicts["classification"]["case"], "ShrinkToVertex");
    // without the assertion the same config must fail with a structured error
    let cfg2 = out.join("unasserted.json");
    std::fs::write(
        &cfg2,
        r#"{
            "schema": 1, "scenario": "cone-dynamics", "n": 2, "out": "unasserted",
            "cone": { "center": [0.0, 1.0], "alpha": 0.4, "lambda": 1.0 },
            "sequence": {
                "factors": [
                    { "kind": "translation", "dir": [1.0, 0.0], "speed": 1.0 },
                    { "kind": "rotation-pow", "angle": 0.3 }
                ],
                "schedule": "geometric"
            }
        }"#,
    )
    .unwrap();
    let err = run_config_file(&cfg2, &out, &CliOverrides::default());
    assert!(err.is_err(), "wandering rotations must demand a subsequence");
    assert!(format!("{:#}", err.unwrap_err()).contains("subsequence"));
}
