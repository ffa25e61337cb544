//! End-to-end tests driving the compiled binary: config parsing, exit codes,
//! file formats, and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_subwave")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const DEMO: &str = r#"{
  "scheme": "lambda",
  "tau_seconds": 1.0,
  "delta_over_2pi_hz": 1273.2395447351628,
  "probe": { "shape": "ramp", "calibrate": true },
  "time_series": { "n_samples": 40 }
}"#;

const SPECTATOR: &str = r#"{
  "scheme": "tripod",
  "role": "spectator",
  "tau_seconds": 1.0,
  "delta_over_2pi_hz": 954.9296585513721,
  "omega_c_over_2pi_hz": 159.15494309189535,
  "probe": { "shape": "ramp", "peak_over_2pi_hz": 15.915494309189535 },
  "max_error": 1e-4
}"#;

#[test]
fn lambda_demo_reports_tiny_error_and_unit_population_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "demo.json", DEMO);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));

    let report = read_json(&out_dir.join("simulate.json"));
    let error = report["error"].as_f64().unwrap();
    assert!(error < 1e-8, "calibrated demo error {error}");
    assert!(report["manifest"]["config_digest_sha256"].as_str().unwrap().len() == 64);

    let csv = std::fs::read_to_string(out_dir.join("time_series.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest "));
    let header = lines.next().unwrap();
    assert_eq!(header, "t_seconds,pop_g,pop_r,pop_e");
    let mut n_rows = 0;
    for line in lines {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields.len(), 4);
        let total: f64 = fields[1..].iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "population sum {total} at t {}", fields[0]);
        n_rows += 1;
    }
    assert_eq!(n_rows, 40);
}

#[test]
fn spectator_at_control_ratio_ten_stays_below_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "spectator.json", SPECTATOR);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "json",
        "--check",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = read_json(&out_dir.join("simulate.json"));
    let error = report["error"].as_f64().unwrap();
    assert!(error < 1e-4, "spectator error {error}");
    assert!(error > 0.0);
}

#[test]
fn check_miss_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let strict = DEMO.replace(
        "\"time_series\": { \"n_samples\": 40 }",
        "\"time_series\": { \"n_samples\": 40 },\n  \"max_error\": 1e-15",
    );
    let cfg = write_config(dir.path(), "strict.json", &strict);
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(exit_code(&out), 4, "{}", stderr_text(&out));
    assert!(stderr_text(&out).contains("max_error"));
}

#[test]
fn control_amplitude_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cap.json",
        r#"{
  "scheme": "lambda",
  "tau_seconds": 1.0,
  "delta_over_2pi_hz": 954.93,
  "omega0_over_2pi_hz": 2.0e9,
  "probe": { "shape": "ramp", "calibrate": true }
}"#,
    );
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    let err = stderr_text(&out);
    assert!(err.contains("1 GHz"), "cap message missing: {err}");
    assert!(err.contains("omega0_over_2pi_hz"), "field name missing: {err}");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "unknown.json",
        r#"{ "scheme": "lambda", "tau_seconds": 1.0, "delta_over_2pi_hz": 954.93,
             "probe": { "shape": "ramp", "calibrate": true }, "bogus_field": 3 }"#,
    );
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("bogus_field"));
}

#[test]
fn motional_scheme_requires_its_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "motional.json",
        r#"{ "scheme": "tripod-motional", "tau_seconds": 1.0, "delta_over_2pi_hz": 954.93,
             "probe": { "shape": "ramp", "calibrate": true } }"#,
    );
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("field motional"));
}

#[test]
fn single_point_sweep_emits_one_row_matching_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.json",
        r#"{ "quantity": "budget-total", "points": [123.0] }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));

    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# manifest "));
    assert_eq!(lines[1], "axis,value,extra,errors");
    assert_eq!(lines.len(), 3, "exactly one data row");
    let fields: Vec<&str> = lines[2].split(',').collect();
    let axis: f64 = fields[0].parse().unwrap();
    let value: f64 = fields[1].parse().unwrap();
    assert_eq!(axis, 123.0);

    let spec = subwave_core::SweepSpec::new(
        subwave_core::SweepQuantity::BudgetTotal,
        vec![123.0],
    )
    .unwrap();
    let direct = subwave_core::run_sweep(&spec).unwrap()[0].value;
    assert!(
        (value - direct).abs() <= 1e-14 * direct.abs(),
        "csv {value} vs library {direct}"
    );
}

#[test]
fn spectator_sweep_fits_the_sixth_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
  "quantity": "spectator-error",
  "points": [5.0, 6.948, 9.655, 13.416, 18.643, 25.906, 35.998, 50.0],
  "expected_exponent": -6.0,
  "exponent_tolerance": 0.5
}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = read_json(&out_dir.join("sweep.json"));
    assert_eq!(report["n_failed"].as_u64().unwrap(), 0);
    assert!(report["is_fit_grade"].as_bool().unwrap());
    let r2 = report["fit"]["r_squared"].as_f64().unwrap();
    assert!(r2 >= 0.98, "r^2 {r2}");
}

#[test]
fn fit_recovers_a_synthetic_power_law_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("axis,value\n");
    for i in 0..9 {
        let x = 1.5f64.powi(i);
        table.push_str(&format!("{:.14e},{:.14e}\n", x, 3.0 * x.powi(6)));
    }
    std::fs::write(dir.path().join("synth.csv"), table).unwrap();
    let cfg = write_config(
        dir.path(),
        "fit.json",
        r#"{ "table_csv": "synth.csv", "expected_exponent": 6.0, "exponent_tolerance": 1e-10 }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "fit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = read_json(&out_dir.join("fit.json"));
    let exponent = report["fit"]["exponent"].as_f64().unwrap();
    let prefactor = report["fit"]["prefactor"].as_f64().unwrap();
    assert!((exponent - 6.0).abs() < 1e-10, "exponent {exponent}");
    assert!((prefactor - 3.0).abs() < 1e-9, "prefactor {prefactor}");
}

#[test]
fn fit_reads_sweep_output_including_manifest_comment() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{ "quantity": "budget-total", "points": [300.0, 1000.0, 3000.0] }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "sweep",
        "--config",
        sweep_cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));

    let fit_cfg = write_config(
        dir.path(),
        "fit.json",
        r#"{ "table_csv": "out/sweep.csv" }"#,
    );
    let out = run(&[
        "fit",
        "--config",
        fit_cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = read_json(&out_dir.join("fit.json"));
    assert_eq!(report["n_rows_used"].as_u64().unwrap(), 3);
}

#[test]
fn ion_case_study_lands_near_its_quoted_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "case-study",
        "--name",
        "ca40-ion",
        "--out",
        out_dir.to_str().unwrap(),
        "--check",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    let report = read_json(&out_dir.join("case_study.json"));
    let pairs = report["reference"].as_array().unwrap();
    assert_eq!(pairs.len(), 2);
    for pair in pairs {
        let reference = pair["reference"].as_f64().unwrap();
        let computed = pair["computed"].as_f64().unwrap();
        assert!(
            computed >= reference / 3.0 && computed <= reference * 3.0,
            "{}: {computed} vs {reference}",
            pair["quantity"]
        );
    }
    let rows_csv = std::fs::read_to_string(out_dir.join("case_study_rows.csv")).unwrap();
    assert!(rows_csv.lines().nth(1).unwrap().starts_with("row,value,active"));
}

#[test]
fn unknown_case_study_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "case-study",
        "--name",
        "no-such-platform",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr_text(&out).contains("ca40-ion"));
}

#[test]
fn reruns_are_identical_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "demo.json", DEMO);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0, "{}", stderr_text(&out));
    }
    let mut a = read_json(&out_a.join("simulate.json"));
    let mut b = read_json(&out_b.join("simulate.json"));
    a["manifest"].as_object_mut().unwrap().remove("timestamp_utc");
    b["manifest"].as_object_mut().unwrap().remove("timestamp_utc");
    assert_eq!(a, b);

    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(String::from)
            .collect()
    };
    assert_eq!(strip(&out_a.join("time_series.csv")), strip(&out_b.join("time_series.csv")));
}
