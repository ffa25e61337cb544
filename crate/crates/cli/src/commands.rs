//! The four subcommands. Each writes its results under the --out directory
//! and embeds the run manifest in every file it produces.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use subwave_core::{
    calibrate, case_study, evolve_sampled, fit_power_law, gate_error, run_sweep,
    CaseStudyPreset, FitResult, GateSpec, QuantumState, SweepPoint, SweepSpec, TimeGrid,
};

use crate::config::{self, FitConfig, SimulateConfig, SweepConfig};
use crate::manifest::RunManifest;
use crate::{CliError, Format};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub struct RunContext {
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub format: Format,
    pub workers: Option<usize>,
    pub tol_rel: Option<f64>,
    pub mode: Option<String>,
    pub check: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn ensure_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Run(format!("out dir {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

fn manifest_comment(manifest: &RunManifest) -> String {
    let compact = serde_json::to_string(manifest).expect("manifest serializes");
    format!("# manifest {compact}\n")
}

/// 15 significant digits, enough to reproduce an f64 on reread.
fn sig15(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.14e}")
    }
}

// --- simulate ---------------------------------------------------------------

#[derive(Serialize)]
struct SimulateOutput {
    manifest: RunManifest,
    config_echo: serde_json::Value,
    calibrated: bool,
    peak_dimensionless: f64,
    peak_over_2pi_hz: f64,
    error: f64,
    phase_rad: f64,
    pop_bright: f64,
    pop_excited: f64,
    pop_r: f64,
    leaked_norm: f64,
}

pub fn cmd_simulate(ctx: &RunContext) -> Result<(), CliError> {
    let raw = config::load_json(&ctx.config_path)?;
    let mut cfg: SimulateConfig = config::parse_config(&ctx.config_path, &raw)?;
    if let Some(mode) = &ctx.mode {
        cfg.mode = mode.clone();
    }
    if let Some(rtol) = ctx.tol_rel {
        if !(rtol > 0.0) {
            return Err(CliError::Config(format!("--tol-rel {rtol} must be > 0")));
        }
        cfg.rtol = rtol;
        cfg.atol = rtol * 1e-3;
    }
    cfg.validate()?;
    if ctx.check && cfg.max_error.is_none() {
        return Err(CliError::Config(
            "field max_error: required when --check is set".into(),
        ));
    }

    let workers = ctx.workers.unwrap_or_else(default_workers);
    let manifest = RunManifest::new(&raw, cfg.rtol, cfg.atol, workers);

    let spec: GateSpec = cfg.gate_spec();
    let mut problem = cfg.problem()?;
    let peak = if cfg.probe.calibrate {
        let p = calibrate(&problem, &spec).map_err(CliError::from_core)?;
        problem = problem.with_peak(p);
        p
    } else {
        problem.drive.probe.peak
    };
    let report = gate_error(&problem, &spec, cfg.gate_role()).map_err(CliError::from_core)?;

    ensure_out(&ctx.out_dir)?;
    let out = SimulateOutput {
        manifest: manifest.clone(),
        config_echo: raw,
        calibrated: cfg.probe.calibrate,
        peak_dimensionless: peak,
        peak_over_2pi_hz: peak / (TWO_PI * cfg.tau_seconds),
        error: report.error,
        phase_rad: report.phase,
        pop_bright: report.pop_bright,
        pop_excited: report.pop_excited,
        pop_r: report.pop_r,
        leaked_norm: report.leaked_norm,
    };
    if ctx.format.wants_json() {
        write_json(&ctx.out_dir.join("simulate.json"), &out)?;
    }
    if ctx.format.wants_csv() {
        if let Some(ts) = &cfg.time_series {
            let grid =
                TimeGrid::new(0.0, 1.0, ts.n_samples - 1).map_err(CliError::from_core)?;
            let input = QuantumState::Pure(spec.input_state(problem.scheme.dim()));
            let samples =
                evolve_sampled(&problem, &input, &grid).map_err(CliError::from_core)?;
            let mut text = manifest_comment(&manifest);
            text.push_str("t_seconds");
            for label in &problem.scheme.labels {
                text.push_str(&format!(",pop_{label}"));
            }
            text.push('\n');
            for (t, state) in &samples {
                text.push_str(&sig15(t * cfg.tau_seconds));
                for idx in 0..problem.scheme.dim() {
                    text.push(',');
                    text.push_str(&sig15(state.population(idx)));
                }
                text.push('\n');
            }
            write_text(&ctx.out_dir.join("time_series.csv"), &text)?;
        }
    }

    if ctx.check {
        let cap = cfg.max_error.expect("checked above");
        if !(report.error <= cap) {
            return Err(CliError::Check(format!(
                "gate error {:.6e} exceeds max_error {:.6e}",
                report.error, cap
            )));
        }
    }
    Ok(())
}

// --- sweep ------------------------------------------------------------------

#[derive(Serialize)]
struct FitSummary {
    exponent: f64,
    prefactor: f64,
    r_squared: f64,
    residual_max: f64,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            exponent: f.exponent,
            prefactor: f.prefactor,
            r_squared: f.r_squared,
            residual_max: f.residual_max,
        }
    }
}

#[derive(Serialize)]
struct SweepOutput {
    manifest: RunManifest,
    quantity: String,
    n_points: usize,
    n_failed: usize,
    is_fit_grade: bool,
    fit: Option<FitSummary>,
    table: Vec<SweepRowOut>,
}

#[derive(Serialize)]
struct SweepRowOut {
    axis: f64,
    value: Option<f64>,
    extra: Option<f64>,
    error: Option<String>,
}

fn sweep_csv(manifest: &RunManifest, points: &[SweepPoint]) -> String {
    let mut text = manifest_comment(manifest);
    text.push_str("axis,value,extra,errors\n");
    for p in points {
        let extra = p.extra.map(sig15).unwrap_or_default();
        let err = p.error.clone().unwrap_or_default();
        text.push_str(&format!("{},{},{},{}\n", sig15(p.axis), sig15(p.value), extra, err));
    }
    text
}

fn check_exponent(
    fit: Option<&FitResult>,
    expected: Option<f64>,
    tolerance: Option<f64>,
) -> Result<(), CliError> {
    let (expected, tol) = match (expected, tolerance) {
        (Some(e), Some(t)) => (e, t),
        _ => {
            return Err(CliError::Config(
                "fields expected_exponent and exponent_tolerance: required when --check is set"
                    .into(),
            ))
        }
    };
    let fit = fit.ok_or_else(|| {
        CliError::Check("no fit available to check (fewer than two usable points)".into())
    })?;
    if (fit.exponent - expected).abs() > tol {
        return Err(CliError::Check(format!(
            "fitted exponent {:.4} outside {expected} +- {tol}",
            fit.exponent
        )));
    }
    Ok(())
}

pub fn cmd_sweep(ctx: &RunContext) -> Result<(), CliError> {
    let raw = config::load_json(&ctx.config_path)?;
    let cfg: SweepConfig = config::parse_config(&ctx.config_path, &raw)?;
    cfg.validate()?;
    let workers = ctx.workers.or(cfg.workers).unwrap_or_else(default_workers);
    let manifest = RunManifest::new(&raw, 0.0, 0.0, workers);

    let spec = SweepSpec::new(cfg.quantity_enum()?, cfg.axis_points()?)
        .map_err(CliError::from_core)?
        .with_workers(workers);
    let mut points = run_sweep(&spec).map_err(CliError::from_core)?;
    // The optimum sweep reports (p_e, delta) per control peak; the delta
    // flavor promotes the secondary observable to the value column.
    if cfg.quantity == "optimum-delta" {
        for p in &mut points {
            if let Some(extra) = p.extra {
                let old = p.value;
                p.value = extra;
                p.extra = Some(old);
            }
        }
    }

    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.error.is_none())
        .map(|p| (p.axis, p.value))
        .collect();
    let n_failed = points.len() - ok.len();
    let mut distinct: Vec<f64> = ok.iter().map(|&(x, _)| x).collect();
    distinct.dedup();
    let fit = if distinct.len() >= 2 { fit_power_law(&ok).ok() } else { None };

    ensure_out(&ctx.out_dir)?;
    if ctx.format.wants_csv() {
        write_text(&ctx.out_dir.join("sweep.csv"), &sweep_csv(&manifest, &points))?;
    }
    if ctx.format.wants_json() {
        let out = SweepOutput {
            manifest,
            quantity: cfg.quantity.clone(),
            n_points: points.len(),
            n_failed,
            is_fit_grade: spec.is_fit_grade(),
            fit: fit.as_ref().map(FitSummary::from),
            table: points
                .iter()
                .map(|p| SweepRowOut {
                    axis: p.axis,
                    value: if p.value.is_nan() { None } else { Some(p.value) },
                    extra: p.extra,
                    error: p.error.clone(),
                })
                .collect(),
        };
        write_json(&ctx.out_dir.join("sweep.json"), &out)?;
    }

    if n_failed * 5 > points.len() {
        let first = points
            .iter()
            .find_map(|p| p.error.as_ref().map(|e| format!("axis {}: {e}", p.axis)))
            .unwrap_or_default();
        return Err(CliError::Run(format!(
            "{n_failed} of {} sweep points failed (first: {first})",
            points.len()
        )));
    }
    if ctx.check {
        check_exponent(fit.as_ref(), cfg.expected_exponent, cfg.exponent_tolerance)?;
    }
    Ok(())
}

// --- fit --------------------------------------------------------------------

#[derive(Serialize)]
struct FitOutput {
    manifest: RunManifest,
    table_csv: String,
    x_column: String,
    y_column: String,
    n_rows_used: usize,
    fit: FitSummary,
}

pub fn cmd_fit(ctx: &RunContext) -> Result<(), CliError> {
    let raw = config::load_json(&ctx.config_path)?;
    let cfg: FitConfig = config::parse_config(&ctx.config_path, &raw)?;
    cfg.validate()?;
    let workers = ctx.workers.unwrap_or_else(default_workers);
    let manifest = RunManifest::new(&raw, 0.0, 0.0, workers);

    // Table paths resolve against the config file so a config directory is
    // self-contained.
    let table_path = {
        let p = Path::new(&cfg.table_csv);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            ctx.config_path.parent().unwrap_or(Path::new(".")).join(p)
        }
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&table_path)
        .map_err(|e| CliError::Run(format!("table {}: {e}", table_path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Run(format!("table {}: {e}", table_path.display())))?
        .clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!(
                "column '{name}' not in table (have: {})",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let xi = col(&cfg.x_column)?;
    let yi = col(&cfg.y_column)?;

    let mut pairs = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Run(format!("table row {}: {e}", row_idx + 2)))?;
        let xf = record.get(xi).unwrap_or("");
        let yf = record.get(yi).unwrap_or("");
        if xf.is_empty() || yf.is_empty() {
            continue;
        }
        let x: f64 = xf.parse().map_err(|_| {
            CliError::Run(format!("table row {}: bad {} value '{xf}'", row_idx + 2, cfg.x_column))
        })?;
        let y: f64 = yf.parse().map_err(|_| {
            CliError::Run(format!("table row {}: bad {} value '{yf}'", row_idx + 2, cfg.y_column))
        })?;
        pairs.push((x, y));
    }
    let fit = fit_power_law(&pairs).map_err(CliError::from_core)?;

    ensure_out(&ctx.out_dir)?;
    let out = FitOutput {
        manifest,
        table_csv: cfg.table_csv.clone(),
        x_column: cfg.x_column.clone(),
        y_column: cfg.y_column.clone(),
        n_rows_used: pairs.len(),
        fit: FitSummary::from(&fit),
    };
    write_json(&ctx.out_dir.join("fit.json"), &out)?;

    if ctx.check {
        check_exponent(Some(&fit), cfg.expected_exponent, cfg.exponent_tolerance)?;
    }
    Ok(())
}

// --- case-study -------------------------------------------------------------

pub struct CaseStudyContext {
    pub name: String,
    pub d_meters: Option<f64>,
    pub out_dir: PathBuf,
    pub format: Format,
    pub check: bool,
}

#[derive(Serialize)]
struct CaseStudyRowOut {
    name: String,
    value: f64,
    active: bool,
}

#[derive(Serialize)]
struct ReferencePair {
    quantity: String,
    reference: f64,
    computed: Option<f64>,
}

#[derive(Serialize)]
struct CaseStudyOutput {
    manifest: RunManifest,
    name: String,
    p_e: f64,
    delta_over_2pi_hz: f64,
    omega0_over_2pi_hz: f64,
    omega_over_2pi_hz: f64,
    balance: (String, String),
    reference_balance: Option<(String, String)>,
    reference: Vec<ReferencePair>,
    rows: Vec<CaseStudyRowOut>,
}

pub fn cmd_case_study(ctx: &CaseStudyContext) -> Result<(), CliError> {
    let preset = if ctx.name == "nv-solid" && ctx.d_meters.is_some() {
        let d = ctx.d_meters.unwrap();
        if !(d > 0.0) {
            return Err(CliError::Config(format!("--d-meters {d} must be > 0")));
        }
        CaseStudyPreset::nv_solid(d)
    } else {
        if ctx.d_meters.is_some() {
            return Err(CliError::Config(format!(
                "--d-meters only applies to nv-solid, not '{}'",
                ctx.name
            )));
        }
        CaseStudyPreset::by_name(&ctx.name).map_err(|_| {
            CliError::Config(format!(
                "unknown case study '{}' (known: {})",
                ctx.name,
                CaseStudyPreset::names().join(", ")
            ))
        })?
    };
    let report = case_study(&preset).map_err(CliError::from_core)?;

    let pseudo_config = json!({ "name": ctx.name, "d_meters": ctx.d_meters });
    let manifest = RunManifest::new(&pseudo_config, 0.0, 0.0, 1);

    let computed_for = |quantity: &str| -> Option<f64> {
        match quantity {
            "p_e" => Some(report.p_e),
            "delta_over_2pi_hz" => Some(report.best_delta / TWO_PI),
            _ => None,
        }
    };
    let reference: Vec<ReferencePair> = report
        .reference
        .iter()
        .map(|(quantity, value)| ReferencePair {
            quantity: quantity.clone(),
            reference: *value,
            computed: computed_for(quantity),
        })
        .collect();

    let out = CaseStudyOutput {
        manifest: manifest.clone(),
        name: report.name.clone(),
        p_e: report.p_e,
        delta_over_2pi_hz: report.best_delta / TWO_PI,
        omega0_over_2pi_hz: report.best_omega0 / TWO_PI,
        omega_over_2pi_hz: report.best_omega / TWO_PI,
        balance: report.balance.clone(),
        reference_balance: report.reference_balance.clone(),
        reference,
        rows: report
            .rows
            .iter()
            .map(|(name, value, active)| CaseStudyRowOut {
                name: name.clone(),
                value: *value,
                active: *active,
            })
            .collect(),
    };
    ensure_out(&ctx.out_dir)?;
    if ctx.format.wants_json() {
        write_json(&ctx.out_dir.join("case_study.json"), &out)?;
    }
    if ctx.format.wants_csv() {
        let mut text = manifest_comment(&manifest);
        text.push_str("row,value,active\n");
        for (name, value, active) in &report.rows {
            text.push_str(&format!("{},{},{}\n", name, sig15(*value), active));
        }
        write_text(&ctx.out_dir.join("case_study_rows.csv"), &text)?;
    }

    if ctx.check {
        for pair in &out.reference {
            let computed = match pair.computed {
                Some(c) => c,
                None => continue,
            };
            if !(computed >= pair.reference / 3.0 && computed <= pair.reference * 3.0) {
                return Err(CliError::Check(format!(
                    "{}: computed {:.4e} outside x3 of reference {:.4e}",
                    pair.quantity, computed, pair.reference
                )));
            }
        }
        if let Some(expected) = &report.reference_balance {
            let got = &report.balance;
            let same = (got.0 == expected.0 && got.1 == expected.1)
                || (got.0 == expected.1 && got.1 == expected.0);
            if !same {
                return Err(CliError::Check(format!(
                    "dominant balance ({}, {}) differs from reference ({}, {})",
                    got.0, got.1, expected.0, expected.1
                )));
            }
        }
    }
    Ok(())
}
