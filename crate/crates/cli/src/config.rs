//! Config schema: JSON with unit-suffixed keys. Frequencies are quoted as
//! f = omega / 2 pi in Hz; phases in radians; times in seconds. Everything is
//! converted to the dimensionless tau = 1 frame before touching the core.

use serde::Deserialize;
use subwave_core::{
    build_lambda, build_tripod, build_tripod_motional, EvolutionProblem, EvolveMode,
    EvolveOptions, GateSpec, LevelScheme, MotionalLadder, MotionalRole, PulseShape, Role,
    SweepQuantity,
};

use crate::CliError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// Largest control amplitude any config may request, f = omega0 / 2 pi.
pub const OMEGA0_CAP_HZ: f64 = 1e9;

fn default_mode() -> String {
    "unitary".into()
}

fn default_role() -> String {
    "addressed".into()
}

fn default_pi() -> f64 {
    std::f64::consts::PI
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// One of ramp, constant, sine-arch, sin-squared.
    pub shape: String,
    #[serde(default)]
    pub peak_over_2pi_hz: Option<f64>,
    /// Solve for the peak that lands the target phase instead of using
    /// peak_over_2pi_hz.
    #[serde(default)]
    pub calibrate: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionalConfig {
    pub n_fock: usize,
    pub omega_trap_over_2pi_hz: f64,
    #[serde(default)]
    pub omega_ca_over_2pi_hz: f64,
    #[serde(default)]
    pub node_residual: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeriesConfig {
    pub n_samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// One of lambda, tripod, tripod-motional.
    pub scheme: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_role")]
    pub role: String,
    pub tau_seconds: f64,
    pub delta_over_2pi_hz: f64,
    #[serde(default)]
    pub gamma_over_2pi_hz: f64,
    #[serde(default)]
    pub gamma_r_over_2pi_hz: f64,
    #[serde(default)]
    pub omega_c_over_2pi_hz: f64,
    /// Optional antinode control amplitude, validated against the cap.
    #[serde(default)]
    pub omega0_over_2pi_hz: Option<f64>,
    pub probe: ProbeConfig,
    #[serde(default = "default_pi")]
    pub target_phase_rad: f64,
    #[serde(default)]
    pub motional: Option<MotionalConfig>,
    #[serde(default)]
    pub time_series: Option<TimeSeriesConfig>,
    /// Target for --check: fail (exit 4) if the gate error exceeds this.
    #[serde(default)]
    pub max_error: Option<f64>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn check_cap(field: &str, f_hz: f64) -> Result<(), CliError> {
    if f_hz > OMEGA0_CAP_HZ {
        return Err(CliError::Config(format!(
            "field {field}: {f_hz:.3e} Hz exceeds the 1 GHz control amplitude cap \
             (omega0 / 2 pi <= 1e9 Hz)"
        )));
    }
    Ok(())
}

fn check_nonneg(field: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() || v < 0.0 {
        return Err(CliError::Config(format!("field {field}: {v} must be finite and >= 0")));
    }
    Ok(())
}

fn check_pos(field: &str, v: f64) -> Result<(), CliError> {
    if !v.is_finite() || v <= 0.0 {
        return Err(CliError::Config(format!("field {field}: {v} must be finite and > 0")));
    }
    Ok(())
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match self.scheme.as_str() {
            "lambda" | "tripod" | "tripod-motional" => {}
            other => {
                return Err(CliError::Config(format!(
                    "field scheme: unknown scheme '{other}' (lambda, tripod, tripod-motional)"
                )))
            }
        }
        match self.mode.as_str() {
            "unitary" | "lindblad" | "loss-only" => {}
            other => {
                return Err(CliError::Config(format!(
                    "field mode: unknown mode '{other}' (unitary, lindblad, loss-only)"
                )))
            }
        }
        match self.role.as_str() {
            "addressed" | "spectator" => {}
            other => {
                return Err(CliError::Config(format!(
                    "field role: unknown role '{other}' (addressed, spectator)"
                )))
            }
        }
        match self.probe.shape.as_str() {
            "ramp" | "constant" | "sine-arch" | "sin-squared" => {}
            other => {
                return Err(CliError::Config(format!(
                    "field probe.shape: unknown shape '{other}' (ramp, constant, sine-arch, \
                     sin-squared)"
                )))
            }
        }
        check_pos("tau_seconds", self.tau_seconds)?;
        check_pos("delta_over_2pi_hz", self.delta_over_2pi_hz)?;
        check_nonneg("gamma_over_2pi_hz", self.gamma_over_2pi_hz)?;
        check_nonneg("gamma_r_over_2pi_hz", self.gamma_r_over_2pi_hz)?;
        check_nonneg("omega_c_over_2pi_hz", self.omega_c_over_2pi_hz)?;
        check_cap("omega_c_over_2pi_hz", self.omega_c_over_2pi_hz)?;
        if let Some(f) = self.omega0_over_2pi_hz {
            check_nonneg("omega0_over_2pi_hz", f)?;
            check_cap("omega0_over_2pi_hz", f)?;
        }
        match (self.probe.calibrate, self.probe.peak_over_2pi_hz) {
            (false, None) => {
                return Err(CliError::Config(
                    "field probe: set peak_over_2pi_hz or calibrate = true".into(),
                ))
            }
            (_, Some(f)) => {
                check_pos("probe.peak_over_2pi_hz", f)?;
                check_cap("probe.peak_over_2pi_hz", f)?;
            }
            (true, None) => {}
        }
        if self.scheme == "tripod-motional" {
            let m = self.motional.as_ref().ok_or_else(|| {
                CliError::Config(
                    "field motional: required for the tripod-motional scheme".into(),
                )
            })?;
            if m.n_fock < 3 {
                return Err(CliError::Config(format!(
                    "field motional.n_fock: {} is below the minimum of 3",
                    m.n_fock
                )));
            }
            check_pos("motional.omega_trap_over_2pi_hz", m.omega_trap_over_2pi_hz)?;
            check_nonneg("motional.omega_ca_over_2pi_hz", m.omega_ca_over_2pi_hz)?;
            check_cap("motional.omega_ca_over_2pi_hz", m.omega_ca_over_2pi_hz)?;
            check_nonneg("motional.node_residual", m.node_residual)?;
        } else if self.motional.is_some() {
            return Err(CliError::Config(
                "field motional: only meaningful for the tripod-motional scheme".into(),
            ));
        }
        if !self.target_phase_rad.is_finite() || self.target_phase_rad == 0.0 {
            return Err(CliError::Config(format!(
                "field target_phase_rad: {} must be finite and nonzero",
                self.target_phase_rad
            )));
        }
        if let Some(ts) = &self.time_series {
            if ts.n_samples < 2 {
                return Err(CliError::Config(format!(
                    "field time_series.n_samples: {} is below the minimum of 2",
                    ts.n_samples
                )));
            }
        }
        check_pos("rtol", self.rtol)?;
        check_pos("atol", self.atol)?;
        if let Some(m) = self.max_error {
            check_pos("max_error", m)?;
        }
        Ok(())
    }

    pub fn evolve_mode(&self) -> EvolveMode {
        match self.mode.as_str() {
            "lindblad" => EvolveMode::Lindblad,
            "loss-only" => EvolveMode::LossOnly,
            _ => EvolveMode::Unitary,
        }
    }

    pub fn gate_role(&self) -> Role {
        match self.role.as_str() {
            "spectator" => Role::Spectator,
            _ => Role::Addressed,
        }
    }

    fn dimensionless(&self, f_hz: f64) -> f64 {
        TWO_PI * f_hz * self.tau_seconds
    }

    fn scheme(&self) -> Result<LevelScheme, CliError> {
        let omega_c = self.dimensionless(self.omega_c_over_2pi_hz);
        let delta = self.dimensionless(self.delta_over_2pi_hz);
        let gamma = self.dimensionless(self.gamma_over_2pi_hz);
        let gamma_r = self.dimensionless(self.gamma_r_over_2pi_hz);
        Ok(match self.scheme.as_str() {
            "lambda" => build_lambda(omega_c, delta, gamma),
            "tripod" => build_tripod(omega_c, delta, gamma, gamma_r),
            _ => {
                let m = self.motional.as_ref().expect("validated");
                let ladder = MotionalLadder::new(
                    m.n_fock,
                    self.dimensionless(m.omega_trap_over_2pi_hz),
                    self.dimensionless(m.omega_ca_over_2pi_hz),
                )
                .map_err(CliError::from_core)?;
                let role = match self.gate_role() {
                    Role::Addressed => MotionalRole::Addressed { node_residual: m.node_residual },
                    Role::Spectator => MotionalRole::Spectator { omega_c },
                };
                build_tripod_motional(delta, gamma, &ladder, role)
            }
        })
    }

    fn pulse(&self, peak: f64) -> PulseShape {
        match self.probe.shape.as_str() {
            "constant" => PulseShape::constant(peak, 1.0),
            "sine-arch" => PulseShape::sine_arch(peak, 1.0),
            "sin-squared" => PulseShape::sin_squared(peak, 1.0),
            _ => PulseShape::ramp(peak, 1.0),
        }
    }

    /// Qubit pair (phase-free level, phase-carrying level) per scheme.
    pub fn gate_spec(&self) -> GateSpec {
        match self.scheme.as_str() {
            // Probe couples |g>; |r> is the reference level.
            "lambda" => GateSpec::new(self.target_phase_rad, 1, 0),
            "tripod" => GateSpec::new(self.target_phase_rad, 0, 1),
            // n = 0 block of levels |0>, |1>.
            _ => {
                let nf = self.motional.as_ref().expect("validated").n_fock;
                GateSpec::new(self.target_phase_rad, 0, nf)
            }
        }
    }

    /// The evolution problem with the probe peak still dimensionless; peak is
    /// the configured one or a placeholder 1.0 when calibration will replace
    /// it.
    pub fn problem(&self) -> Result<EvolutionProblem, CliError> {
        let peak = self
            .probe
            .peak_over_2pi_hz
            .map(|f| self.dimensionless(f))
            .unwrap_or(1.0);
        let scheme = self.scheme()?;
        let mut p = EvolutionProblem::new(
            scheme,
            subwave_core::DriveConfig::probe_only(self.pulse(peak)),
            self.evolve_mode(),
        );
        p.options = EvolveOptions { rtol: self.rtol, atol: self.atol };
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// One of spectator-error, decay-error, localization-fast-error,
    /// localization-adiabatic-error, dipole-dipole-error, optimum-pe,
    /// optimum-delta, budget-total, nv-distance.
    pub quantity: String,
    /// Dimensionless axis values (tau = 1 frame) for the protocol sweeps.
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    /// Axis values in meters, for the nv-distance sweep.
    #[serde(default)]
    pub points_meters: Option<Vec<f64>>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Target for --check: fail (exit 4) if the fitted exponent falls outside
    /// expected_exponent +- exponent_tolerance.
    #[serde(default)]
    pub expected_exponent: Option<f64>,
    #[serde(default)]
    pub exponent_tolerance: Option<f64>,
}

impl SweepConfig {
    pub fn quantity_enum(&self) -> Result<SweepQuantity, CliError> {
        Ok(match self.quantity.as_str() {
            "spectator-error" => SweepQuantity::ControlRatio,
            "decay-error" => SweepQuantity::Detuning,
            "localization-fast-error" => SweepQuantity::LadderCoupling,
            "localization-adiabatic-error" => SweepQuantity::TrapAdiabaticity,
            "dipole-dipole-error" => SweepQuantity::DipoleCoupling,
            "optimum-pe" | "optimum-delta" => SweepQuantity::ControlPeak,
            "budget-total" => SweepQuantity::BudgetTotal,
            "nv-distance" => SweepQuantity::Distance,
            other => {
                return Err(CliError::Config(format!(
                    "field quantity: unknown sweep quantity '{other}'"
                )))
            }
        })
    }

    pub fn axis_points(&self) -> Result<Vec<f64>, CliError> {
        let meters = self.quantity == "nv-distance";
        let (points, field) = if meters {
            (&self.points_meters, "points_meters")
        } else {
            (&self.points, "points")
        };
        let wrong = if meters { &self.points } else { &self.points_meters };
        if wrong.is_some() {
            return Err(CliError::Config(format!(
                "field {}: not used by quantity '{}'; set {field}",
                if meters { "points" } else { "points_meters" },
                self.quantity
            )));
        }
        let pts = points.clone().ok_or_else(|| {
            CliError::Config(format!("field {field}: required for quantity '{}'", self.quantity))
        })?;
        if pts.is_empty() {
            return Err(CliError::Config(format!("field {field}: needs at least one value")));
        }
        for &x in &pts {
            if !x.is_finite() || x <= 0.0 {
                return Err(CliError::Config(format!(
                    "field {field}: value {x} must be finite and > 0"
                )));
            }
        }
        Ok(pts)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.quantity_enum()?;
        self.axis_points()?;
        if let Some(tol) = self.exponent_tolerance {
            if !(tol > 0.0) {
                return Err(CliError::Config(format!(
                    "field exponent_tolerance: {tol} must be > 0"
                )));
            }
        }
        if self.expected_exponent.is_some() != self.exponent_tolerance.is_some() {
            return Err(CliError::Config(
                "fields expected_exponent and exponent_tolerance come as a pair".into(),
            ));
        }
        Ok(())
    }
}

fn default_x_column() -> String {
    "axis".into()
}

fn default_y_column() -> String {
    "value".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV table to fit; column names select the axis and the quantity.
    pub table_csv: String,
    #[serde(default = "default_x_column")]
    pub x_column: String,
    #[serde(default = "default_y_column")]
    pub y_column: String,
    #[serde(default)]
    pub expected_exponent: Option<f64>,
    #[serde(default)]
    pub exponent_tolerance: Option<f64>,
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.expected_exponent.is_some() != self.exponent_tolerance.is_some() {
            return Err(CliError::Config(
                "fields expected_exponent and exponent_tolerance come as a pair".into(),
            ));
        }
        Ok(())
    }
}

pub fn load_json(path: &std::path::Path) -> Result<serde_json::Value, CliError> {
    let bytes = std::fs::read(path).map_err(|e| {
        CliError::Config(format!("config {}: {e}", path.display()))
    })?;
    serde_json::from_slice(&bytes).map_err(|e| {
        CliError::Config(format!(
            "config {}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

pub fn parse_config<T: serde::de::DeserializeOwned>(
    path: &std::path::Path,
    value: &serde_json::Value,
) -> Result<T, CliError> {
    serde_json::from_value(value.clone()).map_err(|e| {
        CliError::Config(format!("config {}: {e}", path.display()))
    })
}
