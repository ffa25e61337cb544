//! Probe pulse shapes and control-field spatial geometry: ramps, standing
//! waves, vortices, node residuals, and the coupling constants derived from
//! them.

use crate::SubwaveError;

pub const HBAR: f64 = 1.054571817e-34;

/// Probe pulse envelope kinds. The symmetric linear ramp and the constant
/// pulse are the primary shapes; the two smooth shapes exist because C^1
/// envelopes suppress the switching kicks that contaminate the most delicate
/// sweeps (see the dipole-dipole protocol).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    /// Linear ramp 0 -> peak over [0, tau/2], back to 0 over [tau/2, tau].
    RampUpDown,
    /// Constant amplitude `peak` over the whole window.
    Constant,
    /// peak * sin(pi t / tau).
    SineArch,
    /// peak * sin^2(pi t / tau).
    SinSquared,
}

impl PulseKind {
    /// Mean of (shape/peak)^2 over the pulse: the factor in
    /// integral(Omega^2 dt) = peak^2 * mean_square * tau.
    pub fn mean_square(self) -> f64 {
        match self {
            PulseKind::RampUpDown => 1.0 / 3.0,
            PulseKind::Constant => 1.0,
            PulseKind::SineArch => 0.5,
            PulseKind::SinSquared => 3.0 / 8.0,
        }
    }
}

/// Probe pulse: envelope kind, total duration tau (s), peak Rabi frequency
/// (rad/s), and ramp time T (= tau/2 for the symmetric shapes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub kind: PulseKind,
    pub duration: f64,
    pub peak: f64,
    pub ramp_time: f64,
}

impl PulseShape {
    pub fn ramp(peak: f64, duration: f64) -> Self {
        PulseShape { kind: PulseKind::RampUpDown, duration, peak, ramp_time: duration / 2.0 }
    }

    pub fn constant(peak: f64, duration: f64) -> Self {
        PulseShape { kind: PulseKind::Constant, duration, peak, ramp_time: 0.0 }
    }

    pub fn sine_arch(peak: f64, duration: f64) -> Self {
        PulseShape { kind: PulseKind::SineArch, duration, peak, ramp_time: duration / 2.0 }
    }

    pub fn sin_squared(peak: f64, duration: f64) -> Self {
        PulseShape { kind: PulseKind::SinSquared, duration, peak, ramp_time: duration / 2.0 }
    }

    pub fn with_peak(&self, peak: f64) -> Self {
        let mut out = *self;
        out.peak = peak;
        out
    }

    /// Phase accumulated on |1> by this pulse at detuning `delta` in leading
    /// order: integral(Omega^2/(4 delta) dt). Used as the unwrap seed during
    /// calibration; the calibrator converges on the numerically exact value.
    pub fn analytic_phase(&self, delta: f64) -> f64 {
        self.peak * self.peak * self.kind.mean_square() * self.duration / (4.0 * delta)
    }

    /// Peak giving `target` phase at detuning `delta` in leading order.
    pub fn seed_peak(kind: PulseKind, target: f64, delta: f64, duration: f64) -> f64 {
        (target * 4.0 * delta / (kind.mean_square() * duration)).sqrt()
    }
}

/// Probe envelope value at time t in [0, tau].
pub fn probe_amplitude(p: &PulseShape, t: f64) -> Result<f64, SubwaveError> {
    if t < 0.0 || t > p.duration {
        return Err(SubwaveError::InvalidInput(format!(
            "probe time {t} outside [0, {}]",
            p.duration
        )));
    }
    let s = t / p.duration;
    let value = match p.kind {
        PulseKind::RampUpDown => {
            if s <= 0.5 {
                p.peak * 2.0 * s
            } else {
                p.peak * (2.0 - 2.0 * s)
            }
        }
        PulseKind::Constant => p.peak,
        PulseKind::SineArch => p.peak * (std::f64::consts::PI * s).sin(),
        PulseKind::SinSquared => {
            let x = (std::f64::consts::PI * s).sin();
            p.peak * x * x
        }
    };
    Ok(value)
}

/// Control-field spatial geometry around its node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlGeometry {
    /// Omega_c(x) = residual + omega0 * sin(k' x).
    StandingWave { omega0: f64, k_prime: f64, residual: f64 },
    /// Omega_c(x) = residual + omega0 * (x / waist)^charge, x >= 0 radial.
    Vortex { omega0: f64, k_prime: f64, waist: f64, charge: u32, residual: f64 },
}

impl ControlGeometry {
    pub fn omega0(&self) -> f64 {
        match *self {
            ControlGeometry::StandingWave { omega0, .. } => omega0,
            ControlGeometry::Vortex { omega0, .. } => omega0,
        }
    }

    pub fn residual(&self) -> f64 {
        match *self {
            ControlGeometry::StandingWave { residual, .. } => residual,
            ControlGeometry::Vortex { residual, .. } => residual,
        }
    }

    /// Placeholder geometry for problems whose control coupling is already
    /// baked into the level scheme.
    pub fn none() -> Self {
        ControlGeometry::StandingWave { omega0: 0.0, k_prime: 0.0, residual: 0.0 }
    }
}

/// Control Rabi frequency at position x.
pub fn control_profile(g: &ControlGeometry, x: f64) -> f64 {
    match *g {
        ControlGeometry::StandingWave { omega0, k_prime, residual } => {
            residual + omega0 * (k_prime * x).sin()
        }
        ControlGeometry::Vortex { omega0, waist, charge, residual, .. } => {
            assert!(x >= 0.0, "vortex radial coordinate must be >= 0");
            residual + omega0 * (x / waist).powi(charge as i32)
        }
    }
}

/// Motional coupling Omega_ca = gradient-scale coupling at the oscillator
/// length a0: standing wave omega0 * k' * a0; vortex of charge l,
/// omega0 * (k' a0)^l.
pub fn motional_coupling(g: &ControlGeometry, a0: f64) -> f64 {
    assert!(a0 > 0.0, "oscillator length must be positive");
    match *g {
        ControlGeometry::StandingWave { omega0, k_prime, .. } => omega0 * k_prime * a0,
        ControlGeometry::Vortex { omega0, k_prime, charge, .. } => {
            omega0 * (k_prime * a0).powi(charge as i32)
        }
    }
}

/// Spatial width of the region that still responds to the probe: Omega/(Omega0 k').
pub fn addressing_width(omega: f64, omega0: f64, k_prime: f64) -> Result<f64, SubwaveError> {
    if omega0 * k_prime == 0.0 {
        return Err(SubwaveError::InvalidInput(
            "addressing width needs omega0 and k_prime nonzero".into(),
        ));
    }
    Ok(omega / (omega0 * k_prime))
}

/// Harmonic-oscillator ground-state width sqrt(hbar / (2 m omega)).
pub fn ground_state_width(mass: f64, omega: f64) -> f64 {
    assert!(mass > 0.0 && omega > 0.0, "mass and trap frequency must be positive");
    (HBAR / (2.0 * mass * omega)).sqrt()
}

/// Probe pulse plus control geometry plus atom positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    pub probe: PulseShape,
    pub control: ControlGeometry,
    pub atom_positions: Vec<f64>,
}

impl DriveConfig {
    pub fn probe_only(probe: PulseShape) -> Self {
        DriveConfig { probe, control: ControlGeometry::none(), atom_positions: vec![0.0] }
    }
}
