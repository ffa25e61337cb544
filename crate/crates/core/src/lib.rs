//! Simulator and analytic-budget optimizer for dark-state subwavelength
//! optical addressing: full quantum dynamics (Schrodinger, Lindblad, and
//! loss-only propagation) of a spatially selective single-qubit phase gate,
//! plus the closed-form error budget and its optimizer.

pub mod budget;
pub mod dynamics;
pub mod fields;
pub mod lab;
mod ode;
pub mod qcore;
pub mod schemes;

#[cfg(test)]
pub(crate) mod testutil;

pub use budget::{
    budget_at, budget_rows, dominant_balance, optimize, optimize_rows, total_error,
    total_over_rows, BudgetReport, BudgetRow, OptimizationResult, Platform, PlatformParams,
    Regime, RowValue, ALL_ROWS, OMEGA0_CAP,
};
pub use dynamics::{
    calibrate, detuning_estimate, evolve, evolve_sampled, gate_error, measured_phase,
    motional_gate_error, spectator_ladder_check, EvolutionProblem, EvolveMode, EvolveOptions,
    GateErrorReport, GateSpec, QuantumState, Role,
};
pub use fields::{
    addressing_width, control_profile, ground_state_width, motional_coupling,
    probe_amplitude, ControlGeometry, DriveConfig, PulseKind, PulseShape,
};
pub use lab::{
    case_study, compare_analytic_numeric, decay_error, decay_error_points,
    dipole_dipole_error, dipole_dipole_points, fit_power_law, ladder_rule_check,
    localization_adiabatic_points, localization_fast_points, log_space, nv_pe_vs_d_points,
    phase_insensitive_error, ratio_table, run_sweep, spectator_suppression_error,
    spectator_suppression_points, toy_optimum_points, CaseStudyPreset, CaseStudyReport,
    DecayErrorConfig, DipoleDipoleConfig, FitResult, LadderRuleConfig, LadderRuleReport,
    LocalizationAdiabaticConfig, LocalizationFastConfig, RowComparison,
    SpectatorSuppressionConfig, SweepPoint, SweepQuantity, SweepSpec, ToyOptimumPoint,
    TOY_BUDGET_OMEGA_C,
};
pub use qcore::{
    expectation, expm, hermitian_eigen, propagator_exact, propagator_eigen, tensor,
    tensor_state, DensityMatrix, Operator, StateVector, TimeGrid, C64,
};
pub use schemes::{
    build_lambda, build_tripod, build_tripod_motional, build_two_atom, dark_bright_basis,
    dark_state, DriveId, LevelScheme, MotionalLadder, MotionalRole, TwoAtomCoupling,
};

/// Error type shared across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum SubwaveError {
    DimensionMismatch { left: usize, right: usize },
    NonHermitian,
    UndefinedState(String),
    InvalidState(String),
    InvalidInput(String),
    StepSizeUnderflow { time: f64 },
    NoBracket(String),
    UnknownPreset(String),
}

impl std::fmt::Display for SubwaveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubwaveError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            SubwaveError::NonHermitian => write!(f, "operator is not Hermitian"),
            SubwaveError::UndefinedState(msg) => write!(f, "undefined state: {msg}"),
            SubwaveError::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            SubwaveError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            SubwaveError::StepSizeUnderflow { time } => {
                write!(f, "integrator step size underflow at t = {time:.6e}")
            }
            SubwaveError::NoBracket(msg) => write!(f, "calibration bracket failed: {msg}"),
            SubwaveError::UnknownPreset(msg) => write!(f, "unknown preset: {msg}"),
        }
    }
}

impl std::error::Error for SubwaveError {}
