//! Analytic error budget: the six scaling rows, platform-dependent row
//! selection, total-error assembly with the Omega^2 = Delta/tau elimination,
//! constrained grid + golden-section optimization over (Delta, Omega0), and
//! the closed-form optimum of the two-row balance.
//!
//! Every row carries prefactor exactly 1: the budget is an order-of-magnitude
//! model and all downstream checks gate on exponents and orders, never
//! prefactors.

use crate::fields::{ground_state_width, motional_coupling, ControlGeometry};
use crate::SubwaveError;

/// Hard cap on the control field amplitude: Omega0/2pi <= 1 GHz.
pub const OMEGA0_CAP: f64 = 2.0 * std::f64::consts::PI * 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Platform {
    Ion,
    SolidState,
    LatticeAtom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Fast,
    Adiabatic,
}

/// Every physical symbol used by the budget and the case studies. All
/// frequencies and rates are angular (rad/s), lengths in meters, times in
/// seconds. `omega_c`/`omega_ca` fields are the explicit values used when
/// building level schemes directly; the budget recomputes both from the
/// platform rule and geometry so they can never go stale.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformParams {
    pub gamma: f64,
    pub gamma_r: f64,
    pub tau: f64,
    pub omega_trap: f64,
    pub mass: f64,
    /// Oscillator length; 0 means derive from (mass, omega_trap).
    pub a0: f64,
    pub d: f64,
    pub lambda: f64,
    pub lambda_c: f64,
    pub omega: f64,
    pub omega0: f64,
    pub omega_c: f64,
    pub omega_ca: f64,
    pub delta: f64,
    pub vortex_charge: u32,
    pub waist: f64,
    pub node_residual: f64,
    pub platform: Platform,
}

impl Default for PlatformParams {
    fn default() -> Self {
        PlatformParams {
            gamma: 0.0,
            gamma_r: 0.0,
            tau: 1.0,
            omega_trap: 0.0,
            mass: 0.0,
            a0: 0.0,
            d: 0.0,
            lambda: 0.0,
            lambda_c: 0.0,
            omega: 0.0,
            omega0: 0.0,
            omega_c: 0.0,
            omega_ca: 0.0,
            delta: 0.0,
            vortex_charge: 0,
            waist: 0.0,
            node_residual: 0.0,
            platform: Platform::Ion,
        }
    }
}

impl PlatformParams {
    pub fn k(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda
    }

    pub fn k_prime(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda_c
    }

    /// Dipole-dipole coupling g = gamma/(k d)^3, recomputed from inputs.
    pub fn g(&self) -> Result<f64, SubwaveError> {
        if self.d <= 0.0 {
            return Err(SubwaveError::InvalidInput("g needs d > 0".into()));
        }
        let kd = self.k() * self.d;
        Ok(self.gamma / (kd * kd * kd))
    }

    /// Oscillator length: the explicit a0 if set, the trap ground-state
    /// width if mass and trap frequency are known, and zero (no motional
    /// coupling modeled) otherwise.
    pub fn a0_effective(&self) -> f64 {
        if self.a0 > 0.0 {
            self.a0
        } else if self.mass > 0.0 && self.omega_trap > 0.0 {
            ground_state_width(self.mass, self.omega_trap)
        } else {
            0.0
        }
    }

    /// Control geometry for this platform: lattice atoms use the vortex of
    /// the configured charge, ions and solid-state qubits a standing wave.
    pub fn control_geometry(&self) -> ControlGeometry {
        match self.platform {
            Platform::LatticeAtom if self.vortex_charge >= 1 => ControlGeometry::Vortex {
                omega0: self.omega0,
                k_prime: self.k_prime(),
                waist: if self.waist > 0.0 { self.waist } else { self.lambda_c },
                charge: self.vortex_charge,
                residual: self.node_residual,
            },
            _ => ControlGeometry::StandingWave {
                omega0: self.omega0,
                k_prime: self.k_prime(),
                residual: self.node_residual,
            },
        }
    }

    /// Platform rule for the control amplitude at the spectator: Omega_c =
    /// Omega0 for ions and lattice atoms (d ~ lambda), Omega0 k' d for
    /// solid-state qubits (d << lambda).
    pub fn omega_c_rule(&self) -> f64 {
        match self.platform {
            Platform::Ion | Platform::LatticeAtom => self.omega0,
            Platform::SolidState => self.omega0 * self.k_prime() * self.d,
        }
    }

    /// Motional coupling from the geometry at the oscillator length. Zero
    /// when no oscillator length is configured (no motional physics).
    pub fn omega_ca_rule(&self) -> f64 {
        let a0 = self.a0_effective();
        if a0 > 0.0 { motional_coupling(&self.control_geometry(), a0) } else { 0.0 }
    }
}

/// The six budget rows by their stable names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRow {
    Decay1,
    LocalizationFast,
    LocalizationAdiabatic,
    Unitary2,
    DipoleDipole,
    RDecay2,
}

pub const ALL_ROWS: [BudgetRow; 6] = [
    BudgetRow::Decay1,
    BudgetRow::LocalizationFast,
    BudgetRow::LocalizationAdiabatic,
    BudgetRow::Unitary2,
    BudgetRow::DipoleDipole,
    BudgetRow::RDecay2,
];

impl BudgetRow {
    pub fn name(self) -> &'static str {
        match self {
            BudgetRow::Decay1 => "decay-1",
            BudgetRow::LocalizationFast => "localization-fast",
            BudgetRow::LocalizationAdiabatic => "localization-adiabatic",
            BudgetRow::Unitary2 => "unitary-2",
            BudgetRow::DipoleDipole => "dipole-dipole",
            BudgetRow::RDecay2 => "r-decay-2",
        }
    }

    pub fn index(self) -> usize {
        match self {
            BudgetRow::Decay1 => 1,
            BudgetRow::LocalizationFast => 2,
            BudgetRow::LocalizationAdiabatic => 3,
            BudgetRow::Unitary2 => 4,
            BudgetRow::DipoleDipole => 5,
            BudgetRow::RDecay2 => 6,
        }
    }

    /// The row formula, prefactor 1. Expects omega, omega_c, omega_ca, delta,
    /// g already resolved.
    fn value(
        self,
        gamma: f64,
        gamma_r: f64,
        tau: f64,
        omega_trap: f64,
        omega: f64,
        omega_c: f64,
        omega_ca: f64,
        delta: f64,
        g: f64,
    ) -> f64 {
        match self {
            BudgetRow::Decay1 => gamma / delta,
            BudgetRow::LocalizationFast => (omega_ca / omega).powi(2),
            BudgetRow::LocalizationAdiabatic => {
                (omega_ca / omega).powi(2) / (tau * omega_trap).powi(4)
            }
            BudgetRow::Unitary2 => (omega / omega_c).powi(6),
            BudgetRow::DipoleDipole => (g * omega / (delta * omega_c)).powi(4),
            BudgetRow::RDecay2 => (omega / omega_c).powi(2) * gamma_r * tau,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowValue {
    pub row: BudgetRow,
    pub value: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub rows: Vec<RowValue>,
    pub total: f64,
    /// Auxiliary node-imperfection term (Omega_c(0)/Omega)^2; not part of the
    /// six-row total.
    pub node_term: f64,
}

impl BudgetReport {
    pub fn value_of(&self, row: BudgetRow) -> f64 {
        self.rows.iter().find(|r| r.row == row).map(|r| r.value).unwrap_or(0.0)
    }
}

/// Which localization row a platform uses in a given regime.
fn active_rows(platform: Platform, regime: Regime) -> Vec<BudgetRow> {
    let localization = match (platform, regime) {
        (Platform::SolidState, _) => BudgetRow::LocalizationFast,
        (_, Regime::Fast) => BudgetRow::LocalizationFast,
        (_, Regime::Adiabatic) => BudgetRow::LocalizationAdiabatic,
    };
    let mut rows = vec![BudgetRow::Decay1, localization, BudgetRow::Unitary2, BudgetRow::DipoleDipole];
    if platform == Platform::LatticeAtom {
        rows.push(BudgetRow::RDecay2);
    }
    rows
}

/// Evaluate the six rows verbatim for explicit (omega, omega_c, omega_ca,
/// delta) in `p`, selecting active rows by platform and `regime`.
pub fn budget_rows(p: &PlatformParams, regime: Regime) -> Result<BudgetReport, SubwaveError> {
    if p.omega <= 0.0 {
        return Err(SubwaveError::InvalidInput(
            "budget rows diverge at omega = 0; set a probe amplitude".into(),
        ));
    }
    if p.delta <= 0.0 || p.omega_c <= 0.0 {
        return Err(SubwaveError::InvalidInput(
            "budget rows need delta > 0 and omega_c > 0".into(),
        ));
    }
    if p.platform == Platform::LatticeAtom && p.gamma_r <= 0.0 {
        return Err(SubwaveError::InvalidInput(
            "lattice-atom platform needs gamma_r > 0".into(),
        ));
    }
    if regime == Regime::Adiabatic && p.omega_trap <= 0.0 {
        return Err(SubwaveError::InvalidInput(
            "adiabatic regime needs omega_trap > 0".into(),
        ));
    }
    let g = if p.d > 0.0 && p.lambda > 0.0 { p.g()? } else { 0.0 };
    let active = active_rows(p.platform, regime);
    let mut rows = Vec::with_capacity(6);
    let mut total = 0.0;
    for row in ALL_ROWS {
        let computable = match row {
            BudgetRow::LocalizationAdiabatic => p.omega_trap > 0.0,
            _ => true,
        };
        let value = if computable {
            row.value(
                p.gamma, p.gamma_r, p.tau, p.omega_trap, p.omega, p.omega_c, p.omega_ca,
                p.delta, g,
            )
        } else {
            0.0
        };
        let is_active = active.contains(&row);
        if is_active {
            total += value;
        }
        rows.push(RowValue { row, value, active: is_active });
    }
    let node_term = if p.node_residual > 0.0 {
        (p.node_residual / p.omega).powi(2)
    } else {
        0.0
    };
    Ok(BudgetReport { rows, total, node_term })
}

/// Budget report at (delta, omega0) after the standard eliminations:
/// Omega = sqrt(delta/tau), Omega_c and Omega_ca from the platform rules,
/// regime fast if omega_trap*tau <= 1 and otherwise the smaller of the two
/// localization rows (the physical error cannot exceed either limit).
pub fn budget_at(
    p: &PlatformParams,
    delta: f64,
    omega0: f64,
) -> Result<BudgetReport, SubwaveError> {
    let mut q = p.clone();
    q.delta = delta;
    q.omega0 = omega0;
    q.omega = (delta / q.tau).sqrt();
    q.omega_c = q.omega_c_rule();
    q.omega_ca = q.omega_ca_rule();
    let regime = if q.omega_trap * q.tau <= 1.0 {
        Regime::Fast
    } else {
        let fast = budget_rows(&q, Regime::Fast)?;
        let adiabatic = budget_rows(&q, Regime::Adiabatic)?;
        if fast.value_of(BudgetRow::LocalizationFast)
            <= adiabatic.value_of(BudgetRow::LocalizationAdiabatic)
        {
            Regime::Fast
        } else {
            Regime::Adiabatic
        }
    };
    budget_rows(&q, regime)
}

/// Total error at (delta, omega0) per `budget_at`.
pub fn total_error(p: &PlatformParams, delta: f64, omega0: f64) -> Result<f64, SubwaveError> {
    Ok(budget_at(p, delta, omega0)?.total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_delta: f64,
    pub best_omega0: f64,
    pub best_omega: f64,
    pub p_e: f64,
    pub grid_evaluations: usize,
    pub closed_form_delta: f64,
    pub closed_form_pe: f64,
    pub report: BudgetReport,
}

/// Total over an explicit row subset (used by the two-row toy and the
/// restricted comparisons); rows outside the subset are ignored entirely.
pub fn total_over_rows(
    p: &PlatformParams,
    delta: f64,
    omega0: f64,
    rows: &[BudgetRow],
) -> Result<f64, SubwaveError> {
    let report = budget_at(p, delta, omega0)?;
    Ok(rows.iter().map(|r| report.value_of(*r)).sum())
}

/// Logarithmic grid search (200 x 100) over Delta in [10 gamma, 1e8 gamma]
/// and Omega0 in [cap/1e3, cap], then golden-section refinement per axis to
/// 0.1% parameter resolution. `rows` restricts the objective (None = platform
/// rows).
pub fn optimize_rows(
    p: &PlatformParams,
    rows: Option<&[BudgetRow]>,
) -> Result<OptimizationResult, SubwaveError> {
    if p.gamma <= 0.0 {
        return Err(SubwaveError::InvalidInput("optimize needs gamma > 0".into()));
    }
    let cap = p.omega0.min(OMEGA0_CAP);
    if cap <= 0.0 {
        return Err(SubwaveError::InvalidInput("optimize needs omega0 > 0".into()));
    }
    let objective = |delta: f64, omega0: f64| -> Result<f64, SubwaveError> {
        match rows {
            Some(subset) => total_over_rows(p, delta, omega0, subset),
            None => total_error(p, delta, omega0),
        }
    };

    let (d_lo, d_hi) = (10.0 * p.gamma, 1e8 * p.gamma);
    let (o_lo, o_hi) = (cap / 1e3, cap);
    let n_d = 200;
    let n_o = 100;
    let mut evals = 0usize;
    let mut best = (f64::INFINITY, d_lo, o_hi);
    for i in 0..n_d {
        let delta = log_point(d_lo, d_hi, i, n_d);
        for j in 0..n_o {
            let omega0 = log_point(o_lo, o_hi, j, n_o);
            let total = objective(delta, omega0)?;
            evals += 1;
            if total < best.0 {
                best = (total, delta, omega0);
            }
        }
    }

    // Alternating golden-section refinement on each axis in log space.
    let (mut p_e, mut delta, mut omega0) = best;
    let d_step = (d_hi / d_lo).powf(1.0 / (n_d as f64 - 1.0));
    let o_step = (o_hi / o_lo).powf(1.0 / (n_o as f64 - 1.0));
    for _ in 0..3 {
        let (d_new, pe_d, ev1) = golden_log(
            |x| objective(x, omega0),
            (delta / d_step).max(d_lo),
            (delta * d_step).min(d_hi),
        )?;
        delta = d_new;
        p_e = pe_d;
        let (o_new, pe_o, ev2) = golden_log(
            |x| objective(delta, x),
            (omega0 / o_step).max(o_lo),
            (omega0 * o_step).min(o_hi),
        )?;
        omega0 = o_new;
        p_e = pe_o.min(p_e);
        evals += ev1 + ev2;
    }

    let mut q = p.clone();
    q.omega0 = omega0;
    let omega_c = q.omega_c_rule();
    let closed_form_delta = (p.gamma * p.tau.powi(3) * omega_c.powi(6)).powf(0.25);
    let closed_form_pe = (p.gamma / (p.tau * omega_c * omega_c)).powf(0.75);
    let report = budget_at(p, delta, omega0)?;

    Ok(OptimizationResult {
        best_delta: delta,
        best_omega0: omega0,
        best_omega: (delta / p.tau).sqrt(),
        p_e,
        grid_evaluations: evals,
        closed_form_delta,
        closed_form_pe,
        report,
    })
}

/// Platform-default optimization.
pub fn optimize(p: &PlatformParams) -> Result<OptimizationResult, SubwaveError> {
    optimize_rows(p, None)
}

/// The two largest active rows of a report.
pub fn dominant_balance(report: &BudgetReport) -> (BudgetRow, BudgetRow) {
    let mut active: Vec<&RowValue> = report.rows.iter().filter(|r| r.active).collect();
    active.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
    assert!(active.len() >= 2, "dominant balance needs at least two active rows");
    (active[0].row, active[1].row)
}

fn log_point(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    let t = i as f64 / (n as f64 - 1.0);
    lo * (hi / lo).powf(t)
}

/// Golden-section minimum of f on [lo, hi] in log coordinates, to 0.1%.
fn golden_log<F>(mut f: F, lo: f64, hi: f64) -> Result<(f64, f64, usize), SubwaveError>
where
    F: FnMut(f64) -> Result<f64, SubwaveError>,
{
    const INV_PHI: f64 = 0.618033988749895;
    let mut a = lo.ln();
    let mut b = hi.ln();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp())?;
    let mut fd = f(d.exp())?;
    let mut evals = 2usize;
    while (b - a) > 1e-3 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp())?;
        }
        evals += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x.exp())?;
    evals += 1;
    if fx <= fc && fx <= fd {
        Ok((x.exp(), fx, evals))
    } else if fc <= fd {
        Ok((c.exp(), fc, evals))
    } else {
        Ok((d.exp(), fd, evals))
    }
}
