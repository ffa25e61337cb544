//! Level schemes: lambda and tripod systems, the motional-ladder extension
//! (internal levels tensored with trap Fock states), and the two-atom product
//! scheme with resonant dipole-dipole exchange.
//!
//! A scheme is data: a static Hamiltonian, a list of drive couplings tagged
//! by which field modulates them, and a list of decay channels. The dynamics
//! module assembles the time-dependent Hamiltonian from these pieces.

use crate::qcore::{Operator, StateVector, C64};
use crate::SubwaveError;

/// Which field modulates a coupling. Probe couplings are scaled by the pulse
/// envelope at time t; Control couplings are static during the gate, so the
/// coupling weight itself carries the full Rabi amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveId {
    Probe,
    Control,
}

/// One coupling `weight/2 (|to><from| + h.c.)`, with the probe envelope as an
/// extra multiplier when `drive == Probe`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub from: usize,
    pub to: usize,
    pub drive: DriveId,
    pub weight: f64,
}

/// One decay channel at the given rate out of `upper` into `lower`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub upper: usize,
    pub lower: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelScheme {
    pub labels: Vec<String>,
    pub h0: Operator,
    pub couplings: Vec<Coupling>,
    pub decays: Vec<Decay>,
}

impl LevelScheme {
    pub fn dim(&self) -> usize {
        self.h0.dim
    }

    pub fn index_of(&self, label: &str) -> Result<usize, SubwaveError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| SubwaveError::UndefinedState(label.to_string()))
    }

    /// Static part of the Hamiltonian: h0 plus all Control couplings.
    pub fn h_static(&self) -> Operator {
        let mut h = self.h0.clone();
        for c in &self.couplings {
            if c.drive == DriveId::Control {
                h.add_dyad(c.to, c.from, C64::new(0.5 * c.weight, 0.0));
                h.add_dyad(c.from, c.to, C64::new(0.5 * c.weight, 0.0));
            }
        }
        h
    }

    /// Probe coupling pattern at unit envelope; multiply by the instantaneous
    /// probe amplitude and add to `h_static` for the full Hamiltonian.
    pub fn h_probe_unit(&self) -> Operator {
        let mut h = Operator::zeros(self.dim());
        for c in &self.couplings {
            if c.drive == DriveId::Probe {
                h.add_dyad(c.to, c.from, C64::new(0.5 * c.weight, 0.0));
                h.add_dyad(c.from, c.to, C64::new(0.5 * c.weight, 0.0));
            }
        }
        h
    }

    /// Full Hamiltonian at probe amplitude `amp`.
    pub fn hamiltonian(&self, amp: f64) -> Operator {
        let mut h = self.h_static();
        let probe = self.h_probe_unit();
        h.add_scaled(&probe, C64::new(amp, 0.0));
        h
    }

    /// Sum of decay rates out of a level.
    pub fn total_decay_out_of(&self, level: usize) -> f64 {
        self.decays.iter().filter(|d| d.upper == level).map(|d| d.rate).sum()
    }
}

/// Harmonic trap ladder attached to an internal scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionalLadder {
    pub n_fock: usize,
    pub omega: f64,
    pub omega_ca: f64,
}

impl MotionalLadder {
    pub fn new(n_fock: usize, omega: f64, omega_ca: f64) -> Result<Self, SubwaveError> {
        if n_fock < 3 {
            return Err(SubwaveError::InvalidInput(format!(
                "motional ladder needs n_fock >= 3, got {}",
                n_fock
            )));
        }
        Ok(MotionalLadder { n_fock, omega, omega_ca })
    }
}

/// Where the atom sits in the control field. An addressed atom is at a node:
/// the control coupling is purely motional (plus an optional uniform residual
/// from node imperfection). A spectator sits off-node: a constant control
/// amplitude plus the same motional ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionalRole {
    Addressed { node_residual: f64 },
    Spectator { omega_c: f64 },
}

/// Resonant dipole-dipole exchange between two atoms. `g` is the shared
/// magnitude gamma/(k d)^3 and `g0`, `g1` the per-channel couplings after
/// polarization factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomCoupling {
    pub g0: f64,
    pub g1: f64,
    pub g: f64,
    pub pol_factor_0: f64,
    pub pol_factor_1: f64,
}

impl TwoAtomCoupling {
    pub fn new(g: f64, pol_factor_0: f64, pol_factor_1: f64) -> Self {
        TwoAtomCoupling { g0: g * pol_factor_0, g1: g * pol_factor_1, g, pol_factor_0, pol_factor_1 }
    }

    /// Recompute g = gamma/(k d)^3 from first principles; never stores a
    /// stale value alongside the inputs.
    pub fn from_distance(
        gamma: f64,
        k: f64,
        d: f64,
        pol_factor_0: f64,
        pol_factor_1: f64,
    ) -> Result<Self, SubwaveError> {
        if d <= 0.0 {
            return Err(SubwaveError::InvalidInput("two-atom coupling needs d > 0".into()));
        }
        let kd = k * d;
        Ok(Self::new(gamma / (kd * kd * kd), pol_factor_0, pol_factor_1))
    }
}

/// Dark state of the (g, r) pair under probe Omega and control Omega_c:
/// (Omega_c |g> - Omega |r>) / sqrt(Omega_c^2 + Omega^2), zero-eigenvector of
/// the coupling to |e>.
pub fn dark_state(dim: usize, g_idx: usize, r_idx: usize, omega: f64, omega_c: f64) -> StateVector {
    let norm = (omega_c * omega_c + omega * omega).sqrt();
    let mut psi = StateVector::zeros(dim);
    psi.amplitudes[g_idx] = C64::new(omega_c / norm, 0.0);
    psi.amplitudes[r_idx] = C64::new(-omega / norm, 0.0);
    psi
}

/// Dark/bright pair on (|1>, |r>) and the bright-state Stark shift
/// Delta_S = (Omega^2 + Omega_c^2) / Delta.
pub fn dark_bright_basis(
    dim: usize,
    one_idx: usize,
    r_idx: usize,
    omega: f64,
    omega_c: f64,
    delta: f64,
) -> (StateVector, StateVector, f64) {
    let tilde_sq = omega * omega + omega_c * omega_c;
    let tilde = tilde_sq.sqrt();
    let mut dark = StateVector::zeros(dim);
    dark.amplitudes[one_idx] = C64::new(omega_c / tilde, 0.0);
    dark.amplitudes[r_idx] = C64::new(-omega / tilde, 0.0);
    let mut bright = StateVector::zeros(dim);
    bright.amplitudes[one_idx] = C64::new(omega / tilde, 0.0);
    bright.amplitudes[r_idx] = C64::new(omega_c / tilde, 0.0);
    let stark = tilde_sq / delta;
    (dark, bright, stark)
}

/// Three-level lambda scheme, levels [g, r, e], probe g-e at unit weight
/// (peak amplitude lives in the pulse), control r-e at omega_c, detuning
/// delta on |e>. Total decay 2 gamma out of |e>, split over the branching
/// fractions (f_g to |g>, rest to |r>).
pub fn build_lambda_branched(
    omega_c: f64,
    delta: f64,
    gamma: f64,
    branch_to_g: f64,
) -> LevelScheme {
    let labels = vec!["g".to_string(), "r".to_string(), "e".to_string()];
    let mut h0 = Operator::zeros(3);
    h0.entries[[2, 2]] = C64::new(delta, 0.0);
    let couplings = vec![
        Coupling { from: 0, to: 2, drive: DriveId::Probe, weight: 1.0 },
        Coupling { from: 1, to: 2, drive: DriveId::Control, weight: omega_c },
    ];
    let mut decays = Vec::new();
    if gamma > 0.0 {
        let total = 2.0 * gamma;
        decays.push(Decay { upper: 2, lower: 0, rate: total * branch_to_g });
        decays.push(Decay { upper: 2, lower: 1, rate: total * (1.0 - branch_to_g) });
    }
    LevelScheme { labels, h0, couplings, decays }
}

/// Lambda scheme with the default 50/50 branching.
pub fn build_lambda(omega_c: f64, delta: f64, gamma: f64) -> LevelScheme {
    build_lambda_branched(omega_c, delta, gamma, 0.5)
}

/// Four-level tripod, levels [0, 1, r, e]: probe on 1-e (|0> is a pure
/// bystander), control on r-e, detuning delta on |e>. Decay 2 gamma out of
/// |e> split evenly over |1> and |r|; optional qubit-frame decay gamma_r out
/// of |r> into |0> and |1> at gamma_r each.
pub fn build_tripod(omega_c: f64, delta: f64, gamma: f64, gamma_r: f64) -> LevelScheme {
    let labels = vec!["0".to_string(), "1".to_string(), "r".to_string(), "e".to_string()];
    let mut h0 = Operator::zeros(4);
    h0.entries[[3, 3]] = C64::new(delta, 0.0);
    let couplings = vec![
        Coupling { from: 1, to: 3, drive: DriveId::Probe, weight: 1.0 },
        Coupling { from: 2, to: 3, drive: DriveId::Control, weight: omega_c },
    ];
    let mut decays = Vec::new();
    if gamma > 0.0 {
        decays.push(Decay { upper: 3, lower: 1, rate: gamma });
        decays.push(Decay { upper: 3, lower: 2, rate: gamma });
    }
    if gamma_r > 0.0 {
        decays.push(Decay { upper: 2, lower: 0, rate: gamma_r });
        decays.push(Decay { upper: 2, lower: 1, rate: gamma_r });
    }
    LevelScheme { labels, h0, couplings, decays }
}

/// Tripod tensored with a trap ladder of `ladder.n_fock` Fock states, basis
/// index = internal * n_fock + n, labels "{internal}:{n}". The trap adds
/// omega (n + 1/2) to every level. The control field contributes, per the
/// role, a uniform r-e coupling and the position-gradient sideband couplings
/// <e,n|H|r,n+1> = (omega_ca/2) sqrt(n+1) (plus the transpose family).
pub fn build_tripod_motional(
    delta: f64,
    gamma: f64,
    ladder: &MotionalLadder,
    role: MotionalRole,
) -> LevelScheme {
    let nf = ladder.n_fock;
    let internal = ["0", "1", "r", "e"];
    let dim = 4 * nf;
    let mut labels = Vec::with_capacity(dim);
    for name in internal {
        for n in 0..nf {
            labels.push(format!("{}:{}", name, n));
        }
    }
    let idx = |level: usize, n: usize| level * nf + n;

    let mut h0 = Operator::zeros(dim);
    for level in 0..4 {
        for n in 0..nf {
            let mut diag = ladder.omega * (n as f64 + 0.5);
            if level == 3 {
                diag += delta;
            }
            h0.entries[[idx(level, n), idx(level, n)]] = C64::new(diag, 0.0);
        }
    }

    let mut couplings = Vec::new();
    // Probe on 1-e, uniform over Fock states (probe gradient neglected).
    for n in 0..nf {
        couplings.push(Coupling { from: idx(1, n), to: idx(3, n), drive: DriveId::Probe, weight: 1.0 });
    }
    // Uniform control component: the spectator's constant Omega_c, or the
    // addressed atom's node residual if any.
    let uniform = match role {
        MotionalRole::Spectator { omega_c } => omega_c,
        MotionalRole::Addressed { node_residual } => node_residual,
    };
    if uniform != 0.0 {
        for n in 0..nf {
            couplings.push(Coupling {
                from: idx(2, n),
                to: idx(3, n),
                drive: DriveId::Control,
                weight: uniform,
            });
        }
    }
    // Sideband couplings from the control gradient: r,n+1 <-> e,n and
    // r,n <-> e,n+1, both at weight omega_ca sqrt(n+1).
    if ladder.omega_ca != 0.0 {
        for n in 0..nf - 1 {
            let w = ladder.omega_ca * ((n + 1) as f64).sqrt();
            couplings.push(Coupling { from: idx(2, n + 1), to: idx(3, n), drive: DriveId::Control, weight: w });
            couplings.push(Coupling { from: idx(2, n), to: idx(3, n + 1), drive: DriveId::Control, weight: w });
        }
    }

    let mut decays = Vec::new();
    if gamma > 0.0 {
        // Decay preserves the Fock state (Lamb-Dicke limit for the budget's
        // purposes); split evenly over |1> and |r> as in the pointlike tripod.
        for n in 0..nf {
            decays.push(Decay { upper: idx(3, n), lower: idx(1, n), rate: gamma });
            decays.push(Decay { upper: idx(3, n), lower: idx(2, n), rate: gamma });
        }
    }

    LevelScheme { labels, h0, couplings, decays }
}

/// Two tripod atoms, product basis index i1*4 + i2 with labels "{a}{b}",
/// atom 1 addressed (control residual `omega_c_at_0`, usually 0) and atom 2
/// the spectator at control `omega_c_at_d`. The probe drives 1-e on both.
/// Resonant dipole-dipole exchange swaps one atom's |e> against the other's
/// qubit level: H_dd = -g0 (|0e><e0| + h.c.) - g1 (|1e><e1| + h.c.).
pub fn build_two_atom(
    omega_c_at_0: f64,
    omega_c_at_d: f64,
    delta: f64,
    gamma: f64,
    dd: &TwoAtomCoupling,
) -> LevelScheme {
    let internal = ["0", "1", "r", "e"];
    let dim = 16;
    let mut labels = Vec::with_capacity(dim);
    for a in internal {
        for b in internal {
            labels.push(format!("{}{}", a, b));
        }
    }
    let idx = |i1: usize, i2: usize| i1 * 4 + i2;

    let mut h0 = Operator::zeros(dim);
    for i1 in 0..4 {
        for i2 in 0..4 {
            let mut diag = 0.0;
            if i1 == 3 {
                diag += delta;
            }
            if i2 == 3 {
                diag += delta;
            }
            h0.entries[[idx(i1, i2), idx(i1, i2)]] = C64::new(diag, 0.0);
        }
    }
    // Exchange terms: |0e> <-> |e0| at -g0, |1e> <-> |e1> at -g1.
    h0.entries[[idx(0, 3), idx(3, 0)]] += C64::new(-dd.g0, 0.0);
    h0.entries[[idx(3, 0), idx(0, 3)]] += C64::new(-dd.g0, 0.0);
    h0.entries[[idx(1, 3), idx(3, 1)]] += C64::new(-dd.g1, 0.0);
    h0.entries[[idx(3, 1), idx(1, 3)]] += C64::new(-dd.g1, 0.0);

    let mut couplings = Vec::new();
    for other in 0..4 {
        // Atom 1 probe and control (atom 2 state fixed at `other`).
        couplings.push(Coupling { from: idx(1, other), to: idx(3, other), drive: DriveId::Probe, weight: 1.0 });
        if omega_c_at_0 != 0.0 {
            couplings.push(Coupling {
                from: idx(2, other),
                to: idx(3, other),
                drive: DriveId::Control,
                weight: omega_c_at_0,
            });
        }
        // Atom 2 probe and control (atom 1 state fixed at `other`).
        couplings.push(Coupling { from: idx(other, 1), to: idx(other, 3), drive: DriveId::Probe, weight: 1.0 });
        if omega_c_at_d != 0.0 {
            couplings.push(Coupling {
                from: idx(other, 2),
                to: idx(other, 3),
                drive: DriveId::Control,
                weight: omega_c_at_d,
            });
        }
    }

    let mut decays = Vec::new();
    if gamma > 0.0 {
        for other in 0..4 {
            decays.push(Decay { upper: idx(3, other), lower: idx(1, other), rate: gamma });
            decays.push(Decay { upper: idx(3, other), lower: idx(2, other), rate: gamma });
            decays.push(Decay { upper: idx(other, 3), lower: idx(other, 1), rate: gamma });
            decays.push(Decay { upper: idx(other, 3), lower: idx(other, 2), rate: gamma });
        }
    }

    LevelScheme { labels, h0, couplings, decays }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{tensor_state, StateVector};
    use crate::testutil::{assert_close, assert_rel_close};

    #[test]
    fn lambda_hamiltonian_reads_off() {
        let s = build_lambda(7.0, 100.0, 0.5);
        let h = s.hamiltonian(3.0);
        assert_close(h.entries[[2, 0]].re, 1.5, 1e-15);
        assert_close(h.entries[[2, 1]].re, 3.5, 1e-15);
        assert_close(h.entries[[2, 2]].re, 100.0, 1e-15);
        assert_close(h.entries[[0, 1]].re, 0.0, 1e-15);
        assert!(h.is_hermitian(1e-14));
        assert_close(s.total_decay_out_of(2), 1.0, 1e-15);
    }

    #[test]
    fn dark_state_is_annihilated_by_coupling() {
        let s = build_lambda(12.0, 5000.0, 0.0);
        for amp in [0.5, 2.0, 11.0] {
            let h = s.hamiltonian(amp);
            let dark = dark_state(3, 0, 1, amp, 12.0);
            let hd = h.apply(&dark);
            // <e|H|D> must vanish identically.
            assert_close(hd.amplitudes[2].norm(), 0.0, 1e-12);
        }
    }

    #[test]
    fn dark_bright_orthonormal_and_stark() {
        let (dark, bright, stark) = dark_bright_basis(4, 1, 2, 3.0, 4.0, 50.0);
        assert_close(dark.norm(), 1.0, 1e-14);
        assert_close(bright.norm(), 1.0, 1e-14);
        assert_close(dark.overlap(&bright).norm(), 0.0, 1e-14);
        assert_close(stark, 25.0 / 50.0, 1e-14);

        // Bright state carries the full coupling: <e|H|B> = tilde/2 * amp
        // with the tripod's unit probe weight folded into amp.
        let s = build_tripod(4.0, 50.0, 0.0, 0.0);
        let h = s.hamiltonian(3.0);
        let hb = h.apply(&bright);
        assert_rel_close(hb.amplitudes[3].re, 5.0 / 2.0, 1e-12);
        let hd = h.apply(&dark);
        assert_close(hd.amplitudes[3].norm(), 0.0, 1e-12);
    }

    #[test]
    fn tripod_bystander_is_uncoupled() {
        let s = build_tripod(9.0, 300.0, 1.0, 0.0);
        let h = s.hamiltonian(4.0);
        for j in 0..4 {
            if j != 0 {
                assert_close(h.entries[[j, 0]].norm(), 0.0, 1e-15);
            }
        }
        assert_close(s.total_decay_out_of(3), 2.0, 1e-15);
    }

    #[test]
    fn tripod_r_decay_channels() {
        let s = build_tripod(9.0, 300.0, 1.0, 0.25);
        assert_close(s.total_decay_out_of(2), 0.5, 1e-15);
        let to_zero: f64 = s
            .decays
            .iter()
            .filter(|d| d.upper == 2 && d.lower == 0)
            .map(|d| d.rate)
            .sum();
        assert_close(to_zero, 0.25, 1e-15);
    }

    #[test]
    fn motional_ladder_matrix_elements() {
        let ladder = MotionalLadder::new(5, 2.0, 0.6).unwrap();
        let s = build_tripod_motional(100.0, 0.0, &ladder, MotionalRole::Addressed { node_residual: 0.0 });
        let h = s.hamiltonian(0.0);
        let nf = 5;
        let e0 = 3 * nf;
        let r1 = 2 * nf + 1;
        // <e,0|H|r,1> = omega_ca/2.
        assert_close(h.entries[[e0, r1]].re, 0.3, 1e-14);
        // <e,1|H|r,2> = omega_ca sqrt(2)/2.
        assert_close(h.entries[[e0 + 1, r1 + 1]].re, 0.3 * 2.0f64.sqrt(), 1e-14);
        // Transpose family <e,1|H|r,0>.
        assert_close(h.entries[[e0 + 1, 2 * nf]].re, 0.3, 1e-14);
        // Trap diagonal: |0,n=2> at omega (2 + 1/2).
        assert_close(h.entries[[2, 2]].re, 5.0, 1e-14);
        // Detuned manifold: |e,0> at delta + omega/2.
        assert_close(h.entries[[e0, e0]].re, 101.0, 1e-14);
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn motional_spectator_has_uniform_control() {
        let ladder = MotionalLadder::new(4, 2.0, 0.0).unwrap();
        let s = build_tripod_motional(100.0, 0.0, &ladder, MotionalRole::Spectator { omega_c: 8.0 });
        let h = s.hamiltonian(0.0);
        for n in 0..4 {
            assert_close(h.entries[[3 * 4 + n, 2 * 4 + n]].re, 4.0, 1e-14);
        }
    }

    #[test]
    fn n_fock_floor_enforced() {
        assert!(MotionalLadder::new(2, 1.0, 0.1).is_err());
        assert!(MotionalLadder::new(3, 1.0, 0.1).is_ok());
    }

    #[test]
    fn two_atom_exchange_reads_off() {
        let dd = TwoAtomCoupling::new(5.0, 1.0, 0.5);
        let s = build_two_atom(0.0, 20.0, 1000.0, 0.0, &dd);
        let h = s.hamiltonian(2.0);
        // |0e> index 3, |e0> index 12: -g0.
        assert_close(h.entries[[3, 12]].re, -5.0, 1e-14);
        // |1e> index 7, |e1> index 13: -g1.
        assert_close(h.entries[[7, 13]].re, -2.5, 1e-14);
        // Atom 2 control at d: |re> -> |rr> nothing; |1e> couples? Control is
        // r-e on atom 2: <r r|H|r e> with atom 1 fixed r: indices 10, 11.
        assert_close(h.entries[[11, 10]].re, 10.0, 1e-14);
        // Double-excited diagonal 2 delta.
        assert_close(h.entries[[15, 15]].re, 2000.0, 1e-14);
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn two_atom_factorizes_at_zero_g() {
        // With g = 0 the Hamiltonian is H1 x I + I x H2 built from the
        // single-atom tripods at the same fields.
        let dd = TwoAtomCoupling::new(0.0, 1.0, 1.0);
        let amp = 3.0;
        let s2 = build_two_atom(0.5, 20.0, 1000.0, 0.0, &dd);
        let h2 = s2.hamiltonian(amp);

        let a1 = build_tripod(0.5, 1000.0, 0.0, 0.0).hamiltonian(amp);
        let a2 = build_tripod(20.0, 1000.0, 0.0, 0.0).hamiltonian(amp);
        let mut expected = crate::qcore::tensor(&a1, &Operator::identity(4));
        let id_a2 = crate::qcore::tensor(&Operator::identity(4), &a2);
        expected.add_scaled(&id_a2, C64::new(1.0, 0.0));
        assert!(h2.max_diff(&expected) < 1e-12);
    }

    #[test]
    fn from_distance_recomputes_g() {
        let gamma = 2.0 * std::f64::consts::PI * 11e6;
        let k = 2.0 * std::f64::consts::PI / 397e-9;
        let dd = TwoAtomCoupling::from_distance(gamma, k, 1e-6, 1.0, 1.0).unwrap();
        let kd = k * 1e-6;
        assert_rel_close(dd.g, gamma / kd.powi(3), 1e-12);
        assert!(TwoAtomCoupling::from_distance(gamma, k, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn motional_labels_and_product_states() {
        let ladder = MotionalLadder::new(3, 1.0, 0.1).unwrap();
        let s = build_tripod_motional(10.0, 0.0, &ladder, MotionalRole::Addressed { node_residual: 0.0 });
        assert_eq!(s.labels[0], "0:0");
        assert_eq!(s.labels[3], "1:0");
        assert_eq!(s.index_of("e:2").unwrap(), 11);
        assert!(s.index_of("q:0").is_err());

        // Product-state embedding: |1> x |n=0> sits at index 3.
        let internal = StateVector::basis(4, 1);
        let fock0 = StateVector::basis(3, 0);
        let full = tensor_state(&internal, &fock0);
        assert_close(full.amplitudes[3].re, 1.0, 1e-15);
    }
}
