//! Adaptive 4th/5th-order explicit Runge-Kutta stepping (Dormand-Prince
//! coefficients, FSAL) over complex state vectors and density matrices.
//! Integration always runs on a dimensionless time axis supplied by the
//! caller; tolerances act on the weighted RMS of the embedded error.

use crate::qcore::C64;
use crate::SubwaveError;
use ndarray::{Array1, Array2};

/// Minimal state interface for the stepper: in-place axpy, zeroing, and the
/// component count used by the weighted error norm.
pub(crate) trait OdeState: Clone {
    fn set_zero(&mut self);
    fn axpy(&mut self, a: f64, x: &Self);
    fn copy_from(&mut self, other: &Self);
    fn components(&self) -> usize;
    fn for_each3(err: &Self, y0: &Self, y1: &Self, f: &mut dyn FnMut(C64, C64, C64));
}

impl OdeState for Array1<C64> {
    fn set_zero(&mut self) {
        self.fill(C64::new(0.0, 0.0));
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_mut_with(x, |s, v| *s += a * v);
    }
    fn copy_from(&mut self, other: &Self) {
        self.assign(other);
    }
    fn components(&self) -> usize {
        self.len()
    }
    fn for_each3(err: &Self, y0: &Self, y1: &Self, f: &mut dyn FnMut(C64, C64, C64)) {
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            f(*e, *a, *b);
        }
    }
}

impl OdeState for Array2<C64> {
    fn set_zero(&mut self) {
        self.fill(C64::new(0.0, 0.0));
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_mut_with(x, |s, v| *s += a * v);
    }
    fn copy_from(&mut self, other: &Self) {
        self.assign(other);
    }
    fn components(&self) -> usize {
        self.len()
    }
    fn for_each3(err: &Self, y0: &Self, y1: &Self, f: &mut dyn FnMut(C64, C64, C64)) {
        for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
            f(*e, *a, *b);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Stats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Fifth-order solution weights (also the seventh stage row: FSAL).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Embedded error weights b5 - b4, including the k7 term.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate dy/dt = rhs(t, y) from t0 to t1 with adaptive step control.
/// `rhs` writes the derivative into its third argument.
pub(crate) fn dopri5<S, F>(
    mut rhs: F,
    y0: S,
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
) -> Result<(S, Stats), SubwaveError>
where
    S: OdeState,
    F: FnMut(f64, &S, &mut S),
{
    let span = t1 - t0;
    assert!(span > 0.0, "dopri5 needs t1 > t0");
    let h_min = 1e-14 * span;

    let mut t = t0;
    let mut y = y0;
    let mut stats = Stats::default();

    let mut k: Vec<S> = (0..7)
        .map(|_| {
            let mut z = y.clone();
            z.set_zero();
            z
        })
        .collect();
    let mut stage = y.clone();
    let mut y_next = y.clone();
    let mut err = y.clone();

    rhs(t, &y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut h = (span / 100.0).min(span);

    loop {
        if t1 - t <= 1e-15 * span {
            break;
        }
        if h < h_min {
            return Err(SubwaveError::StepSizeUnderflow { time: t });
        }
        if h > t1 - t {
            h = t1 - t;
        }

        // Stages 2..6.
        let rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, row) in rows.iter().enumerate() {
            stage.copy_from(&y);
            for (j, a) in row.iter().enumerate() {
                if *a != 0.0 {
                    stage.axpy(h * a, &k[j]);
                }
            }
            let (head, tail) = k.split_at_mut(s + 1);
            let _ = head;
            rhs(t + C[s + 1] * h, &stage, &mut tail[0]);
            stats.rhs_evals += 1;
        }

        // Fifth-order solution and its derivative (FSAL stage 7).
        y_next.copy_from(&y);
        for (j, b) in B.iter().enumerate() {
            if *b != 0.0 {
                y_next.axpy(h * b, &k[j]);
            }
        }
        {
            let (head, tail) = k.split_at_mut(6);
            let _ = head;
            rhs(t + h, &y_next, &mut tail[0]);
            stats.rhs_evals += 1;
        }

        // Embedded error estimate.
        err.set_zero();
        for (j, e) in E.iter().enumerate() {
            if *e != 0.0 {
                err.axpy(h * e, &k[j]);
            }
        }
        let mut sum_sq = 0.0f64;
        S::for_each3(&err, &y, &y_next, &mut |e, a, b| {
            let scale = atol + rtol * a.norm().max(b.norm());
            let q = e.norm() / scale;
            sum_sq += q * q;
        });
        let norm = (sum_sq / y.components() as f64).sqrt();

        if norm.is_finite() && norm <= 1.0 {
            t += h;
            y.copy_from(&y_next);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from(&rest[5]);
            stats.steps += 1;
            let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            stats.rejected += 1;
            // A non-finite norm (NaN inputs, overflow) shrinks at the floor
            // rate until the step-size guard reports the failure.
            let factor =
                if norm.is_finite() { (0.9 * norm.powf(-0.2)).clamp(0.2, 0.9) } else { 0.2 };
            h *= factor;
        }
    }

    Ok((y, stats))
}
