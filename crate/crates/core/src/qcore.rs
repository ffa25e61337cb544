//! Dense complex linear algebra and quantum-state carriers.
//!
//! Everything here is plain dense `ndarray` storage: the largest system in the
//! crate is a 40-dimensional Hilbert space (1600-entry density matrix), where
//! dense beats any sparse machinery. hbar is absorbed throughout: energies are
//! angular frequencies (rad/s), so propagators are exp(-i H t) directly.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::SubwaveError;

pub type C64 = Complex64;

pub const I_UNIT: C64 = C64::new(0.0, 1.0);

/// Dense complex square matrix with row-major (row, col) indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub dim: usize,
    pub entries: Array2<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dim must be >= 1");
        Operator { dim, entries: Array2::zeros((dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Operator::zeros(dim);
        for i in 0..dim {
            op.entries[(i, i)] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_array(entries: Array2<C64>) -> Self {
        let (r, c) = entries.dim();
        assert_eq!(r, c, "operator must be square, got {}x{}", r, c);
        assert!(r >= 1, "operator dim must be >= 1");
        Operator { dim: r, entries }
    }

    /// |to><from| scaled by `amp`, added in place.
    pub fn add_dyad(&mut self, to: usize, from: usize, amp: C64) {
        self.entries[(to, from)] += amp;
    }

    pub fn dagger(&self) -> Operator {
        let mut out = Operator::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[(i, j)] = self.entries[(j, i)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim, other.dim, "matmul dim mismatch");
        Operator { dim: self.dim, entries: self.entries.dot(&other.entries) }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { dim: self.dim, entries: self.entries.mapv(|z| z * c) }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        assert_eq!(self.dim, other.dim, "add dim mismatch");
        Operator { dim: self.dim, entries: &self.entries + &other.entries }
    }

    /// In-place self += c * other.
    pub fn add_scaled(&mut self, other: &Operator, c: C64) {
        assert_eq!(self.dim, other.dim, "add_scaled dim mismatch");
        self.entries.zip_mut_with(&other.entries, |a, b| *a += c * b);
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hermiticity test at a relative tolerance: max|H - H^dag| < tol * max|H|.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs();
        if scale == 0.0 {
            return true;
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst < rel_tol * scale
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        assert_eq!(self.dim, psi.dim, "apply dim mismatch");
        StateVector { dim: self.dim, amplitudes: self.entries.dot(&psi.amplitudes) }
    }

    /// Max-norm of (self - other), for entrywise agreement checks.
    pub fn max_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut worst = 0.0f64;
        for (a, b) in self.entries.iter().zip(other.entries.iter()) {
            worst = worst.max((a - b).norm());
        }
        worst
    }
}

/// Normalized (or intermediate) pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub dim: usize,
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1);
        StateVector { dim, amplitudes: Array1::zeros(dim) }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut s = StateVector::zeros(dim);
        s.amplitudes[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_amplitudes(amplitudes: Array1<C64>) -> Self {
        let dim = amplitudes.len();
        assert!(dim >= 1);
        StateVector { dim, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize zero vector");
        StateVector { dim: self.dim, amplitudes: self.amplitudes.mapv(|z| z / n) }
    }

    /// <self|other>.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim, other.dim, "overlap dim mismatch");
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }
}

/// Mixed state; validity is checked by `validate`, not enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dim: usize,
    pub entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let mut entries = Array2::zeros((psi.dim, psi.dim));
        for i in 0..psi.dim {
            for j in 0..psi.dim {
                entries[(i, j)] = psi.amplitudes[i] * psi.amplitudes[j].conj();
            }
        }
        DensityMatrix { dim: psi.dim, entries }
    }

    pub fn from_array(entries: Array2<C64>) -> Self {
        let (r, c) = entries.dim();
        assert_eq!(r, c, "density matrix must be square");
        DensityMatrix { dim: r, entries }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.entries[(i, i)]).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    /// trace within 1e-8 of 1, Hermitian to 1e-10, eigenvalue floor -1e-8.
    pub fn validate(&self) -> Result<(), SubwaveError> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(SubwaveError::InvalidState(format!(
                "density matrix trace {} + {}i not within 1e-8 of 1",
                tr.re, tr.im
            )));
        }
        let op = Operator { dim: self.dim, entries: self.entries.clone() };
        let mut herm_worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                herm_worst = herm_worst
                    .max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        if herm_worst > 1e-10 {
            return Err(SubwaveError::InvalidState(format!(
                "density matrix Hermiticity violation {herm_worst:.3e} > 1e-10"
            )));
        }
        let (eigvals, _) = hermitian_eigen(&op);
        let min_eig = eigvals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(SubwaveError::InvalidState(format!(
                "density matrix minimum eigenvalue {min_eig:.3e} below -1e-8"
            )));
        }
        Ok(())
    }
}

/// Output sampling grid for time series; the integrator steps adaptively inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self, SubwaveError> {
        if !(t_end > t_start) {
            return Err(SubwaveError::InvalidInput(format!(
                "time grid needs t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if n_steps < 2 {
            return Err(SubwaveError::InvalidInput(format!(
                "time grid needs n_steps >= 2, got {n_steps}"
            )));
        }
        Ok(TimeGrid { t_start, t_end, n_steps })
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = (self.t_end - self.t_start) / self.n_steps as f64;
        (0..=self.n_steps).map(|k| self.t_start + dt * k as f64).collect()
    }
}

/// Kronecker product with index convention (i_a * b.dim + i_b).
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    let dim = a.dim * b.dim;
    let mut out = Operator::zeros(dim);
    for ia in 0..a.dim {
        for ja in 0..a.dim {
            let av = a.entries[(ia, ja)];
            if av == C64::new(0.0, 0.0) {
                continue;
            }
            for ib in 0..b.dim {
                for jb in 0..b.dim {
                    out.entries[(ia * b.dim + ib, ja * b.dim + jb)] =
                        av * b.entries[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Kronecker product of state vectors, same index convention as `tensor`.
pub fn tensor_state(a: &StateVector, b: &StateVector) -> StateVector {
    let mut out = StateVector::zeros(a.dim * b.dim);
    for ia in 0..a.dim {
        for ib in 0..b.dim {
            out.amplitudes[ia * b.dim + ib] = a.amplitudes[ia] * b.amplitudes[ib];
        }
    }
    out
}

/// tr(rho * obs).
pub fn expectation(rho: &DensityMatrix, obs: &Operator) -> Result<C64, SubwaveError> {
    if rho.dim != obs.dim {
        return Err(SubwaveError::DimensionMismatch {
            left: rho.dim,
            right: obs.dim,
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..rho.dim {
        for k in 0..rho.dim {
            acc += rho.entries[(i, k)] * obs.entries[(k, i)];
        }
    }
    Ok(acc)
}

/// exp(-i h dt) for Hermitian h, by Pade-13 scaling and squaring.
pub fn propagator_exact(h: &Operator, dt: f64) -> Result<Operator, SubwaveError> {
    if !h.is_hermitian(1e-12) {
        return Err(SubwaveError::NonHermitian);
    }
    let a = h.scale(C64::new(0.0, -dt));
    Ok(expm(&a))
}

/// exp(-i h dt) through the Jacobi eigendecomposition; independent cross-check path.
pub fn propagator_eigen(h: &Operator, dt: f64) -> Result<Operator, SubwaveError> {
    if !h.is_hermitian(1e-12) {
        return Err(SubwaveError::NonHermitian);
    }
    let (vals, vecs) = hermitian_eigen(h);
    let dim = h.dim;
    let mut out = Operator::zeros(dim);
    for k in 0..dim {
        let phase = (-I_UNIT * vals[k] * dt).exp();
        for i in 0..dim {
            for j in 0..dim {
                out.entries[(i, j)] +=
                    vecs.entries[(i, k)] * phase * vecs.entries[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Matrix exponential of a general complex matrix, degree-13 Pade approximant
/// with scaling and squaring (Higham's coefficients).
pub fn expm(a: &Operator) -> Operator {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 4.25;

    let dim = a.dim;
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(C64::new(0.5f64.powi(s), 0.0));

    let ident = Operator::identity(dim);
    let a2 = scaled.matmul(&scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let re = |x: f64| C64::new(x, 0.0);
    let u_inner = a6
        .scale(re(B[13]))
        .add(&a4.scale(re(B[11])))
        .add(&a2.scale(re(B[9])));
    let u_poly = a6
        .matmul(&u_inner)
        .add(&a6.scale(re(B[7])))
        .add(&a4.scale(re(B[5])))
        .add(&a2.scale(re(B[3])))
        .add(&ident.scale(re(B[1])));
    let u = scaled.matmul(&u_poly);

    let v_inner = a6
        .scale(re(B[12]))
        .add(&a4.scale(re(B[10])))
        .add(&a2.scale(re(B[8])));
    let v = a6
        .matmul(&v_inner)
        .add(&a6.scale(re(B[6])))
        .add(&a4.scale(re(B[4])))
        .add(&a2.scale(re(B[2])))
        .add(&ident.scale(re(B[0])));

    // (V - U) R = (V + U)
    let lhs = v.add(&u.scale(re(-1.0)));
    let rhs = v.add(&u);
    let mut r = solve_linear(&lhs, &rhs);
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// Max column absolute sum.
fn one_norm(a: &Operator) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.dim {
        let col: f64 = (0..a.dim).map(|i| a.entries[(i, j)].norm()).sum();
        best = best.max(col);
    }
    best
}

/// Solve A X = B by LU with partial pivoting (dense complex).
fn solve_linear(a: &Operator, b: &Operator) -> Operator {
    let n = a.dim;
    assert_eq!(n, b.dim);
    let mut lu = a.entries.clone();
    let mut x = b.entries.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[(col, col)].norm();
        for row in (col + 1)..n {
            let mag = lu[(row, col)].norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        assert!(best > 0.0, "singular matrix in linear solve");
        if pivot != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(pivot, j)];
                lu[(pivot, j)] = tmp;
            }
            perm.swap(col, pivot);
            for j in 0..n {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(pivot, j)];
                x[(pivot, j)] = tmp;
            }
        }
        let diag = lu[(col, col)];
        for row in (col + 1)..n {
            let factor = lu[(row, col)] / diag;
            lu[(row, col)] = factor;
            for j in (col + 1)..n {
                let sub = factor * lu[(col, j)];
                lu[(row, j)] -= sub;
            }
            for j in 0..n {
                let sub = factor * x[(col, j)];
                x[(row, j)] -= sub;
            }
        }
    }
    // Back substitution on the upper triangle.
    for col in (0..n).rev() {
        let diag = lu[(col, col)];
        for j in 0..n {
            x[(col, j)] /= diag;
        }
        for row in 0..col {
            let factor = lu[(row, col)];
            for j in 0..n {
                let sub = factor * x[(col, j)];
                x[(row, j)] -= sub;
            }
        }
    }
    Operator { dim: n, entries: x }
}

/// Eigendecomposition of a Hermitian operator by cyclic complex Jacobi sweeps.
/// Returns eigenvalues ascending and the unitary of column eigenvectors.
pub fn hermitian_eigen(h: &Operator) -> (Vec<f64>, Operator) {
    let n = h.dim;
    let mut a = h.entries.clone();
    let mut v = Operator::identity(n).entries;

    let fro: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let tol = 1e-14 * fro.max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let mag = g.norm();
                if mag <= tol / n as f64 {
                    continue;
                }
                let u = g / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cu = C64::new(c, 0.0);
                let su = u.conj() * s;
                // Column update: A <- A R, with R[p,p]=c, R[p,q]=s, R[q,p]=-s*conj(u), R[q,q]=c*conj(u).
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cu - aiq * su;
                    a[(i, q)] = aip * s + aiq * (u.conj() * c);
                }
                // Row update: A <- R^dag A.
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * cu - aqj * (u * s);
                    a[(q, j)] = apj * s + aqj * (u * c);
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cu - viq * su;
                    v[(i, q)] = vip * s + viq * (u.conj() * c);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> =
        (0..n).map(|i| (a[(i, i)].re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
    let mut vecs = Array2::zeros((n, n));
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for i in 0..n {
            vecs[(i, new_col)] = v[(i, old_col)];
        }
    }
    (vals, Operator { dim: n, entries: vecs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_close, Splitmix};

    fn random_operator(rng: &mut Splitmix, dim: usize) -> Operator {
        let mut op = Operator::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                op.entries[(i, j)] = C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            }
        }
        op
    }

    fn random_hermitian(rng: &mut Splitmix, dim: usize) -> Operator {
        let a = random_operator(rng, dim);
        a.add(&a.dagger()).scale(C64::new(0.5, 0.0))
    }

    fn random_state(rng: &mut Splitmix, dim: usize) -> StateVector {
        let mut s = StateVector::zeros(dim);
        for i in 0..dim {
            s.amplitudes[i] = C64::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        }
        s.normalized()
    }

    #[test]
    fn tensor_identity_case() {
        let i2 = Operator::identity(2);
        let i4 = tensor(&i2, &i2);
        assert_eq!(i4.max_diff(&Operator::identity(4)), 0.0);
    }

    #[test]
    fn tensor_diagonal_expansion() {
        let mut z = Operator::zeros(2);
        z.entries[(0, 0)] = C64::new(1.0, 0.0);
        z.entries[(1, 1)] = C64::new(-1.0, 0.0);
        let out = tensor(&z, &Operator::identity(2));
        let expected = [1.0, 1.0, -1.0, -1.0];
        for (i, &want) in expected.iter().enumerate() {
            assert_close(out.entries[(i, i)].re, want, 0.0);
        }
    }

    #[test]
    fn tensor_factorizes_on_product_states() {
        let mut rng = Splitmix::new(11);
        let a = random_operator(&mut rng, 2);
        let b = random_operator(&mut rng, 2);
        let x = random_state(&mut rng, 2);
        let y = random_state(&mut rng, 2);
        let lhs = tensor(&a, &b).apply(&tensor_state(&x, &y));
        let rhs = tensor_state(&a.apply(&x), &b.apply(&y));
        for i in 0..4 {
            assert!((lhs.amplitudes[i] - rhs.amplitudes[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn tensor_is_associative() {
        let mut rng = Splitmix::new(12);
        let a = random_operator(&mut rng, 2);
        let b = random_operator(&mut rng, 3);
        let c = random_operator(&mut rng, 2);
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        // Elementwise products are not bit-associative; machine-scale
        // agreement is the real invariant.
        assert!(left.max_diff(&right) < 1e-14);
    }

    #[test]
    fn expectation_pure_projector() {
        let psi = StateVector::basis(3, 0);
        let rho = DensityMatrix::from_pure(&psi);
        let mut proj = Operator::zeros(3);
        proj.entries[(0, 0)] = C64::new(1.0, 0.0);
        let val = expectation(&rho, &proj).unwrap();
        assert_close(val.re, 1.0, 1e-15);
        assert_close(val.im, 0.0, 1e-15);
    }

    #[test]
    fn expectation_maximally_mixed_identity() {
        let d = 4;
        let mut rho = DensityMatrix::from_pure(&StateVector::basis(d, 0));
        rho.entries = Array2::zeros((d, d));
        for i in 0..d {
            rho.entries[(i, i)] = C64::new(1.0 / d as f64, 0.0);
        }
        let val = expectation(&rho, &Operator::identity(d)).unwrap();
        assert_close(val.re, 1.0, 1e-15);
    }

    #[test]
    fn expectation_matches_double_loop_oracle() {
        let mut rng = Splitmix::new(13);
        let h = random_hermitian(&mut rng, 5);
        let psi = random_state(&mut rng, 5);
        let rho = DensityMatrix::from_pure(&psi);
        let obs = random_hermitian(&mut rng, 5);
        let fast = expectation(&rho, &obs).unwrap();
        let mut slow = C64::new(0.0, 0.0);
        for i in 0..5 {
            for k in 0..5 {
                slow += rho.entries[(i, k)] * obs.entries[(k, i)];
            }
        }
        assert!((fast - slow).norm() < 1e-12);
        // Hermitian observable on a valid density matrix: real expectation.
        assert!(fast.im.abs() < 1e-10);
        let _ = h;
    }

    #[test]
    fn expectation_dim_mismatch_is_error() {
        let rho = DensityMatrix::from_pure(&StateVector::basis(2, 0));
        let obs = Operator::identity(3);
        assert!(expectation(&rho, &obs).is_err());
    }

    #[test]
    fn propagator_zero_hamiltonian_is_identity() {
        let h = Operator::zeros(3);
        let u = propagator_exact(&h, 1.7).unwrap();
        assert!(u.max_diff(&Operator::identity(3)) < 1e-14);
    }

    #[test]
    fn propagator_rabi_pi_pulse_is_sigma_x() {
        let omega = 2.0;
        let mut h = Operator::zeros(2);
        h.entries[(0, 1)] = C64::new(omega / 2.0, 0.0);
        h.entries[(1, 0)] = C64::new(omega / 2.0, 0.0);
        let u = propagator_exact(&h, std::f64::consts::PI / omega).unwrap();
        // sigma_x up to a global phase: |entries| match.
        assert_close(u.entries[(0, 1)].norm(), 1.0, 1e-10);
        assert_close(u.entries[(1, 0)].norm(), 1.0, 1e-10);
        assert!(u.entries[(0, 0)].norm() < 1e-10);
        assert!(u.entries[(1, 1)].norm() < 1e-10);
    }

    #[test]
    fn propagator_unitary_and_matches_eigen_path() {
        let mut rng = Splitmix::new(14);
        let h = random_hermitian(&mut rng, 4);
        let dt = 0.83;
        let u = propagator_exact(&h, dt).unwrap();
        let udu = u.dagger().matmul(&u);
        assert!(udu.max_diff(&Operator::identity(4)) < 1e-10);
        let u_eig = propagator_eigen(&h, dt).unwrap();
        assert!(u.max_diff(&u_eig) < 1e-10);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let mut h = Operator::zeros(2);
        h.entries[(0, 1)] = C64::new(1.0, 0.0);
        assert!(propagator_exact(&h, 1.0).is_err());
    }

    #[test]
    fn propagator_composes_over_time() {
        let mut rng = Splitmix::new(15);
        let h = random_hermitian(&mut rng, 3);
        let u1 = propagator_exact(&h, 0.3).unwrap();
        let u2 = propagator_exact(&h, 0.9).unwrap();
        let u12 = propagator_exact(&h, 1.2).unwrap();
        assert!(u1.matmul(&u2).max_diff(&u12) < 1e-9);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let mut rng = Splitmix::new(16);
        let h = random_hermitian(&mut rng, 4);
        let u = propagator_exact(&h, 50.0).unwrap();
        let u_eig = propagator_eigen(&h, 50.0).unwrap();
        assert!(u.max_diff(&u_eig) < 1e-8);
    }

    #[test]
    fn jacobi_eigen_reconstructs_matrix() {
        let mut rng = Splitmix::new(17);
        let h = random_hermitian(&mut rng, 6);
        let (vals, vecs) = hermitian_eigen(&h);
        for k in 0..6 {
            for i in 0..6 {
                let mut hv = C64::new(0.0, 0.0);
                for j in 0..6 {
                    hv += h.entries[(i, j)] * vecs.entries[(j, k)];
                }
                let diff = (hv - vecs.entries[(i, k)] * vals[k]).norm();
                assert!(diff < 1e-10, "eigenpair residual {diff}");
            }
        }
        let vdv = vecs.dagger().matmul(&vecs);
        assert!(vdv.max_diff(&Operator::identity(6)) < 1e-10);
        for k in 1..6 {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let psi = StateVector::from_amplitudes(ndarray::array![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8)
        ]);
        let rho = DensityMatrix::from_pure(&psi);
        rho.validate().unwrap();

        let mut bad = rho.clone();
        bad.entries[(0, 0)] += C64::new(0.1, 0.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn time_grid_basics() {
        assert!(TimeGrid::new(0.0, 0.0, 10).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let ts = g.times();
        assert_eq!(ts.len(), 5);
        assert_close(ts[4], 1.0, 1e-15);
    }
}
