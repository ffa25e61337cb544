//! Deterministic helpers for unit tests: a splitmix64 generator (no external
//! RNG dependency, bit-stable across platforms) and small assertion utilities.

pub struct Splitmix {
    state: u64,
}

impl Splitmix {
    pub fn new(seed: u64) -> Self {
        Splitmix { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    let diff = (actual - expected).abs();
    assert!(
        diff <= tol,
        "expected {expected:.12e}, got {actual:.12e} (diff {diff:.3e} > tol {tol:.3e})"
    );
}

pub fn assert_rel_close(actual: f64, expected: f64, rel_tol: f64) {
    let scale = expected.abs().max(1e-300);
    let rel = (actual - expected).abs() / scale;
    assert!(
        rel <= rel_tol,
        "expected {expected:.12e}, got {actual:.12e} (rel diff {rel:.3e} > {rel_tol:.3e})"
    );
}
