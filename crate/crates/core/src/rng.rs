//! Seedable, platform-independent Gaussian stream.
//!
//! ChaCha8 supplies the uniform bits and a Box–Muller transform turns pairs
//! of uniforms into standard normals, so a given seed yields the same
//! sequence on every target (including wasm32).

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct NormalRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on the half-open interval (0, 1].
    pub fn uniform(&mut self) -> f64 {
        let bits = self.inner.next_u64() >> 11;
        1.0 - (bits as f64) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// `rows × cols` matrix of independent standard normals, filled column by column.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, cols);
        for v in m.iter_mut() {
            *v = self.normal();
        }
        m
    }
}
