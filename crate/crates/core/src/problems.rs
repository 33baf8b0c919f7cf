//! Test-problem generators: finite-difference operators and random
//! right-hand sides.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::rng::NormalRng;
use crate::sparse::SparseOperator;

/// Viscosity of the convection-diffusion benchmark.
pub const CONVDIFF_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvectionField {
    /// `(x sin x, y cos y, e^{z²−1})`
    #[serde(rename = "wA")]
    WA,
    /// `(yz(1−x²), 0, e^z)`
    #[serde(rename = "wB")]
    WB,
    None,
}

impl ConvectionField {
    pub fn at(self, x: f64, y: f64, z: f64) -> [f64; 3] {
        match self {
            ConvectionField::WA => [x * x.sin(), y * y.cos(), (z * z - 1.0).exp()],
            ConvectionField::WB => [y * z * (1.0 - x * x), 0.0, z.exp()],
            ConvectionField::None => [0.0; 3],
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "wA" | "wa" | "WA" => Some(ConvectionField::WA),
            "wB" | "wb" | "WB" => Some(ConvectionField::WB),
            "none" => Some(ConvectionField::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Laplacian2d,
    Convdiff3d,
    File,
}

/// Right-hand side description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RhsSpec {
    Random {
        s: usize,
        seed: u64,
        normalize: bool,
    },
    Files {
        c: String,
        d: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub n_g: usize,
    pub epsilon: f64,
    pub field: ConvectionField,
    pub rhs: RhsSpec,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.kind != ProblemKind::File && self.n_g < 2 {
            return Err(format!("grid size must be at least 2, got {}", self.n_g));
        }
        if self.kind == ProblemKind::Convdiff3d && !(self.epsilon > 0.0) {
            return Err(format!("viscosity must be positive, got {}", self.epsilon));
        }
        if let RhsSpec::Random { s, .. } = self.rhs {
            if s == 0 {
                return Err("rhs width must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// 5-point Laplacian on the unit square with homogeneous Dirichlet
/// conditions, `n_g` interior points per direction, node `(i, j)` at index
/// `i + j·n_g`. Symmetric positive definite.
pub fn laplacian_2d(n_g: usize) -> SparseOperator {
    assert!(n_g >= 2, "laplacian_2d needs n_g >= 2");
    let h = 1.0 / (n_g as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    let n = n_g * n_g;
    let mut trip = Vec::with_capacity(5 * n);
    for j in 0..n_g {
        for i in 0..n_g {
            let row = i + j * n_g;
            trip.push((row, row, 4.0 * inv_h2));
            if i > 0 {
                trip.push((row, row - 1, -inv_h2));
            }
            if i + 1 < n_g {
                trip.push((row, row + 1, -inv_h2));
            }
            if j > 0 {
                trip.push((row, row - n_g, -inv_h2));
            }
            if j + 1 < n_g {
                trip.push((row, row + n_g, -inv_h2));
            }
        }
    }
    build(n, trip)
}

/// 7-point discretization of `−ε Δu + w·∇u` on the unit cube, homogeneous
/// Dirichlet, centered differences for both terms; node `(i, j, k)` sits at
/// `((i+1)h, (j+1)h, (k+1)h)` with index `i + n_g(j + n_g k)`.
pub fn convdiff_3d(n_g: usize, epsilon: f64, field: ConvectionField) -> SparseOperator {
    assert!(n_g >= 2, "convdiff_3d needs n_g >= 2");
    assert!(epsilon > 0.0, "convdiff_3d needs a positive viscosity");
    let h = 1.0 / (n_g as f64 + 1.0);
    let diff = epsilon / (h * h);
    let n = n_g * n_g * n_g;
    let mut trip = Vec::with_capacity(7 * n);
    let idx = |i: usize, j: usize, k: usize| i + n_g * (j + n_g * k);
    for k in 0..n_g {
        for j in 0..n_g {
            for i in 0..n_g {
                let row = idx(i, j, k);
                let w = field.at((i + 1) as f64 * h, (j + 1) as f64 * h, (k + 1) as f64 * h);
                trip.push((row, row, 6.0 * diff));
                let coords = [i, j, k];
                for axis in 0..3 {
                    let conv = w[axis] / (2.0 * h);
                    let pos = coords[axis];
                    let mut nb = coords;
                    if pos > 0 {
                        nb[axis] = pos - 1;
                        trip.push((row, idx(nb[0], nb[1], nb[2]), -diff - conv));
                    }
                    if pos + 1 < n_g {
                        nb[axis] = pos + 1;
                        trip.push((row, idx(nb[0], nb[1], nb[2]), -diff + conv));
                    }
                }
            }
        }
    }
    build(n, trip)
}

fn build(n: usize, trip: Vec<(usize, usize, f64)>) -> SparseOperator {
    SparseOperator::from_triplets(n, trip).expect("generator indices are in range")
}

/// Standard-normal `C` (then `D`) of size `n × s`. With `normalize`, both
/// factors are scaled by `1/√‖C Dᵀ‖_F` so that `‖C Dᵀ‖_F = 1`.
pub fn random_rhs_pair(
    n: usize,
    s: usize,
    seed: u64,
    normalize: bool,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = NormalRng::new(seed);
    let mut c = rng.matrix(n, s);
    let mut d = rng.matrix(n, s);
    if normalize {
        let scale = 1.0 / outer_norm(&c, &d).sqrt();
        c *= scale;
        d *= scale;
    }
    (c, d)
}

/// Standard-normal `C` of size `n × s`, scaled so `‖C Cᵀ‖_F = 1` when
/// `normalize` is set. Same stream as the `C` of [`random_rhs_pair`].
pub fn random_rhs(n: usize, s: usize, seed: u64, normalize: bool) -> DMatrix<f64> {
    let mut c = NormalRng::new(seed).matrix(n, s);
    if normalize {
        c *= 1.0 / outer_norm(&c, &c).sqrt();
    }
    c
}

/// `‖C Dᵀ‖_F` without forming the outer product.
pub fn outer_norm(c: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let gc = c.tr_mul(c);
    let gd = d.tr_mul(d);
    gc.component_mul(&gd).sum().max(0.0).sqrt()
}
