//! Comparison solvers: extended Krylov (EKSM) with iterative inner solves,
//! and two-pass block Lanczos (SKSM) for symmetric Lyapunov equations.

mod eksm;
mod inner;
mod sksm;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use eksm::{eksm_lyap, eksm_sylv, EksmConfig};
pub use inner::{block_cg, block_gmres, inner_solve, InnerSolve};
pub use sksm::{sksm_two_pass, SksmConfig};

use crate::error::BaselineError;
use crate::linalg::{eig_sym, qr_economy, svd};

/// Relative tolerance of the inner linear solves.
pub const DEFAULT_INNER_TOL: f64 = 1e-8;
/// Eigen- or singular values of the projected solution below this fraction
/// of the largest one are dropped from the returned factors.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;
/// Relative size below which a new basis direction is considered linearly
/// dependent on the current basis.
pub const DEFLATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerKind {
    BlockCg,
    BlockGmres,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSolverConfig {
    pub kind: InnerKind,
    /// Relative residual tolerance `‖A X − B‖_F ≤ tol ‖B‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Restart length of block GMRES, in block steps.
    pub restart: usize,
}

impl InnerSolverConfig {
    pub fn cg() -> Self {
        Self {
            kind: InnerKind::BlockCg,
            tol: DEFAULT_INNER_TOL,
            max_iter: 5000,
            restart: 30,
        }
    }

    pub fn gmres() -> Self {
        Self {
            kind: InnerKind::BlockGmres,
            ..Self::cg()
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub(crate) fn validate(&self) -> Result<(), BaselineError> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(BaselineError::InvalidConfig(format!(
                "inner tolerance must be in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(BaselineError::InvalidConfig(
                "inner iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn concat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Orthonormal basis of the part of `w` orthogonal to the columns of
/// `basis`, with numerically dependent directions dropped.
fn orth_deflate(basis: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>, BaselineError> {
    let n = w.nrows();
    if w.ncols() == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let scale = w.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut v = w.clone();
    for _ in 0..2 {
        if basis.ncols() > 0 {
            let coef = basis.tr_mul(&v);
            v -= basis * coef;
        }
    }
    let dec = svd(&v)?;
    let keep = dec
        .sigma
        .iter()
        .filter(|&&x| x > DEFLATION_TOL * scale)
        .count();
    if keep == 0 {
        return Ok(DMatrix::zeros(n, 0));
    }
    let mut q = dec.u.columns(0, keep).into_owned();
    if basis.ncols() > 0 {
        let coef = basis.tr_mul(&q);
        q -= basis * coef;
    }
    Ok(qr_economy(&q)?.0)
}

/// Eigenpairs of symmetric `y` with `|λ| > rel_tol · max|λ|`, ascending
/// index order.
fn truncated_eig(
    y: &DMatrix<f64>,
    rel_tol: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), BaselineError> {
    let eig = eig_sym(y)?;
    let top = eig.values.amax();
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&i| top > 0.0 && eig.values[i].abs() > rel_tol * top)
        .collect();
    let vecs = eig.vectors.select_columns(keep.iter());
    let vals = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.values[i]));
    Ok((vecs, vals))
}
