use nalgebra::{Cholesky, DMatrix};

use super::{InnerKind, InnerSolverConfig};
use crate::error::BaselineError;
use crate::linalg::qr_economy;
use crate::sparse::{OpCounter, SparseOperator};

/// Result of an inner block solve.
#[derive(Debug, Clone)]
pub struct InnerSolve {
    pub x: DMatrix<f64>,
    pub iterations: usize,
    /// Final relative residual `‖A X − B‖_F / ‖B‖_F`.
    pub residual: f64,
}

/// Dispatches on `cfg.kind`.
pub fn inner_solve(
    a: &SparseOperator,
    b: &DMatrix<f64>,
    cfg: &InnerSolverConfig,
    counter: &mut OpCounter,
) -> Result<InnerSolve, BaselineError> {
    match cfg.kind {
        InnerKind::BlockCg => block_cg(a, b, cfg, counter),
        InnerKind::BlockGmres => block_gmres(a, b, cfg, counter),
    }
}

fn zero_solve(b: &DMatrix<f64>) -> InnerSolve {
    InnerSolve {
        x: DMatrix::zeros(b.nrows(), b.ncols()),
        iterations: 0,
        residual: 0.0,
    }
}

/// Block conjugate gradients for symmetric positive definite `A`. Search
/// directions are re-orthonormalized by QR every step; a non positive
/// definite `Pᵀ A P` is reported as [`BaselineError::Indefinite`].
pub fn block_cg(
    a: &SparseOperator,
    b: &DMatrix<f64>,
    cfg: &InnerSolverConfig,
    counter: &mut OpCounter,
) -> Result<InnerSolve, BaselineError> {
    cfg.validate()?;
    check_dims(a, b)?;
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(zero_solve(b));
    }
    let mut x = DMatrix::zeros(b.nrows(), b.ncols());
    let mut r = b.clone();
    let mut p = qr_economy(&r)?.0;
    let mut res = 1.0;
    for it in 1..=cfg.max_iter {
        let q = a.spmm(&p, counter)?;
        let m = p.tr_mul(&q);
        let m = (&m + m.transpose()) * 0.5;
        let chol = Cholesky::new(m).ok_or(BaselineError::Indefinite)?;
        let alpha = chol.solve(&p.tr_mul(&r));
        x += &p * &alpha;
        r -= &q * &alpha;
        res = r.norm() / b_norm;
        if res <= cfg.tol {
            // Guard against drift of the recursive residual.
            let true_r = b - a.spmm(&x, counter)?;
            res = true_r.norm() / b_norm;
            if res <= cfg.tol {
                return Ok(InnerSolve {
                    x,
                    iterations: it,
                    residual: res,
                });
            }
            r = true_r;
            p = qr_economy(&r)?.0;
            continue;
        }
        let beta = -chol.solve(&q.tr_mul(&r));
        p = qr_economy(&(&r + &p * beta))?.0;
    }
    Err(BaselineError::InnerMaxIterations {
        iterations: cfg.max_iter,
        residual: res,
    })
}

/// Restarted block GMRES: block Arnoldi with two Gram–Schmidt passes and a
/// dense least-squares solve per step.
pub fn block_gmres(
    a: &SparseOperator,
    b: &DMatrix<f64>,
    cfg: &InnerSolverConfig,
    counter: &mut OpCounter,
) -> Result<InnerSolve, BaselineError> {
    cfg.validate()?;
    check_dims(a, b)?;
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(zero_solve(b));
    }
    let (n, s) = b.shape();
    let m = cfg.restart;
    let mut x = DMatrix::zeros(n, s);
    let mut r = b.clone();
    let mut its = 0;
    let mut res = 1.0;
    while its < cfg.max_iter {
        let (v1, s0) = qr_economy(&r)?;
        let mut basis: Vec<DMatrix<f64>> = vec![v1];
        let mut hbar = DMatrix::zeros((m + 1) * s, m * s);
        let mut y = DMatrix::zeros(0, s);
        for j in 0..m {
            let mut w = a.spmm(&basis[j], counter)?;
            its += 1;
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = v.tr_mul(&w);
                    w -= v * &c;
                    let mut blk = hbar.view_mut((i * s, j * s), (s, s));
                    blk += c;
                }
            }
            let (q, rr) = qr_economy(&w)?;
            hbar.view_mut(((j + 1) * s, j * s), (s, s)).copy_from(&rr);
            basis.push(q);
            let k = (j + 1) * s;
            let hsub = hbar.view((0, 0), (k + s, k)).into_owned();
            let mut rhs = DMatrix::zeros(k + s, s);
            rhs.view_mut((0, 0), (s, s)).copy_from(&s0);
            y = least_squares(&hsub, &rhs)?;
            res = (&rhs - &hsub * &y).norm() / b_norm;
            if res <= cfg.tol || its >= cfg.max_iter {
                break;
            }
        }
        for (i, v) in basis.iter().take(y.nrows() / s).enumerate() {
            x += v * y.rows(i * s, s);
        }
        r = b - a.spmm(&x, counter)?;
        res = r.norm() / b_norm;
        if res <= cfg.tol {
            return Ok(InnerSolve {
                x,
                iterations: its,
                residual: res,
            });
        }
    }
    Err(BaselineError::InnerMaxIterations {
        iterations: its,
        residual: res,
    })
}

fn least_squares(h: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, BaselineError> {
    let svd = h.clone().svd(true, true);
    let eps = 1e-14 * svd.singular_values.max();
    svd.solve(rhs, eps)
        .map_err(|e| BaselineError::InvalidConfig(format!("least squares failed: {e}")))
}

fn check_dims(a: &SparseOperator, b: &DMatrix<f64>) -> Result<(), BaselineError> {
    if a.dim() != b.nrows() || b.ncols() == 0 {
        return Err(BaselineError::DimensionMismatch(format!(
            "A is {0}x{0}, right-hand side {1}x{2}",
            a.dim(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}
