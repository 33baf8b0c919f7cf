use nalgebra::DMatrix;

use crate::compress::{LowRankFactorPair, NormKind, SymLowRankFactor};
use crate::error::LinalgError;
use crate::linalg::{norm2, qr_thin};
use crate::sparse::SparseOperator;

/// Residual norm of the Galerkin approximation `𝐔_m Y 𝐕_mᵀ`, read off the
/// boundary blocks: the residual is
/// `U_{m+1} H_{m+1,m} E_mᵀ Y 𝐕_mᵀ + 𝐔_m Y E_m G_{m+1,m}ᵀ V_{m+1}ᵀ`
/// and the two terms have mutually orthogonal ranges.
pub fn residual_norm_sylv(
    h_boundary: &DMatrix<f64>,
    g_boundary: &DMatrix<f64>,
    y: &DMatrix<f64>,
    norm: NormKind,
) -> f64 {
    let s_a = h_boundary.nrows();
    let s_b = g_boundary.nrows();
    let (k, l) = y.shape();
    let top = h_boundary * y.rows(k - s_a, s_a);
    let side = y.columns(l - s_b, s_b) * g_boundary.transpose();
    match norm {
        NormKind::Frobenius => (top.norm_squared() + side.norm_squared()).sqrt(),
        NormKind::Spectral => norm2(&top)
            .unwrap_or(f64::NAN)
            .max(norm2(&side).unwrap_or(f64::NAN)),
    }
}

/// Residual norm of `𝐔_m Y 𝐔_mᵀ` for a Lyapunov equation: with
/// `P = H_{m+1,m} E_mᵀ Y`, it is `√2‖P‖_F` or `‖P‖₂`.
pub fn residual_norm_lyap(h_boundary: &DMatrix<f64>, y: &DMatrix<f64>, norm: NormKind) -> f64 {
    let s = h_boundary.nrows();
    let k = y.nrows();
    let p = h_boundary * y.rows(k - s, s);
    match norm {
        NormKind::Frobenius => std::f64::consts::SQRT_2 * p.norm(),
        NormKind::Spectral => norm2(&p).unwrap_or(f64::NAN),
    }
}

fn hcat(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// True residual norm `‖A X + X B + C Dᵀ‖` of a low-rank iterate, computed
/// without forming any `n × n` matrix. Operator applications are not
/// counted.
pub fn lowrank_residual_sylv(
    a: &SparseOperator,
    b: &SparseOperator,
    x: &LowRankFactorPair,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    norm: NormKind,
) -> Result<f64, LinalgError> {
    let ax = a.apply_uncounted(&x.left);
    let btx = b.apply_transpose_uncounted(&x.right);
    let wl = hcat(&[&ax, &x.left, c]);
    let wr = hcat(&[&x.right, &btx, d]);
    let (_, rl) = qr_thin(&wl)?;
    let (_, rr) = qr_thin(&wr)?;
    let core = rl * rr.transpose();
    Ok(match norm {
        NormKind::Frobenius => core.norm(),
        NormKind::Spectral => norm2(&core)?,
    })
}

/// True residual norm `‖A X + X Aᵀ + C S Cᵀ‖` for `X = Z M Zᵀ`, in low-rank
/// form. Operator applications are not counted.
pub fn lowrank_residual_lyap(
    a: &SparseOperator,
    x: &SymLowRankFactor,
    rhs: &SymLowRankFactor,
    norm: NormKind,
) -> Result<f64, LinalgError> {
    let r = x.rank();
    let p = rhs.rank();
    let az = a.apply_uncounted(&x.basis);
    let w = hcat(&[&az, &x.basis, &rhs.basis]);
    let mut mid = DMatrix::zeros(2 * r + p, 2 * r + p);
    mid.view_mut((0, r), (r, r)).copy_from(&x.middle);
    mid.view_mut((r, 0), (r, r)).copy_from(&x.middle);
    mid.view_mut((2 * r, 2 * r), (p, p)).copy_from(&rhs.middle);
    let (_, rw) = qr_thin(&w)?;
    let core = &rw * mid * rw.transpose();
    Ok(match norm {
        NormKind::Frobenius => core.norm(),
        NormKind::Spectral => norm2(&core)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalRng;

    #[test]
    fn zero_solution_gives_zero() {
        let i = DMatrix::identity(2, 2);
        let y = DMatrix::zeros(4, 4);
        assert_eq!(residual_norm_sylv(&i, &i, &y, NormKind::Frobenius), 0.0);
        assert_eq!(residual_norm_lyap(&i, &y, NormKind::Spectral), 0.0);
    }

    #[test]
    fn identity_blocks() {
        for s in 1..5 {
            let i = DMatrix::identity(s, s);
            let expected = (2.0 * s as f64).sqrt();
            assert!((residual_norm_sylv(&i, &i, &i, NormKind::Frobenius) - expected).abs() < 1e-15);
            assert!((residual_norm_lyap(&i, &i, NormKind::Frobenius) - expected).abs() < 1e-15);
            assert!((residual_norm_sylv(&i, &i, &i, NormKind::Spectral) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lowrank_residuals_match_dense() {
        let n = 20;
        let mut rng = NormalRng::new(1);
        let a = SparseOperator::from_dense(&rng.matrix(n, n)).unwrap();
        let b = SparseOperator::from_dense(&rng.matrix(n, n)).unwrap();
        let x = LowRankFactorPair::new(rng.matrix(n, 3), rng.matrix(n, 3)).unwrap();
        let c = rng.matrix(n, 2);
        let d = rng.matrix(n, 2);
        let xd = x.to_dense();
        let dense = a.to_dense() * &xd + &xd * b.to_dense() + &c * d.transpose();
        for norm in [NormKind::Frobenius, NormKind::Spectral] {
            let lr = lowrank_residual_sylv(&a, &b, &x, &c, &d, norm).unwrap();
            assert!((lr - norm.of(&dense)).abs() <= 1e-12 * norm.of(&dense));
        }

        let m = rng.matrix(3, 3);
        let xs = SymLowRankFactor::new(rng.matrix(n, 3), &m + m.transpose()).unwrap();
        let rhs = SymLowRankFactor::new(c.clone(), DMatrix::identity(2, 2)).unwrap();
        let xd = xs.to_dense();
        let ad = a.to_dense();
        let dense = &ad * &xd + &xd * ad.transpose() + &c * c.transpose();
        for norm in [NormKind::Frobenius, NormKind::Spectral] {
            let lr = lowrank_residual_lyap(&a, &xs, &rhs, norm).unwrap();
            assert!((lr - norm.of(&dense)).abs() <= 1e-12 * norm.of(&dense));
        }
    }
}
