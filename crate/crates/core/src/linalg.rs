//! Dense kernels: economy QR, SVD, symmetric eigendecomposition and real
//! Schur form.
//!
//! The heavy lifting is delegated to nalgebra (Householder QR, Golub–Kahan
//! SVD, tridiagonal implicit-shift QR, Francis double-shift Schur). This
//! module pins the sign and ordering conventions so results are
//! reproducible, rejects non-finite input and turns iteration-cap overruns
//! into errors.
//!
//! The SVD and symmetric eigensolver results are checked by recomposition.
//! nalgebra's deflation of tiny bidiagonal/tridiagonal entries is
//! occasionally inaccurate on badly scaled input; when the check fails the
//! decomposition is redone with a one-sided (SVD) or cyclic (eigen) Jacobi
//! method.

use nalgebra::{DMatrix, DVector, Dyn, Schur, SymmetricEigen, QR, SVD};

use crate::error::LinalgError;

pub type DenseMatrix = DMatrix<f64>;

/// Sweeps allowed per unit of dimension before a kernel gives up.
const SWEEPS_PER_DIM: usize = 100;

fn iteration_cap(k: usize) -> usize {
    SWEEPS_PER_DIM * k.max(1)
}

/// Jacobi sweeps before giving up.
const JACOBI_SWEEPS: usize = 60;

/// Accepted recomposition error, relative to `‖M‖_F`, per unit of the
/// larger dimension.
const RECOMPOSE_TOL: f64 = 64.0 * f64::EPSILON;

fn recompose_ok(err: f64, norm: f64, dim: usize) -> bool {
    err <= RECOMPOSE_TOL * dim.max(1) as f64 * norm
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, kernel: &'static str) -> Result<(), LinalgError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(LinalgError::NonFinite(kernel))
    }
}

/// Economy QR of a tall matrix: `m = q * r`, `q` has orthonormal columns and
/// `r` is upper triangular with a nonnegative diagonal.
pub fn qr_economy(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), LinalgError> {
    if m.nrows() < m.ncols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "economy QR needs rows >= cols, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    qr_thin(m)
}

/// QR with `min(rows, cols)` columns in `q`; also accepts wide input.
pub(crate) fn qr_thin(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>), LinalgError> {
    ensure_finite(m, "qr")?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok((DMatrix::zeros(rows, 0), DMatrix::zeros(0, cols)));
    }
    let qr = QR::new(m.clone());
    let mut q = qr.q();
    let mut r = qr.unpack_r();
    for i in 0..k {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    Ok((q, r))
}

#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    /// Nonincreasing, nonnegative.
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn recompose(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Flip column `j` (and its partner) so the first clearly nonzero entry of
/// `primary[:, j]` is nonnegative.
fn fix_column_signs(primary: &mut DMatrix<f64>, partner: Option<&mut DMatrix<f64>>) {
    let mut flips = Vec::with_capacity(primary.ncols());
    for j in 0..primary.ncols() {
        let col = primary.column(j);
        let scale = col.amax();
        let lead = col
            .iter()
            .copied()
            .find(|v| v.abs() > 1e3 * f64::EPSILON * scale)
            .unwrap_or(0.0);
        flips.push(lead < 0.0);
    }
    for (j, flip) in flips.iter().enumerate() {
        if *flip {
            primary.column_mut(j).neg_mut();
        }
    }
    if let Some(partner) = partner {
        for (j, flip) in flips.iter().enumerate() {
            if *flip {
                partner.column_mut(j).neg_mut();
            }
        }
    }
}

/// Thin SVD `m = u diag(sigma) vᵀ` with singular values sorted descending.
pub fn svd(m: &DMatrix<f64>) -> Result<Svd, LinalgError> {
    ensure_finite(m, "svd")?;
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: DMatrix::zeros(rows, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        });
    }
    let mut dec = SVD::try_new(m.clone(), true, true, f64::EPSILON, iteration_cap(k))
        .map(|d| Svd {
            u: d.u.expect("u requested"),
            sigma: d.singular_values,
            v: d.v_t.expect("v requested").transpose(),
        })
        .filter(|d| recompose_ok((d.recompose() - m).norm(), m.norm(), rows.max(cols)));
    if dec.is_none() {
        dec = Some(jacobi_svd(m)?);
    }
    let Svd {
        mut u,
        sigma,
        mut v,
    } = dec.expect("set above");
    fix_column_signs(&mut u, Some(&mut v));
    Ok(Svd { u, sigma, v })
}

/// One-sided Jacobi SVD (Hestenes): orthogonalizes the columns of a tall
/// copy of `m` by plane rotations accumulated into `v`.
fn jacobi_svd(m: &DMatrix<f64>) -> Result<Svd, LinalgError> {
    if m.nrows() < m.ncols() {
        let t = jacobi_svd(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let (rows, k) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence("jacobi svd"));
    }
    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&p, &q| norms[q].total_cmp(&norms[p]));
    let sigma = DVector::from_iterator(k, order.iter().map(|&j| norms[j]));
    let v = v.select_columns(order.iter());
    let mut u = DMatrix::zeros(rows, k);
    let floor = f64::EPSILON * sigma[0].max(f64::MIN_POSITIVE);
    let mut filled = 0;
    for (dst, &j) in order.iter().enumerate() {
        if norms[j] > floor {
            u.column_mut(dst).copy_from(&(a.column(j) / norms[j]));
            filled = dst + 1;
        }
    }
    // Columns paired with (numerically) zero singular values: any
    // orthonormal completion.
    let mut e = 0;
    for dst in filled..k {
        loop {
            let mut w = DVector::<f64>::zeros(rows);
            w[e % rows] = 1.0;
            e += 1;
            for _ in 0..2 {
                let proj = u.columns(0, dst).tr_mul(&w);
                w -= u.columns(0, dst) * proj;
            }
            let nw = w.norm();
            if nw > 0.5 {
                u.column_mut(dst).copy_from(&(w / nw));
                break;
            }
            if e > 2 * rows + k {
                return Err(LinalgError::NoConvergence("jacobi svd"));
            }
        }
    }
    Ok(Svd { u, sigma, v })
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Spectral norm via the largest singular value.
pub fn norm2(m: &DMatrix<f64>) -> Result<f64, LinalgError> {
    if m.is_empty() {
        return Ok(0.0);
    }
    Ok(svd(m)?.sigma[0])
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Sorted descending.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors, column `i` paired with `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn recompose(&self) -> DMatrix<f64> {
        let mut wl = self.vectors.clone();
        for (j, l) in self.values.iter().enumerate() {
            wl.column_mut(j).scale_mut(*l);
        }
        wl * self.vectors.transpose()
    }
}

/// Relative asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Symmetric eigendecomposition. The input is symmetrized as `(M + Mᵀ)/2`
/// before decomposition; callers are expected to pass matrices that are
/// symmetric up to roundoff.
pub fn eig_sym(m: &DMatrix<f64>) -> Result<SymEig, LinalgError> {
    ensure_finite(m, "eig_sym")?;
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "eig_sym needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(SymEig {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (m + m.transpose()) * 0.5;
    if sym.iter().all(|v| *v == 0.0) {
        return Ok(SymEig {
            values: DVector::zeros(k),
            vectors: DMatrix::identity(k, k),
        });
    }
    let (raw_values, raw_vectors) =
        match SymmetricEigen::try_new(sym.clone(), f64::EPSILON, iteration_cap(k)) {
            Some(dec) => {
                let check = SymEig {
                    values: dec.eigenvalues.clone(),
                    vectors: dec.eigenvectors.clone(),
                };
                if recompose_ok((check.recompose() - &sym).norm(), sym.norm(), k) {
                    (dec.eigenvalues, dec.eigenvectors)
                } else {
                    jacobi_eig(&sym)?
                }
            }
            None => jacobi_eig(&sym)?,
        };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw_values[b].total_cmp(&raw_values[a]));
    let values = DVector::from_iterator(k, order.iter().map(|&i| raw_values[i]));
    let mut vectors = raw_vectors.select_columns(order.iter());
    fix_column_signs(&mut vectors, None);
    Ok(SymEig { values, vectors })
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
fn jacobi_eig(sym: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), LinalgError> {
    let k = sym.nrows();
    let mut a = sym.clone();
    let mut v = DMatrix::<f64>::identity(k, k);
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= f64::EPSILON * a.norm() {
            return Ok((a.diagonal(), v));
        }
        for p in 0..k {
            for q in p + 1..k {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // A ← Jᵀ A J with J the (p, q) rotation.
                rotate_columns(&mut a, p, q, c, s);
                for j in 0..k {
                    let (x, y) = (a[(p, j)], a[(q, j)]);
                    a[(p, j)] = c * x - s * y;
                    a[(q, j)] = s * x + c * y;
                }
                rotate_columns(&mut v, p, q, c, s);
            }
        }
    }
    Err(LinalgError::NoConvergence("jacobi eig_sym"))
}

#[derive(Debug, Clone)]
pub struct RealSchur {
    pub q: DMatrix<f64>,
    /// Quasi-upper-triangular; every nonzero subdiagonal entry marks a 2×2
    /// block with a complex-conjugate eigenvalue pair.
    pub t: DMatrix<f64>,
}

impl RealSchur {
    /// Sizes (1 or 2) of the diagonal blocks of `t`, top to bottom.
    pub fn block_sizes(&self) -> Vec<usize> {
        diagonal_blocks(&self.t)
    }

    /// Eigenvalues as (re, im) pairs read off the diagonal blocks.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let t = &self.t;
        let mut out = Vec::with_capacity(t.nrows());
        let mut i = 0;
        for size in self.block_sizes() {
            if size == 1 {
                out.push((t[(i, i)], 0.0));
            } else {
                let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
                let half_tr = 0.5 * (a + d);
                let disc = 0.25 * (a - d) * (a - d) + b * c;
                if disc >= 0.0 {
                    out.push((half_tr + disc.sqrt(), 0.0));
                    out.push((half_tr - disc.sqrt(), 0.0));
                } else {
                    out.push((half_tr, (-disc).sqrt()));
                    out.push((half_tr, -(-disc).sqrt()));
                }
            }
            i += size;
        }
        out
    }
}

pub(crate) fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<usize> {
    let k = t.nrows();
    let mut sizes = Vec::new();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)] != 0.0 {
            sizes.push(2);
            i += 2;
        } else {
            sizes.push(1);
            i += 1;
        }
    }
    sizes
}

/// Real Schur form `m = q t qᵀ`.
pub fn real_schur(m: &DMatrix<f64>) -> Result<RealSchur, LinalgError> {
    ensure_finite(m, "real_schur")?;
    if !m.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "real_schur needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let k = m.nrows();
    if k == 0 {
        return Ok(RealSchur {
            q: DMatrix::zeros(0, 0),
            t: DMatrix::zeros(0, 0),
        });
    }
    if k == 1 {
        return Ok(RealSchur {
            q: DMatrix::identity(1, 1),
            t: m.clone(),
        });
    }
    let (q, mut t) = Schur::<f64, Dyn>::try_new(m.clone(), f64::EPSILON, iteration_cap(k))
        .ok_or(LinalgError::NoConvergence("real_schur"))?
        .unpack();
    // Clean the strictly-below-subdiagonal part, which carries only rounding
    // residue from the Hessenberg reduction.
    for j in 0..k {
        for i in (j + 2)..k {
            t[(i, j)] = 0.0;
        }
    }
    let sizes = diagonal_blocks(&t);
    // A 2×2 block can never be followed by a nonzero subdiagonal inside it.
    let mut i = 0;
    for s in &sizes {
        if *s == 2 && i + 2 < k && t[(i + 2, i + 1)] != 0.0 {
            return Err(LinalgError::NoConvergence("real_schur"));
        }
        i += s;
    }
    Ok(RealSchur { q, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::NormalRng;
    use nalgebra::{dmatrix, Complex};
    use proptest::prelude::*;

    fn orthonormality_defect(q: &DMatrix<f64>) -> f64 {
        (q.transpose() * q - DMatrix::identity(q.ncols(), q.ncols())).norm()
    }

    /// Rank-2 core with entries spanning sixteen orders of magnitude on
    /// which nalgebra's bidiagonal deflation loses six digits.
    fn badly_scaled_core() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.8561247440199533e-5,
                8.708896455210425e-6,
                7.66062539901823e-22,
                1.805575538989722e-37,
                2.258198312938872e-21,
                4.776062710645229e-22,
                -8.979134253609467e-6,
                -1.167854725940431e-21,
                -1.1959350780859976e-22,
                4.696644100862045e-21,
                1.652585650449726e-5,
                2.170904738218011e-21,
                8.83851265555347e-22,
                -2.0891029913126385e-21,
                -3.413892441700627e-6,
                1.2341888515983237e-21,
            ],
        )
    }

    #[test]
    fn svd_badly_scaled_recomposes() {
        let m = badly_scaled_core();
        let raw = SVD::try_new(m.clone(), true, true, f64::EPSILON, 400).unwrap();
        assert!((raw.recompose().unwrap() - &m).norm() > 1e-3 * m.norm());
        let d = svd(&m).unwrap();
        assert!((d.recompose() - &m).norm() <= 1e-14 * m.norm());
        assert!(orthonormality_defect(&d.u) <= 1e-12);
        assert!(orthonormality_defect(&d.v) <= 1e-12);
    }

    #[test]
    fn jacobi_svd_matches_reference() {
        let m = NormalRng::new(41).matrix(9, 5);
        let j = jacobi_svd(&m).unwrap();
        let r = SVD::new(m.clone(), false, false).singular_values;
        assert!((j.recompose() - &m).norm() <= 1e-13 * m.norm());
        for i in 0..5 {
            assert!((j.sigma[i] - r[i]).abs() <= 1e-13 * r[0]);
        }
        let wide = jacobi_svd(&m.transpose()).unwrap();
        assert!((wide.recompose() - m.transpose()).norm() <= 1e-13 * m.norm());
        let mut deficient = m.clone();
        deficient.column_mut(3).fill(0.0);
        let d = jacobi_svd(&deficient).unwrap();
        assert!(orthonormality_defect(&d.u) <= 1e-12);
        assert!(d.sigma[4] == 0.0);
    }

    #[test]
    fn jacobi_eig_matches_reference() {
        let g = NormalRng::new(42).matrix(7, 7);
        let sym = &g + g.transpose();
        let (values, vectors) = jacobi_eig(&sym).unwrap();
        let back = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        assert!((back - &sym).norm() <= 1e-13 * sym.norm());
        assert!(orthonormality_defect(&vectors) <= 1e-12);
    }

    #[test]
    fn qr_identity() {
        let (q, r) = qr_economy(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(q, DMatrix::identity(3, 3));
        assert_eq!(r, DMatrix::identity(3, 3));
    }

    #[test]
    fn qr_three_four() {
        let (q, r) = qr_economy(&dmatrix![3.0; 4.0]).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15 && (q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qr_random_recomposes() {
        let m = NormalRng::new(3).matrix(20, 4);
        let (q, r) = qr_economy(&m).unwrap();
        assert!((&q * &r - &m).norm() <= 1e-12 * m.norm());
        assert!(orthonormality_defect(&q) <= 1e-12 * 4.0);
        for i in 0..4 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_wide_and_nonfinite() {
        assert!(matches!(
            qr_economy(&DMatrix::zeros(2, 3)),
            Err(LinalgError::DimensionMismatch(_))
        ));
        assert!(matches!(
            qr_economy(&dmatrix![f64::NAN; 1.0]),
            Err(LinalgError::NonFinite(_))
        ));
    }

    #[test]
    fn svd_diagonal() {
        let d = svd(&dmatrix![2.0, 0.0; 0.0, 1.0]).unwrap();
        assert_eq!(d.sigma.as_slice(), &[2.0, 1.0]);
        assert!((d.u.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!((d.v.clone() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn svd_permutation_has_unit_values() {
        let d = svd(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert!((d.sigma[0] - 1.0).abs() < 1e-15 && (d.sigma[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_matches_gram_eigen_oracle() {
        let m = NormalRng::new(11).matrix(8, 8);
        let d = svd(&m).unwrap();
        assert!((d.recompose() - &m).norm() <= 1e-12 * m.norm());
        // Oracle: eigenvalues of MᵀM via an independent symmetric solver.
        let gram = m.transpose() * &m;
        let mut lam: Vec<f64> = SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        lam.sort_by(|a, b| b.total_cmp(a));
        for (s, l) in d.sigma.iter().zip(lam) {
            assert!(
                (s - l.max(0.0).sqrt()).abs() <= 1e-10,
                "{s} vs {}",
                l.sqrt()
            );
        }
        for w in d.sigma.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn svd_sign_convention_is_deterministic() {
        let m = NormalRng::new(12).matrix(6, 6);
        let a = svd(&m).unwrap();
        let b = svd(&m).unwrap();
        assert_eq!(a.u, b.u);
        for j in 0..6 {
            let lead =
                a.u.column(j)
                    .iter()
                    .copied()
                    .find(|v| v.abs() > 1e-12)
                    .unwrap();
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn eig_sym_swap() {
        let e = eig_sym(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_sym_zero() {
        let e = eig_sym(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e.values.as_slice(), &[0.0; 3]);
        assert_eq!(e.vectors, DMatrix::identity(3, 3));
    }

    #[test]
    fn eig_sym_trace_invariance() {
        let g = NormalRng::new(5).matrix(10, 10);
        let m = &g + g.transpose();
        let e = eig_sym(&m).unwrap();
        assert!((e.values.sum() - m.trace()).abs() <= 1e-12 * m.norm());
        assert!((e.recompose() - &m).norm() <= 1e-12 * m.norm());
        assert!(orthonormality_defect(&e.vectors) < 1e-13);
    }

    #[test]
    fn schur_of_triangular_is_identity_transform() {
        let m = dmatrix![1.0, 2.0, 3.0; 0.0, 4.0, 5.0; 0.0, 0.0, 6.0];
        let s = real_schur(&m).unwrap();
        assert_eq!(s.block_sizes(), vec![1, 1, 1]);
        assert!((&s.q * &s.t * s.q.transpose() - &m).norm() <= 1e-14 * m.norm());
        let mut diag: Vec<f64> = (0..3).map(|i| s.t[(i, i)]).collect();
        diag.sort_by(f64::total_cmp);
        assert_eq!(diag, vec![1.0, 4.0, 6.0]);
    }

    #[test]
    fn schur_of_rotation_is_one_block() {
        let s = real_schur(&dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        assert_eq!(s.block_sizes(), vec![2]);
        let ev = s.eigenvalues();
        assert!(ev[0].0.abs() < 1e-15 && (ev[0].1.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn schur_eigenvalues_match_oracle() {
        let m = NormalRng::new(21).matrix(12, 12);
        let s = real_schur(&m).unwrap();
        assert!((&s.q * &s.t * s.q.transpose() - &m).norm() <= 1e-11 * m.norm());
        let ev = s.eigenvalues();
        assert_eq!(ev.len(), 12);
        // Oracle 1: every reported value makes M − λI numerically singular.
        let mc: DMatrix<Complex<f64>> = m.map(|v| Complex::new(v, 0.0));
        for &(re, im) in &ev {
            let shifted = &mc - DMatrix::<Complex<f64>>::identity(12, 12) * Complex::new(re, im);
            let smin = shifted.singular_values().min();
            assert!(smin <= 1e-9 * m.norm(), "sigma_min {smin} at {re}+{im}i");
        }
        // Oracle 2: power sums agree with traces of powers (fixes multiplicities).
        let mut power = DMatrix::identity(12, 12);
        for p in 1..=4 {
            power = &power * &m;
            let sum: f64 = ev
                .iter()
                .map(|&(re, im)| Complex::new(re, im).powi(p).re)
                .sum();
            assert!((sum - power.trace()).abs() <= 1e-9 * power.norm(), "p={p}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn qr_invariants(seed in any::<u64>(), rows in 1usize..30, extra in 0usize..5) {
            let cols = rows.saturating_sub(extra).max(1);
            let m = NormalRng::new(seed).matrix(rows, cols);
            let (q, r) = qr_economy(&m).unwrap();
            prop_assert!(orthonormality_defect(&q) <= 1e-12 * cols as f64);
            prop_assert!((&q * &r - &m).norm() <= 1e-12 * m.norm());
        }

        #[test]
        fn svd_top_value_is_spectral_norm(seed in any::<u64>(), k in 1usize..10) {
            let m = NormalRng::new(seed).matrix(k, k);
            let sigma1 = svd(&m).unwrap().sigma[0];
            // Power iteration on MᵀM as an independent estimate.
            let gram = m.transpose() * &m;
            let mut x = DVector::from_element(k, 1.0).normalize();
            for _ in 0..5000 {
                let y = &gram * &x;
                let len = y.norm();
                if len == 0.0 { break; }
                x = y / len;
            }
            let power = x.dot(&(&gram * &x)).sqrt();
            prop_assert!((sigma1 - power).abs() <= 1e-12 * sigma1, "{} vs {}", sigma1, power);
        }

        #[test]
        fn eig_sym_spsd_is_nonnegative(seed in any::<u64>(), k in 1usize..12, r in 1usize..12) {
            let g = NormalRng::new(seed).matrix(k, r);
            let m = &g * g.transpose();
            let e = eig_sym(&m).unwrap();
            let n2 = e.values[0].abs();
            prop_assert!(e.values.iter().all(|l| *l >= -1e-12 * n2));
        }

        #[test]
        fn schur_preserves_frobenius(seed in any::<u64>(), k in 1usize..16) {
            let m = NormalRng::new(seed).matrix(k, k);
            let s = real_schur(&m).unwrap();
            prop_assert!((s.t.norm() - m.norm()).abs() <= 1e-11 * m.norm());
        }
    }
}
