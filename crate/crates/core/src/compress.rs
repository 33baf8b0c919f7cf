//! Rank truncation of low-rank factorizations.
//!
//! [`compress`] handles `X = C Dᵀ` (QR of both factors, SVD of the small
//! core, balanced factors). [`compress_sym`] handles `X = C S Cᵀ` with a
//! symmetric, possibly indefinite middle factor (QR, symmetric
//! eigendecomposition of the core, orthonormal basis and diagonal middle).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CompressionError, LinalgError};
use crate::linalg::{asymmetry, eig_sym, qr_thin, svd};

/// Relative asymmetry tolerated in a middle factor.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Matrix norm used for residual checks and truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    #[default]
    Frobenius,
    Spectral,
}

impl NormKind {
    /// Norm of a small dense matrix.
    pub fn of(self, m: &DMatrix<f64>) -> f64 {
        match self {
            NormKind::Frobenius => m.norm(),
            NormKind::Spectral => crate::linalg::norm2(m).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationRule {
    tol: f64,
    norm: NormKind,
}

impl TruncationRule {
    pub fn new(tol: f64, norm: NormKind) -> Result<Self, CompressionError> {
        if tol > 0.0 && tol.is_finite() {
            Ok(Self { tol, norm })
        } else {
            Err(CompressionError::NonPositiveTolerance(tol))
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn norm(&self) -> NormKind {
        self.norm
    }

    /// Number of leading values to keep from `magnitudes`, which must be
    /// sorted nonincreasing and nonnegative.
    ///
    /// Spectral: every value `< tol` is dropped. Frobenius: the longest
    /// tail whose Euclidean norm is `≤ tol` is dropped.
    pub fn retained(&self, magnitudes: &[f64]) -> usize {
        match self.norm {
            NormKind::Spectral => magnitudes.iter().take_while(|&&v| v >= self.tol).count(),
            NormKind::Frobenius => {
                let budget = self.tol * self.tol;
                let mut tail = 0.0;
                let mut keep = magnitudes.len();
                while keep > 0 {
                    let next = tail + magnitudes[keep - 1] * magnitudes[keep - 1];
                    if next > budget {
                        break;
                    }
                    tail = next;
                    keep -= 1;
                }
                keep
            }
        }
    }
}

/// `X = left · rightᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactorPair {
    pub left: DMatrix<f64>,
    pub right: DMatrix<f64>,
}

impl LowRankFactorPair {
    pub fn new(left: DMatrix<f64>, right: DMatrix<f64>) -> Result<Self, CompressionError> {
        if left.ncols() != right.ncols() {
            return Err(CompressionError::ShapeMismatch(format!(
                "left has {} columns, right has {}",
                left.ncols(),
                right.ncols()
            )));
        }
        Ok(Self { left, right })
    }

    /// Rank-zero pair for an `rows × cols` matrix.
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self {
            left: DMatrix::zeros(rows, 0),
            right: DMatrix::zeros(cols, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.left * self.right.transpose()
    }

    /// `‖left · rightᵀ‖_F` from the two Gram matrices.
    pub fn frobenius_norm(&self) -> f64 {
        let g = self
            .left
            .tr_mul(&self.left)
            .component_mul(&self.right.tr_mul(&self.right));
        g.sum().max(0.0).sqrt()
    }
}

/// `X = basis · middle · basisᵀ` with symmetric `middle`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymLowRankFactor {
    pub basis: DMatrix<f64>,
    pub middle: DMatrix<f64>,
}

impl SymLowRankFactor {
    pub fn new(basis: DMatrix<f64>, middle: DMatrix<f64>) -> Result<Self, CompressionError> {
        if !middle.is_square() || middle.nrows() != basis.ncols() {
            return Err(CompressionError::ShapeMismatch(format!(
                "basis has {} columns, middle is {}x{}",
                basis.ncols(),
                middle.nrows(),
                middle.ncols()
            )));
        }
        Ok(Self { basis, middle })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            basis: DMatrix::zeros(n, 0),
            middle: DMatrix::zeros(0, 0),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        &self.basis * &self.middle * self.basis.transpose()
    }

    /// Diagonal of the middle factor (the retained eigenvalues after
    /// [`compress_sym`]).
    pub fn middle_diagonal(&self) -> DVector<f64> {
        self.middle.diagonal()
    }
}

fn diag_sqrt_scale(m: &mut DMatrix<f64>, values: &[f64]) {
    for (j, v) in values.iter().enumerate() {
        m.column_mut(j).scale_mut(v.sqrt());
    }
}

/// Truncated recompression of `C Dᵀ`; factors come back balanced as
/// `Q_C Ũ Σ̃^{1/2}` and `Q_D Ṽ Σ̃^{1/2}`. A zero-rank pair is returned when
/// the whole product falls under the tolerance.
pub fn compress(
    pair: &LowRankFactorPair,
    rule: &TruncationRule,
) -> Result<LowRankFactorPair, CompressionError> {
    let (rows, cols) = (pair.left.nrows(), pair.right.nrows());
    if pair.left.ncols() != pair.right.ncols() {
        return Err(CompressionError::ShapeMismatch(
            "factor column counts differ".into(),
        ));
    }
    if pair.rank() == 0 {
        return Ok(LowRankFactorPair::zero(rows, cols));
    }
    let (qc, rc) = qr_thin(&pair.left)?;
    let (qd, rd) = qr_thin(&pair.right)?;
    let core = rc * rd.transpose();
    let dec = svd(&core)?;
    let keep = rule.retained(dec.sigma.as_slice());
    let sigma = &dec.sigma.as_slice()[..keep];
    let mut u = qc * dec.u.columns(0, keep);
    let mut v = qd * dec.v.columns(0, keep);
    diag_sqrt_scale(&mut u, sigma);
    diag_sqrt_scale(&mut v, sigma);
    Ok(LowRankFactorPair { left: u, right: v })
}

/// Eigendecomposition of `C S Cᵀ` restricted to range(C): returns the
/// orthonormal basis `Q_C W` and eigenvalues sorted descending.
fn sym_core(fac: &SymLowRankFactor) -> Result<(DMatrix<f64>, DVector<f64>), CompressionError> {
    if !fac.middle.is_square() || fac.middle.nrows() != fac.basis.ncols() {
        return Err(CompressionError::ShapeMismatch(
            "middle factor does not match basis".into(),
        ));
    }
    let asym = asymmetry(&fac.middle);
    if asym > SYMMETRY_TOL {
        return Err(CompressionError::Linalg(LinalgError::NotSymmetric(asym)));
    }
    let (q, r) = qr_thin(&fac.basis)?;
    let core = &r * &fac.middle * r.transpose();
    let eig = eig_sym(&core)?;
    Ok((q * eig.vectors, eig.values))
}

fn select(basis: &DMatrix<f64>, values: &DVector<f64>, keep: &[usize]) -> SymLowRankFactor {
    let basis = basis.select_columns(keep.iter());
    let middle = DMatrix::from_diagonal(&DVector::from_iterator(
        keep.len(),
        keep.iter().map(|&i| values[i]),
    ));
    SymLowRankFactor { basis, middle }
}

/// Truncated recompression of `C S Cᵀ`. Eigenvalues are truncated by
/// magnitude; the result has an orthonormal basis and a diagonal middle
/// factor holding the retained eigenvalues in descending order (negative
/// ones included).
pub fn compress_sym(
    fac: &SymLowRankFactor,
    rule: &TruncationRule,
) -> Result<SymLowRankFactor, CompressionError> {
    let n = fac.basis.nrows();
    if fac.rank() == 0 {
        return Ok(SymLowRankFactor::zero(n));
    }
    let (basis, values) = sym_core(fac)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    let magnitudes: Vec<f64> = order.iter().map(|&i| values[i].abs()).collect();
    let keep_count = rule.retained(&magnitudes);
    let mut keep: Vec<usize> = order[..keep_count].to_vec();
    keep.sort_unstable();
    Ok(select(&basis, &values, &keep))
}

/// Nearest positive semidefinite matrix to `C S Cᵀ` (in both the spectral
/// and Frobenius norm): the negative eigenvalue part is discarded.
pub fn psd_project(fac: &SymLowRankFactor) -> Result<SymLowRankFactor, CompressionError> {
    let n = fac.basis.nrows();
    if fac.rank() == 0 {
        return Ok(SymLowRankFactor::zero(n));
    }
    let (basis, values) = sym_core(fac)?;
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.0).collect();
    Ok(select(&basis, &values, &keep))
}

/// Projects onto the semidefinite cone whose sign matches `trace(X)`:
/// [`psd_project`] when the trace is nonnegative, otherwise the negative
/// semidefinite counterpart `−psd_project(−X)`.
pub fn definite_project(fac: &SymLowRankFactor) -> Result<SymLowRankFactor, CompressionError> {
    let gram = fac.basis.tr_mul(&fac.basis);
    let trace = gram.component_mul(&fac.middle).sum();
    if trace >= 0.0 {
        psd_project(fac)
    } else {
        let flipped = SymLowRankFactor {
            basis: fac.basis.clone(),
            middle: -&fac.middle,
        };
        let mut out = psd_project(&flipped)?;
        out.middle.neg_mut();
        Ok(out)
    }
}

/// Smallest and largest eigenvalue of `C S Cᵀ` on range(C) (zeros outside
/// the range are not reported). `None` for an empty factor.
pub fn extreme_eigenvalues(fac: &SymLowRankFactor) -> Result<Option<(f64, f64)>, CompressionError> {
    if fac.rank() == 0 {
        return Ok(None);
    }
    let (_, values) = sym_core(fac)?;
    Ok(Some((values[values.len() - 1], values[0])))
}
