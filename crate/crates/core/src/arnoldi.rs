//! Incremental block Arnoldi with classical block Gram–Schmidt and one full
//! reorthogonalization pass (BCGS2).
//!
//! After `m` steps the session holds `U₁..U_{m+1}` and the block Hessenberg
//! matrix `H̲_m` of size `(m+1)s × ms`, so that
//! `A 𝐔_m = 𝐔_m 𝐇_m + U_{m+1} H_{m+1,m} E_mᵀ`.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::ArnoldiError;
use crate::linalg::{qr_economy, svd};
use crate::sparse::{OpCounter, SparseOperator};

/// A starting block whose smallest singular value falls below this
/// fraction of the largest is treated as rank deficient.
pub const START_RANK_TOL: f64 = 1e-12;
/// Relative size of a diagonal entry of the new block's R factor below
/// which the step is declared a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Result of one extension step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArnoldiStep {
    Extended,
    /// The new block is numerically rank deficient after
    /// orthogonalization: `𝐔_m` spans an invariant subspace up to the
    /// (tiny) boundary block, which is still stored.
    Breakdown,
}

/// Block Arnoldi session for one operator and starting block.
#[derive(Debug, Clone)]
pub struct BlockArnoldi {
    n: usize,
    s: usize,
    max_steps: usize,
    steps: usize,
    /// Basis columns, column-major `n × (steps+1)s`; capacity reserved up
    /// front for `max_steps + 1` blocks.
    basis: Vec<f64>,
    /// `(max_steps+1)s × max_steps·s`, filled up to the current step.
    h: DMatrix<f64>,
    start_r: DMatrix<f64>,
    norm_scale: f64,
    broken: bool,
}

impl BlockArnoldi {
    /// Orthonormalizes the starting block `C = U₁ R` and reserves room for
    /// `max_steps` extensions. Does not apply the operator.
    pub fn new(c: &DMatrix<f64>, max_steps: usize) -> Result<Self, ArnoldiError> {
        let (n, s) = c.shape();
        if s == 0 || n < s {
            return Err(ArnoldiError::DimensionMismatch(format!(
                "starting block must be tall with at least one column, got {n}x{s}"
            )));
        }
        let (q, r) = qr_economy(c)?;
        let sigma = svd(&r)?.sigma;
        let ratio = if sigma[0] > 0.0 {
            sigma[s - 1] / sigma[0]
        } else {
            0.0
        };
        if ratio < START_RANK_TOL {
            return Err(ArnoldiError::RankDeficientStart(ratio));
        }
        let mut basis = Vec::with_capacity(n * s * (max_steps + 1));
        basis.extend_from_slice(q.as_slice());
        Ok(Self {
            n,
            s,
            max_steps,
            steps: 0,
            basis,
            h: DMatrix::zeros((max_steps + 1) * s, max_steps * s),
            start_r: r,
            norm_scale: 0.0,
            broken: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.s
    }

    /// Completed extension steps `m`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn is_broken_down(&self) -> bool {
        self.broken
    }

    /// Basis columns currently stored, `(m+1)s`.
    pub fn live_columns(&self) -> usize {
        self.basis.len() / self.n
    }

    /// `R` from `C = U₁ R`, so that `𝐔_mᵀ C = E₁ R`.
    pub fn start_r(&self) -> &DMatrix<f64> {
        &self.start_r
    }

    /// First `blocks` basis blocks `[U₁|…|U_blocks]`.
    pub fn basis(&self, blocks: usize) -> DMatrixView<'_, f64> {
        assert!(
            blocks <= self.steps + 1,
            "only {} blocks stored",
            self.steps + 1
        );
        let cols = blocks * self.s;
        DMatrixView::from_slice(&self.basis[..self.n * cols], self.n, cols)
    }

    /// Block `U_i`, 1-based.
    pub fn block(&self, i: usize) -> DMatrixView<'_, f64> {
        assert!(
            i >= 1 && i <= self.steps + 1,
            "block index {i} out of range"
        );
        let (n, s) = (self.n, self.s);
        DMatrixView::from_slice(&self.basis[n * s * (i - 1)..n * s * i], n, s)
    }

    /// Square block Hessenberg `𝐇_m` (`ms × ms`).
    pub fn hessenberg(&self) -> DMatrixView<'_, f64> {
        let k = self.steps * self.s;
        self.h.view((0, 0), (k, k))
    }

    /// `H̲_m`, the `(m+1)s × ms` matrix including the boundary block row.
    pub fn hessenberg_extended(&self) -> DMatrixView<'_, f64> {
        let k = self.steps * self.s;
        self.h.view((0, 0), (k + self.s, k))
    }

    /// Boundary block `H_{m+1,m}`. Requires `m ≥ 1`.
    pub fn boundary(&self) -> DMatrixView<'_, f64> {
        assert!(self.steps >= 1, "no boundary block before the first step");
        let k = self.steps * self.s;
        self.h.view((k, k - self.s), (self.s, self.s))
    }

    /// One block Arnoldi step: a single counted application of `a` to
    /// `U_{m+1}`, two classical block Gram–Schmidt passes and a QR of the
    /// remainder.
    pub fn extend(
        &mut self,
        a: &SparseOperator,
        counter: &mut OpCounter,
    ) -> Result<ArnoldiStep, ArnoldiError> {
        if self.broken {
            return Err(ArnoldiError::AlreadyBrokenDown);
        }
        if self.steps == self.max_steps {
            return Err(ArnoldiError::CapacityExhausted(self.max_steps));
        }
        if a.dim() != self.n {
            return Err(ArnoldiError::DimensionMismatch(format!(
                "operator of size {} for a basis with {} rows",
                a.dim(),
                self.n
            )));
        }
        let (n, s) = (self.n, self.s);
        let m = self.steps;
        let last = self.block(m + 1).into_owned();
        let mut w = a
            .spmm(&last, counter)
            .map_err(|e| ArnoldiError::DimensionMismatch(e.to_string()))?;
        for j in 0..s {
            self.norm_scale = self.norm_scale.max(w.column(j).norm());
        }
        let cols = (m + 1) * s;
        let mut coeffs = DMatrix::zeros(cols, s);
        {
            let ub = DMatrixView::from_slice(&self.basis[..n * cols], n, cols);
            for _ in 0..2 {
                let pass = ub.tr_mul(&w);
                w.gemm(-1.0, &ub, &pass, 1.0);
                coeffs += pass;
            }
        }
        let (q, r) = qr_economy(&w)?;
        self.h.view_mut((0, m * s), (cols, s)).copy_from(&coeffs);
        self.h.view_mut((cols, m * s), (s, s)).copy_from(&r);
        self.basis.extend_from_slice(q.as_slice());
        self.steps += 1;
        let smallest = (0..s)
            .map(|i| r[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        if smallest < BREAKDOWN_TOL * self.norm_scale {
            self.broken = true;
            Ok(ArnoldiStep::Breakdown)
        } else {
            Ok(ArnoldiStep::Extended)
        }
    }
}
