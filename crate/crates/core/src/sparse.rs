//! Square sparse operators in CSR layout with counted block application.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::SparseError;
use crate::rng::NormalRng;

/// Power iterations used for the operator-norm estimate in solver reports.
pub const NORM_ESTIMATE_ITERS: usize = 20;
/// Seed of the starting vector for the operator-norm estimate.
pub const NORM_ESTIMATE_SEED: u64 = 42;

/// Operator applications recorded during one solve session.
///
/// `a_calls` counts block applications, `matvecs` the columns they touched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub a_calls: u64,
    pub matvecs: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, width: usize) {
        self.a_calls += 1;
        self.matvecs += width as u64;
    }

    /// Columns per application; 0 when nothing was applied.
    pub fn efficiency(&self) -> f64 {
        if self.a_calls == 0 {
            0.0
        } else {
            self.matvecs as f64 / self.a_calls as f64
        }
    }

    pub fn merge(&mut self, other: &OpCounter) {
        self.a_calls += other.a_calls;
        self.matvecs += other.matvecs;
    }
}

/// Immutable square CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    /// Builds from CSR arrays, validating the layout. The symmetry flag is
    /// set when the matrix equals its transpose exactly.
    pub fn from_csr(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 {
            return Err(SparseError::InvalidStructure(format!(
                "row pointer array of length {} for n = {n}",
                row_ptr.len()
            )));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return Err(SparseError::InvalidStructure(
                "index/value lengths disagree with row pointers".into(),
            ));
        }
        for i in 0..n {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(SparseError::InvalidStructure(format!(
                    "row pointers decrease at row {i}"
                )));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SparseError::InvalidStructure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n) {
                return Err(SparseError::InvalidStructure(format!(
                    "column index out of range in row {i}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SparseError::InvalidStructure("non-finite value".into()));
        }
        let mut op = Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
        };
        op.symmetric = op.transpose_unflagged() == op;
        Ok(op)
    }

    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// explicit zeros are dropped.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SparseError> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(SparseError::DimensionMismatch(format!(
                    "entry ({i}, {j}) outside {n}x{n}"
                )));
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            if let (Some(&last_row), Some(&last_col)) = (rows.last(), col_idx.last()) {
                if last_row == i && last_col == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(i);
            col_idx.push(j);
            values.push(v);
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != 0.0).collect();
        let mut k = 0;
        rows.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        k = 0;
        col_idx.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        values.retain(|v| *v != 0.0);
        for &i in &rows {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::from_csr(n, row_ptr, col_idx, values)
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self, SparseError> {
        if !m.is_square() {
            return Err(SparseError::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        let trip = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = m[(i, j)];
                (v != 0.0).then_some((i, j, v))
            });
        Self::from_triplets(n, trip)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_triplets(n, diag.iter().enumerate().map(|(i, v)| (i, i, *v)))
            .expect("diagonal entries are in range")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates over stored entries as (row, col, value).
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    fn transpose_unflagged(&self) -> Self {
        let n = self.n;
        let mut counts = vec![0usize; n + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric: self.symmetric,
        }
    }

    pub fn transpose(&self) -> Self {
        if self.symmetric {
            return self.clone();
        }
        self.transpose_unflagged()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `out = A·v` without touching any counter.
    fn multiply_into(&self, v: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let n = self.n;
        let s = v.ncols();
        let src = v.as_slice();
        let dst = out.as_mut_slice();
        for i in 0..n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            for c in 0..s {
                let col = &src[c * n..(c + 1) * n];
                let mut acc = 0.0;
                for k in lo..hi {
                    acc += self.values[k] * col[self.col_idx[k]];
                }
                dst[c * n + i] = acc;
            }
        }
    }

    /// Block product `A·V`, recorded on `counter` as one call of width
    /// `V.ncols()`.
    pub fn spmm(
        &self,
        v: &DMatrix<f64>,
        counter: &mut OpCounter,
    ) -> Result<DMatrix<f64>, SparseError> {
        if v.nrows() != self.n {
            return Err(SparseError::DimensionMismatch(format!(
                "operator of size {} applied to block with {} rows",
                self.n,
                v.nrows()
            )));
        }
        if v.ncols() == 0 {
            return Err(SparseError::DimensionMismatch("empty block".into()));
        }
        let mut out = DMatrix::zeros(self.n, v.ncols());
        self.multiply_into(v, &mut out);
        counter.record(v.ncols());
        Ok(out)
    }

    /// `A·v` for diagnostics outside solve sessions (norm estimates,
    /// explicit residual checks). Nothing is counted.
    pub fn apply_uncounted(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(v.nrows(), self.n, "dimension mismatch in apply_uncounted");
        let mut out = DMatrix::zeros(self.n, v.ncols());
        self.multiply_into(v, &mut out);
        out
    }

    /// `Aᵀ·v` by scattering rows; nothing is counted.
    pub fn apply_transpose_uncounted(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(
            v.nrows(),
            self.n,
            "dimension mismatch in apply_transpose_uncounted"
        );
        let n = self.n;
        let mut out = DMatrix::zeros(n, v.ncols());
        for c in 0..v.ncols() {
            let src = v.column(c);
            let mut dst = out.column_mut(c);
            for i in 0..n {
                let xi = src[i];
                if xi == 0.0 {
                    continue;
                }
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    dst[self.col_idx[k]] += self.values[k] * xi;
                }
            }
        }
        out
    }
}

/// Lower estimate of `‖A‖₂` by power iteration on `AᵀA`.
///
/// Returns the largest ratio `‖A x‖ / ‖x‖` seen over the iterates, which
/// never exceeds the true spectral norm beyond rounding. The start vector
/// has random ±1 entries drawn from `seed`; iterates are rescaled by powers
/// of two only, so scalar multiples of the identity are recovered exactly.
pub fn estimate_norm2(a: &SparseOperator, iters: usize, seed: u64) -> f64 {
    let n = a.dim();
    if n == 0 || a.nnz() == 0 {
        return 0.0;
    }
    let mut rng = NormalRng::new(seed);
    let mut x = DMatrix::from_fn(n, 1, |_, _| if rng.uniform() < 0.5 { -1.0 } else { 1.0 });
    let mut best: f64 = 0.0;
    for _ in 0..iters.max(1) {
        let y = a.apply_uncounted(&x);
        best = best.max((y.norm_squared() / x.norm_squared()).sqrt());
        let z = a.apply_transpose_uncounted(&y);
        let len = z.norm();
        if len == 0.0 {
            break;
        }
        x = z * 2f64.powi(-(len.log2().round() as i32));
    }
    best
}
