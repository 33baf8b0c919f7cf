use nalgebra::DMatrix;

use super::{
    concat, inner_solve, orth_deflate, truncated_eig, InnerSolverConfig, DEFAULT_RANK_TOL,
};
use crate::compress::{LowRankFactorPair, NormKind, SymLowRankFactor};
use crate::dense_eq::{solve_lyapunov_dense, solve_sylvester_dense};
use crate::error::BaselineError;
use crate::linalg::{norm2, svd};
use crate::problems::outer_norm;
use crate::report::SolveReport;
use crate::sparse::{OpCounter, SparseOperator};
use crate::timing::Stopwatch;

#[derive(Debug, Clone, PartialEq)]
pub struct EksmConfig {
    /// Absolute residual tolerance.
    pub tol_res: f64,
    /// Largest basis dimension allowed per side.
    pub max_dim: usize,
    pub inner_a: InnerSolverConfig,
    /// Inner solver for `Bᵀ` (Sylvester only).
    pub inner_b: InnerSolverConfig,
    pub rank_tol: f64,
    pub norm: NormKind,
}

impl EksmConfig {
    pub fn new(tol_res: f64, max_dim: usize, inner: InnerSolverConfig) -> Self {
        Self {
            tol_res,
            max_dim,
            inner_a: inner.clone(),
            inner_b: inner,
            rank_tol: DEFAULT_RANK_TOL,
            norm: NormKind::Frobenius,
        }
    }

    fn validate(&self) -> Result<(), BaselineError> {
        if !(self.tol_res > 0.0) {
            return Err(BaselineError::InvalidConfig(format!(
                "tol_res must be positive, got {}",
                self.tol_res
            )));
        }
        self.inner_a.validate()?;
        self.inner_b.validate()
    }
}

/// One extended Krylov space `span{C, A⁻¹C, AC, A⁻²C, …}` with the images
/// `A𝐔` kept so that `T = 𝐔ᵀA𝐔` and the exact Galerkin residual factor
/// `A𝐔 − 𝐔T` are available without further products.
struct ExtendedSpace<'a> {
    op: &'a SparseOperator,
    inner: &'a InnerSolverConfig,
    basis: DMatrix<f64>,
    images: DMatrix<f64>,
    t: DMatrix<f64>,
    /// Column offset and widths of the polynomial and inverse parts of the
    /// newest block.
    last: (usize, usize, usize),
    counter: OpCounter,
    inner_its: usize,
}

impl<'a> ExtendedSpace<'a> {
    fn new(
        op: &'a SparseOperator,
        c: &DMatrix<f64>,
        inner: &'a InnerSolverConfig,
    ) -> Result<Self, BaselineError> {
        let n = op.dim();
        let mut counter = OpCounter::new();
        let first = orth_deflate(&DMatrix::zeros(n, 0), c)?;
        let inv = inner_solve(op, c, inner, &mut counter)?;
        let second = orth_deflate(&first, &inv.x)?;
        let (p1, p2) = (first.ncols(), second.ncols());
        let basis = concat(&first, &second);
        let images = op.spmm(&basis, &mut counter)?;
        let t = basis.tr_mul(&images);
        Ok(Self {
            op,
            inner,
            basis,
            images,
            t,
            last: (0, p1, p2),
            counter,
            inner_its: inv.iterations,
        })
    }

    fn dim(&self) -> usize {
        self.basis.ncols()
    }

    fn last_width(&self) -> usize {
        self.last.1 + self.last.2
    }

    fn residual_factor(&self) -> DMatrix<f64> {
        &self.images - &self.basis * &self.t
    }

    /// Appends the orthonormalized `[A·U⁽¹⁾, A⁻¹·U⁽²⁾]` of the newest block.
    /// Returns false when no new direction survives.
    fn extend(&mut self) -> Result<bool, BaselineError> {
        let (start, p1, p2) = self.last;
        let w1 = self.images.columns(start, p1).into_owned();
        let q1 = orth_deflate(&self.basis, &w1)?;
        let q2 = if p2 > 0 {
            let rhs = self.basis.columns(start + p1, p2).into_owned();
            let inv = inner_solve(self.op, &rhs, self.inner, &mut self.counter)?;
            self.inner_its += inv.iterations;
            orth_deflate(&concat(&self.basis, &q1), &inv.x)?
        } else {
            DMatrix::zeros(self.basis.nrows(), 0)
        };
        let new = concat(&q1, &q2);
        if new.ncols() == 0 {
            return Ok(false);
        }
        let new_images = self.op.spmm(&new, &mut self.counter)?;
        let k = self.dim();
        let w = new.ncols();
        let mut t = DMatrix::zeros(k + w, k + w);
        t.view_mut((0, 0), (k, k)).copy_from(&self.t);
        t.view_mut((0, k), (k, w))
            .copy_from(&self.basis.tr_mul(&new_images));
        t.view_mut((k, 0), (w, k))
            .copy_from(&new.tr_mul(&self.images));
        t.view_mut((k, k), (w, w))
            .copy_from(&new.tr_mul(&new_images));
        self.t = t;
        self.basis = concat(&self.basis, &new);
        self.images = concat(&self.images, &new_images);
        self.last = (k, q1.ncols(), q2.ncols());
        Ok(true)
    }
}

fn norm_of(m: &DMatrix<f64>, norm: NormKind) -> Result<f64, BaselineError> {
    Ok(match norm {
        NormKind::Frobenius => m.norm(),
        NormKind::Spectral => norm2(m)?,
    })
}

/// Extended Krylov solver for `A X + X Aᵀ + C Cᵀ = 0` with inexact `A⁻¹`.
///
/// Iteration `m` solves on a basis of dimension `2(m+1)s` (before any
/// deflation). Exceeding `cfg.max_dim` is an error.
pub fn eksm_lyap(
    a: &SparseOperator,
    c: &DMatrix<f64>,
    cfg: &EksmConfig,
) -> Result<(SymLowRankFactor, SolveReport), BaselineError> {
    let clock = Stopwatch::start();
    cfg.validate()?;
    if c.nrows() != a.dim() || c.ncols() == 0 {
        return Err(BaselineError::DimensionMismatch(format!(
            "A is {0}x{0}, C {1}x{2}",
            a.dim(),
            c.nrows(),
            c.ncols()
        )));
    }
    let method = format!("eksm-{}", inner_name(&cfg.inner_a));
    let mut report = SolveReport::new(&method, cfg.norm, cfg.tol_res, outer_norm(c, c));
    let mut space = ExtendedSpace::new(a, c, &cfg.inner_a)?;
    let mut m = 0;
    let y = loop {
        let cp = space.basis.tr_mul(c);
        let y = solve_lyapunov_dense(&space.t, &(&cp * cp.transpose()))?;
        let gy = space.residual_factor() * &y;
        let res = match cfg.norm {
            NormKind::Frobenius => std::f64::consts::SQRT_2 * gy.norm(),
            NormKind::Spectral => norm_of(&gy, cfg.norm)?,
        };
        report.push_residual(res);
        report.peak_live_columns = report.peak_live_columns.max(space.dim());
        if res <= cfg.tol_res {
            break y;
        }
        if space.dim() + space.last_width() > cfg.max_dim {
            return Err(BaselineError::MemoryExhausted {
                max_dim: cfg.max_dim,
                iteration: m,
                residual: res,
            });
        }
        if !space.extend()? {
            return Err(BaselineError::MaxIterations(m));
        }
        m += 1;
    };
    let (w, lambda) = truncated_eig(&y, cfg.rank_tol)?;
    let x = SymLowRankFactor::new(&space.basis * w, DMatrix::from_diagonal(&lambda))?;
    report.converged = true;
    report.iterations = m;
    report.solution_rank = x.rank();
    report.op_a = space.counter.into();
    report.inner_iterations = Some(space.inner_its);
    report.wall_time_s = clock.elapsed_secs();
    Ok((x, report))
}

/// Two-sided extended Krylov solver for `A X + X B + C Dᵀ = 0`; the right
/// space is built from `Bᵀ` and `D`.
pub fn eksm_sylv(
    a: &SparseOperator,
    b: &SparseOperator,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    cfg: &EksmConfig,
) -> Result<(LowRankFactorPair, SolveReport), BaselineError> {
    let clock = Stopwatch::start();
    cfg.validate()?;
    let n = a.dim();
    if b.dim() != n || c.nrows() != n || d.nrows() != n || c.ncols() != d.ncols() || c.ncols() == 0
    {
        return Err(BaselineError::DimensionMismatch(format!(
            "A {n}x{n}, B {m}x{m}, C {}x{}, D {}x{}",
            c.nrows(),
            c.ncols(),
            d.nrows(),
            d.ncols(),
            m = b.dim()
        )));
    }
    let bt = b.transpose();
    let method = format!("eksm-{}", inner_name(&cfg.inner_a));
    let mut report = SolveReport::new(&method, cfg.norm, cfg.tol_res, outer_norm(c, d));
    let mut left = ExtendedSpace::new(a, c, &cfg.inner_a)?;
    let mut right = ExtendedSpace::new(&bt, d, &cfg.inner_b)?;
    let mut m = 0;
    let y = loop {
        let f = left.basis.tr_mul(c) * right.basis.tr_mul(d).transpose();
        let y = solve_sylvester_dense(&left.t, &right.t, &f)?;
        let top = left.residual_factor() * &y;
        let side = &y * right.residual_factor().transpose();
        let res = match cfg.norm {
            NormKind::Frobenius => (top.norm_squared() + side.norm_squared()).sqrt(),
            NormKind::Spectral => norm2(&top)?.max(norm2(&side)?),
        };
        report.push_residual(res);
        report.peak_live_columns = report.peak_live_columns.max(left.dim() + right.dim());
        if res <= cfg.tol_res {
            break y;
        }
        if left.dim() + left.last_width() > cfg.max_dim
            || right.dim() + right.last_width() > cfg.max_dim
        {
            return Err(BaselineError::MemoryExhausted {
                max_dim: cfg.max_dim,
                iteration: m,
                residual: res,
            });
        }
        let grew_left = left.extend()?;
        let grew_right = right.extend()?;
        if !grew_left && !grew_right {
            return Err(BaselineError::MaxIterations(m));
        }
        m += 1;
    };
    let dec = svd(&y)?;
    let top = dec.sigma.iter().copied().fold(0.0, f64::max);
    let keep = dec
        .sigma
        .iter()
        .filter(|&&v| top > 0.0 && v > cfg.rank_tol * top)
        .count();
    let mut yl = dec.u.columns(0, keep).into_owned();
    let mut yr = dec.v.columns(0, keep).into_owned();
    for i in 0..keep {
        let w = dec.sigma[i].sqrt();
        yl.column_mut(i).scale_mut(w);
        yr.column_mut(i).scale_mut(w);
    }
    let x = LowRankFactorPair::new(&left.basis * yl, &right.basis * yr)?;
    report.converged = true;
    report.iterations = m;
    report.solution_rank = x.rank();
    report.op_a = left.counter.into();
    report.op_b = Some(right.counter.into());
    report.inner_iterations = Some(left.inner_its + right.inner_its);
    report.wall_time_s = clock.elapsed_secs();
    Ok((x, report))
}

fn inner_name(cfg: &InnerSolverConfig) -> &'static str {
    match cfg.kind {
        super::InnerKind::BlockCg => "bcg",
        super::InnerKind::BlockGmres => "bgmres",
    }
}
