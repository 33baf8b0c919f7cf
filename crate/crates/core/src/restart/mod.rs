//! Compress-and-restart block Krylov solvers.
//!
//! Each cycle builds a polynomial block Krylov space from the current
//! (compressed, low-rank) residual, solves the Galerkin-projected equation
//! at every step, and stops the cycle when the cheap residual formula meets
//! the tolerance or the memory budget is spent. The correction is added to
//! the accumulated solution, which is recompressed; the new residual is
//! formed in low-rank form from the Arnoldi boundary and recompressed
//! before the next cycle.

mod bounds;
mod lyapunov;
mod residual;
mod sylvester;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

pub use bounds::{
    auto_tol_comp, auto_tolerances, eval_error_bound_normal, eval_residual_bound,
    eval_residual_bound_split, CompressionTolerances,
};
pub use lyapunov::{restarted_lyap, restarted_lyap_observed};
pub use residual::{
    lowrank_residual_lyap, lowrank_residual_sylv, residual_norm_lyap, residual_norm_sylv,
};
pub use sylvester::{restarted_sylv, restarted_sylv_observed};

use crate::compress::{LowRankFactorPair, NormKind, SymLowRankFactor};
use crate::error::SolveError;
use crate::sparse::{NORM_ESTIMATE_ITERS, NORM_ESTIMATE_SEED};

/// Restart budget used when the caller does not choose one.
pub const DEFAULT_MAX_RESTARTS: usize = 50;
/// Residual tolerance used when the caller does not choose one.
pub const DEFAULT_TOL_RES: f64 = 1e-6;

/// When to replace the final Lyapunov solution by its nearest
/// semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefiniteProjection {
    Never,
    /// Only when the final middle factor has eigenvalues of both signs.
    #[default]
    Auto,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum number of basis columns stored at once across all Arnoldi
    /// sessions of a cycle.
    pub memmax: usize,
    /// Maximum number of restarts; cycles are numbered `0..=k_max`.
    pub k_max: usize,
    /// Absolute residual tolerance.
    pub tol_res: f64,
    /// Truncation tolerance of both compressions; `None` selects
    /// [`auto_tolerances`].
    pub tol_comp: Option<f64>,
    /// Overrides the tolerance of the solution compression only.
    pub tol_comp_solution: Option<f64>,
    pub norm: NormKind,
    /// Seed of the operator-norm estimate.
    pub seed: u64,
    pub definite_projection: DefiniteProjection,
}

impl SolverConfig {
    pub fn new(memmax: usize) -> Self {
        Self {
            memmax,
            k_max: DEFAULT_MAX_RESTARTS,
            tol_res: DEFAULT_TOL_RES,
            tol_comp: None,
            tol_comp_solution: None,
            norm: NormKind::Frobenius,
            seed: NORM_ESTIMATE_SEED,
            definite_projection: DefiniteProjection::Auto,
        }
    }

    pub fn with_tol_res(mut self, tol: f64) -> Self {
        self.tol_res = tol;
        self
    }

    pub fn with_tol_comp(mut self, tol: f64) -> Self {
        self.tol_comp = Some(tol);
        self
    }

    pub fn with_tol_comp_solution(mut self, tol: f64) -> Self {
        self.tol_comp_solution = Some(tol);
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_definite_projection(mut self, mode: DefiniteProjection) -> Self {
        self.definite_projection = mode;
        self
    }

    pub(crate) fn validate(&self, s: usize) -> Result<(), SolveError> {
        if !(self.tol_res > 0.0 && self.tol_res.is_finite()) {
            return Err(SolveError::InvalidConfig(format!(
                "tol_res must be positive, got {}",
                self.tol_res
            )));
        }
        for t in self.tol_comp.into_iter().chain(self.tol_comp_solution) {
            if !(t > 0.0 && t.is_finite()) {
                return Err(SolveError::InvalidConfig(format!(
                    "tol_comp must be positive, got {t}"
                )));
            }
        }
        if self.memmax < 4 * s {
            return Err(SolveError::InvalidConfig(format!(
                "memmax = {} is below 4s = {}",
                self.memmax,
                4 * s
            )));
        }
        Ok(())
    }

    pub(crate) fn norm_iters(&self) -> usize {
        NORM_ESTIMATE_ITERS
    }

    /// Tolerances actually used, given operator norm estimates.
    pub fn resolve_tolerances(&self, norm_a: f64, norm_b: f64) -> CompressionTolerances {
        let mut t = match self.tol_comp {
            Some(tol) => CompressionTolerances::uniform(tol),
            None => auto_tolerances(self.tol_res, self.k_max, norm_a, norm_b),
        };
        if let Some(tol) = self.tol_comp_solution {
            t.solution = tol;
        }
        t
    }
}

/// Iteration budget of a Sylvester cycle, `⌊memmax/(2s)⌋ − 2`.
pub fn sylvester_cycle_steps(memmax: usize, s: usize) -> usize {
    (memmax / (2 * s)).saturating_sub(2)
}

/// Iteration budget of a Lyapunov cycle, `⌊memmax/s⌋ − 1`.
pub fn lyapunov_cycle_steps(memmax: usize, s: usize) -> usize {
    (memmax / s).saturating_sub(1)
}

/// A low-rank matrix in either representation.
#[derive(Debug, Clone, Copy)]
pub enum LowRankView<'a> {
    Pair(&'a LowRankFactorPair),
    Sym(&'a SymLowRankFactor),
}

impl LowRankView<'_> {
    pub fn rank(&self) -> usize {
        match self {
            LowRankView::Pair(p) => p.rank(),
            LowRankView::Sym(s) => s.rank(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LowRankView::Pair(p) => p.to_dense(),
            LowRankView::Sym(s) => s.to_dense(),
        }
    }
}

/// State exposed after every inner iteration.
///
/// The current correction is `left_basis · y · right_basisᵀ` (with
/// `right_basis = left_basis` for Lyapunov solves); it approximately solves
/// the cycle's equation whose right-hand side is `rhs`.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub cycle: usize,
    pub step: usize,
    /// 1-based global iteration index.
    pub iteration: usize,
    pub residual: f64,
    pub live_columns: usize,
    pub left_basis: DMatrixView<'a, f64>,
    pub right_basis: DMatrixView<'a, f64>,
    pub y: &'a DMatrix<f64>,
    pub rhs: LowRankView<'a>,
    pub accumulated: LowRankView<'a>,
}

/// State exposed at the end of every cycle, after the solution update.
#[derive(Debug)]
pub struct CycleView<'a> {
    pub cycle: usize,
    pub steps: usize,
    pub rhs_rank: usize,
    /// Cheap residual of the last correction.
    pub residual: f64,
    pub solution: LowRankView<'a>,
    /// Compressed residual passed to the next cycle; `None` once converged.
    pub next_rhs: Option<LowRankView<'a>>,
}

/// Instrumentation hook for the restarted solvers.
pub trait SolveObserver {
    fn iteration(&mut self, _view: &IterationView<'_>) {}
    fn cycle(&mut self, _view: &CycleView<'_>) {}
}

/// Observer that records nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl SolveObserver for NoObserver {}

/// Records the peak number of live basis columns.
#[derive(Debug, Default, Clone, Copy)]
pub struct PeakColumns(pub usize);

impl SolveObserver for PeakColumns {
    fn iteration(&mut self, view: &IterationView<'_>) {
        self.0 = self.0.max(view.live_columns);
    }
}
