//! Run summaries shared by the restarted solvers and the baselines.

use serde::{Deserialize, Serialize};

use crate::compress::NormKind;
use crate::sparse::OpCounter;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorStats {
    pub a_calls: u64,
    pub matvecs: u64,
    /// `matvecs / a_calls`.
    pub efficiency: f64,
}

impl From<OpCounter> for OperatorStats {
    fn from(c: OpCounter) -> Self {
        Self {
            a_calls: c.a_calls,
            matvecs: c.matvecs,
            efficiency: c.efficiency(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub method: String,
}

impl NormEstimate {
    pub fn power_iteration(value: f64, iters: usize, seed: u64) -> Self {
        Self {
            value,
            method: format!("power iteration on A^T A, {iters} steps, seed {seed}, lower estimate"),
        }
    }
}

/// Outcome of one solve.
///
/// `residual_history` holds one absolute residual norm per iteration (the
/// cheap projected formula); divide by `rhs_norm` for relative values.
/// `cycle_starts` lists the 1-based iteration index at which each cycle
/// begins. `residual_ranks[k]` is the rank of the compressed residual
/// handed from cycle `k` to cycle `k+1`; `solution_ranks[k]` the rank of
/// the compressed accumulated solution after cycle `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub cycle_lengths: Vec<usize>,
    pub cycle_starts: Vec<usize>,
    pub residual_ranks: Vec<usize>,
    pub solution_ranks: Vec<usize>,
    pub residual_history: Vec<f64>,
    pub rhs_norm: f64,
    pub final_residual: f64,
    pub final_relative_residual: f64,
    pub solution_rank: usize,
    pub norm: NormKind,
    pub tol_res: f64,
    /// Residual compression tolerance.
    pub tol_comp: Option<f64>,
    pub tol_comp_solution: Option<f64>,
    pub memmax: Option<usize>,
    pub peak_live_columns: usize,
    pub op_a: OperatorStats,
    pub op_b: Option<OperatorStats>,
    pub norm_a: Option<NormEstimate>,
    pub norm_b: Option<NormEstimate>,
    pub residual_bound: Option<f64>,
    pub inner_iterations: Option<usize>,
    pub definite_projection: bool,
    pub explicit_residual: Option<f64>,
    pub wall_time_s: f64,
}

impl SolveReport {
    pub(crate) fn new(method: &str, norm: NormKind, tol_res: f64, rhs_norm: f64) -> Self {
        Self {
            method: method.to_string(),
            converged: false,
            iterations: 0,
            restarts: 0,
            cycle_lengths: Vec::new(),
            cycle_starts: Vec::new(),
            residual_ranks: Vec::new(),
            solution_ranks: Vec::new(),
            residual_history: Vec::new(),
            rhs_norm,
            final_residual: f64::NAN,
            final_relative_residual: f64::NAN,
            solution_rank: 0,
            norm,
            tol_res,
            tol_comp: None,
            tol_comp_solution: None,
            memmax: None,
            peak_live_columns: 0,
            op_a: OpCounter::new().into(),
            op_b: None,
            norm_a: None,
            norm_b: None,
            residual_bound: None,
            inner_iterations: None,
            definite_projection: false,
            explicit_residual: None,
            wall_time_s: 0.0,
        }
    }

    pub(crate) fn push_residual(&mut self, value: f64) {
        self.residual_history.push(value);
        self.iterations = self.residual_history.len();
        self.final_residual = value;
        self.final_relative_residual = if self.rhs_norm > 0.0 {
            value / self.rhs_norm
        } else {
            value
        };
    }

    /// Residual history divided by the right-hand-side norm.
    pub fn relative_history(&self) -> Vec<f64> {
        let scale = if self.rhs_norm > 0.0 {
            self.rhs_norm
        } else {
            1.0
        };
        self.residual_history.iter().map(|r| r / scale).collect()
    }
}
