use crate::error::SolveError;

/// Residual bound for the returned iterate after `k_bar` restarts:
/// `tol_res + (k̄+1)(‖A‖+‖B‖+1)·tol_comp`.
pub fn eval_residual_bound(
    tol_res: f64,
    k_bar: usize,
    tol_comp: f64,
    norm_a: f64,
    norm_b: f64,
) -> f64 {
    tol_res + (k_bar as f64 + 1.0) * (norm_a + norm_b + 1.0) * tol_comp
}

/// Error bound for normal coefficients whose spectra lie in the closed
/// right half-plane, with `gap = Re λ_min(A) + Re λ_min(B) > 0`:
/// `(tol_res + (k̄+1)tol_comp)/gap + (k̄+1)tol_comp`.
pub fn eval_error_bound_normal(
    tol_res: f64,
    k_bar: usize,
    tol_comp: f64,
    re_lambda_a: f64,
    re_lambda_b: f64,
) -> Result<f64, SolveError> {
    let gap = re_lambda_a + re_lambda_b;
    if !(gap > 0.0) {
        return Err(SolveError::InvalidConfig(format!(
            "spectral gap must be positive, got {gap}"
        )));
    }
    let k = k_bar as f64 + 1.0;
    Ok((tol_res + k * tol_comp) / gap + k * tol_comp)
}

/// Residual bound when the solution and residual compressions use
/// different tolerances: `tol_res + (k̄+1)((‖A‖+‖B‖)·tol_sol + tol_rhs)`.
/// Equals [`eval_residual_bound`] when both tolerances coincide.
pub fn eval_residual_bound_split(
    tol_res: f64,
    k_bar: usize,
    tol_sol: f64,
    tol_rhs: f64,
    norm_a: f64,
    norm_b: f64,
) -> f64 {
    tol_res + (k_bar as f64 + 1.0) * ((norm_a + norm_b) * tol_sol + tol_rhs)
}

/// Truncation tolerances of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionTolerances {
    /// Used for the factorization of `Y` and the accumulated solution.
    pub solution: f64,
    /// Used for the residual factors handed to the next cycle.
    pub residual: f64,
}

impl CompressionTolerances {
    pub fn uniform(tol: f64) -> Self {
        Self {
            solution: tol,
            residual: tol,
        }
    }
}

/// Default tolerances: half of `tol_res` is given to each compression over
/// `k_max + 1` cycles. A solution truncation error is amplified by at most
/// `‖A‖+‖B‖` in the residual, a residual truncation error is not, so the
/// solution tolerance is divided by the operator norms and the residual
/// tolerance is not.
pub fn auto_tolerances(
    tol_res: f64,
    k_max: usize,
    norm_a: f64,
    norm_b: f64,
) -> CompressionTolerances {
    let share = tol_res / (2.0 * (k_max as f64 + 1.0));
    CompressionTolerances {
        solution: share / (norm_a + norm_b + 1.0),
        residual: share,
    }
}

/// Largest truncation tolerance for which the compression terms of the
/// residual bound stay below `tol_res` over `k_max + 1` cycles.
pub fn auto_tol_comp(tol_res: f64, k_max: usize, norm_a: f64, norm_b: f64) -> f64 {
    tol_res / ((k_max as f64 + 1.0) * (norm_a + norm_b + 1.0))
}
