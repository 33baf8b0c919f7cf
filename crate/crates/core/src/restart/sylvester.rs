use nalgebra::DMatrix;

use super::{
    eval_residual_bound_split, residual_norm_sylv, sylvester_cycle_steps, CycleView, IterationView,
    LowRankView, NoObserver, SolveObserver, SolverConfig,
};
use crate::arnoldi::{ArnoldiStep, BlockArnoldi};
use crate::compress::{compress, LowRankFactorPair, TruncationRule};
use crate::dense_eq::solve_sylvester_dense;
use crate::error::SolveError;
use crate::linalg::svd;
use crate::report::{NormEstimate, SolveReport};
use crate::sparse::{estimate_norm2, OpCounter, SparseOperator};
use crate::timing::Stopwatch;

/// Solves `A X + X B + C Dᵀ = 0` by compress-and-restart block Krylov.
///
/// `cfg.tol_res` is an absolute tolerance on the residual norm. Failure to
/// converge within `cfg.k_max` restarts is not an error: the best iterate
/// is returned and `report.converged` is false.
pub fn restarted_sylv(
    a: &SparseOperator,
    b: &SparseOperator,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<(LowRankFactorPair, SolveReport), SolveError> {
    restarted_sylv_observed(a, b, c, d, cfg, &mut NoObserver)
}

/// [`restarted_sylv`] with an instrumentation hook.
pub fn restarted_sylv_observed(
    a: &SparseOperator,
    b: &SparseOperator,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    cfg: &SolverConfig,
    observer: &mut dyn SolveObserver,
) -> Result<(LowRankFactorPair, SolveReport), SolveError> {
    let clock = Stopwatch::start();
    let n = a.dim();
    if b.dim() != n || c.nrows() != n || d.nrows() != n || c.ncols() != d.ncols() || c.ncols() == 0
    {
        return Err(SolveError::DimensionMismatch(format!(
            "A {n}x{n}, B {m}x{m}, C {}x{}, D {}x{}",
            c.nrows(),
            c.ncols(),
            d.nrows(),
            d.ncols(),
            m = b.dim()
        )));
    }
    cfg.validate(c.ncols())?;
    let bt = b.transpose();
    let norm_a = estimate_norm2(a, cfg.norm_iters(), cfg.seed);
    let norm_b = estimate_norm2(b, cfg.norm_iters(), cfg.seed);
    let tols = cfg.resolve_tolerances(norm_a, norm_b);
    let sol_rule = TruncationRule::new(tols.solution, cfg.norm)?;
    let rhs_rule = TruncationRule::new(tols.residual, cfg.norm)?;

    let rhs0 = LowRankFactorPair::new(c.clone(), d.clone())?;
    let mut report = SolveReport::new(
        "restarted-sylv",
        cfg.norm,
        cfg.tol_res,
        rhs0.frobenius_norm(),
    );
    report.tol_comp = Some(tols.residual);
    report.tol_comp_solution = Some(tols.solution);
    report.memmax = Some(cfg.memmax);
    report.norm_a = Some(NormEstimate::power_iteration(
        norm_a,
        cfg.norm_iters(),
        cfg.seed,
    ));
    report.norm_b = Some(NormEstimate::power_iteration(
        norm_b,
        cfg.norm_iters(),
        cfg.seed,
    ));

    let mut counter_a = OpCounter::new();
    let mut counter_b = OpCounter::new();
    let mut x = LowRankFactorPair::zero(n, n);
    let mut rhs = rhs0;

    for k in 0..=cfg.k_max {
        let s = rhs.rank();
        let m_max = sylvester_cycle_steps(cfg.memmax, s);
        if m_max < 1 {
            return Err(SolveError::BudgetTooSmall {
                memmax: cfg.memmax,
                rank: s,
            });
        }
        let mut arn_a = BlockArnoldi::new(&rhs.left, m_max)?;
        let mut arn_b = BlockArnoldi::new(&rhs.right, m_max)?;
        let core = arn_a.start_r() * arn_b.start_r().transpose();
        report.cycle_starts.push(report.iterations + 1);
        report.restarts = k;

        let mut y = DMatrix::zeros(0, 0);
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for j in 1..=m_max {
            let step_a = arn_a.extend(a, &mut counter_a)?;
            let step_b = arn_b.extend(&bt, &mut counter_b)?;
            let dim = j * s;
            let mut f = DMatrix::zeros(dim, dim);
            f.view_mut((0, 0), (s, s)).copy_from(&core);
            y = solve_sylvester_dense(
                &arn_a.hessenberg().into_owned(),
                &arn_b.hessenberg().into_owned(),
                &f,
            )?;
            residual = residual_norm_sylv(
                &arn_a.boundary().into_owned(),
                &arn_b.boundary().into_owned(),
                &y,
                cfg.norm,
            );
            report.push_residual(residual);
            let live = arn_a.live_columns() + arn_b.live_columns();
            report.peak_live_columns = report.peak_live_columns.max(live);
            observer.iteration(&IterationView {
                cycle: k,
                step: j,
                iteration: report.iterations,
                residual,
                live_columns: live,
                left_basis: arn_a.basis(j),
                right_basis: arn_b.basis(j),
                y: &y,
                rhs: LowRankView::Pair(&rhs),
                accumulated: LowRankView::Pair(&x),
            });
            if residual <= cfg.tol_res {
                converged = true;
                break;
            }
            if step_a == ArnoldiStep::Breakdown || step_b == ArnoldiStep::Breakdown {
                break;
            }
        }
        let m = arn_a.steps();
        report.cycle_lengths.push(m);

        // Y ≈ Y_L Y_Rᵀ, truncated and balanced.
        let dec = svd(&y)?;
        let keep = sol_rule.retained(dec.sigma.as_slice());
        let mut y_l = dec.u.columns(0, keep).into_owned();
        let mut y_r = dec.v.columns(0, keep).into_owned();
        for i in 0..keep {
            let w = dec.sigma[i].sqrt();
            y_l.column_mut(i).scale_mut(w);
            y_r.column_mut(i).scale_mut(w);
        }
        let z_l = arn_a.basis(m) * y_l;
        let z_r = arn_b.basis(m) * y_r;
        let stacked = LowRankFactorPair::new(
            concat_columns(&x.left, &z_l),
            concat_columns(&x.right, &z_r),
        )?;
        x = compress(&stacked, &sol_rule)?;
        report.solution_ranks.push(x.rank());

        let mut next = None;
        if !converged {
            let dim = m * s;
            let y_last_cols = y.columns(dim - s, s).into_owned();
            let y_last_rows_t = y.rows(dim - s, s).transpose();
            let c_next = concat_columns(
                &(arn_a.block(m + 1) * arn_a.boundary()),
                &(arn_a.basis(m) * y_last_cols),
            );
            let d_next = concat_columns(
                &(arn_b.basis(m) * y_last_rows_t),
                &(arn_b.block(m + 1) * arn_b.boundary()),
            );
            rhs = compress(&LowRankFactorPair::new(c_next, d_next)?, &rhs_rule)?;
            report.residual_ranks.push(rhs.rank());
            if rhs.rank() == 0 {
                converged = true;
            } else {
                next = Some(LowRankView::Pair(&rhs));
            }
        }
        observer.cycle(&CycleView {
            cycle: k,
            steps: m,
            rhs_rank: s,
            residual,
            solution: LowRankView::Pair(&x),
            next_rhs: next,
        });
        if converged {
            report.converged = true;
            break;
        }
    }

    report.solution_rank = x.rank();
    report.op_a = counter_a.into();
    report.op_b = Some(counter_b.into());
    report.residual_bound = Some(eval_residual_bound_split(
        cfg.tol_res,
        report.restarts,
        tols.solution,
        tols.residual,
        norm_a,
        norm_b,
    ));
    report.wall_time_s = clock.elapsed_secs();
    Ok((x, report))
}

pub(crate) fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
