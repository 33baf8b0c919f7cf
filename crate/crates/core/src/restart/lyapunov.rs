use nalgebra::{DMatrix, DVector};

use super::sylvester::concat_columns;
use super::{
    eval_residual_bound_split, lyapunov_cycle_steps, residual_norm_lyap, CycleView,
    DefiniteProjection, IterationView, LowRankView, NoObserver, SolveObserver, SolverConfig,
};
use crate::arnoldi::{ArnoldiStep, BlockArnoldi};
use crate::compress::{compress_sym, definite_project, SymLowRankFactor, TruncationRule};
use crate::dense_eq::solve_lyapunov_dense;
use crate::error::SolveError;
use crate::linalg::eig_sym;
use crate::report::{NormEstimate, SolveReport};
use crate::sparse::{estimate_norm2, OpCounter, SparseOperator};
use crate::timing::Stopwatch;

/// Solves `A X + X Aᵀ + C Cᵀ = 0` by compress-and-restart block Krylov
/// with a single basis per cycle and symmetric (LDLᵀ) low-rank factors.
///
/// The solution comes back as `Z S Zᵀ` with orthonormal `Z` and diagonal
/// `S`. `cfg.tol_res` is absolute.
pub fn restarted_lyap(
    a: &SparseOperator,
    c: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<(SymLowRankFactor, SolveReport), SolveError> {
    restarted_lyap_observed(a, c, cfg, &mut NoObserver)
}

/// [`restarted_lyap`] with an instrumentation hook.
pub fn restarted_lyap_observed(
    a: &SparseOperator,
    c: &DMatrix<f64>,
    cfg: &SolverConfig,
    observer: &mut dyn SolveObserver,
) -> Result<(SymLowRankFactor, SolveReport), SolveError> {
    let clock = Stopwatch::start();
    let n = a.dim();
    if c.nrows() != n || c.ncols() == 0 {
        return Err(SolveError::DimensionMismatch(format!(
            "A {n}x{n}, C {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    cfg.validate(c.ncols())?;
    let norm_a = estimate_norm2(a, cfg.norm_iters(), cfg.seed);
    let tols = cfg.resolve_tolerances(norm_a, norm_a);
    let sol_rule = TruncationRule::new(tols.solution, cfg.norm)?;
    let rhs_rule = TruncationRule::new(tols.residual, cfg.norm)?;

    let rhs0 = SymLowRankFactor::new(c.clone(), DMatrix::identity(c.ncols(), c.ncols()))?;
    let gram = c.tr_mul(c);
    let mut report = SolveReport::new("restarted-lyap", cfg.norm, cfg.tol_res, gram.norm());
    report.tol_comp = Some(tols.residual);
    report.tol_comp_solution = Some(tols.solution);
    report.memmax = Some(cfg.memmax);
    report.norm_a = Some(NormEstimate::power_iteration(
        norm_a,
        cfg.norm_iters(),
        cfg.seed,
    ));

    let mut counter = OpCounter::new();
    let mut x = SymLowRankFactor::zero(n);
    let mut rhs = rhs0;

    for k in 0..=cfg.k_max {
        let s = rhs.rank();
        let m_max = lyapunov_cycle_steps(cfg.memmax, s);
        if m_max < 1 {
            return Err(SolveError::BudgetTooSmall {
                memmax: cfg.memmax,
                rank: s,
            });
        }
        let mut arn = BlockArnoldi::new(&rhs.basis, m_max)?;
        let r0 = arn.start_r();
        let core = r0 * &rhs.middle * r0.transpose();
        let core = (&core + core.transpose()) * 0.5;
        report.cycle_starts.push(report.iterations + 1);
        report.restarts = k;

        let mut y = DMatrix::zeros(0, 0);
        let mut residual = f64::INFINITY;
        let mut converged = false;
        for j in 1..=m_max {
            let step = arn.extend(a, &mut counter)?;
            let dim = j * s;
            let mut f = DMatrix::zeros(dim, dim);
            f.view_mut((0, 0), (s, s)).copy_from(&core);
            y = solve_lyapunov_dense(&arn.hessenberg().into_owned(), &f)?;
            residual = residual_norm_lyap(&arn.boundary().into_owned(), &y, cfg.norm);
            report.push_residual(residual);
            let live = arn.live_columns();
            report.peak_live_columns = report.peak_live_columns.max(live);
            observer.iteration(&IterationView {
                cycle: k,
                step: j,
                iteration: report.iterations,
                residual,
                live_columns: live,
                left_basis: arn.basis(j),
                right_basis: arn.basis(j),
                y: &y,
                rhs: LowRankView::Sym(&rhs),
                accumulated: LowRankView::Sym(&x),
            });
            if residual <= cfg.tol_res {
                converged = true;
                break;
            }
            if step == ArnoldiStep::Breakdown {
                break;
            }
        }
        let m = arn.steps();
        report.cycle_lengths.push(m);

        // Y ≈ Ỹ Λ Ỹᵀ, truncated by eigenvalue magnitude.
        let eig = eig_sym(&y)?;
        let mut order: Vec<usize> = (0..eig.values.len()).collect();
        order.sort_by(|&p, &q| eig.values[q].abs().total_cmp(&eig.values[p].abs()));
        let magnitudes: Vec<f64> = order.iter().map(|&i| eig.values[i].abs()).collect();
        let mut keep = order[..sol_rule.retained(&magnitudes)].to_vec();
        keep.sort_unstable();
        let y_basis = eig.vectors.select_columns(keep.iter());
        let lambda = DVector::from_iterator(keep.len(), keep.iter().map(|&i| eig.values[i]));
        let z = arn.basis(m) * y_basis;
        let r_old = x.rank();
        let mut middle = DMatrix::zeros(r_old + keep.len(), r_old + keep.len());
        middle.view_mut((0, 0), (r_old, r_old)).copy_from(&x.middle);
        middle
            .view_mut((r_old, r_old), (keep.len(), keep.len()))
            .set_diagonal(&lambda);
        x = compress_sym(
            &SymLowRankFactor::new(concat_columns(&x.basis, &z), middle)?,
            &sol_rule,
        )?;
        report.solution_ranks.push(x.rank());

        let mut next = None;
        if !converged {
            let dim = m * s;
            let c_next = concat_columns(
                &(arn.block(m + 1) * arn.boundary()),
                &(arn.basis(m) * y.columns(dim - s, s)),
            );
            let mut swap = DMatrix::zeros(2 * s, 2 * s);
            swap.view_mut((0, s), (s, s)).fill_with_identity();
            swap.view_mut((s, 0), (s, s)).fill_with_identity();
            rhs = compress_sym(&SymLowRankFactor::new(c_next, swap)?, &rhs_rule)?;
            report.residual_ranks.push(rhs.rank());
            if rhs.rank() == 0 {
                converged = true;
            } else {
                next = Some(LowRankView::Sym(&rhs));
            }
        }
        observer.cycle(&CycleView {
            cycle: k,
            steps: m,
            rhs_rank: s,
            residual,
            solution: LowRankView::Sym(&x),
            next_rhs: next,
        });
        if converged {
            report.converged = true;
            break;
        }
    }

    let diag = x.middle_diagonal();
    let mixed = diag.iter().any(|&v| v > 0.0) && diag.iter().any(|&v| v < 0.0);
    let project = match cfg.definite_projection {
        DefiniteProjection::Never => false,
        DefiniteProjection::Auto => mixed,
        DefiniteProjection::Always => true,
    };
    if project {
        x = definite_project(&x)?;
        report.definite_projection = true;
    }

    report.solution_rank = x.rank();
    report.op_a = counter.into();
    report.residual_bound = Some(eval_residual_bound_split(
        cfg.tol_res,
        report.restarts,
        tols.solution,
        tols.residual,
        norm_a,
        norm_a,
    ));
    report.wall_time_s = clock.elapsed_secs();
    Ok((x, report))
}
