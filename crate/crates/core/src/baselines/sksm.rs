use nalgebra::DMatrix;

use super::{truncated_eig, DEFAULT_RANK_TOL};
use crate::compress::{NormKind, SymLowRankFactor};
use crate::dense_eq::solve_lyapunov_sym;
use crate::error::BaselineError;
use crate::linalg::{norm2, qr_economy};
use crate::problems::outer_norm;
use crate::report::SolveReport;
use crate::restart::lowrank_residual_lyap;
use crate::sparse::{OpCounter, SparseOperator};
use crate::timing::Stopwatch;

#[derive(Debug, Clone, PartialEq)]
pub struct SksmConfig {
    /// Absolute residual tolerance.
    pub tol_res: f64,
    pub max_m: usize,
    /// Form the true residual after pass 2 and fail on a large mismatch.
    pub verify: bool,
    pub rank_tol: f64,
    pub norm: NormKind,
}

impl SksmConfig {
    pub fn new(tol_res: f64, max_m: usize) -> Self {
        Self {
            tol_res,
            max_m,
            verify: false,
            rank_tol: DEFAULT_RANK_TOL,
            norm: NormKind::Frobenius,
        }
    }
}

/// Block Lanczos coefficients: `A U_j = U_{j−1} β_jᵀ + U_j α_j + U_{j+1} β_{j+1}`.
struct Lanczos {
    alpha: Vec<DMatrix<f64>>,
    /// `beta[j]` couples block `j+2` to block `j+1` (0-based storage).
    beta: Vec<DMatrix<f64>>,
}

impl Lanczos {
    fn tridiagonal(&self, m: usize) -> DMatrix<f64> {
        let s = self.alpha[0].nrows();
        let mut t = DMatrix::zeros(m * s, m * s);
        for j in 0..m {
            t.view_mut((j * s, j * s), (s, s)).copy_from(&self.alpha[j]);
            if j + 1 < m {
                t.view_mut(((j + 1) * s, j * s), (s, s))
                    .copy_from(&self.beta[j]);
                t.view_mut((j * s, (j + 1) * s), (s, s))
                    .copy_from(&self.beta[j].transpose());
            }
        }
        t
    }
}

/// Regenerates `U_1, …, U_m` from the stored coefficients and hands each
/// block to `visit`. Costs `m − 1` operator applications.
fn regenerate(
    a: &SparseOperator,
    u1: &DMatrix<f64>,
    lz: &Lanczos,
    m: usize,
    counter: &mut OpCounter,
    mut visit: impl FnMut(usize, &DMatrix<f64>),
) -> Result<(), BaselineError> {
    let s = u1.ncols();
    let mut prev = DMatrix::zeros(u1.nrows(), s);
    let mut cur = u1.clone();
    for j in 0..m {
        visit(j, &cur);
        if j + 1 == m {
            break;
        }
        let mut w = a.spmm(&cur, counter)?;
        if j > 0 {
            w -= &prev * lz.beta[j - 1].transpose();
        }
        w -= &cur * &lz.alpha[j];
        // U_{j+1} = W β⁻¹, i.e. βᵀ U_{j+1}ᵀ = Wᵀ.
        let next_t = lz.beta[j].tr_solve_upper_triangular(&w.transpose()).ok_or(
            BaselineError::LossOfOrthogonality {
                cheap: f64::NAN,
                explicit: f64::NAN,
            },
        )?;
        prev = cur;
        cur = next_t.transpose();
    }
    Ok(())
}

/// Lyapunov solver for symmetric `A` by block Lanczos with a two-pass
/// strategy: pass 1 keeps three blocks and the coefficients, pass 2
/// rebuilds the basis to assemble the solution factor. About `2m` operator
/// applications for `m` iterations.
pub fn sksm_two_pass(
    a: &SparseOperator,
    c: &DMatrix<f64>,
    cfg: &SksmConfig,
) -> Result<(SymLowRankFactor, SolveReport), BaselineError> {
    let clock = Stopwatch::start();
    if !a.is_symmetric() {
        return Err(BaselineError::NotSymmetric);
    }
    if c.nrows() != a.dim() || c.ncols() == 0 || c.ncols() > c.nrows() {
        return Err(BaselineError::DimensionMismatch(format!(
            "A is {0}x{0}, C {1}x{2}",
            a.dim(),
            c.nrows(),
            c.ncols()
        )));
    }
    if !(cfg.tol_res > 0.0) || cfg.max_m == 0 {
        return Err(BaselineError::InvalidConfig(
            "tol_res and max_m must be positive".into(),
        ));
    }
    let s = c.ncols();
    let mut report = SolveReport::new("sksm-two-pass", cfg.norm, cfg.tol_res, outer_norm(c, c));
    let mut counter = OpCounter::new();
    let (u1, r0) = qr_economy(c)?;
    let mut lz = Lanczos {
        alpha: Vec::new(),
        beta: Vec::new(),
    };

    let (mut prev, mut cur) = (DMatrix::zeros(c.nrows(), s), u1.clone());
    let mut y = DMatrix::zeros(0, 0);
    let mut m = 0;
    let mut converged = false;
    while m < cfg.max_m {
        let mut w = a.spmm(&cur, &mut counter)?;
        if m > 0 {
            w -= &prev * lz.beta[m - 1].transpose();
        }
        let mut alpha = cur.tr_mul(&w);
        w -= &cur * &alpha;
        let fix = cur.tr_mul(&w);
        w -= &cur * &fix;
        alpha += fix;
        let (next, beta) = qr_economy(&w)?;
        lz.alpha.push((&alpha + alpha.transpose()) * 0.5);
        lz.beta.push(beta);
        m += 1;

        let t = lz.tridiagonal(m);
        let mut f = DMatrix::zeros(m * s, m * s);
        f.view_mut((0, 0), (s, s))
            .copy_from(&(&r0 * r0.transpose()));
        y = solve_lyapunov_sym(&t, &f)?;
        let p = &lz.beta[m - 1] * y.rows((m - 1) * s, s);
        let res = match cfg.norm {
            NormKind::Frobenius => std::f64::consts::SQRT_2 * p.norm(),
            NormKind::Spectral => norm2(&p)?,
        };
        report.push_residual(res);
        report.peak_live_columns = report.peak_live_columns.max(3 * s);
        if res <= cfg.tol_res {
            converged = true;
            break;
        }
        prev = cur;
        cur = next;
    }
    if !converged {
        return Err(BaselineError::MaxIterations(m));
    }

    let (w, lambda) = truncated_eig(&y, cfg.rank_tol)?;
    let mut basis = DMatrix::zeros(c.nrows(), w.ncols());
    regenerate(a, &u1, &lz, m, &mut counter, |j, u| {
        basis += u * w.rows(j * s, s);
    })?;
    let x = SymLowRankFactor::new(basis, DMatrix::from_diagonal(&lambda))?;

    report.converged = true;
    report.solution_rank = x.rank();
    report.op_a = counter.into();
    if cfg.verify {
        let rhs = SymLowRankFactor::new(c.clone(), DMatrix::identity(s, s))?;
        let explicit = lowrank_residual_lyap(a, &x, &rhs, cfg.norm)?;
        report.explicit_residual = Some(explicit);
        if explicit > 10.0 * cfg.tol_res.max(report.final_residual) {
            return Err(BaselineError::LossOfOrthogonality {
                cheap: report.final_residual,
                explicit,
            });
        }
    }
    report.wall_time_s = clock.elapsed_secs();
    Ok((x, report))
}
