//! Problem setup, solver dispatch and output writers behind the `rksm`
//! binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use restart_ksm::baselines::{
    eksm_lyap, eksm_sylv, sksm_two_pass, EksmConfig, InnerSolverConfig, SksmConfig,
    DEFAULT_INNER_TOL,
};
use restart_ksm::compress::{LowRankFactorPair, NormKind, SymLowRankFactor};
use restart_ksm::error::BaselineError;
use restart_ksm::mtx::{read_dense, read_matrix_market};
use restart_ksm::problems::{
    convdiff_3d, laplacian_2d, outer_norm, random_rhs, random_rhs_pair, ConvectionField,
    ProblemKind, ProblemSpec, RhsSpec, CONVDIFF_EPSILON,
};
use restart_ksm::report::SolveReport;
use restart_ksm::restart::{
    restarted_lyap, restarted_sylv, DefiniteProjection, SolverConfig, DEFAULT_MAX_RESTARTS,
    DEFAULT_TOL_RES,
};
use restart_ksm::sparse::SparseOperator;
use serde::Serialize;

/// Largest dimension for which `--verify` forms dense residuals.
pub const VERIFY_MAX_N: usize = 2000;

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverId {
    RestartedSylv,
    RestartedLyap,
    EksmBcg,
    EksmBgmres,
    SksmTwoPass,
}

impl SolverId {
    pub fn name(self) -> &'static str {
        match self {
            SolverId::RestartedSylv => "restarted-sylv",
            SolverId::RestartedLyap => "restarted-lyap",
            SolverId::EksmBcg => "eksm-bcg",
            SolverId::EksmBgmres => "eksm-bgmres",
            SolverId::SksmTwoPass => "sksm-two-pass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Laplacian2d,
    Convdiff3d,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldArg {
    #[value(name = "wA")]
    WA,
    #[value(name = "wB")]
    WB,
    None,
}

impl From<FieldArg> for ConvectionField {
    fn from(f: FieldArg) -> Self {
        match f {
            FieldArg::WA => ConvectionField::WA,
            FieldArg::WB => ConvectionField::WB,
            FieldArg::None => ConvectionField::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    #[value(name = "fro")]
    Fro,
    #[value(name = "2")]
    Two,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Fro => NormKind::Frobenius,
            NormArg::Two => NormKind::Spectral,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "laplacian2d")]
    pub problem: ProblemArg,
    /// Interior grid points per direction.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Convection field of `A` (convdiff3d).
    #[arg(long, value_enum, default_value = "wA")]
    pub field: FieldArg,
    /// Convection field of `B` (convdiff3d).
    #[arg(long, value_enum, default_value = "wB")]
    pub field_b: FieldArg,
    #[arg(long, default_value_t = CONVDIFF_EPSILON)]
    pub epsilon: f64,
    /// Right-hand-side width.
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Scale the right-hand side to unit Frobenius norm.
    #[arg(long)]
    pub normalize: bool,
    /// Matrix Market file for `A` (file problems).
    #[arg(long)]
    pub matrix_a: Option<PathBuf>,
    /// Matrix Market file for `B`; omit for a Lyapunov equation.
    #[arg(long)]
    pub matrix_b: Option<PathBuf>,
    /// Dense text file for `C`; a random block is drawn when omitted.
    #[arg(long)]
    pub rhs_c: Option<PathBuf>,
    /// Dense text file for `D`; omit for a Lyapunov equation.
    #[arg(long)]
    pub rhs_d: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 96)]
    pub memmax: usize,
    /// Residual tolerance relative to the Frobenius norm of the right-hand side.
    #[arg(long, default_value_t = DEFAULT_TOL_RES)]
    pub tol_res: f64,
    /// Truncation tolerance (absolute), or `auto`.
    #[arg(long, default_value = "auto", value_parser = parse_tol_comp)]
    pub tol_comp: TolComp,
    #[arg(long, default_value_t = DEFAULT_MAX_RESTARTS)]
    pub max_restarts: usize,
    #[arg(long, value_enum, default_value = "fro")]
    pub norm: NormArg,
    /// Relative tolerance of the inner block CG/GMRES solves.
    #[arg(long, default_value_t = DEFAULT_INNER_TOL)]
    pub inner_tol: f64,
    /// Iteration cap of the two-pass Lanczos method.
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    /// Replace the final Lyapunov solution by its nearest semidefinite matrix.
    #[arg(long)]
    pub psd_project: bool,
    /// Form the true residual densely (n <= 2000) and record it.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TolComp {
    Auto,
    Fixed(f64),
}

fn parse_tol_comp(s: &str) -> Result<TolComp, String> {
    if s == "auto" {
        return Ok(TolComp::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(TolComp::Fixed(v)),
        _ => Err(format!("expected a positive number or `auto`, got `{s}`")),
    }
}

/// Coefficients of `A X + X B + C Dᵀ = 0`. `b == None` and `d == None`
/// mean the Lyapunov form `B = Aᵀ`, `D = C`.
pub struct Problem {
    pub spec: ProblemSpec,
    pub a: SparseOperator,
    pub b: Option<SparseOperator>,
    pub c: DMatrix<f64>,
    pub d: Option<DMatrix<f64>>,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.a.dim()
    }

    pub fn is_lyapunov(&self) -> bool {
        self.b.is_none() && self.d.is_none()
    }

    pub fn rhs_norm(&self) -> f64 {
        outer_norm(&self.c, self.d.as_ref().unwrap_or(&self.c))
    }

    pub fn b_or_transpose(&self) -> SparseOperator {
        self.b.clone().unwrap_or_else(|| self.a.transpose())
    }
}

pub fn build_operators(
    args: &ProblemArgs,
) -> Result<(ProblemSpec, SparseOperator, Option<SparseOperator>)> {
    let kind = match args.problem {
        ProblemArg::Laplacian2d => ProblemKind::Laplacian2d,
        ProblemArg::Convdiff3d => ProblemKind::Convdiff3d,
        ProblemArg::File => ProblemKind::File,
    };
    let rhs = match &args.rhs_c {
        Some(c) => RhsSpec::Files {
            c: c.display().to_string(),
            d: args.rhs_d.as_ref().map(|d| d.display().to_string()),
        },
        None => RhsSpec::Random {
            s: args.s,
            seed: args.seed,
            normalize: args.normalize,
        },
    };
    let spec = ProblemSpec {
        kind,
        n_g: args.n,
        epsilon: args.epsilon,
        field: args.field.into(),
        rhs,
    };
    spec.validate().map_err(anyhow::Error::msg)?;
    let (a, b) = match kind {
        ProblemKind::Laplacian2d => (laplacian_2d(args.n), None),
        ProblemKind::Convdiff3d => (
            convdiff_3d(args.n, args.epsilon, args.field.into()),
            Some(convdiff_3d(args.n, args.epsilon, args.field_b.into())),
        ),
        ProblemKind::File => {
            let path = args
                .matrix_a
                .as_ref()
                .context("--problem file needs --matrix-a")?;
            let a =
                read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?;
            let b = match &args.matrix_b {
                Some(p) => Some(
                    read_matrix_market(p).with_context(|| format!("reading {}", p.display()))?,
                ),
                None => None,
            };
            (a, b)
        }
    };
    Ok((spec, a, b))
}

pub fn build_problem(args: &ProblemArgs) -> Result<Problem> {
    let (spec, a, b) = build_operators(args)?;
    let n = a.dim();
    if let Some(b) = &b {
        if b.dim() != n {
            bail!("A is {n}x{n} but B is {m}x{m}", m = b.dim());
        }
    }
    let (c, d) = match &args.rhs_c {
        Some(path) => {
            let c = read_dense(path).with_context(|| format!("reading {}", path.display()))?;
            let d = match &args.rhs_d {
                Some(p) => Some(read_dense(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            (c, d)
        }
        None if b.is_some() => {
            let (c, d) = random_rhs_pair(n, args.s, args.seed, args.normalize);
            (c, Some(d))
        }
        None => (random_rhs(n, args.s, args.seed, args.normalize), None),
    };
    if c.nrows() != n {
        bail!("C has {} rows, expected {n}", c.nrows());
    }
    if let Some(d) = &d {
        if d.shape() != c.shape() {
            bail!(
                "C is {}x{} but D is {}x{}",
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            );
        }
    }
    Ok(Problem { spec, a, b, c, d })
}

/// Solution in whichever factored form the solver produced.
pub enum Solution {
    Pair(LowRankFactorPair),
    Sym(SymLowRankFactor),
}

impl Solution {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Solution::Pair(p) => p.to_dense(),
            Solution::Sym(s) => s.to_dense(),
        }
    }
}

/// Outcome of one solver run. `report` is `None` when a comparison method
/// stopped with an error that amounts to non-convergence.
pub struct RunOutcome {
    pub solution: Option<Solution>,
    pub report: Option<SolveReport>,
    pub failure: Option<String>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.converged)
    }
}

pub fn check_compatibility(solver: SolverId, problem: &Problem) -> Result<()> {
    match solver {
        SolverId::RestartedLyap if !problem.is_lyapunov() => {
            bail!("restarted-lyap needs a Lyapunov equation (no B, no D)")
        }
        SolverId::SksmTwoPass if !problem.is_lyapunov() => {
            bail!("sksm-two-pass needs a Lyapunov equation (no B, no D)")
        }
        SolverId::SksmTwoPass if !problem.a.is_symmetric() => {
            bail!("sksm-two-pass needs a symmetric A")
        }
        _ => Ok(()),
    }
}

pub fn run_solver(solver: SolverId, problem: &Problem, args: &SolverArgs) -> Result<RunOutcome> {
    check_compatibility(solver, problem)?;
    let tol_abs = args.tol_res * problem.rhs_norm();
    let norm: NormKind = args.norm.into();
    let mut cfg = SolverConfig::new(args.memmax)
        .with_tol_res(tol_abs)
        .with_k_max(args.max_restarts)
        .with_norm(norm);
    if let TolComp::Fixed(t) = args.tol_comp {
        cfg = cfg.with_tol_comp(t);
    }
    if args.psd_project {
        cfg = cfg.with_definite_projection(DefiniteProjection::Always);
    }
    let d = problem.d.as_ref().unwrap_or(&problem.c);
    let baseline = |r: Result<(Solution, SolveReport), BaselineError>| -> Result<RunOutcome> {
        match r {
            Ok((x, rep)) => Ok(RunOutcome {
                solution: Some(x),
                report: Some(rep),
                failure: None,
            }),
            Err(e @ (BaselineError::MaxIterations(_) | BaselineError::MemoryExhausted { .. })) => {
                Ok(RunOutcome {
                    solution: None,
                    report: None,
                    failure: Some(e.to_string()),
                })
            }
            Err(e) => Err(e.into()),
        }
    };
    let inner = |gmres: bool| {
        let base = if gmres {
            InnerSolverConfig::gmres()
        } else {
            InnerSolverConfig::cg()
        };
        base.with_tol(args.inner_tol)
    };
    match solver {
        SolverId::RestartedSylv => {
            let (x, rep) =
                restarted_sylv(&problem.a, &problem.b_or_transpose(), &problem.c, d, &cfg)?;
            Ok(RunOutcome {
                solution: Some(Solution::Pair(x)),
                report: Some(rep),
                failure: None,
            })
        }
        SolverId::RestartedLyap => {
            let (x, rep) = restarted_lyap(&problem.a, &problem.c, &cfg)?;
            Ok(RunOutcome {
                solution: Some(Solution::Sym(x)),
                report: Some(rep),
                failure: None,
            })
        }
        SolverId::EksmBcg | SolverId::EksmBgmres => {
            let mut ecfg =
                EksmConfig::new(tol_abs, args.memmax, inner(solver == SolverId::EksmBgmres));
            ecfg.norm = norm;
            if problem.is_lyapunov() {
                baseline(
                    eksm_lyap(&problem.a, &problem.c, &ecfg).map(|(x, r)| (Solution::Sym(x), r)),
                )
            } else {
                let b = problem.b_or_transpose();
                baseline(
                    eksm_sylv(&problem.a, &b, &problem.c, d, &ecfg)
                        .map(|(x, r)| (Solution::Pair(x), r)),
                )
            }
        }
        SolverId::SksmTwoPass => {
            let mut scfg = SksmConfig::new(tol_abs, args.max_iter);
            scfg.norm = norm;
            scfg.verify = args.verify;
            baseline(
                sksm_two_pass(&problem.a, &problem.c, &scfg).map(|(x, r)| (Solution::Sym(x), r)),
            )
        }
    }
}

/// `‖A X + X B + C Dᵀ‖` with `X` formed densely.
pub fn dense_residual(problem: &Problem, x: &DMatrix<f64>, norm: NormKind) -> Result<f64> {
    let n = problem.n();
    if n > VERIFY_MAX_N {
        bail!("--verify forms dense n x n matrices and is limited to n <= {VERIFY_MAX_N}, got n = {n}");
    }
    let b = problem.b_or_transpose();
    let ax = problem.a.apply_uncounted(x);
    let xb = b.apply_transpose_uncounted(&x.transpose()).transpose();
    let d = problem.d.as_ref().unwrap_or(&problem.c);
    let r = ax + xb + &problem.c * d.transpose();
    Ok(norm.of(&r))
}

#[derive(Debug, Serialize)]
pub struct RunRecord<'a> {
    pub solver: &'static str,
    pub problem: &'a ProblemSpec,
    pub n: usize,
    pub s: usize,
    pub tol_res_relative: f64,
    pub report: &'a SolveReport,
}

pub fn report_json(
    solver: SolverId,
    problem: &Problem,
    tol_rel: f64,
    report: &SolveReport,
) -> Result<String> {
    let record = RunRecord {
        solver: solver.name(),
        problem: &problem.spec,
        n: problem.n(),
        s: problem.c.ncols(),
        tol_res_relative: tol_rel,
        report,
    };
    Ok(serde_json::to_string_pretty(&record)? + "\n")
}

fn write_pairs<T: std::fmt::Display>(
    path: &Path,
    rows: impl Iterator<Item = (usize, T)>,
) -> Result<()> {
    let mut out = String::new();
    for (i, v) in rows {
        out.push_str(&format!("{i} {v}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Two-column plot data: relative residual per iteration, cycle start
/// markers, and per-cycle residual and solution ranks.
pub fn write_history(prefix: &Path, report: &SolveReport) -> Result<Vec<PathBuf>> {
    let files = [
        with_suffix(prefix, "_residual_norms.dat"),
        with_suffix(prefix, "_cycle_markers.dat"),
        with_suffix(prefix, "_res_ranks.dat"),
        with_suffix(prefix, "_sol_ranks.dat"),
    ];
    let history = report.relative_history();
    write_pairs(
        &files[0],
        history
            .iter()
            .enumerate()
            .map(|(i, v)| (i + 1, format!("{v:.16e}"))),
    )?;
    write_pairs(
        &files[1],
        report.cycle_starts.iter().enumerate().map(|(k, v)| (k, *v)),
    )?;
    write_pairs(
        &files[2],
        report
            .residual_ranks
            .iter()
            .enumerate()
            .map(|(k, v)| (k, *v)),
    )?;
    write_pairs(
        &files[3],
        report
            .solution_ranks
            .iter()
            .enumerate()
            .map(|(k, v)| (k, *v)),
    )?;
    Ok(files.to_vec())
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub solver: &'static str,
    pub its: Option<usize>,
    pub restarts: Option<usize>,
    pub rank: Option<usize>,
    pub a_calls: Option<u64>,
    pub matvecs: Option<u64>,
    pub efficiency: Option<f64>,
    pub time_s: Option<f64>,
    pub converged: bool,
    pub rel_residual: Option<f64>,
    pub note: String,
}

impl CompareRow {
    pub fn from_outcome(solver: SolverId, outcome: &RunOutcome) -> Self {
        match &outcome.report {
            Some(r) => Self {
                solver: solver.name(),
                its: Some(r.iterations),
                restarts: Some(r.restarts),
                rank: Some(r.solution_rank),
                a_calls: Some(r.op_a.a_calls),
                matvecs: Some(r.op_a.matvecs),
                efficiency: Some(r.op_a.efficiency),
                time_s: Some(r.wall_time_s),
                converged: r.converged,
                rel_residual: Some(r.final_relative_residual),
                note: String::new(),
            },
            None => Self {
                solver: solver.name(),
                its: None,
                restarts: None,
                rank: None,
                a_calls: None,
                matvecs: None,
                efficiency: None,
                time_s: None,
                converged: false,
                rel_residual: None,
                note: outcome.failure.clone().unwrap_or_default(),
            },
        }
    }
}

pub fn write_compare_csv(rows: &[CompareRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
