use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use restart_ksm::mtx::{write_dense, write_matrix_market};
use restart_ksm_cli::{
    build_operators, build_problem, dense_residual, report_json, run_solver, write_compare_csv,
    write_history, CompareRow, ProblemArgs, SolverArgs, SolverId, EXIT_CONVERGED, EXIT_ERROR,
    EXIT_NOT_CONVERGED,
};

#[derive(Parser)]
#[command(
    name = "rksm",
    version,
    about = "Low-rank solvers for large Sylvester and Lyapunov equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the operator(s) of a test problem as Matrix Market files.
    Gen {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Output path for A; B (convdiff3d) goes next to it with a `_B` suffix.
        #[arg(long, default_value = "A.mtx")]
        out: PathBuf,
        /// Also write the random right-hand side as `<prefix>_C.txt` (and `_D.txt`).
        #[arg(long)]
        rhs_out: Option<PathBuf>,
    },
    /// Run one solver and write a JSON report.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver_args: SolverArgs,
        #[arg(long, value_enum, default_value = "restarted-lyap")]
        solver: SolverId,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Prefix of the `.dat` history files.
        #[arg(long)]
        history_out: Option<PathBuf>,
    },
    /// Run several solvers on one problem and tabulate them as CSV.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver_args: SolverArgs,
        /// Comma-separated solver list.
        #[arg(long, value_enum, value_delimiter = ',')]
        solvers: Vec<SolverId>,
        /// CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen {
            problem,
            out,
            rhs_out,
        } => gen(&problem, &out, rhs_out.as_ref()),
        Command::Solve {
            problem,
            solver_args,
            solver,
            out,
            history_out,
        } => solve(
            &problem,
            &solver_args,
            solver,
            out.as_ref(),
            history_out.as_ref(),
        ),
        Command::Compare {
            problem,
            solver_args,
            solvers,
            out,
        } => compare(&problem, &solver_args, &solvers, out.as_ref()),
    }
}

fn gen(args: &ProblemArgs, out: &PathBuf, rhs_out: Option<&PathBuf>) -> Result<i32> {
    let (_, a, b) = build_operators(args)?;
    write_matrix_market(&a, out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "wrote {} ({n}x{n}, {} nonzeros)",
        out.display(),
        a.nnz(),
        n = a.dim()
    );
    if let Some(b) = &b {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let path = out.with_file_name(format!("{stem}_B.mtx"));
        write_matrix_market(b, &path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
    }
    if let Some(prefix) = rhs_out {
        let problem = build_problem(args)?;
        let base = prefix.display().to_string();
        write_dense(&problem.c, format!("{base}_C.txt"))?;
        if let Some(d) = &problem.d {
            write_dense(d, format!("{base}_D.txt"))?;
        }
    }
    Ok(EXIT_CONVERGED)
}

fn solve(
    args: &ProblemArgs,
    solver_args: &SolverArgs,
    solver: SolverId,
    out: Option<&PathBuf>,
    history_out: Option<&PathBuf>,
) -> Result<i32> {
    let problem = build_problem(args)?;
    if solver_args.verify && problem.n() > restart_ksm_cli::VERIFY_MAX_N {
        bail!(
            "--verify is limited to n <= {}, got n = {}",
            restart_ksm_cli::VERIFY_MAX_N,
            problem.n()
        );
    }
    let outcome = run_solver(solver, &problem, solver_args)?;
    let Some(mut report) = outcome.report else {
        eprintln!(
            "{}: not converged: {}",
            solver.name(),
            outcome.failure.unwrap_or_default()
        );
        return Ok(EXIT_NOT_CONVERGED);
    };
    if solver_args.verify {
        let x = outcome
            .solution
            .as_ref()
            .expect("solution accompanies a report")
            .to_dense();
        report.explicit_residual = Some(dense_residual(&problem, &x, solver_args.norm.into())?);
    }
    let json = report_json(solver, &problem, solver_args.tol_res, &report)?;
    match out {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{json}"),
    }
    if let Some(prefix) = history_out {
        write_history(prefix, &report)?;
    }
    eprintln!(
        "{}: {} after {} iterations, {} restarts, rank {}, relative residual {:.3e}",
        solver.name(),
        if report.converged {
            "converged"
        } else {
            "not converged"
        },
        report.iterations,
        report.restarts,
        report.solution_rank,
        report.final_relative_residual
    );
    Ok(if report.converged {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn compare(
    args: &ProblemArgs,
    solver_args: &SolverArgs,
    solvers: &[SolverId],
    out: Option<&PathBuf>,
) -> Result<i32> {
    if solvers.is_empty() {
        bail!("--solvers needs at least one solver");
    }
    let problem = build_problem(args)?;
    let mut rows = Vec::with_capacity(solvers.len());
    for &solver in solvers {
        let outcome = run_solver(solver, &problem, solver_args)?;
        rows.push(CompareRow::from_outcome(solver, &outcome));
    }
    match out {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_compare_csv(&rows, file)?;
        }
        None => write_compare_csv(&rows, io::stdout().lock())?,
    }
    Ok(if rows.iter().all(|r| r.converged) {
        EXIT_CONVERGED
    } else {
        EXIT_NOT_CONVERGED
    })
}
