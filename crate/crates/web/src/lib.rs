//! wasm-bindgen entry points for the browser demo. Each call returns a JSON
//! string; the page in `www/` draws it on a canvas.

use restart_ksm::problems::{
    convdiff_3d, laplacian_2d, outer_norm, random_rhs, random_rhs_pair, ConvectionField,
    CONVDIFF_EPSILON,
};
use restart_ksm::report::SolveReport;
use restart_ksm::restart::{restarted_lyap, restarted_sylv, PeakColumns, SolverConfig};
use restart_ksm::restart::{restarted_lyap_observed, restarted_sylv_observed};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Grids beyond these sizes make a browser tab unresponsive.
pub const MAX_GRID_2D: usize = 120;
pub const MAX_GRID_3D: usize = 26;

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub converged: bool,
    pub n: usize,
    pub iterations: usize,
    pub restarts: usize,
    pub rank: usize,
    pub a_calls: u64,
    pub matvecs: u64,
    pub peak_columns: usize,
    pub relative_history: Vec<f64>,
    pub cycle_starts: Vec<usize>,
    pub residual_ranks: Vec<usize>,
    pub solution_ranks: Vec<usize>,
}

impl RunSummary {
    fn new(n: usize, rep: &SolveReport, peak: usize) -> Self {
        Self {
            converged: rep.converged,
            n,
            iterations: rep.iterations,
            restarts: rep.restarts,
            rank: rep.solution_rank,
            a_calls: rep.op_a.a_calls,
            matvecs: rep.op_a.matvecs,
            peak_columns: peak,
            relative_history: rep.relative_history(),
            cycle_starts: rep.cycle_starts.clone(),
            residual_ranks: rep.residual_ranks.clone(),
            solution_ranks: rep.solution_ranks.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub memmax: usize,
    pub converged: bool,
    pub iterations: usize,
    pub restarts: usize,
    pub rank: usize,
    pub matvecs: u64,
    pub error: Option<String>,
}

fn check(n_g: usize, max: usize, s: usize, tol: f64) -> Result<(), String> {
    if !(2..=max).contains(&n_g) {
        return Err(format!("grid size must lie in 2..={max}, got {n_g}"));
    }
    if s == 0 {
        return Err("rhs width must be at least 1".into());
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(format!("relative tolerance must lie in (0, 1), got {tol}"));
    }
    Ok(())
}

/// Restarted Lyapunov solve on the 2D Laplacian with a normalized random
/// right-hand side.
pub fn lyapunov_laplacian(
    n_g: usize,
    s: usize,
    memmax: usize,
    tol: f64,
    seed: u64,
) -> Result<RunSummary, String> {
    check(n_g, MAX_GRID_2D, s, tol)?;
    let a = laplacian_2d(n_g);
    let c = random_rhs(a.dim(), s, seed, true);
    let cfg = SolverConfig::new(memmax).with_tol_res(tol * outer_norm(&c, &c));
    let mut peak = PeakColumns::default();
    let (_, rep) = restarted_lyap_observed(&a, &c, &cfg, &mut peak).map_err(|e| e.to_string())?;
    Ok(RunSummary::new(a.dim(), &rep, peak.0))
}

/// Restarted Sylvester solve on the 3D convection-diffusion pair.
pub fn sylvester_convdiff(
    n_g: usize,
    s: usize,
    memmax: usize,
    tol: f64,
    seed: u64,
) -> Result<RunSummary, String> {
    check(n_g, MAX_GRID_3D, s, tol)?;
    let a = convdiff_3d(n_g, CONVDIFF_EPSILON, ConvectionField::WA);
    let b = convdiff_3d(n_g, CONVDIFF_EPSILON, ConvectionField::WB);
    let (c, d) = random_rhs_pair(a.dim(), s, seed, true);
    let cfg = SolverConfig::new(memmax).with_tol_res(tol * outer_norm(&c, &d));
    let mut peak = PeakColumns::default();
    let (_, rep) =
        restarted_sylv_observed(&a, &b, &c, &d, &cfg, &mut peak).map_err(|e| e.to_string())?;
    Ok(RunSummary::new(a.dim(), &rep, peak.0))
}

/// Iterations, restarts and final rank as the memory budget varies.
/// `lyapunov` selects the Laplacian problem, otherwise convection-diffusion.
pub fn sweep(
    lyapunov: bool,
    n_g: usize,
    s: usize,
    memmaxes: &[usize],
    tol: f64,
    seed: u64,
) -> Result<Vec<SweepPoint>, String> {
    check(
        n_g,
        if lyapunov { MAX_GRID_2D } else { MAX_GRID_3D },
        s,
        tol,
    )?;
    let mut points = Vec::with_capacity(memmaxes.len());
    for &memmax in memmaxes {
        let run = if lyapunov {
            let a = laplacian_2d(n_g);
            let c = random_rhs(a.dim(), s, seed, true);
            let cfg = SolverConfig::new(memmax).with_tol_res(tol * outer_norm(&c, &c));
            restarted_lyap(&a, &c, &cfg).map(|(_, r)| r)
        } else {
            let a = convdiff_3d(n_g, CONVDIFF_EPSILON, ConvectionField::WA);
            let b = convdiff_3d(n_g, CONVDIFF_EPSILON, ConvectionField::WB);
            let (c, d) = random_rhs_pair(a.dim(), s, seed, true);
            let cfg = SolverConfig::new(memmax).with_tol_res(tol * outer_norm(&c, &d));
            restarted_sylv(&a, &b, &c, &d, &cfg).map(|(_, r)| r)
        };
        points.push(match run {
            Ok(r) => SweepPoint {
                memmax,
                converged: r.converged,
                iterations: r.iterations,
                restarts: r.restarts,
                rank: r.solution_rank,
                matvecs: r.op_a.matvecs,
                error: None,
            },
            Err(e) => SweepPoint {
                memmax,
                converged: false,
                iterations: 0,
                restarts: 0,
                rank: 0,
                matvecs: 0,
                error: Some(e.to_string()),
            },
        });
    }
    Ok(points)
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    let value = r.map_err(|e| JsValue::from_str(&e))?;
    serde_json::to_string(&value).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn run_lyapunov_laplacian(
    n_g: u32,
    s: u32,
    memmax: u32,
    tol: f64,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(lyapunov_laplacian(
        n_g as usize,
        s as usize,
        memmax as usize,
        tol,
        seed as u64,
    ))
}

#[wasm_bindgen]
pub fn run_sylvester_convdiff(
    n_g: u32,
    s: u32,
    memmax: u32,
    tol: f64,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(sylvester_convdiff(
        n_g as usize,
        s as usize,
        memmax as usize,
        tol,
        seed as u64,
    ))
}

#[wasm_bindgen]
pub fn memory_sweep(
    lyapunov: bool,
    n_g: u32,
    s: u32,
    memmaxes: Vec<u32>,
    tol: f64,
    seed: u32,
) -> Result<String, JsValue> {
    let list: Vec<usize> = memmaxes.into_iter().map(|m| m as usize).collect();
    to_js(sweep(
        lyapunov,
        n_g as usize,
        s as usize,
        &list,
        tol,
        seed as u64,
    ))
}
