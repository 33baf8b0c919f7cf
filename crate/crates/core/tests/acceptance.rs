//! Acceptance gate: one PASS/FAIL line per criterion.

use std::time::Instant;

use nalgebra::DMatrix;
use restart_ksm::baselines::{eksm_lyap, sksm_two_pass, EksmConfig, InnerSolverConfig, SksmConfig};
use restart_ksm::compress::{
    compress, compress_sym, psd_project, LowRankFactorPair, NormKind, SymLowRankFactor,
    TruncationRule,
};
use restart_ksm::dense_eq::kron_oracle;
use restart_ksm::error::SolveError;
use restart_ksm::linalg::{eig_sym, norm2, qr_economy};
use restart_ksm::problems::{
    convdiff_3d, laplacian_2d, outer_norm, random_rhs, random_rhs_pair, ConvectionField,
    CONVDIFF_EPSILON,
};
use restart_ksm::report::SolveReport;
use restart_ksm::restart::{
    eval_error_bound_normal, eval_residual_bound, lowrank_residual_lyap, lowrank_residual_sylv,
    restarted_lyap_observed, restarted_sylv, restarted_sylv_observed, CycleView, IterationView,
    SolveObserver, SolverConfig,
};
use restart_ksm::rng::NormalRng;
use restart_ksm::sparse::SparseOperator;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `Q diag-like(spectrum) Qᵀ` with random orthogonal `Q`; a few 2×2
/// rotation blocks give complex pairs. Returns the matrix and the smallest
/// real part of its spectrum.
fn normal_matrix(n: usize, rng: &mut NormalRng, sign: f64, complex: bool) -> (DMatrix<f64>, f64) {
    let q = qr_economy(&rng.matrix(n, n)).unwrap().0;
    let mut core = DMatrix::zeros(n, n);
    let mut min_re = f64::INFINITY;
    let mut i = 0;
    while i < n {
        let re = 1.0 + 4.0 * rng.uniform();
        min_re = min_re.min(re);
        if complex && i + 1 < n && i % 3 == 0 {
            let im = 2.0 * rng.uniform();
            core[(i, i)] = sign * re;
            core[(i + 1, i + 1)] = sign * re;
            core[(i, i + 1)] = -im;
            core[(i + 1, i)] = im;
            i += 2;
        } else {
            core[(i, i)] = sign * re;
            i += 1;
        }
    }
    (&q * core * q.transpose(), min_re)
}

/// Runs `solve` with a tight budget first; if the residual rank outgrows it,
/// reruns with `fallback`, which admits a residual of any rank `<= n`.
/// Returns the result and whether the fallback was needed.
fn with_budget<T>(
    tight: usize,
    fallback: usize,
    mut solve: impl FnMut(usize) -> Result<T, SolveError>,
) -> (Result<T, SolveError>, bool) {
    match solve(tight) {
        Err(SolveError::BudgetTooSmall { .. }) => (solve(fallback), true),
        other => (other, false),
    }
}

fn sparse(m: &DMatrix<f64>) -> SparseOperator {
    SparseOperator::from_dense(m).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = NormalRng::new(101);
    let mut worst_err = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut restarts = 0;
    let mut fallbacks = 0;
    let mut solver_time = 0.0;
    for inst in 0..50 {
        let n = 8 + (rng.uniform() * 23.0) as usize % 23;
        let s = 1 + inst % 3;
        let (ad, ra) = normal_matrix(n, &mut rng, 1.0, inst % 2 == 0);
        let (bd, rb) = normal_matrix(n, &mut rng, 1.0, inst % 2 == 1);
        let c = rng.matrix(n, s);
        let d = rng.matrix(n, s);
        let (a, b) = (sparse(&ad), sparse(&bd));
        let t = Instant::now();
        let (run, wide) = with_budget(2 * n + 2 * (inst % 4) * s, 6 * n, |memmax| {
            restarted_sylv(
                &a,
                &b,
                &c,
                &d,
                &SolverConfig::new(memmax)
                    .with_tol_res(1e-8)
                    .with_tol_comp(1e-12),
            )
        });
        solver_time += t.elapsed().as_secs_f64();
        fallbacks += wide as usize;
        let (x, rep) = match run {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("instance {inst} (n={n}, s={s}): {e}")),
        };
        if !rep.converged {
            return outcome(false, format!("instance {inst} did not converge"));
        }
        restarts += rep.restarts;
        let exact = kron_oracle(&ad, &bd, &(&c * d.transpose())).unwrap();
        let err = (x.to_dense() - exact).norm();
        let err_bound = eval_error_bound_normal(1e-8, rep.restarts, 1e-12, ra, rb).unwrap();
        let res = lowrank_residual_sylv(&a, &b, &x, &c, &d, NormKind::Frobenius).unwrap();
        let res_bound = eval_residual_bound(
            1e-8,
            rep.restarts,
            1e-12,
            norm2(&ad).unwrap(),
            norm2(&bd).unwrap(),
        );
        worst_err = worst_err.max(err / err_bound);
        worst_res = worst_res.max(res / res_bound);
    }
    outcome(
        worst_err <= 1.0 && worst_res <= 1.0 && solver_time < 10.0,
        format!(
            "50 instances ({fallbacks} on the wide budget), {restarts} restarts total, max err/bound {worst_err:.3}, max res/bound {worst_res:.3}, solver time {solver_time:.2}s"
        ),
    )
}

struct SpsdCheck {
    min_ratio: f64,
    cycles: usize,
}

impl SolveObserver for SpsdCheck {
    fn cycle(&mut self, view: &CycleView<'_>) {
        let x = view.solution.to_dense();
        let ev = eig_sym(&x).unwrap();
        let lo = ev.values.iter().copied().fold(f64::INFINITY, f64::min);
        self.min_ratio = self.min_ratio.min(lo);
        self.cycles += 1;
    }
}

fn criterion_2() -> Outcome {
    let mut rng = NormalRng::new(202);
    let mut worst_err = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut cycles = 0;
    let mut restarts = 0;
    let mut fallbacks = 0;
    let mut solver_time = 0.0;
    for inst in 0..50 {
        let n = 8 + (rng.uniform() * 23.0) as usize % 23;
        let s = 1 + inst % 3;
        let (ad, ra) = normal_matrix(n, &mut rng, -1.0, false);
        let ad = (&ad + ad.transpose()) * 0.5;
        let c = rng.matrix(n, s);
        let a = sparse(&ad);
        let mut check = SpsdCheck {
            min_ratio: f64::INFINITY,
            cycles: 0,
        };
        let t = Instant::now();
        let (run, wide) = with_budget((n / 2).max(4 * s) + (inst % 4) * s, 2 * n, |memmax| {
            check = SpsdCheck {
                min_ratio: f64::INFINITY,
                cycles: 0,
            };
            let cfg = SolverConfig::new(memmax)
                .with_tol_res(1e-8)
                .with_tol_comp(1e-12);
            restarted_lyap_observed(&a, &c, &cfg, &mut check)
        });
        solver_time += t.elapsed().as_secs_f64();
        fallbacks += wide as usize;
        restarts += run.as_ref().map(|r| r.1.restarts).unwrap_or(0);
        let (x, rep) = match run {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("instance {inst} (n={n}, s={s}): {e}")),
        };
        if !rep.converged {
            return outcome(false, format!("instance {inst} did not converge"));
        }
        cycles += check.cycles;
        min_eig = min_eig.min(check.min_ratio);
        let exact = kron_oracle(&ad, &ad, &(&c * c.transpose())).unwrap();
        let err = (x.to_dense() - exact).norm();
        let err_bound = eval_error_bound_normal(1e-8, rep.restarts, 1e-12, ra, ra).unwrap();
        let rhs = SymLowRankFactor::new(c.clone(), DMatrix::identity(s, s)).unwrap();
        let res = lowrank_residual_lyap(&a, &x, &rhs, NormKind::Frobenius).unwrap();
        let na = norm2(&ad).unwrap();
        let res_bound = eval_residual_bound(1e-8, rep.restarts, 1e-12, na, na);
        worst_err = worst_err.max(err / err_bound);
        worst_res = worst_res.max(res / res_bound);
    }
    outcome(
        worst_err <= 1.0 && worst_res <= 1.0 && min_eig >= -1e-10 && solver_time < 10.0,
        format!(
            "50 instances ({fallbacks} on the wide budget), {restarts} restarts, {cycles} cycles checked, min eigenvalue {min_eig:.2e}, max err/bound {worst_err:.3}, max res/bound {worst_res:.3}, solver time {solver_time:.2}s"
        ),
    )
}

/// Compares the cheap residual with the explicitly formed residual of the
/// current correction against the cycle's right-hand side.
struct CheapVsExplicit {
    a: DMatrix<f64>,
    /// `B` for Sylvester, `Aᵀ` for Lyapunov.
    b: DMatrix<f64>,
    norm: NormKind,
    worst: f64,
    checked: usize,
}

impl SolveObserver for CheapVsExplicit {
    fn iteration(&mut self, v: &IterationView<'_>) {
        let z = v.left_basis * v.y * v.right_basis.transpose();
        let rhs = v.rhs.to_dense();
        let r = &self.a * &z + &z * &self.b + &rhs;
        let explicit = self.norm.of(&r);
        let scale = self.norm.of(&rhs);
        self.worst = self.worst.max((v.residual - explicit).abs() / scale);
        self.checked += 1;
    }
}

fn criterion_3() -> Outcome {
    let mut rng = NormalRng::new(303);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for inst in 0..12 {
        let n = 20 + 40 * inst / 11;
        let s = 1 + inst % 3;
        let norm = if inst % 2 == 0 {
            NormKind::Frobenius
        } else {
            NormKind::Spectral
        };
        let (ad, _) = normal_matrix(n, &mut rng, 1.0, true);
        let mut bd = rng.matrix(n, n) * (0.5 / (n as f64).sqrt());
        for i in 0..n {
            bd[(i, i)] += 2.0;
        }
        let c = rng.matrix(n, s);
        let d = rng.matrix(n, s);
        let mut obs = CheapVsExplicit {
            a: ad.clone(),
            b: bd.clone(),
            norm,
            worst: 0.0,
            checked: 0,
        };
        let (a, b) = (sparse(&ad), sparse(&bd));
        let (run, _) = with_budget(8 * s, 6 * n, |memmax| {
            let cfg = SolverConfig::new(memmax)
                .with_tol_res(1e-5)
                .with_tol_comp(1e-10)
                .with_norm(norm);
            restarted_sylv_observed(&a, &b, &c, &d, &cfg, &mut obs)
        });
        if let Err(e) = run {
            return outcome(false, format!("sylvester instance {inst}: {e}"));
        }
        let (ld, _) = normal_matrix(n, &mut rng, -1.0, false);
        let ld = (&ld + ld.transpose()) * 0.5;
        let mut obs_l = CheapVsExplicit {
            a: ld.clone(),
            b: ld.transpose(),
            norm,
            worst: 0.0,
            checked: 0,
        };
        let l = sparse(&ld);
        let (run, _) = with_budget(4 * s, 2 * n, |memmax| {
            let cfg = SolverConfig::new(memmax)
                .with_tol_res(1e-5)
                .with_tol_comp(1e-10)
                .with_norm(norm);
            restarted_lyap_observed(&l, &c, &cfg, &mut obs_l)
        });
        if let Err(e) = run {
            return outcome(false, format!("lyapunov instance {inst}: {e}"));
        }
        worst = worst.max(obs.worst).max(obs_l.worst);
        checked += obs.checked + obs_l.checked;
    }
    outcome(
        worst <= 1e-9,
        format!("{checked} iterations, max |cheap - explicit| / ||rhs|| = {worst:.2e}"),
    )
}

/// Explicit residual of the accumulated solution against the original
/// equation, compared with the cheap residual of the last correction.
struct Telescoping {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    rhs: DMatrix<f64>,
    worst: f64,
    cycles: usize,
}

impl SolveObserver for Telescoping {
    fn cycle(&mut self, v: &CycleView<'_>) {
        let x = v.solution.to_dense();
        let r = &self.a * &x + &x * &self.b + &self.rhs;
        let scale = self.rhs.norm();
        self.worst = self.worst.max((r.norm() - v.residual).abs() / scale);
        self.cycles += 1;
    }
}

fn criterion_4() -> Outcome {
    let mut rng = NormalRng::new(404);
    let mut worst = 0.0f64;
    let mut cycles = 0;
    for inst in 0..10 {
        let n = 30 + 3 * inst;
        let s = 1 + inst % 2;
        let mut ad = rng.matrix(n, n) * (0.4 / (n as f64).sqrt());
        let mut bd = rng.matrix(n, n) * (0.4 / (n as f64).sqrt());
        for i in 0..n {
            ad[(i, i)] += 1.5;
            bd[(i, i)] += 1.0;
        }
        let c = rng.matrix(n, s);
        let d = rng.matrix(n, s);
        let mut obs = Telescoping {
            a: ad.clone(),
            b: bd.clone(),
            rhs: &c * d.transpose(),
            worst: 0.0,
            cycles: 0,
        };
        let (a, b) = (sparse(&ad), sparse(&bd));
        let (run, _) = with_budget(8 * s, 6 * n, |memmax| {
            let cfg = SolverConfig::new(memmax)
                .with_tol_res(1e-5)
                .with_tol_comp(1e-14);
            restarted_sylv_observed(&a, &b, &c, &d, &cfg, &mut obs)
        });
        if let Err(e) = run {
            return outcome(false, format!("sylvester instance {inst}: {e}"));
        }
        let (ld, _) = normal_matrix(n, &mut rng, -1.0, false);
        let ld = (&ld + ld.transpose()) * 0.5;
        let mut obs_l = Telescoping {
            a: ld.clone(),
            b: ld.clone(),
            rhs: &c * c.transpose(),
            worst: 0.0,
            cycles: 0,
        };
        let l = sparse(&ld);
        let (run, _) = with_budget(4 * s, 2 * n, |memmax| {
            let cfg = SolverConfig::new(memmax)
                .with_tol_res(1e-5)
                .with_tol_comp(1e-14);
            restarted_lyap_observed(&l, &c, &cfg, &mut obs_l)
        });
        if let Err(e) = run {
            return outcome(false, format!("lyapunov instance {inst}: {e}"));
        }
        worst = worst.max(obs.worst).max(obs_l.worst);
        cycles += obs.cycles + obs_l.cycles;
    }
    outcome(
        worst <= 1e-8,
        format!("{cycles} cycles, max relative gap {worst:.2e}"),
    )
}

fn decaying(rng: &mut NormalRng, n: usize, k: usize) -> DMatrix<f64> {
    let mut m = rng.matrix(n, k);
    for j in 0..k {
        m.column_mut(j).scale_mut(10f64.powf(-(j as f64) * 0.7));
    }
    m
}

fn criterion_5() -> Outcome {
    let mut rng = NormalRng::new(505);
    let mut worst_pair = 0.0f64;
    let mut worst_sym = 0.0f64;
    let mut worst_idem = 0.0f64;
    let mut worst_diag = 0.0f64;
    for case in 0..200 {
        let n = 10 + case % 25;
        let k = 1 + case % 9;
        let norm = if case % 2 == 0 {
            NormKind::Frobenius
        } else {
            NormKind::Spectral
        };
        let delta = 10f64.powf(-1.0 - 8.0 * rng.uniform());
        let rule = TruncationRule::new(delta, norm).unwrap();

        let pair =
            LowRankFactorPair::new(decaying(&mut rng, n, k), decaying(&mut rng, n, k)).unwrap();
        let out = compress(&pair, &rule).unwrap();
        worst_pair = worst_pair.max(norm.of(&(pair.to_dense() - out.to_dense())) / delta);
        let again = compress(&out, &rule).unwrap();
        let scale = out.to_dense().norm().max(f64::MIN_POSITIVE);
        let idem = (again.to_dense() - out.to_dense()).norm() / scale;
        worst_idem = worst_idem.max(if again.rank() == out.rank() {
            idem
        } else {
            f64::INFINITY
        });

        let basis = decaying(&mut rng, n, k);
        let mut mid = rng.matrix(k, k);
        mid = &mid + mid.transpose();
        let fac = SymLowRankFactor::new(basis, mid).unwrap();
        let sym = compress_sym(&fac, &rule).unwrap();
        worst_sym = worst_sym.max(norm.of(&(fac.to_dense() - sym.to_dense())) / delta);
        let r = sym.rank();
        let gram = sym.basis.tr_mul(&sym.basis) - DMatrix::identity(r, r);
        let offdiag = &sym.middle - DMatrix::from_diagonal(&sym.middle.diagonal());
        let proj = sym.basis.transpose() * fac.to_dense() * &sym.basis
            - DMatrix::from_diagonal(&sym.middle.diagonal());
        let scale = sym.middle.norm().max(1e-300);
        let diag_err = gram.norm().max(offdiag.norm() / scale);
        let diag_err = if r > 0 {
            diag_err.max(proj.norm() / scale)
        } else {
            diag_err
        };
        worst_diag = worst_diag.max(diag_err);
    }
    let tol = 1.0 + 1e-10;
    outcome(
        worst_pair <= tol && worst_sym <= tol && worst_idem <= 1e-12 && worst_diag <= 1e-12,
        format!(
            "200 cases each, error/delta max {worst_pair:.3} (compress) {worst_sym:.3} (compress_sym), idempotence {worst_idem:.1e}, eigen-diagonal defect {worst_diag:.1e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = NormalRng::new(606);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..100 {
        let n = 6 + case % 15;
        let s = 1 + case % 3;
        let (ad, _) = normal_matrix(n, &mut rng, -1.0, case % 2 == 0);
        let c = rng.matrix(n, s);
        let cc_t = &c * c.transpose();
        let x = kron_oracle(&ad, &ad.transpose(), &cc_t).unwrap();
        let x = (&x + x.transpose()) * 0.5;
        let e = rng.matrix(n, n) * (10f64.powf(-1.0 - 5.0 * rng.uniform()) * x.norm() / n as f64);
        let xt = &x + (&e + e.transpose()) * 0.5;
        let eig = eig_sym(&xt).unwrap();
        let fac = SymLowRankFactor::new(eig.vectors.clone(), DMatrix::from_diagonal(&eig.values))
            .unwrap();
        let xp = psd_project(&fac).unwrap().to_dense();
        let na = norm2(&ad).unwrap();
        for norm in [NormKind::Frobenius, NormKind::Spectral] {
            let dist = norm.of(&(&x - &xt));
            let lhs1 = norm.of(&(&x - &xp));
            let r = norm.of(&(&ad * &xt + &xt * ad.transpose() + &cc_t));
            let rp = norm.of(&(&ad * &xp + &xp * ad.transpose() + &cc_t));
            let slack = 1e-12 * (1.0 + x.norm() + r);
            worst = worst
                .max((lhs1 - slack) / (2.0 * dist))
                .max((rp - r - slack) / (2.0 * na * dist));
        }
    }
    outcome(
        worst <= 1.0,
        format!("100 instances x 2 norms, largest measured / bound ratio {worst:.3}"),
    )
}

struct Budget {
    memmax: usize,
    peak: usize,
    violations: usize,
}

impl SolveObserver for Budget {
    fn iteration(&mut self, v: &IterationView<'_>) {
        self.peak = self.peak.max(v.live_columns);
        if v.live_columns > self.memmax {
            self.violations += 1;
        }
    }
}

fn laplacian_run() -> (SymLowRankFactor, SolveReport, Budget, f64) {
    let a = laplacian_2d(100);
    let c = random_rhs(10_000, 3, 1, true);
    let cfg = SolverConfig::new(96).with_tol_res(1e-6 * outer_norm(&c, &c));
    let mut budget = Budget {
        memmax: 96,
        peak: 0,
        violations: 0,
    };
    let t = Instant::now();
    let (x, rep) = restarted_lyap_observed(&a, &c, &cfg, &mut budget).unwrap();
    (x, rep, budget, t.elapsed().as_secs_f64())
}

fn convdiff_run() -> (LowRankFactorPair, SolveReport, Budget, f64) {
    let a = convdiff_3d(25, CONVDIFF_EPSILON, ConvectionField::WA);
    let b = convdiff_3d(25, CONVDIFF_EPSILON, ConvectionField::WB);
    let (c, d) = random_rhs_pair(15_625, 3, 1, true);
    let cfg = SolverConfig::new(264).with_tol_res(1e-6 * outer_norm(&c, &d));
    let mut budget = Budget {
        memmax: 264,
        peak: 0,
        violations: 0,
    };
    let t = Instant::now();
    let (x, rep) = restarted_sylv_observed(&a, &b, &c, &d, &cfg, &mut budget).unwrap();
    (x, rep, budget, t.elapsed().as_secs_f64())
}

fn criterion_7(x: &SymLowRankFactor, rep: &SolveReport, secs: f64) -> Outcome {
    let pass = rep.converged
        && (15..=26).contains(&rep.restarts)
        && (130..=190).contains(&rep.iterations)
        && (45..=62).contains(&x.rank())
        && rep.op_a.a_calls as usize == rep.iterations
        && rep.op_a.efficiency >= 8.0
        && secs < 120.0;
    outcome(
        pass,
        format!(
            "restarts {}, iterations {}, rank {}, A-calls {}, matvecs {}, efficiency {:.2}, {:.1}s (reference 20 / 158 / 53 / 158 / 1845 / 11)",
            rep.restarts, rep.iterations, x.rank(), rep.op_a.a_calls, rep.op_a.matvecs, rep.op_a.efficiency, secs
        ),
    )
}

fn criterion_8() -> Outcome {
    let a = laplacian_2d(100);
    let c = random_rhs(10_000, 3, 1, true);
    let tol = 1e-6 * outer_norm(&c, &c);
    let t = Instant::now();
    let eksm = eksm_lyap(&a, &c, &EksmConfig::new(tol, 96, InnerSolverConfig::cg()));
    let t_eksm = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let sksm = sksm_two_pass(&a, &c, &SksmConfig::new(tol, 1000));
    let t_sksm = t.elapsed().as_secs_f64();
    match (eksm, sksm) {
        (Ok((xe, re)), Ok((xs, rs))) => {
            let calls = rs.op_a.a_calls as i64;
            let pass = (13..=17).contains(&re.iterations)
                && re.peak_live_columns <= 96
                && (re.op_a.efficiency - 3.0).abs() <= 0.5
                && t_eksm < 180.0
                && (130..=170).contains(&rs.iterations)
                && (calls - 2 * rs.iterations as i64).abs() <= 2
                && t_sksm < 180.0;
            outcome(
                pass,
                format!(
                    "eksm-bcg: {} its, dim {}, rank {}, efficiency {:.2}, {:.1}s (reference 15, 96, 56, 3); sksm: {} its, rank {}, A-calls {}, {:.1}s (reference 148, 65, 295)",
                    re.iterations, re.peak_live_columns, xe.rank(), re.op_a.efficiency, t_eksm,
                    rs.iterations, xs.rank(), calls, t_sksm
                ),
            )
        }
        (e, s) => outcome(false, format!("eksm: {:?}, sksm: {:?}", e.err(), s.err())),
    }
}

fn criterion_9(x: &LowRankFactorPair, rep: &SolveReport, secs: f64) -> Outcome {
    let calls_b = rep.op_b.map(|o| o.a_calls).unwrap_or(0);
    let pass = rep.converged
        && rep.restarts <= 4
        && (60..=110).contains(&rep.iterations)
        && (45..=70).contains(&x.rank())
        && rep.op_a.a_calls == calls_b
        && secs < 120.0;
    outcome(
        pass,
        format!(
            "restarts {}, iterations {}, rank {}, A-calls {} / {}, {:.1}s (reference 2 / 85 / 57)",
            rep.restarts,
            rep.iterations,
            x.rank(),
            rep.op_a.a_calls,
            calls_b,
            secs
        ),
    )
}

fn criterion_10(lap: &Budget, cd: &Budget) -> Outcome {
    outcome(
        lap.violations == 0 && cd.violations == 0 && lap.peak <= lap.memmax && cd.peak <= cd.memmax,
        format!(
            "peak live columns {} / {} (Laplacian), {} / {} (convection-diffusion)",
            lap.peak, lap.memmax, cd.peak, cd.memmax
        ),
    )
}

fn criterion_11(rep: &SolveReport) -> Outcome {
    let max = rep.residual_ranks.iter().copied().max().unwrap_or(0);
    outcome(
        max <= 90,
        format!(
            "max residual rank {max} over {} cycles",
            rep.residual_ranks.len()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters should not trigger the long runs.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let total = Instant::now();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!(
            "criterion {k:>2}: {} | {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((k, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    let (xl, rl, bl, tl) = laplacian_run();
    report(7, criterion_7(&xl, &rl, tl));
    report(8, criterion_8());
    let (xc, rc, bc, tc) = convdiff_run();
    report(9, criterion_9(&xc, &rc, tc));
    report(10, criterion_10(&bl, &bc));
    report(11, criterion_11(&rl));
    let failed: Vec<usize> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(k, _)| *k)
        .collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
