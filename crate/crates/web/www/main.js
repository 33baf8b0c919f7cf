import init, { run_lyapunov_laplacian, run_sylvester_convdiff, memory_sweep } from "./pkg/restart_ksm_web.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };

function params() {
  return {
    grid: Number($("grid").value),
    s: Number($("s").value),
    memmax: Number($("memmax").value),
    tol: Number($("tol").value),
    seed: Number($("seed").value),
  };
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

// Relative residual on a log scale, cycle starts as vertical lines.
function drawHistory(run, tol) {
  const cv = $("history");
  const ctx = cv.getContext("2d");
  const [w, h, pad] = [cv.width, cv.height, 40];
  axes(ctx, w, h, pad);
  const hist = run.relative_history;
  if (hist.length === 0) return;
  const lo = Math.floor(Math.log10(Math.min(tol, ...hist))) - 1;
  const hi = Math.max(0, Math.ceil(Math.log10(Math.max(...hist))));
  const x = (i) => pad + (i / Math.max(1, hist.length)) * (w - 2 * pad);
  const y = (v) => h - pad - ((Math.log10(Math.max(v, 1e-300)) - lo) / (hi - lo)) * (h - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  for (let e = lo; e <= hi; e += 2) {
    ctx.fillText(`1e${e}`, 2, y(10 ** e) + 4);
  }
  ctx.strokeStyle = "#ddd";
  for (const start of run.cycle_starts) {
    ctx.beginPath();
    ctx.moveTo(x(start - 1), pad);
    ctx.lineTo(x(start - 1), h - pad);
    ctx.stroke();
  }
  ctx.strokeStyle = "#c33";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(pad, y(tol));
  ctx.lineTo(w - pad, y(tol));
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  hist.forEach((v, i) => (i === 0 ? ctx.moveTo(x(i + 1), y(v)) : ctx.lineTo(x(i + 1), y(v))));
  ctx.stroke();
  ctx.fillStyle = "#222";
  ctx.fillText("relative residual per iteration (grey: restarts)", pad + 4, pad - 8);
}

// Residual and solution ranks per cycle.
function drawRanks(run) {
  const cv = $("ranks");
  const ctx = cv.getContext("2d");
  const [w, h, pad] = [cv.width, cv.height, 40];
  axes(ctx, w, h, pad);
  const series = [
    [run.solution_ranks, "#1f5fbf", "solution rank"],
    [run.residual_ranks, "#d98a00", "residual rank"],
  ];
  const top = Math.max(1, ...run.solution_ranks, ...run.residual_ranks);
  const cycles = Math.max(1, run.solution_ranks.length);
  const x = (k) => pad + ((k + 0.5) / cycles) * (w - 2 * pad);
  const y = (v) => h - pad - (v / top) * (h - 2 * pad);
  ctx.font = "11px sans-serif";
  ctx.fillStyle = "#555";
  ctx.fillText(String(top), 8, y(top) + 4);
  series.forEach(([data, color, label], j) => {
    ctx.strokeStyle = color;
    ctx.fillStyle = color;
    ctx.beginPath();
    data.forEach((v, k) => (k === 0 ? ctx.moveTo(x(k), y(v)) : ctx.lineTo(x(k), y(v))));
    ctx.stroke();
    data.forEach((v, k) => ctx.fillRect(x(k) - 2, y(v) - 2, 4, 4));
    ctx.fillText(label, pad + 4 + 110 * j, pad - 8);
  });
}

function drawSweep(points) {
  const cv = $("ranks");
  const ctx = cv.getContext("2d");
  const [w, h, pad] = [cv.width, cv.height, 40];
  axes(ctx, w, h, pad);
  const ok = points.filter((p) => p.error === null);
  const top = Math.max(1, ...ok.map((p) => p.iterations));
  const bw = (w - 2 * pad) / points.length;
  ctx.font = "11px sans-serif";
  points.forEach((p, i) => {
    const x0 = pad + i * bw + 4;
    ctx.fillStyle = p.converged ? "#1f5fbf" : "#bbb";
    const bh = (p.iterations / top) * (h - 2 * pad);
    ctx.fillRect(x0, h - pad - bh, bw - 8, bh);
    ctx.fillStyle = "#222";
    ctx.fillText(String(p.memmax), x0, h - pad + 14);
    ctx.fillText(p.error ? "budget" : `${p.iterations}/${p.restarts}`, x0, h - pad - bh - 4);
  });
  ctx.fillText("iterations / restarts per memmax", pad + 4, pad - 8);
}

function summary(name, run, ms) {
  return `${name}: n = ${run.n}, ${run.converged ? "converged" : "NOT converged"} after ${run.iterations} iterations, ` +
    `${run.restarts} restarts, rank ${run.rank}, ${run.matvecs} matvecs in ${run.a_calls} operator calls, ` +
    `peak ${run.peak_columns} columns, ${ms.toFixed(0)} ms`;
}

function guarded(fn) {
  return () => {
    status("running...");
    // Let the status repaint before the blocking call.
    setTimeout(() => {
      try {
        fn();
      } catch (e) {
        status(`error: ${e}`);
      }
    }, 20);
  };
}

await init();
status("ready");

$("lyap").onclick = guarded(() => {
  const p = params();
  const t0 = performance.now();
  const run = JSON.parse(run_lyapunov_laplacian(p.grid, p.s, p.memmax, p.tol, p.seed));
  status(summary("Lyapunov", run, performance.now() - t0));
  drawHistory(run, p.tol);
  drawRanks(run);
});

$("sylv").onclick = guarded(() => {
  const p = params();
  const grid = Math.min(p.grid, 20);
  const t0 = performance.now();
  const run = JSON.parse(run_sylvester_convdiff(grid, p.s, Math.max(p.memmax, 4 * p.s), p.tol, p.seed));
  status(summary(`Sylvester (grid ${grid})`, run, performance.now() - t0));
  drawHistory(run, p.tol);
  drawRanks(run);
});

$("sweep").onclick = guarded(() => {
  const p = params();
  const budgets = [1, 1.5, 2, 3, 4].map((f) => Math.round(f * p.memmax / 2) * 2);
  const t0 = performance.now();
  const points = JSON.parse(memory_sweep(true, p.grid, p.s, new Uint32Array(budgets), p.tol, p.seed));
  status(`Lyapunov sweep over memmax = ${budgets.join(", ")} in ${(performance.now() - t0).toFixed(0)} ms`);
  drawSweep(points);
});
