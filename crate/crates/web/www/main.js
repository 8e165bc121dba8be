import init, { simulate, ensemble, stoppingTimeBound } from "./pkg/mhk_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(el, fn) {
  el.classList.remove("err");
  try {
    fn();
  } catch (e) {
    el.classList.add("err");
    el.textContent = String(e.message ?? e);
  }
}

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(40, 10);
  ctx.lineTo(40, h - 20);
  ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function plotLines(canvas, series, labels) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  axes(ctx, w, h);
  const all = series.flat();
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
  const steps = series[0].length - 1 || 1;
  const x = (t) => 40 + (t / steps) * (w - 50);
  const y = (v) => h - 20 - ((v - lo) / (hi - lo)) * (h - 30);
  series.forEach((s, k) => {
    ctx.strokeStyle = `hsl(${(k * 137) % 360} 60% 45%)`;
    ctx.beginPath();
    s.forEach((v, t) => (t ? ctx.lineTo(x(t), y(v)) : ctx.moveTo(x(t), y(v))));
    ctx.stroke();
  });
  ctx.fillStyle = "#333";
  ctx.fillText(hi.toPrecision(3), 2, 14);
  ctx.fillText(lo.toPrecision(3), 2, h - 22);
  ctx.fillText(labels, w / 2 - 40, h - 4);
}

function runSimulation() {
  const out = $("sim-out");
  report(out, () => {
    const request = {
      opinions: $("sim-opinions").value.split(/[\s,]+/).filter(Boolean).map(Number),
      epsilon: num("sim-eps"),
      delta: num("sim-delta"),
      horizon: num("sim-horizon"),
      schedule: $("sim-schedule").value,
      alpha_hi: num("sim-alpha"),
      seed: num("sim-seed"),
    };
    const r = JSON.parse(simulate(JSON.stringify(request)));
    const n = request.opinions.length;
    const agents = Array.from({ length: n }, (_, i) => r.opinions.map((x) => x[i]));
    plotLines($("sim-plot"), agents, "opinions vs t");
    plotLines($("sim-energy"), [r.energy], "energy Z vs t");
    const fmt = (v) => (v === null ? "not reached" : v);
    out.textContent =
      `tau_delta: ${fmt(r.tau_delta)}\nfreeze: ${fmt(r.freeze_time)}\n` +
      `termination: ${fmt(r.termination_time)}\n` +
      `merges: ${r.merges.map(([t, i, j]) => `t=${t} (${i + 1},${j + 1})`).join(" ") || "none"}`;
  });
}

function runEnsemble() {
  const out = $("mc-out");
  report(out, () => {
    const request = {
      n: num("mc-n"), lo: num("mc-lo"), hi: num("mc-hi"),
      epsilon: num("mc-eps"), delta: num("mc-delta"), alpha_hi: num("mc-alpha"),
      runs: num("mc-runs"), horizon: num("mc-horizon"), seed: 1,
    };
    const r = JSON.parse(ensemble(JSON.stringify(request)));
    const taus = r.tau.filter((t) => t !== null);
    const canvas = $("mc-plot");
    const ctx = canvas.getContext("2d");
    const { width: w, height: h } = canvas;
    axes(ctx, w, h);
    if (taus.length) {
      const max = Math.max(...taus) + 1;
      const bins = Math.min(40, max);
      const counts = new Array(bins).fill(0);
      taus.forEach((t) => counts[Math.min(bins - 1, Math.floor((t / max) * bins))]++);
      const top = Math.max(...counts);
      const bw = (w - 50) / bins;
      ctx.fillStyle = "#4a7";
      counts.forEach((c, k) => {
        const bh = (c / top) * (h - 30);
        ctx.fillRect(40 + k * bw, h - 20 - bh, bw - 1, bh);
      });
      ctx.fillStyle = "#333";
      ctx.fillText(`0 .. ${max} steps`, w / 2 - 30, h - 4);
    }
    out.textContent =
      `mean tau_delta: ${r.mean_tau?.toFixed(3)} (standard error ${r.std_error?.toFixed(3)})\n` +
      `reached: ${(100 * r.reached_fraction).toFixed(1)}% of runs\n` +
      `bound: ${r.bound.toExponential(4)}, mean/bound = ${r.ratio?.toExponential(3)}`;
  });
}

function updateBound() {
  const out = $("b-out");
  report(out, () => {
    const b = stoppingTimeBound(num("b-n"), num("b-eps"), num("b-delta"), num("b-gamma"), num("b-p"));
    out.textContent = `E(tau_delta) <= ${b.toExponential(6)}`;
  });
}

await init();
$("sim-run").addEventListener("click", runSimulation);
$("mc-run").addEventListener("click", runEnsemble);
for (const id of ["b-n", "b-eps", "b-delta", "b-gamma", "b-p"]) $(id).addEventListener("input", updateBound);
runSimulation();
updateBound();
