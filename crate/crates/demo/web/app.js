import init, { simulate_following, learn_styles_demo, recognize_demo } from "./pkg/drivestyle_demo.js";

const STYLE_COLORS = ["#5ab0f7", "#f2705b", "#7ed491"];
const MUTED = "#8b94a3";
const GRID = "#222a36";

const $ = (id) => document.getElementById(id);

// ---------------------------------------------------------------------------
// Tiny canvas plotting helpers
// ---------------------------------------------------------------------------

function makeScale(values, lo, hi, pad = 0.07) {
  let min = Infinity, max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!isFinite(min)) { min = 0; max = 1; }
  if (max - min < 1e-9) { max = min + 1; }
  const span = max - min;
  min -= span * pad; max += span * pad;
  return (v) => lo + (v - min) / (max - min) * (hi - lo);
}

function clear(ctx, title) {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#10141b";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = GRID;
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  if (title) {
    ctx.fillStyle = MUTED;
    ctx.font = "12px system-ui";
    ctx.fillText(title, 10, 16);
  }
}

function plotLine(ctx, xs, ys, sx, sy, color, width = 1.6, dash = []) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.setLineDash(dash);
  ctx.beginPath();
  for (let i = 0; i < xs.length; i++) {
    const x = sx(xs[i]), y = sy(ys[i]);
    if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
  }
  ctx.stroke();
  ctx.setLineDash([]);
}

function axisLabels(ctx, xLabel, yLabel) {
  ctx.fillStyle = MUTED;
  ctx.font = "11px system-ui";
  ctx.fillText(xLabel, ctx.canvas.width - ctx.measureText(xLabel).width - 8, ctx.canvas.height - 8);
  ctx.fillText(yLabel, 10, 30);
}

// ---------------------------------------------------------------------------
// Panel 1: simulator
// ---------------------------------------------------------------------------

const simInputs = ["sim-v", "sim-t", "sim-d", "sim-a", "sim-b", "sim-g"];

function simRequest() {
  return {
    v_star: +$("sim-v").value,
    t_headway: +$("sim-t").value,
    d_min: +$("sim-d").value,
    a_max: +$("sim-a").value,
    b_comf: +$("sim-b").value,
    gap_factor: +$("sim-g").value,
    scenario: $("sim-scenario").value,
  };
}

function renderSim() {
  for (const id of simInputs) $(`${id}-out`).value = $(id).value;
  let resp;
  try {
    resp = JSON.parse(simulate_following(JSON.stringify(simRequest())));
  } catch (e) {
    $("sim-status").textContent = String(e);
    return;
  }
  $("sim-status").textContent = resp.collided
    ? "collision: the follower reached its leader"
    : "";
  $("sim-status").style.color = resp.collided ? "#f2705b" : MUTED;

  const speedCtx = $("sim-speed").getContext("2d");
  clear(speedCtx, "speed (m/s) vs time (s)");
  {
    const sx = makeScale(resp.t, 40, speedCtx.canvas.width - 10);
    const sy = makeScale([...resp.leader_speed, ...resp.follower_speed, 0], speedCtx.canvas.height - 22, 24);
    plotLine(speedCtx, resp.t, resp.leader_speed, sx, sy, MUTED);
    plotLine(speedCtx, resp.t, resp.follower_speed, sx, sy, STYLE_COLORS[0]);
    axisLabels(speedCtx, "t", "");
  }

  const gapCtx = $("sim-gap").getContext("2d");
  clear(gapCtx, "gap (m) vs time (s)");
  {
    const base = [...resp.gap, 0];
    if (resp.equilibrium_gap !== null) base.push(resp.equilibrium_gap);
    const sx = makeScale(resp.t, 40, gapCtx.canvas.width - 10);
    const sy = makeScale(base, gapCtx.canvas.height - 22, 24);
    if (resp.equilibrium_gap !== null) {
      plotLine(gapCtx, [resp.t[0], resp.t[resp.t.length - 1]],
        [resp.equilibrium_gap, resp.equilibrium_gap], sx, sy, MUTED, 1, [5, 4]);
    }
    plotLine(gapCtx, resp.t, resp.gap, sx, sy, resp.collided ? "#f2705b" : STYLE_COLORS[2]);
    axisLabels(gapCtx, "t", "");
  }
}

// ---------------------------------------------------------------------------
// Panel 2: offline learning
// ---------------------------------------------------------------------------

function renderLearnControls() {
  $("learn-n-out").value = $("learn-n").value;
  $("learn-noise-out").value = $("learn-noise").value;
  $("learn-seed-out").value = $("learn-seed").value;
}

function renderLearn() {
  renderLearnControls();
  $("learn-status").textContent = "learning…";
  // Let the status paint before the synchronous wasm call.
  requestAnimationFrame(() => setTimeout(() => {
    let resp;
    const started = performance.now();
    try {
      resp = JSON.parse(learn_styles_demo(JSON.stringify({
        seed: +$("learn-seed").value,
        n_pairs: +$("learn-n").value,
        noise_sigma: +$("learn-noise").value,
      })));
    } catch (e) {
      $("learn-status").textContent = String(e);
      return;
    }
    const ms = (performance.now() - started).toFixed(0);
    const acc = (resp.accumulated_kept * 100).toFixed(1);
    $("learn-status").textContent =
      `done in ${ms} ms — PC1+PC2 carry ${acc}% of variance, elbow suggests k = ${resp.elbow_suggestion ?? "?"}`;

    const ctx = $("learn-scatter").getContext("2d");
    clear(ctx, "pairs in the PC1-PC2 plane");
    const xs = resp.scatter.map((p) => p.pc1).concat(resp.centroids.map((c) => c[0]));
    const ys = resp.scatter.map((p) => p.pc2).concat(resp.centroids.map((c) => c[1]));
    const sx = makeScale(xs, 16, ctx.canvas.width - 12);
    const sy = makeScale(ys, ctx.canvas.height - 16, 24);
    for (const p of resp.scatter) {
      const x = sx(p.pc1), y = sy(p.pc2);
      ctx.beginPath();
      ctx.arc(x, y, 4.5, 0, Math.PI * 2);
      if (p.offline) {
        ctx.fillStyle = STYLE_COLORS[p.cluster];
        ctx.fill();
      } else {
        ctx.strokeStyle = STYLE_COLORS[p.cluster];
        ctx.lineWidth = 1.5;
        ctx.stroke();
      }
      // Ring in the planted style's color shows ground truth.
      ctx.beginPath();
      ctx.arc(x, y, 7, 0, Math.PI * 2);
      ctx.strokeStyle = STYLE_COLORS[p.planted] + "66";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    resp.centroids.forEach((c, i) => {
      const x = sx(c[0]), y = sy(c[1]);
      ctx.strokeStyle = STYLE_COLORS[i];
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      ctx.moveTo(x - 6, y); ctx.lineTo(x + 6, y);
      ctx.moveTo(x, y - 6); ctx.lineTo(x, y + 6);
      ctx.stroke();
    });
    axisLabels(ctx, "PC1", "PC2");

    const elbowCtx = $("learn-elbow").getContext("2d");
    clear(elbowCtx, "k-means SSE vs k");
    {
      const ks = resp.elbow.map((p) => p[0]);
      const sses = resp.elbow.map((p) => p[1]);
      const ex = makeScale(ks, 30, elbowCtx.canvas.width - 14);
      const ey = makeScale([...sses, 0], elbowCtx.canvas.height - 24, 26);
      plotLine(elbowCtx, ks, sses, ex, ey, STYLE_COLORS[0]);
      for (let i = 0; i < ks.length; i++) {
        elbowCtx.beginPath();
        elbowCtx.arc(ex(ks[i]), ey(sses[i]), 3.5, 0, Math.PI * 2);
        elbowCtx.fillStyle = ks[i] === resp.elbow_suggestion ? "#f2d05b" : STYLE_COLORS[0];
        elbowCtx.fill();
      }
      axisLabels(elbowCtx, "k", "SSE");
    }

    $("learn-legend").innerHTML = resp.clusters
      .map((c) => `<span><i class="dot" style="background:${STYLE_COLORS[c.cluster]}"></i>cluster ${c.cluster} — ${c.style}</span>`)
      .join("");
    const fmt = (v, d = 2) => v.toFixed(d);
    const rows = resp.clusters.map((c) => {
      const p = c.params;
      return `<tr><td>${c.cluster} — ${c.style}</td><td>${c.size}</td><td>${fmt(c.proportion * 100, 1)}%</td>` +
        `<td>${fmt(p.v_star, 1)}</td><td>${fmt(p.t_headway)}</td><td>${fmt(p.d_min)}</td>` +
        `<td>${fmt(p.a_max)}</td><td>${fmt(p.b_comf)}</td><td>${fmt(c.mean_rmse, 3)}</td></tr>`;
    }).join("");
    const a = resp.aggregate_params;
    $("learn-table").innerHTML =
      `<table><tr><th>cluster</th><th>size</th><th>share</th><th>v*</th><th>T</th><th>d_min</th><th>a_max</th><th>b_comf</th><th>rmse (m)</th></tr>` +
      rows +
      `<tr><td>aggregate</td><td></td><td></td><td>${fmt(a.v_star, 1)}</td><td>${fmt(a.t_headway)}</td>` +
      `<td>${fmt(a.d_min)}</td><td>${fmt(a.a_max)}</td><td>${fmt(a.b_comf)}</td><td></td></tr></table>`;
  }, 0));
}

// ---------------------------------------------------------------------------
// Panel 3: recognition
// ---------------------------------------------------------------------------

const recInputs = ["rec-tdur", "rec-noise", "rec-sigma", "rec-seed"];

function renderRecognize() {
  for (const id of recInputs) $(`${id}-out`).value = $(id).value;
  let resp;
  try {
    resp = JSON.parse(recognize_demo(JSON.stringify({
      style: +$("rec-style").value,
      seed: +$("rec-seed").value,
      noise_sigma: +$("rec-noise").value,
      sigma: +$("rec-sigma").value,
      t_dur: +$("rec-tdur").value,
    })));
  } catch (e) {
    $("rec-status").textContent = String(e);
    return;
  }
  const hit = resp.recognized === resp.planted;
  $("rec-status").innerHTML =
    `recognized <b style="color:${STYLE_COLORS[resp.recognized]}">${resp.style_names[resp.recognized]}</b>` +
    ` after ${resp.t.length} frame(s) — ${hit ? "correct" : "wrong"} ` +
    `(vehicle drives <span style="color:${STYLE_COLORS[resp.planted]}">${resp.style_names[resp.planted]}</span>)`;

  const ctx = $("rec-loglik").getContext("2d");
  clear(ctx, "cumulative log-likelihood per prototype");
  {
    const all = resp.log_likelihood.flat();
    const sx = makeScale(resp.t, 46, ctx.canvas.width - 10);
    const sy = makeScale(all, ctx.canvas.height - 22, 24);
    resp.log_likelihood.forEach((series, k) => {
      plotLine(ctx, resp.t, series, sx, sy, STYLE_COLORS[k], k === resp.recognized ? 2.4 : 1.4);
    });
    axisLabels(ctx, "t (s)", "L");
  }

  const pctx = $("rec-predict").getContext("2d");
  clear(pctx, "5 s prediction vs observed position (m, relative)");
  {
    const all = [...resp.actual_positions, ...resp.predicted_positions.flat()];
    const sx = makeScale(resp.prediction_t, 46, pctx.canvas.width - 10);
    const sy = makeScale(all, pctx.canvas.height - 22, 24);
    resp.predicted_positions.forEach((series, k) => {
      plotLine(pctx, resp.prediction_t, series, sx, sy, STYLE_COLORS[k], 1.4, [4, 3]);
    });
    plotLine(pctx, resp.prediction_t, resp.actual_positions, sx, sy, "#e6e9ef", 2.2);
    pctx.fillStyle = MUTED;
    pctx.font = "11px system-ui";
    resp.prediction_rmse.forEach((r, k) => {
      pctx.fillStyle = STYLE_COLORS[k];
      pctx.fillText(`${resp.style_names[k]}: rmse ${r.toFixed(2)} m`, 52, 34 + 14 * k);
    });
  }
}

// ---------------------------------------------------------------------------
// Wire-up
// ---------------------------------------------------------------------------

await init();

for (const id of simInputs) $(id).addEventListener("input", renderSim);
$("sim-scenario").addEventListener("change", renderSim);
$("sim-preset").addEventListener("change", () => {
  const v = $("sim-preset").value;
  if (!v) return;
  const [vs, t, d, a, b] = v.split(",").map(Number);
  $("sim-v").value = vs; $("sim-t").value = t; $("sim-d").value = d;
  $("sim-a").value = a; $("sim-b").value = b;
  renderSim();
});

$("learn-run").addEventListener("click", renderLearn);
for (const id of ["learn-n", "learn-noise", "learn-seed"]) {
  $(id).addEventListener("input", renderLearnControls);
}

for (const id of recInputs) $(id).addEventListener("input", renderRecognize);
$("rec-style").addEventListener("change", renderRecognize);

renderSim();
renderLearnControls();
renderLearn();
renderRecognize();
