import init, { formFunction, simulateScene } from "./pkg/ffsonar_web.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, series, { xLabel, xScale = 1, marks = [] }) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 34;
  ctx.clearRect(0, 0, w, h);
  let x0 = Infinity, x1 = -Infinity, y1 = 0;
  for (const s of series) {
    x0 = Math.min(x0, s.x[0]);
    x1 = Math.max(x1, s.x[s.x.length - 1]);
    for (const v of s.y) y1 = Math.max(y1, v);
  }
  y1 = y1 || 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - (y / y1) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText((x0 * xScale).toFixed(1), pad, h - pad + 14);
  ctx.fillText((x1 * xScale).toFixed(1), w - pad - 24, h - pad + 14);
  ctx.fillText(xLabel, w / 2 - 30, h - 6);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);

  for (const m of marks) {
    ctx.strokeStyle = m.color;
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.moveTo(px(m.x), pad);
    ctx.lineTo(px(m.x), h - pad);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  let legendY = pad + 14;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    // one vertex per pixel column is plenty for long traces
    const step = Math.max(1, Math.floor(s.x.length / (w * 2)));
    for (let i = 0; i < s.x.length; i += step) {
      const X = px(s.x[i]), Y = py(s.y[i]);
      i === 0 ? ctx.moveTo(X, Y) : ctx.lineTo(X, Y);
    }
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 150, legendY);
    legendY += 14;
  }
}

function target() {
  return [Number($("radius").value), Number($("thickness").value), $("filler").value];
}

function drawFormFunction() {
  try {
    const [a, d, filler] = target();
    const c = formFunction(a, d, filler, 1501);
    plot($("ff"), [{ x: c.x, y: c.y, color: "#1565c0", label: `|f|, ${filler}-filled` }], {
      xLabel: "frequency (kHz)", xScale: 1e-3,
    });
    $("ff-status").textContent = "";
    $("ff-status").className = "status";
  } catch (e) {
    $("ff-status").textContent = String(e);
    $("ff-status").className = "status error";
  }
}

function runScene() {
  const status = $("scene-status");
  try {
    const [a, d, filler] = target();
    const r = Number($("range").value);
    const s = simulateScene(a, d, filler, r, Number($("snr").value), $("clutter").value === "1",
      BigInt($("seed").value));
    const t = s.time_s;
    const rec = s.recording.map(Math.abs);
    plot($("trace"), [
      { x: t, y: rec, color: "#aaa", label: "|recording|" },
      { x: t, y: s.envelope, color: "#c62828", label: "matched-filter envelope" },
    ], {
      xLabel: "time (ms)", xScale: 1e3,
      marks: [{ x: t[s.direct_index], color: "#2e7d32" }, { x: t[s.peak_index], color: "#c62828" }],
    });
    const an = s.analytic, est = s.estimate;
    plot($("recovered"), [
      { x: an.x, y: an.y, color: "#1565c0", label: "analytic |f|" },
      { x: est.x, y: est.y, color: "#ef6c00", label: "estimated |f|" },
    ], { xLabel: "frequency (kHz)", xScale: 1e-3 });
    status.textContent = `estimated range ${s.range_m.toFixed(4)} m, true ${r.toFixed(4)} m`;
    status.className = "status";
  } catch (e) {
    status.textContent = String(e);
    status.className = "status error";
  }
}

await init();
for (const id of ["radius", "thickness", "filler"]) $(id).addEventListener("input", drawFormFunction);
$("run").addEventListener("click", runScene);
drawFormFunction();
runScene();
