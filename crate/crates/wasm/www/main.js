import init, { attitudeReport, pulseResponse, trimSweep } from "./pkg/flightlab_wasm.js";

const $ = id => document.getElementById(id);
const num = id => parseFloat($(id).value);

function plot(canvas, x, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const ys = series.flatMap(s => s.y.filter(v => v !== null));
  if (ys.length === 0) return;
  let lo = Math.min(...ys), hi = Math.max(...ys);
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const x0 = x[0], x1 = x[x.length - 1];
  const px = v => pad + (v - x0) / (x1 - x0) * (w - 2 * pad);
  const py = v => h - pad - (v - lo) / (hi - lo) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - 10);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - 10);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let pen = false;
    s.y.forEach((v, i) => {
      if (v === null) { pen = false; return; }
      pen ? ctx.lineTo(px(x[i]), py(v)) : ctx.moveTo(px(x[i]), py(v));
      pen = true;
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - pad - 120, pad + 14 * (k + 1));
  });
}

function report(el, f) {
  try {
    el.classList.remove("error");
    return f();
  } catch (e) {
    el.classList.add("error");
    el.textContent = String(e.message ?? e);
  }
}

function showAttitude() {
  const out = $("attitude");
  report(out, () => {
    const r = JSON.parse(attitudeReport(num("roll"), num("pitch"), num("yaw")));
    const f = v => v.map(x => x.toFixed(4).padStart(8)).join(" ");
    out.textContent = [
      `q          ${f(r.q)}`,
      `dcm        ${f(r.dcm[0])}`,
      `           ${f(r.dcm[1])}`,
      `           ${f(r.dcm[2])}`,
      `recovered  ${f(r.recovered)} deg${r.gimbal_lock ? "  (gimbal lock)" : ""}`,
      `nose       ${f(r.nose)}  north/up/east`,
    ].join("\n");
  });
}

function runPulse() {
  const status = $("pulse-status");
  report(status, () => {
    const t0 = performance.now();
    const r = JSON.parse(pulseResponse(num("pulse-elev"), num("pulse-width"), num("pulse-duration")));
    plot($("pulse-alpha"), r.t, [{ y: r.alpha, color: "#c33", label: "alpha, deg" }]);
    plot($("pulse-rate"), r.t, [{ y: r.pitch_rate, color: "#36c", label: "pitch rate, deg/s" }]);
    status.textContent = `${r.t.length} samples in ${(performance.now() - t0).toFixed(0)} ms`;
  });
}

function runSweep() {
  const status = $("sweep-status");
  report(status, () => {
    const pts = JSON.parse(trimSweep(num("sweep-alt"), num("sweep-min"), num("sweep-max"), 40));
    const v = pts.map(p => p.airspeed);
    plot($("sweep-plot"), v, [
      { y: pts.map(p => p.alpha_deg), color: "#c33", label: "alpha, deg" },
      { y: pts.map(p => p.elevator_deg), color: "#393", label: "elevator, deg" },
      { y: pts.map(p => p.throttle === null ? null : 10 * p.throttle), color: "#36c", label: "throttle x10" },
    ]);
    const gaps = pts.filter(p => p.throttle === null).length;
    status.textContent = gaps ? `${gaps} of ${pts.length} airspeeds cannot be trimmed` : `${pts.length} trim points`;
  });
}

await init();
["roll", "pitch", "yaw"].forEach(id => $(id).addEventListener("input", showAttitude));
$("pulse-run").addEventListener("click", runPulse);
$("sweep-run").addEventListener("click", runSweep);
showAttitude();
runPulse();
runSweep();
