import init, { AsianStudy, interior_error } from "./pkg/heston_sc_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let study = null;

function status(msg, bad = false) {
  $("status").textContent = msg;
  $("status").className = bad ? "bad" : "";
}

function frame(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40.5, 10.5, w - 50, h - 40);
}

function drawHistograms(h, bins) {
  const c = $("hist");
  const ctx = c.getContext("2d");
  const [lo, hi] = [h[0], h[1]];
  const mc = h.slice(2, 2 + bins);
  const sc = h.slice(2 + bins);
  const top = Math.max(...mc, ...sc) * 1.05;
  const px = (i) => 40 + ((c.width - 50) * i) / bins;
  const py = (d) => c.height - 30 - ((c.height - 40) * d) / top;
  frame(ctx, c.width, c.height);
  ctx.fillStyle = "rgba(70, 110, 200, 0.35)";
  mc.forEach((d, i) => ctx.fillRect(px(i), py(d), px(i + 1) - px(i) - 1, c.height - 30 - py(d)));
  ctx.strokeStyle = "#c33";
  ctx.lineWidth = 2;
  ctx.beginPath();
  sc.forEach((d, i) => {
    const x = 0.5 * (px(i) + px(i + 1));
    i ? ctx.lineTo(x, py(d)) : ctx.moveTo(x, py(d));
  });
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#222";
  ctx.fillText(lo.toFixed(3), 40, c.height - 12);
  ctx.fillText(hi.toFixed(3), c.width - 50, c.height - 12);
  ctx.fillText("MC (bars)   collocation (line)", c.width / 2 - 70, c.height - 12);
}

function simulate() {
  status("simulating...");
  // Let the status paint before the blocking call.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      study?.free();
      study = new AsianStudy(
        num("r"), num("kappa"), num("gamma"), num("rho"), num("v_bar"), num("v0"),
        num("maturity"), num("paths"), num("m"), num("seed"),
      );
    } catch (e) {
      study = null;
      status(String(e), true);
      return;
    }
    const ms = performance.now() - t0;
    const bins = 60;
    drawHistograms(study.histograms(bins, num("paths"), num("seed") + 1), bins);
    const cvs = Array.from(study.cvs(), (v) => v.toFixed(4)).join(", ");
    status(`${num("paths")} paths in ${ms.toFixed(0)} ms; collocation values: ${cvs}`);
    price();
  }, 10);
}

function price() {
  if (!study) return status("simulate first", true);
  const strikes = $("strikes").value.split(",").map(Number).filter((k) => Number.isFinite(k));
  const call = document.querySelector("input[name=omega]:checked").value === "call";
  let v;
  try {
    v = study.prices(new Float64Array(strikes), call);
  } catch (e) {
    return status(String(e), true);
  }
  const rows = strikes.map((k, i) => {
    const [sa, mc, se] = v.slice(3 * i, 3 * i + 3);
    return `<tr><td>${k}</td><td>${sa.toFixed(5)}</td><td>${mc.toFixed(5)}</td>` +
      `<td>${se.toFixed(5)}</td><td>${((sa - mc) / se).toFixed(2)}</td></tr>`;
  });
  $("prices").innerHTML =
    "<tr><th>K</th><th>semi-analytic</th><th>Monte Carlo</th><th>SE</th><th>diff / SE</th></tr>" + rows.join("");
}

function sweep() {
  let v;
  try {
    v = interior_error(num("sigma"), num("m_max"));
  } catch (e) {
    return status(String(e), true);
  }
  const pts = [];
  for (let i = 0; i < v.length; i += 2) pts.push([v[i], Math.log10(Math.max(v[i + 1], 1e-300))]);
  const c = $("errors");
  const ctx = c.getContext("2d");
  frame(ctx, c.width, c.height);
  const [m0, m1] = [pts[0][0], pts[pts.length - 1][0]];
  const ys = pts.map((p) => p[1]);
  const [y0, y1] = [Math.floor(Math.min(...ys)), Math.ceil(Math.max(...ys))];
  const px = (m) => 50 + ((c.width - 70) * (m - m0)) / Math.max(m1 - m0, 1);
  const py = (y) => c.height - 30 - ((c.height - 40) * (y - y0)) / Math.max(y1 - y0, 1);
  ctx.fillStyle = "#246";
  ctx.strokeStyle = "#246";
  ctx.beginPath();
  pts.forEach(([m, y], i) => (i ? ctx.lineTo(px(m), py(y)) : ctx.moveTo(px(m), py(y))));
  ctx.stroke();
  pts.forEach(([m, y]) => {
    ctx.fillRect(px(m) - 2, py(y) - 2, 4, 4);
    ctx.fillText(String(m), px(m) - 4, c.height - 12);
  });
  ctx.fillText(`1e${y1}`, 4, py(y1) + 4);
  ctx.fillText(`1e${y0}`, 4, py(y0));
}

await init();
$("simulate").onclick = simulate;
$("price").onclick = price;
$("sweep").onclick = sweep;
sweep();
simulate();
