import init, { Model } from "./pkg/selfconf_web.js";

const third = 1 / 3;
const SYSTEMS = {
  cantor: {
    dim: 1,
    maps: [{ type: "affine1d", a: third, b: 0 }, { type: "affine1d", a: third, b: 2 * third }],
  },
  gauss4: {
    dim: 1,
    maps: [
      { type: "affine1d", a: 0.25, b: 0 },
      { type: "moebius1d", p: 0, q: 1, r: 2, s: 2 },
      { type: "moebius1d", p: 1, q: 1, r: 1, s: 2 },
      { type: "moebius1d", p: 0, q: 2, r: 1, s: 2 },
    ],
    domain: [0, 1],
    osc_witness: [0, 1],
  },
  sierpinski: {
    dim: 2,
    maps: [
      { type: "sim2d", scale: 0.5, rotation: 0, reflect: false, translation: [0, 0] },
      { type: "sim2d", scale: 0.5, rotation: 0, reflect: false, translation: [0.5, 0] },
      { type: "sim2d", scale: 0.5, rotation: 0, reflect: false, translation: [0.25, Math.sqrt(3) / 4] },
    ],
  },
};
const DEFAULT_WEIGHTS = { cantor: "0.3, 0.7", gauss4: "gauss", sierpinski: "0.1, 0.8, 0.1" };

const $ = (id) => document.getElementById(id);
let model = null;

function status(msg, bad = false) {
  $("status").textContent = msg;
  $("status").className = bad ? "err" : "";
}

function build() {
  const name = $("system").value;
  const w = $("weights").value.trim();
  const potential = w === "gauss"
    ? { type: "density", name: "gauss" }
    : { type: "bernoulli", p: w.split(",").map(Number) };
  try {
    model?.free();
    model = new Model(JSON.stringify({ system: SYSTEMS[name], potential }));
    status(`${name}, dimension ${model.dim()}`);
  } catch (e) {
    model = null;
    status(String(e), true);
  }
}

function sample() {
  if (!model) return;
  const pts = model.sample_points(Number($("points").value), BigInt($("seed").value));
  const c = $("scatter").getContext("2d");
  c.clearRect(0, 0, c.canvas.width, c.canvas.height);
  c.fillStyle = "rgba(20, 60, 160, 0.35)";
  const { width: W, height: H } = c.canvas;
  if (model.dim() === 1) {
    // Histogram over 400 bins.
    const bins = new Float64Array(400);
    for (const x of pts) bins[Math.min(399, Math.floor(x * 400))] += 1;
    const top = Math.max(...bins);
    bins.forEach((b, i) => c.fillRect(i * W / 400, H - H * b / top, W / 400, H * b / top));
  } else {
    for (let i = 0; i < pts.length; i += 2) c.fillRect(pts[i] * H + (W - H) / 2, H - pts[i + 1] * H, 1.2, 1.2);
  }
}

function balls() {
  if (!model) return;
  const radii = Array.from({ length: 8 }, (_, k) => 3 ** -(k + 1));
  try {
    const b = model.ball_curve(Number($("bx").value), Number($("by").value), new Float64Array(radii));
    $("ballout").textContent = radii
      .map((r, k) => `r = 3^-${k + 1}  mu(B) in [${b[2 * k].toPrecision(8)}, ${b[2 * k + 1].toPrecision(8)}]`)
      .join("\n");
  } catch (e) {
    $("ballout").textContent = String(e);
  }
}

function recur() {
  if (!model) return;
  const t0 = performance.now();
  let r;
  try {
    r = model.recurrence_ratio(Number($("rn").value), 100, Number($("beta").value), BigInt($("seed").value));
  } catch (e) {
    status(String(e), true);
    return;
  }
  const c = $("ratio").getContext("2d");
  const { width: W, height: H } = c.canvas;
  c.clearRect(0, 0, W, H);
  const y = (v) => H - (H * Math.min(Math.max(v, 0), 2)) / 2;
  c.strokeStyle = "#999";
  c.beginPath(); c.moveTo(0, y(1)); c.lineTo(W, y(1)); c.stroke();
  c.strokeStyle = "#c33";
  c.beginPath();
  const last = r[r.length - 2];
  for (let i = 0; i < r.length; i += 2) c.lineTo((W * r[i]) / last, y(r[i + 1]));
  c.stroke();
  status(`count / sum psi = ${r[r.length - 1].toFixed(4)} at N = ${last} (${(performance.now() - t0).toFixed(0)} ms)`);
}

await init();
$("system").onchange = () => { $("weights").value = DEFAULT_WEIGHTS[$("system").value]; build(); };
$("weights").onchange = build;
$("sample").onclick = sample;
$("balls").onclick = balls;
$("recur").onclick = recur;
build();
sample();
