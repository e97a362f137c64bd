// Built with: wasm-pack build --target web --out-dir www/pkg (from crates/web)
import init, { sample, crossing_curve, exact_crossing } from "./pkg/percolab_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawSample() {
  const n = num("s-n");
  const s = JSON.parse(sample(n, num("s-p"), BigInt(num("s-seed")), BigInt(num("s-stream"))));
  const cv = $("s-canvas"), g = cv.getContext("2d");
  const k = (cv.width - 20) / n, at = (x, y) => [10 + x * k, cv.height - 10 - y * k];
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#246";
  g.lineWidth = 1;
  for (const [x0, y0, x1, y1] of s.open) {
    g.beginPath(); g.moveTo(...at(x0, y0)); g.lineTo(...at(x1, y1)); g.stroke();
  }
  if (s.crossing) {
    g.strokeStyle = "#c22";
    g.lineWidth = 3;
    g.beginPath();
    s.crossing.vertices.forEach(([x, y], i) => (i ? g.lineTo(...at(x, y)) : g.moveTo(...at(x, y))));
    g.stroke();
  }
  $("s-info").textContent = `${s.open.length} open edges; left-right crossing: ${s.crossing ? "yes" : "no"}`;
}

function drawCurve() {
  const ps = Array.from({ length: 21 }, (_, i) => 0.3 + 0.02 * i);
  const c = JSON.parse(crossing_curve(num("c-n"), Float64Array.from(ps), num("c-samples"), 1n));
  const cv = $("c-canvas"), g = cv.getContext("2d");
  const X = (p) => 30 + ((p - 0.3) / 0.4) * (cv.width - 40), Y = (v) => cv.height - 20 - v * (cv.height - 30);
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#999";
  g.strokeRect(X(0.3), Y(1), X(0.7) - X(0.3), Y(0) - Y(1));
  g.fillText("0.3", X(0.3) - 8, cv.height - 5);
  g.fillText("0.7", X(0.7) - 8, cv.height - 5);
  g.fillText("1", 15, Y(1) + 4);
  for (const pt of c.points) {
    g.strokeStyle = "#246";
    g.beginPath(); g.moveTo(X(pt.p), Y(pt.ci95[0])); g.lineTo(X(pt.p), Y(pt.ci95[1])); g.stroke();
    g.fillRect(X(pt.p) - 2, Y(pt.point) - 2, 4, 4);
  }
}

function enumerate() {
  try {
    $("e-out").textContent = JSON.stringify(JSON.parse(exact_crossing(num("e-w"), num("e-h"), num("e-p"))), null, 2);
  } catch (e) {
    $("e-out").textContent = String(e);
  }
}

await init();
$("s-go").onclick = drawSample;
$("c-go").onclick = drawCurve;
$("e-go").onclick = enumerate;
drawSample();
