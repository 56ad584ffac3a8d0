import init, { foldGrid, stratumSizes, toyExperiment } from "./pkg/mixval_demo.js";

const num = (id) => Number(document.getElementById(id).value);
const el = (id) => document.getElementById(id);

function guard(msgId, fn) {
  el(msgId).textContent = "";
  el(msgId).className = "";
  try {
    fn();
  } catch (e) {
    el(msgId).textContent = String(e);
    el(msgId).className = "error";
  }
}

const roleClass = { self: "self", training: "training", "1-out": "out1", "2-out": "out2" };

function drawGrid() {
  guard("g-msg", () => {
    const g = JSON.parse(foldGrid(num("g-drugs"), num("g-k"), num("g-fold"), num("g-seed")));
    const rows = g.cells.map((row, i) => {
      const head = `<th${g.interior[i] ? ' style="font-weight:bold"' : ""}>${g.drugs[i]}</th>`;
      return "<tr>" + head + row.map((c) => `<td class="${roleClass[c]}" title="${c}"></td>`).join("") + "</tr>";
    });
    el("grid").innerHTML = rows.join("");
    const inner = g.drugs.filter((_, i) => g.interior[i]);
    el("g-msg").textContent = `interior: ${inner.join(", ")}`;
  });
}

function drawSizes() {
  guard("s-msg", () => {
    const arity = num("s-arity");
    const folds = JSON.parse(stratumSizes(num("s-drugs"), arity, num("s-k"), num("s-seed")));
    const outs = Array.from({ length: arity }, (_, m) => `<th>${m + 1} out</th>`).join("");
    const head = `<tr><th>fold</th><th>interior</th><th>training</th>${outs}</tr>`;
    const body = folds.map((f) => {
      const cells = [f.training, ...f.strata].map((n, i) => {
        const ok = n === f.expected[i];
        return `<td title="closed form ${f.expected[i]}"${ok ? "" : ' class="error"'}>${n}</td>`;
      });
      return `<tr><td>${f.fold}</td><td>${f.interior}</td>${cells.join("")}</tr>`;
    });
    el("sizes").innerHTML = head + body.join("");
  });
}

function runToy() {
  el("toy").innerHTML = "";
  el("t-msg").textContent = "running...";
  // let the message paint before the synchronous run
  setTimeout(() => guard("t-msg", () => {
    const r = JSON.parse(toyExperiment(num("t-drugs"), num("t-arity"), num("t-noise"), num("t-k"), num("t-trees"), num("t-seed")));
    const head = "<tr><th>validation</th><th>pseudodescriptors</th><th>y-randomized</th></tr>";
    const body = r.rows.map((row) =>
      `<tr><td>${row.stratum}</td><td>${row.display_pseudo}</td><td>${row.display_y_randomized}</td></tr>`);
    el("toy").innerHTML = head + body.join("");
    el("t-msg").textContent = `accuracy, mean ± std over folds; ${(100 * r.active_fraction).toFixed(1)}% of mixtures active`;
  }), 10);
}

await init();
for (const id of ["g-drugs", "g-k", "g-fold", "g-seed"]) el(id).addEventListener("input", drawGrid);
for (const id of ["s-drugs", "s-arity", "s-k", "s-seed"]) el(id).addEventListener("input", drawSizes);
el("t-run").addEventListener("click", runToy);
drawGrid();
drawSizes();
