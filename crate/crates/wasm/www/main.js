import init, { mergeEffort, mineRules, corpusCut } from "./pkg/refmerge_wasm.js";

const $ = (id) => document.getElementById(id);

function el(tag, attrs = {}, ...children) {
  const node = document.createElement(tag);
  Object.assign(node, attrs);
  node.append(...children);
  return node;
}

function show(target, build) {
  const out = $(target);
  out.replaceChildren();
  try {
    out.append(...build());
  } catch (e) {
    out.append(el("p", { className: "error", textContent: String(e.message ?? e) }));
  }
}

function list(title, items) {
  return el("p", {}, el("strong", { textContent: `${title}: ` }), items.length ? items.join("  ") : "none");
}

function effort() {
  show("effort-out", () => {
    const r = JSON.parse(mergeEffort($("base").value, $("left").value, $("right").value, $("merged").value, $("symmetric").checked));
    return [
      el("p", {}, el("strong", { textContent: `effort ${r.effort}` })),
      list("merge actions", r.merge_actions),
      list("branch actions", r.branch_actions),
      list("in the merge only", r.extra),
      list("dropped by the merge", r.discarded),
    ];
  });
}

function rules() {
  show("rules-out", () => {
    const r = JSON.parse(mineRules($("table").value, $("scheme").value, Number($("min-support").value), Number($("min-confidence").value)));
    const head = el("tr", {}, ...["antecedent", "consequent", "support", "confidence", "lift"].map((h) => el("th", { textContent: h })));
    const rows = r.rules.map((x) =>
      el("tr", {},
        el("td", { textContent: x.antecedent }),
        el("td", { textContent: x.consequent }),
        ...[x.support, x.confidence, x.lift].map((v) => el("td", { className: "num", textContent: v.toFixed(4) }))));
    return [el("p", { textContent: `${r.rules.length} rules from ${r.rows} rows, highest lift first` }), el("table", {}, head, ...rows)];
  });
}

function cut() {
  show("cut-out", () => {
    const r = JSON.parse(corpusCut($("counts").value));
    return [
      el("p", { textContent: `q1 ${r.q1}, q3 ${r.q3}, upper fence ${r.upper_fence}` }),
      list("kept", r.kept),
      list("above the fence", r.dropped_above),
      list("below q1", r.dropped_below),
    ];
  });
}

await init();
$("effort-run").onclick = effort;
$("rules-run").onclick = rules;
$("cut-run").onclick = cut;
effort();
rules();
cut();
