import init, { check, render, query, builtin_query } from "./pkg/opa_wasm.js";

const $ = (id) => document.getElementById(id);
const output = $("output");

function show(node) {
  output.replaceChildren(node);
}

function text(tag, content, cls) {
  const el = document.createElement(tag);
  el.textContent = content;
  if (cls) el.className = cls;
  return el;
}

function guarded(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      show(text("pre", String(e.message ?? e), "error"));
    }
  };
}

function showCheck() {
  const r = JSON.parse(check($("turtle").value));
  const lines = [
    `direct engine: ${r.member_direct ? "member" : "not a member"}`,
    `query engine: ${r.member_query ? "member" : "not a member"}`,
    `divergence: ${r.divergence}`,
    `expressivity: ${r.dl_name}`,
  ];
  for (const v of r.violations) {
    lines.push("", `${v.rule} at ${v.focus}: ${v.message}`, ...v.evidence.map((t) => `  ${t}`));
  }
  show(text("pre", lines.join("\n")));
}

function showRender() {
  const out = render($("turtle").value, $("ascii").checked);
  show(text("pre", out || "(no axioms)"));
}

function showQuery() {
  const r = JSON.parse(query($("turtle").value, $("query").value));
  const table = document.createElement("table");
  const head = table.createTHead().insertRow();
  for (const c of r.columns) head.appendChild(text("th", `?${c}`));
  const body = table.createTBody();
  for (const row of r.rows) {
    const tr = body.insertRow();
    for (const cell of row) tr.appendChild(text("td", cell ?? ""));
  }
  const wrap = document.createElement("div");
  wrap.append(table, text("p", `${r.rows.length} row(s)`));
  show(wrap);
}

await init();
$("check").addEventListener("click", guarded(showCheck));
$("render").addEventListener("click", guarded(showRender));
$("run").addEventListener("click", guarded(showQuery));
$("builtin").addEventListener("click", () => {
  $("query").value = builtin_query();
});
