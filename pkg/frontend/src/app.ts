// DOM wiring: three views (report list, annotation form, comparison)
// routed by location.hash, driven by the controllers in form.ts,
// compare.ts and list.ts.

import { HttpApi } from "./api.js";
import { CompareController } from "./compare.js";
import { FormController, type FormRow } from "./form.js";
import { ListController } from "./list.js";
import type { EntityValue } from "./types.js";

const api = new HttpApi();
const form = new FormController(api);
const compare = new CompareController(api);
const list = new ListController(api);

type Attrs = Record<string, string | number | boolean | ((e: Event) => void)>;

function el(tag: string, attrs: Attrs = {}, ...children: Array<string | Node>): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2).toLowerCase(), value as EventListener);
    } else if (key === "className") {
      node.className = String(value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, String(value));
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function root(): HTMLElement {
  return document.getElementById("app")!;
}

function navigate(hash: string): void {
  if (!form.canNavigate(() => window.confirm("Discard unsaved annotation changes?"))) return;
  location.hash = hash;
}

// ---------------------------------------------------------------- list view

async function renderList(): Promise<void> {
  const state = await list.load();
  const header = el(
    "div",
    { className: "toolbar" },
    el("label", {}, el("input", {
      type: "checkbox",
      checked: state.filter === "flagged-only",
      onChange: async (e) => {
        await list.toggleFlaggedOnly((e.target as HTMLInputElement).checked);
        await renderList();
      },
    }) as Node, " review-only (clinician_check)"),
    el("span", { className: "muted" }, ` ${state.total} report(s)`),
  );
  const rows = state.rows.map((row) =>
    el(
      "tr",
      { className: row.flagged ? "flagged" : "" },
      el("td", {}, el("a", { href: `#/annotate/${row.report_id}`, onClick: (e) => { e.preventDefault(); navigate(`#/annotate/${row.report_id}`); } }, row.report_id)),
      el("td", {}, row.status),
      el("td", { className: "num" }, String(row.burden)),
      el("td", {}, el("a", { href: `#/compare/${row.report_id}`, onClick: (e) => { e.preventDefault(); navigate(`#/compare/${row.report_id}`); } }, "compare")),
    ),
  );
  const pager = el(
    "div",
    { className: "toolbar" },
    el("button", {
      disabled: state.page <= 1,
      onClick: async () => { await list.load(undefined, state.page - 1); await renderList(); },
    }, "prev"),
    el("span", { className: "muted" }, ` page ${state.page}/${state.pageCount} `),
    el("button", {
      disabled: state.page >= state.pageCount,
      onClick: async () => { await list.load(undefined, state.page + 1); await renderList(); },
    }, "next"),
  );
  root().replaceChildren(
    el("h1", {}, "Reports"),
    header,
    el("table", {},
      el("thead", {}, el("tr", {}, el("th", {}, "report"), el("th", {}, "status"), el("th", {}, "burden"), el("th", {}, ""))),
      el("tbody", {}, ...rows)),
    pager,
  );
}

// ---------------------------------------------------------- annotation view

function widgetFor(row: FormRow, value: EntityValue, onInput: (v: EntityValue) => void): HTMLElement {
  const current = value === null || value === undefined ? "" : String(value);
  switch (row.widget) {
    case "toggle": {
      const select = el("select", { tabindex: row.tabIndex, onChange: (e) => onInput((e.target as HTMLSelectElement).value) }) as HTMLSelectElement;
      for (const option of ["", "True", "False"]) {
        select.append(el("option", { value: option }, option || "(blank)"));
      }
      select.value = value === true ? "True" : value === false ? "False" : current;
      return select;
    }
    case "select": {
      const select = el("select", { tabindex: row.tabIndex, onChange: (e) => onInput((e.target as HTMLSelectElement).value) }) as HTMLSelectElement;
      for (const option of ["", ...row.options]) {
        select.append(el("option", { value: option }, option || "(blank)"));
      }
      select.value = current;
      return select;
    }
    case "textarea":
      return el("textarea", { tabindex: row.tabIndex, rows: 3, onInput: (e) => onInput((e.target as HTMLTextAreaElement).value) }, current);
    case "integer":
    case "text":
    default:
      return el("input", { type: "text", value: current, tabindex: row.tabIndex, onInput: (e) => onInput((e.target as HTMLInputElement).value) });
  }
}

async function renderAnnotate(reportId: string): Promise<void> {
  const state = await form.load(reportId);
  const sections = Object.entries(state.sections).map(([name, body]) =>
    el("section", {}, el("h3", {}, name.toUpperCase()), el("pre", {}, body)),
  );
  const formRows = state.rows.map((row) => {
    const warning = el("span", { className: "warning" }, state.warnings[row.code] ?? "");
    const input = widgetFor(row, state.values[row.code], (value) => {
      form.setField(row.code, value);
      warning.textContent = form.state.warnings[row.code] ?? "";
      status.textContent = "unsaved changes";
    });
    return el(
      "div",
      { className: `form-row tier-${row.tier}` },
      el("label", { title: row.guidelines }, `${row.question} `, el("code", {}, row.code)),
      input,
      warning,
    );
  });
  const status = el("span", { className: "muted" }, state.clinicianCheck ? "flagged for review" : "");
  const save = el("button", {
    onClick: async () => {
      const saved = await form.save();
      status.textContent = saved.lastEcho?.length
        ? `saved; kept as text: ${saved.lastEcho.join(", ")}`
        : "saved";
      await renderAnnotate(reportId);
    },
  }, "Save annotation");
  root().replaceChildren(
    el("h1", {}, `Annotate ${reportId}`),
    el("div", { className: "toolbar" },
      el("a", { href: "#/reports", onClick: (e) => { e.preventDefault(); navigate("#/reports"); } }, "back to list"),
      status,
      save),
    el("div", { className: "columns" },
      el("div", { className: "col" }, ...sections),
      el("div", { className: "col" }, ...formRows)),
  );
}

// ---------------------------------------------------------- comparison view

async function renderCompare(reportId: string): Promise<void> {
  await compare.loadQueue();
  const state = await compare.load(reportId);
  const rows = state.rows.map((row) => {
    const history = el(
      "ul",
      { className: "comments" },
      ...row.comments.map((c) => el("li", {}, `${c.author}: ${c.text}`)),
    );
    const draft = el("input", {
      type: "text",
      value: row.draft,
      placeholder: "comment (include the correct answer)",
      onInput: (e) => compare.setDraft(row.code, (e.target as HTMLInputElement).value),
    });
    const send = el("button", {
      onClick: async () => {
        const ok = await compare.submitComment(row.code);
        if (ok) await renderCompare(reportId);
        else error.textContent = compare.state.error ?? "comment failed";
      },
    }, "add comment");
    return el(
      "tr",
      { className: row.highlight ? "mismatch" : "" },
      el("td", {}, el("span", { className: `badge tier-${row.tier}` }, row.tier), " ", row.code),
      el("td", {}, String(row.value_a)),
      el("td", {}, String(row.value_b)),
      el("td", {}, row.match === null ? "-" : row.match ? "match" : "MISMATCH"),
      el("td", {}, history, draft, send),
    );
  });
  const error = el("span", { className: "warning" }, state.error ?? "");
  const next = compare.nextInQueue();
  root().replaceChildren(
    el("h1", {}, `Compare ${reportId} (${state.runA} vs ${state.runB})`),
    el("div", { className: "toolbar" },
      el("a", { href: "#/reports", onClick: (e) => { e.preventDefault(); navigate("#/reports"); } }, "back to list"),
      el("button", { disabled: next === null, onClick: () => next && navigate(`#/compare/${next}`) }, "next in queue"),
      state.clinicianCheck ? el("span", { className: "badge flagged" }, "clinician_check") : "",
      error),
    el("table", {},
      el("thead", {}, el("tr", {},
        el("th", {}, "entity"), el("th", {}, state.runA), el("th", {}, state.runB),
        el("th", {}, "verdict"), el("th", {}, "comments"))),
      el("tbody", {}, ...rows)),
  );
}

// -------------------------------------------------------------------- router

async function route(): Promise<void> {
  const hash = location.hash || "#/reports";
  const [, view, id] = hash.split("/");
  try {
    if (view === "annotate" && id) await renderAnnotate(decodeURIComponent(id));
    else if (view === "compare" && id) await renderCompare(decodeURIComponent(id));
    else await renderList();
  } catch (err) {
    root().replaceChildren(
      el("h1", {}, "Error"),
      el("p", { className: "warning" }, err instanceof Error ? err.message : String(err)),
    );
  }
}

window.addEventListener("hashchange", route);
window.addEventListener("beforeunload", (event) => {
  if (form.state.dirty) event.preventDefault();
});
void route();
