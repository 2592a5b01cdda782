// DOM rendering from UiState. Rebuilds the view tree on every change;
// at desk scale (tens of rows) this is plenty fast.

import { UiState } from "./controller.js";
import { fmt2, fmtVector, fullPrecision } from "./format.js";
import { RunRow } from "./runTable.js";
import { chartModel } from "./screeningChart.js";

type Handlers = {
  onCreate: (k: number, seed: number) => void;
  onOpen: (id: string) => void;
  onInput: (rowId: number, value: string) => void;
  onSubmit: () => void;
};

function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) node.append(child);
  return node;
}

function num(value: number): HTMLElement {
  return el("span", { title: fullPrecision(value) }, [fmt2(value)]);
}

function wizard(state: UiState, handlers: Handlers): HTMLElement {
  const kInput = el("input", {
    id: "k-input",
    type: "number",
    value: "6",
    min: "2",
  }) as HTMLInputElement;
  const seedInput = el("input", {
    id: "seed-input",
    type: "number",
    value: "42",
  }) as HTMLInputElement;
  const button = el("button", { id: "create-btn" }, ["Start session"]);
  button.addEventListener("click", () =>
    handlers.onCreate(Number(kInput.value), Number(seedInput.value)),
  );
  const form = el("div", { class: "card wizard" }, [
    el("h2", {}, ["New session"]),
    el("label", {}, ["Factors ", kInput]),
    el("label", {}, ["Seed ", seedInput]),
    button,
  ]);
  if (state.formError !== null) {
    form.append(el("p", { class: "error" }, [state.formError]));
  }
  const list = el(
    "ul",
    { class: "session-list" },
    state.sessions.map((s) => {
      const link = el("a", { href: `#${s.id}` }, [
        `${s.id.slice(0, 8)} — ${s.phase}, k=${s.k}, ${s.pending_run_count} pending`,
      ]);
      link.addEventListener("click", (ev) => {
        ev.preventDefault();
        handlers.onOpen(s.id);
      });
      return el("li", {}, [link]);
    }),
  );
  return el("div", {}, [form, el("div", { class: "card" }, [
    el("h2", {}, ["Existing sessions"]),
    state.sessions.length > 0 ? list : el("p", {}, ["none yet"]),
  ])]);
}

function runRowTr(row: RunRow, handlers: Handlers): HTMLElement {
  const input = el("input", {
    class: "y-input",
    "data-row": String(row.rowId),
    value: row.input,
  }) as HTMLInputElement;
  if (row.submitted) {
    input.setAttribute("readonly", "readonly");
    input.setAttribute("disabled", "disabled");
  } else {
    input.addEventListener("input", () =>
      handlers.onInput(row.rowId, input.value),
    );
  }
  const cells = [
    el("td", {}, [String(row.rowId)]),
    el("td", { class: "levels" }, [fmtVector(row.levels)]),
    el("td", {}, [input]),
    el("td", { class: "row-status" }, [
      row.error !== null
        ? el("span", { class: "error" }, [row.error])
        : row.submitted
          ? el("span", { class: "ok" }, ["submitted"])
          : "",
    ]),
  ];
  return el("tr", row.submitted ? { class: "submitted" } : {}, cells);
}

function runTable(state: UiState, handlers: Handlers): HTMLElement {
  const button = el("button", { id: "submit-btn" }, ["Submit batch"]);
  if (state.submitting) button.setAttribute("disabled", "disabled");
  button.addEventListener("click", handlers.onSubmit);
  return el("div", { class: "card" }, [
    el("h2", {}, [`Proposed runs — ${state.phase}`]),
    el("table", { class: "run-table" }, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["run"]),
          el("th", {}, ["levels"]),
          el("th", {}, ["y"]),
          el("th", {}, [""]),
        ]),
      ]),
      el("tbody", {}, state.rows.map((r) => runRowTr(r, handlers))),
    ]),
    button,
  ]);
}

function screeningPanel(state: UiState): HTMLElement | null {
  if (state.screening === null || state.classification === null) return null;
  const model = chartModel(state.screening, state.classification);
  const bars = model.bars.map((bar) =>
    el("div", { class: "bar-row" }, [
      el("span", { class: "bar-label" }, [bar.label]),
      el("div", { class: "bar-track" }, [
        el("div", {
          class: bar.critical ? "bar critical" : "bar",
          style: `width:${bar.widthPct}%`,
          title: fullPrecision(bar.value),
        }),
        el("div", { class: "tau-rule", style: `left:${model.tauPct}%` }),
      ]),
      num(bar.value),
      el("span", { class: `badge ${bar.badge.toLowerCase()}` }, [bar.badge]),
    ]),
  );
  const interactions = el(
    "ol",
    { class: "interactions" },
    model.interactions.map((it) =>
      el("li", it.significant ? { class: "significant" } : {}, [
        `${it.label}: `,
        num(it.score),
      ]),
    ),
  );
  return el("div", { class: "card", id: "screening" }, [
    el("h2", {}, ["Screening"]),
    el("p", {}, ["threshold ", num(model.tauCrit)]),
    el("div", { class: "chart" }, bars),
    el("h3", {}, ["Interaction scores"]),
    interactions,
  ]);
}

function strategyCard(state: UiState): HTMLElement | null {
  if (state.strategy === null) return null;
  return el("div", { class: "card", id: "strategy" }, [
    el("h2", {}, ["Augmentation strategy"]),
    el("p", { class: "strategy-kind" }, [state.strategy.kind]),
    el("p", {}, [state.strategy.rationale]),
  ]);
}

function optimumCard(state: UiState): HTMLElement | null {
  const report = state.report;
  if (report === null) return null;
  return el("div", { class: "card", id: "optimum" }, [
    el("h2", {}, ["Optimum"]),
    el("p", {}, [
      "x* = ",
      el("span", { id: "x-star", title: report.x_star.map(fullPrecision).join(", ") }, [
        fmtVector(report.x_star),
      ]),
    ]),
    el("p", {}, [
      "predicted y = ",
      el("span", { id: "pred-y" }, [num(report.predicted_y)]),
      " ± ",
      el("span", { id: "pred-band" }, [num(2 * report.predicted_sd)]),
    ]),
    el("p", {}, [`total runs: ${report.total_runs}`]),
    el("p", {}, [`strategy used: ${report.strategy_used}`]),
  ]);
}

export function render(
  root: HTMLElement,
  state: UiState,
  handlers: Handlers,
): void {
  root.replaceChildren();
  if (state.offline) {
    root.append(el("div", { class: "banner offline" }, ["service unreachable"]));
  }
  if (state.sessionId === null) {
    root.append(wizard(state, handlers));
    return;
  }
  root.append(
    el("p", { class: "session-id" }, [`session ${state.sessionId}`]),
  );
  if (state.phase !== "Complete") root.append(runTable(state, handlers));
  const panels = [screeningPanel(state), strategyCard(state), optimumCard(state)];
  for (const panel of panels) if (panel !== null) root.append(panel);
}
