/**
 * Pure views: payload in, node tree out.
 *
 * No statistics happen here.  Displayed numbers are rounded copies of
 * payload fields, and every one carries the exact payload value in a
 * data-raw attribute so nothing is lost to presentation.  The only
 * arithmetic below is geometry: bar widths and chart coordinates.
 */

import { fmt, fmtPlan, fmtPoint, raw } from "./format.js";
import { h, VNode } from "./vnode.js";
import {
  isDeficitRationale,
  isProjectedRationale,
  Recommendation,
  RunEntry,
  SessionPayload,
  SessionSummary,
  WhatIfResponse,
} from "./types.js";

function valueSpan(cls: string, value: number | null | undefined,
                   digits = 4): VNode {
  return h("span", { class: cls, "data-raw": raw(value) },
           fmt(value, digits));
}

function planRow(candidates: number[][], counts: number[]): VNode {
  const cells = counts.map((count, i) =>
    h("li", { class: "plan-cell", "data-index": String(i),
              "data-raw": String(count) },
      `${fmtPoint(candidates[i] ?? [i])}: ${count}`));
  return h("ul", { class: "plan-cells" }, ...cells);
}

/** Allocation card for a recommended run, rationale included. */
export function recommendationCard(rec: Recommendation,
                                   candidates: number[][]): VNode {
  const body: VNode[] = [
    h("h3", { class: "rec-title" },
      `Run ${rec.j}: ${rec.method} recommends ${fmtPlan(rec.plan)}`),
    h("p", { class: "rec-plan", "data-raw": rec.plan.join(",") },
      `${rec.m} observations over ${rec.plan.length} candidates`),
    planRow(candidates, rec.plan),
  ];

  const rat = rec.rationale;
  if (isDeficitRationale(rat)) {
    const rows = rat.w_star.map((ws, i) => h(
      "tr", { class: "rationale-row", "data-index": String(i) },
      h("td", {}, fmtPoint(candidates[i] ?? [i])),
      h("td", { class: "val-w-star", "data-raw": raw(ws) }, fmt(ws)),
      h("td", { class: "val-omega",
                "data-raw": rat.omega ? raw(rat.omega[i]) : "" },
        rat.omega ? fmt(rat.omega[i]) : "–"),
      h("td", { class: "val-w-prime", "data-raw": raw(rat.w_prime[i]) },
        fmt(rat.w_prime[i])),
      h("td", { class: "val-w-tilde", "data-raw": raw(rat.w_tilde[i]) },
        fmt(rat.w_tilde[i])),
    ));
    body.push(h(
      "div", { class: "rationale rationale-deficit" },
      h("p", { class: "rationale-note" },
        "correction w' = w* + Q (w* - omega) / m with ",
        valueSpan("val-q", rat.Q, 4),
        " information ratios accumulated"),
      h("table", { class: "rationale-table" },
        h("thead", {},
          h("tr", {},
            h("th", {}, "point"), h("th", {}, "target w*"),
            h("th", {}, "realized omega"), h("th", {}, "corrected w'"),
            h("th", {}, "allocated w~"))),
        h("tbody", {}, ...rows)),
    ));
  } else if (isProjectedRationale(rat)) {
    const pieces: Array<VNode | string> = [
      h("p", { class: "rationale-note" },
        "plan minimizes the projected criterion at the current estimate"),
      h("p", { class: "val-theta-hat", "data-raw": rat.theta_hat.join(",") },
        `estimate: [${rat.theta_hat.map(v => fmt(v)).join(", ")}]`),
    ];
    if (rat.objective !== undefined && rat.objective !== null) {
      pieces.push(h("p", {},
                    "objective ", valueSpan("val-objective", rat.objective)));
    }
    if (rat.blend_weight !== null) {
      pieces.push(h("p", {},
                    "prior-mass share ",
                    valueSpan("val-blend", rat.blend_weight)));
    }
    body.push(h("div", { class: "rationale rationale-projected" }, ...pieces));
  } else {
    const rows = rat.w_star.map((ws, i) => h(
      "li", { class: "val-w-star", "data-index": String(i),
              "data-raw": raw(ws) },
      `${fmtPoint(candidates[i] ?? [i])}: ${fmt(ws)}`));
    body.push(h("div", { class: "rationale rationale-fixed" },
                h("p", { class: "rationale-note" },
                  "allocation tracks the fixed target weights"),
                h("ul", {}, ...rows)));
  }

  if (rec.forecast) {
    body.push(h("p", { class: "rec-forecast" },
                `projected ${rec.forecast.criterion}-efficiency `,
                valueSpan("val-forecast", rec.forecast.projected_efficiency)));
  }
  if (rec.flags.length) {
    body.push(h("p", { class: "rec-flags" }, rec.flags.join(", ")));
  }
  return h("section", { class: "rec-card", "data-method": rec.method,
                        "data-j": String(rec.j), "data-m": String(rec.m) },
           ...body);
}

/**
 * Target-versus-realized bar chart: one group per candidate with a w* bar,
 * an omega bar, and the corrected w' annotated on top.
 */
export function deficitChart(rationale: { w_star: number[];
                                          omega?: number[] | null;
                                          w_prime?: number[] },
                             candidates: number[][]): VNode {
  const pct = (v: number) => `${Math.max(0, Math.min(1, v)) * 100}%`;
  const groups = rationale.w_star.map((ws, i) => {
    const omega = rationale.omega?.[i];
    const wPrime = rationale.w_prime?.[i];
    const bars: VNode[] = [
      h("div", { class: "bar bar-target", "data-raw": raw(ws),
                 style: `width:${pct(ws)}` }, fmt(ws, 3)),
    ];
    if (omega !== undefined && omega !== null) {
      bars.push(h("div", { class: "bar bar-realized", "data-raw": raw(omega),
                           style: `width:${pct(omega)}` }, fmt(omega, 3)));
    }
    const label: Array<VNode | string> = [fmtPoint(candidates[i] ?? [i])];
    if (wPrime !== undefined) {
      label.push(h("span", { class: "annot-w-prime", "data-raw": raw(wPrime) },
                   ` w' = ${fmt(wPrime, 3)}`));
    }
    return h("div", { class: "deficit-group", "data-index": String(i) },
             h("div", { class: "deficit-label" }, ...label),
             ...bars);
  });
  return h("div", { class: "deficit-chart" },
           h("p", { class: "deficit-legend" },
             "target w* versus realized omega, corrected w' annotated"),
           ...groups);
}

const TRAJ_W = 420;
const TRAJ_H = 180;
const TRAJ_PAD = 24;

function trajPoints(runs: RunEntry[],
                    pick: (r: RunEntry) => number | null,
                    cls: string): VNode[] {
  const present = runs.filter(r => pick(r) !== null);
  if (!present.length) return [];
  const span = Math.max(1, runs.length - 1);
  const x = (j: number) =>
    TRAJ_PAD + ((j - runs[0].j) / span) * (TRAJ_W - 2 * TRAJ_PAD);
  const y = (eff: number) =>
    TRAJ_H - TRAJ_PAD - Math.max(0, Math.min(1, eff)) * (TRAJ_H - 2 * TRAJ_PAD);
  const dots = present.map(r => {
    const eff = pick(r)!;
    return h("circle", {
      class: `traj-dot ${cls}`,
      cx: x(r.j).toFixed(1), cy: y(eff).toFixed(1), r: "3",
      "data-j": String(r.j), "data-raw": raw(eff),
    });
  });
  const line = h("polyline", {
    class: `traj-line ${cls}`,
    points: present
      .map(r => `${x(r.j).toFixed(1)},${y(pick(r)!).toFixed(1)}`)
      .join(" "),
    fill: "none",
  });
  return [line, ...dots];
}

/** Efficiency trajectory over recorded runs; coordinates are presentation. */
export function trajectoryChart(runs: RunEntry[]): VNode {
  const children: VNode[] = [
    h("line", { class: "traj-unit", x1: String(TRAJ_PAD),
                x2: String(TRAJ_W - TRAJ_PAD),
                y1: String(TRAJ_PAD), y2: String(TRAJ_PAD) }),
    ...trajPoints(runs, r => r.eff_theta, "series-theta"),
    ...trajPoints(runs, r => r.eff_mle, "series-mle"),
  ];
  return h("svg", { class: "trajectory", viewBox: `0 0 ${TRAJ_W} ${TRAJ_H}`,
                    width: String(TRAJ_W), height: String(TRAJ_H) },
           ...children);
}

/** History table: one row per recorded run. */
export function runTable(runs: RunEntry[]): VNode {
  const rows = runs.map(r => h(
    "tr", { class: "run-row", "data-j": String(r.j) },
    h("td", {}, String(r.j)),
    h("td", { class: "run-plan", "data-raw": r.plan.join(",") },
      fmtPlan(r.plan)),
    h("td", {}, valueSpan("run-q", r.Q)),
    h("td", {}, valueSpan("run-eff-theta", r.eff_theta)),
    h("td", {}, valueSpan("run-eff-mle", r.eff_mle)),
    h("td", { class: "run-flags" }, r.flags.join(", ")),
  ));
  return h("table", { class: "run-table" },
           h("thead", {},
             h("tr", {},
               h("th", {}, "run"), h("th", {}, "plan"), h("th", {}, "Q"),
               h("th", {}, "eff at theta0"), h("th", {}, "eff at MLE"),
               h("th", {}, "flags"))),
           h("tbody", {}, ...rows));
}

/** Session totals and identity banner. */
export function sessionHeader(payload: SessionPayload): VNode {
  return h("header", { class: "session-header", "data-id": payload.id },
           h("h2", {}, `Session ${payload.id}`),
           h("p", { class: "session-config" },
             `${payload.config.model.family}, ${payload.config.criterion}-` +
             `criterion, policy ${payload.config.method}`),
           h("p", { class: "session-hash", "data-raw": payload.config_hash },
             `config ${payload.config_hash.slice(0, 12)}`),
           h("p", { class: "session-totals" },
             `${payload.totals.runs} runs, ${payload.totals.n} observations, ` +
             `counts ${fmtPlan(payload.totals.counts)}`));
}

/**
 * Side-by-side policy comparison.  Each column renders the server's
 * answer for one policy; the panel adds nothing of its own.
 */
export function whatIfPanel(columns: Array<{ label: string;
                                             resp: WhatIfResponse }>,
                            candidates: number[][]): VNode {
  const cols = columns.map(({ label, resp }) => {
    const parts: VNode[] = [
      h("h4", { class: "whatif-label" }, label),
      recommendationCard(resp.recommendation, candidates),
      h("p", { class: "whatif-basis",
               "data-raw": String(resp.based_on_runs) },
        `based on ${resp.based_on_runs} recorded runs`),
    ];
    if (resp.projected) {
      parts.push(h("p", { class: "whatif-projected" },
                   "hypothetical run projects efficiency ",
                   valueSpan("val-projected-eff", resp.projected.eff_theta)));
    }
    return h("div", { class: "whatif-col",
                      "data-method": resp.recommendation.method }, ...parts);
  });
  return h("div", { class: "whatif-panel" }, ...cols);
}

/** Landing-page table of known sessions. */
export function sessionList(rows: SessionSummary[]): VNode {
  const items = rows.map(s => h(
    "tr", { class: "session-row", "data-id": s.id },
    h("td", {}, h("a", { href: `#/session/${s.id}` }, s.id)),
    h("td", {}, s.method),
    h("td", {}, s.criterion),
    h("td", {}, String(s.runs)),
    h("td", {}, String(s.n)),
    h("td", {}, s.created_at),
  ));
  return h("table", { class: "session-list" },
           h("thead", {},
             h("tr", {},
               h("th", {}, "id"), h("th", {}, "policy"),
               h("th", {}, "criterion"), h("th", {}, "runs"),
               h("th", {}, "n"), h("th", {}, "created"))),
           h("tbody", {}, ...items));
}
