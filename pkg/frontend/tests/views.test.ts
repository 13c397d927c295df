import { describe, expect, it } from "vitest";

import {
  deficitChart,
  recommendationCard,
  runTable,
  sessionHeader,
  sessionList,
  trajectoryChart,
  whatIfPanel,
} from "../src/views.js";
import { VNode, findByClass, render, text } from "../src/vnode.js";
import type { DeficitRationale, ProjectedRationale } from "../src/types.js";
import {
  CANDIDATES,
  DEFICIT_RECOMMENDATION,
  FIRST_RECOMMENDATION,
  PROJECTED_RECOMMENDATION,
  RUNS,
  SESSION,
  WHATIF_HYPOTHETICAL,
  WHATIF_PLAIN,
} from "./stubs.js";

function raws(root: VNode, cls: string): string[] {
  return findByClass(root, cls).map(n => n.attrs["data-raw"]);
}

describe("recommendation card", () => {
  const rationale = DEFICIT_RECOMMENDATION.rationale as DeficitRationale;

  it("shows the plan as a tuple straight from the payload", () => {
    const card = recommendationCard(DEFICIT_RECOMMENDATION, CANDIDATES);
    expect(text(card)).toContain("(0, 1, 1, 0)");
    expect(card.attrs["data-method"]).toBe("load");
    expect(card.attrs["data-j"]).toBe("3");
    expect(card.attrs["data-m"]).toBe("2");
    const cells = findByClass(card, "plan-cell");
    expect(cells.map(c => c.attrs["data-raw"])).toEqual(["0", "1", "1", "0"]);
  });

  it("reproduces every deficit-rationale value exactly", () => {
    const card = recommendationCard(DEFICIT_RECOMMENDATION, CANDIDATES);
    expect(raws(card, "val-w-star"))
      .toEqual(rationale.w_star.map(String));
    expect(raws(card, "val-omega"))
      .toEqual(rationale.omega!.map(String));
    expect(raws(card, "val-w-prime"))
      .toEqual(rationale.w_prime.map(String));
    expect(raws(card, "val-w-tilde"))
      .toEqual(rationale.w_tilde.map(String));
    expect(raws(card, "val-q")).toEqual([String(rationale.Q)]);
  });

  it("rounds for display without touching the raw copy", () => {
    const card = recommendationCard(DEFICIT_RECOMMENDATION, CANDIDATES);
    const q = findByClass(card, "val-q")[0];
    expect(text(q)).toBe(rationale.Q.toFixed(4));
    expect(q.attrs["data-raw"]).toBe("7.123456789012345");
  });

  it("carries the forecast efficiency verbatim", () => {
    const card = recommendationCard(DEFICIT_RECOMMENDATION, CANDIDATES);
    expect(raws(card, "val-forecast")).toEqual(["0.8765432109876543"]);
  });

  it("reproduces estimate-based rationales exactly", () => {
    const card = recommendationCard(PROJECTED_RECOMMENDATION, CANDIDATES);
    const rat = PROJECTED_RECOMMENDATION.rationale as ProjectedRationale;
    expect(findByClass(card, "val-theta-hat")[0].attrs["data-raw"])
      .toBe(rat.theta_hat.join(","));
    expect(raws(card, "val-objective")).toEqual([String(rat.objective)]);
    expect(raws(card, "val-blend")).toEqual([String(rat.blend_weight)]);
  });

  it("lists fixed target weights for a first run", () => {
    const card = recommendationCard(FIRST_RECOMMENDATION, CANDIDATES);
    expect(text(card)).toContain("(1, 1, 1, 1)");
    expect(raws(card, "val-w-star"))
      .toEqual(["0.25", "0.25", "0.25", "0.25"]);
  });
});

describe("deficit chart", () => {
  const rationale = DEFICIT_RECOMMENDATION.rationale as DeficitRationale;

  it("draws one group per candidate with exact bar values", () => {
    const chart = deficitChart(rationale, CANDIDATES);
    const groups = findByClass(chart, "deficit-group");
    expect(groups).toHaveLength(4);
    expect(raws(chart, "bar-target")).toEqual(rationale.w_star.map(String));
    expect(raws(chart, "bar-realized")).toEqual(rationale.omega!.map(String));
  });

  it("annotates the corrected weight on every group", () => {
    const chart = deficitChart(rationale, CANDIDATES);
    expect(raws(chart, "annot-w-prime"))
      .toEqual(rationale.w_prime.map(String));
    expect(text(findByClass(chart, "annot-w-prime")[1]))
      .toContain("w' = 0.547");
  });

  it("omits realized bars before any data exists", () => {
    const chart = deficitChart({ w_star: [0.5, 0.5], omega: null },
                               [[0, 0], [1, 0]]);
    expect(findByClass(chart, "bar-target")).toHaveLength(2);
    expect(findByClass(chart, "bar-realized")).toHaveLength(0);
  });
});

describe("trajectory chart", () => {
  it("plots one dot per recorded efficiency with the exact value", () => {
    const svg = trajectoryChart(RUNS);
    const theta = findByClass(svg, "series-theta")
      .filter(n => n.tag === "circle");
    expect(theta.map(n => n.attrs["data-raw"]))
      .toEqual(["0.7182818284590452", "0.8414709848078965"]);
    expect(theta.map(n => n.attrs["data-j"])).toEqual(["1", "2"]);
    const mle = findByClass(svg, "series-mle")
      .filter(n => n.tag === "circle");
    expect(mle.map(n => n.attrs["data-raw"]))
      .toEqual(["0.9092974268256817"]);
  });

  it("renders an empty frame when no runs exist", () => {
    const svg = trajectoryChart([]);
    expect(findByClass(svg, "traj-dot")).toHaveLength(0);
    expect(svg.tag).toBe("svg");
  });
});

describe("run table", () => {
  it("carries per-run payload values into data attributes", () => {
    const table = runTable(RUNS);
    const rows = findByClass(table, "run-row");
    expect(rows).toHaveLength(2);
    expect(raws(table, "run-q"))
      .toEqual(["3.141592653589793", "6.283185307179586"]);
    expect(raws(table, "run-eff-theta"))
      .toEqual(["0.7182818284590452", "0.8414709848078965"]);
    expect(raws(table, "run-eff-mle"))
      .toEqual(["", "0.9092974268256817"]);
    expect(findByClass(table, "run-plan").map(n => n.attrs["data-raw"]))
      .toEqual(["1,1,1,1", "2,0,1,1"]);
  });

  it("shows a placeholder for efficiencies the server left null", () => {
    const table = runTable(RUNS);
    const firstMle = findByClass(table, "run-eff-mle")[0];
    expect(text(firstMle)).toBe("–");
  });
});

describe("session header and list", () => {
  it("summarizes identity and totals from the payload", () => {
    const header = sessionHeader(SESSION);
    expect(header.attrs["data-id"]).toBe("s-test");
    expect(findByClass(header, "session-hash")[0].attrs["data-raw"])
      .toBe(SESSION.config_hash);
    expect(text(header)).toContain("2 runs, 8 observations");
    expect(text(header)).toContain("(3, 1, 2, 2)");
  });

  it("lists sessions with links", () => {
    const table = sessionList([{
      id: "s-1", created_at: "2026-08-14T10:00:00Z", config_hash: "ff",
      method: "load", criterion: "D", runs: 2, n: 8,
    }]);
    const row = findByClass(table, "session-row")[0];
    expect(row.attrs["data-id"]).toBe("s-1");
    expect(render(table)).toContain('href="#/session/s-1"');
  });
});

describe("what-if panel", () => {
  it("renders each policy column from its own response only", () => {
    const panel = whatIfPanel([
      { label: "load", resp: WHATIF_PLAIN },
      { label: "moad", resp: WHATIF_HYPOTHETICAL },
    ], CANDIDATES);
    const cols = findByClass(panel, "whatif-col");
    expect(cols.map(c => c.attrs["data-method"])).toEqual(["load", "moad"]);
    expect(findByClass(cols[0], "whatif-basis")[0].attrs["data-raw"])
      .toBe("2");
  });

  it("embeds the identical recommendation card markup", () => {
    const panel = whatIfPanel([{ label: "load", resp: WHATIF_PLAIN }],
                              CANDIDATES);
    const standalone = render(
      recommendationCard(WHATIF_PLAIN.recommendation, CANDIDATES));
    expect(render(panel)).toContain(standalone);
  });

  it("shows the projected efficiency of a hypothetical run verbatim", () => {
    const panel = whatIfPanel([{ label: "moad", resp: WHATIF_HYPOTHETICAL }],
                              CANDIDATES);
    expect(raws(panel, "val-projected-eff"))
      .toEqual(["0.5403023058681398"]);
  });

  it("omits the projection block when no hypothetical was sent", () => {
    const panel = whatIfPanel([{ label: "load", resp: WHATIF_PLAIN }],
                              CANDIDATES);
    expect(findByClass(panel, "whatif-projected")).toHaveLength(0);
  });
});
