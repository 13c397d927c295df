/**
 * Test doubles: a recording fetch stub and canned API payloads with
 * full-precision values, so exact reproduction is checkable.
 */

import type {
  Recommendation,
  RunEntry,
  SessionPayload,
  WhatIfResponse,
} from "../src/types.js";

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface StubRoute {
  status?: number;
  payload: unknown;
}

/** Fetch replacement that answers from a handler and records every call. */
export function stubFetch(handler: (url: string, init?: RequestInit)
    => StubRoute) {
  const calls: RecordedCall[] = [];
  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    calls.push({
      url,
      method: init?.method ?? "GET",
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const route = handler(url, init);
    return new Response(JSON.stringify(route.payload), {
      status: route.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { fetchFn, calls };
}

export const CANDIDATES = [[1, 1], [1, -1], [-1, 1], [-1, -1]];

export const FIRST_RECOMMENDATION: Recommendation = {
  v: 1,
  method: "load",
  j: 1,
  m: 4,
  plan: [1, 1, 1, 1],
  rationale: { w_star: [0.25, 0.25, 0.25, 0.25] },
  flags: [],
  forecast: null,
};

export const DEFICIT_RECOMMENDATION: Recommendation = {
  v: 1,
  method: "load",
  j: 3,
  m: 2,
  plan: [0, 1, 1, 0],
  rationale: {
    w_star: [0.25, 0.25, 0.25, 0.25],
    omega: [0.3333333333333333, 0.16666666666666666,
            0.2857142857142857, 0.21428571428571427],
    Q: 7.123456789012345,
    w_prime: [-0.046874999999999986, 0.546875,
              0.12276785714285712, 0.37723214285714285],
    w_tilde: [0.0, 0.5224880382775119, 0.11722488038277511,
              0.36028708133971294],
  },
  flags: [],
  forecast: {
    criterion: "D",
    projected_efficiency: 0.8765432109876543,
    at_theta: [1, 1, 1],
  },
};

export const PROJECTED_RECOMMENDATION: Recommendation = {
  v: 1,
  method: "moad",
  j: 3,
  m: 2,
  plan: [2, 0, 0, 0],
  rationale: {
    theta_hat: [0.9123456789012345, 1.0987654321098765, 0.8765432109876543],
    blend_weight: 0.42857142857142855,
    objective: 0.06789012345678901,
  },
  flags: [],
  forecast: null,
};

export const RUNS: RunEntry[] = [
  {
    j: 1, plan: [1, 1, 1, 1], m: 4, flags: [],
    recorded_at: "2026-08-14T10:00:00Z",
    omega: [0.25, 0.25, 0.25, 0.25],
    Q: 3.141592653589793,
    eff_theta: 0.7182818284590452,
    eff_mle: null,
    theta_hat: null,
  },
  {
    j: 2, plan: [2, 0, 1, 1], m: 4, flags: [],
    recorded_at: "2026-08-14T10:05:00Z",
    omega: [0.4, 0.1, 0.25, 0.25],
    Q: 6.283185307179586,
    eff_theta: 0.8414709848078965,
    eff_mle: 0.9092974268256817,
    theta_hat: [1.01, 0.98, 1.02],
  },
];

export const SESSION: SessionPayload = {
  v: 1,
  id: "s-test",
  created_at: "2026-08-14T10:00:00Z",
  config: {
    model: { family: "gamma_log", shape: 0.1 },
    regressors: [[0, 0], [1, 0], [0, 1]],
    candidates: CANDIDATES,
    criterion: "D",
    theta0: [1, 1, 1],
    method: "load",
    m1: 4,
  },
  config_hash: "abc123def456abc123def456",
  candidates: CANDIDATES,
  w_star: [0.25, 0.25, 0.25, 0.25],
  totals: { runs: 2, n: 8, counts: [3, 1, 2, 2] },
  runs: RUNS,
  current: RUNS[1],
};

export const WHATIF_PLAIN: WhatIfResponse = {
  v: 1,
  recommendation: DEFICIT_RECOMMENDATION,
  projected: null,
  based_on_runs: 2,
};

export const WHATIF_HYPOTHETICAL: WhatIfResponse = {
  v: 1,
  recommendation: PROJECTED_RECOMMENDATION,
  projected: {
    j: 3, plan: [0, 2, 0, 0], m: 2, flags: [],
    recorded_at: "2026-08-14T10:10:00Z",
    omega: [0.3, 0.3, 0.2, 0.2],
    Q: 9.876543210987654,
    eff_theta: 0.5403023058681398,
    eff_mle: null,
    theta_hat: null,
  },
  based_on_runs: 2,
};
