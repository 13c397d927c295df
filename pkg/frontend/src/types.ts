/**
 * Typed mirrors of the v1 session API payloads.
 *
 * Every number in these shapes is computed server-side.  The UI renders
 * them as-is (rounding is display-only) and never derives new statistics.
 */

export type Family = "gamma_log" | "normal_sqrt";
export type Criterion = "D" | "A";
export type Method = "flod" | "load" | "moad" | "aod";

export interface ModelConfig {
  family: Family;
  shape?: number;
  sigma?: number;
}

/** Create-session document, same JSON the CLI and library accept. */
export interface SessionConfig {
  model: ModelConfig;
  regressors: number[][];
  candidates: number[][];
  criterion: Criterion;
  theta0: number[];
  method: Method;
  m1: number;
}

/** Rationale attached to a fixed-allocation or first-run plan. */
export interface FixedRationale {
  w_star: number[];
}

/** Rationale for a deficit-correcting plan: w' = w* + Q (w* - omega) / m. */
export interface DeficitRationale {
  w_star: number[];
  omega: number[] | null;
  Q: number;
  w_prime: number[];
  w_tilde: number[];
}

/** Rationale for plans chosen by minimizing a projected criterion. */
export interface ProjectedRationale {
  theta_hat: number[];
  blend_weight: number | null;
  objective?: number | null;
}

export type Rationale = FixedRationale | DeficitRationale | ProjectedRationale;

export function isDeficitRationale(r: Rationale): r is DeficitRationale {
  return "w_prime" in r;
}

export function isProjectedRationale(r: Rationale): r is ProjectedRationale {
  return "theta_hat" in r;
}

export interface Forecast {
  criterion: Criterion;
  projected_efficiency: number;
  at_theta: number[];
}

export interface Recommendation {
  v: number;
  method: Method;
  j: number;
  m: number;
  plan: number[];
  rationale: Rationale;
  flags: string[];
  forecast: Forecast | null;
}

/** One recorded run as the session payload reports it. */
export interface RunEntry {
  j: number;
  plan: number[];
  m: number;
  flags: string[];
  recorded_at: string;
  omega: number[] | null;
  Q: number | null;
  eff_theta: number | null;
  eff_mle: number | null;
  theta_hat: number[] | null;
}

export interface Totals {
  runs: number;
  n: number;
  counts: number[];
}

export interface SessionPayload {
  v: number;
  id: string;
  created_at: string;
  config: SessionConfig;
  config_hash: string;
  candidates: number[][];
  w_star: number[];
  totals: Totals;
  runs: RunEntry[];
  current: RunEntry | null;
}

export interface CreateResponse {
  v: number;
  id: string;
  created_at: string;
  config_hash: string;
  first_recommendation: Recommendation | null;
}

export interface SessionSummary {
  id: string;
  created_at: string;
  config_hash: string;
  method: Method;
  criterion: Criterion;
  runs: number;
  n: number;
}

export interface ListResponse {
  v: number;
  sessions: SessionSummary[];
}

export interface RecordRunResponse {
  v: number;
  run: RunEntry;
  totals: Totals;
}

export interface WhatIfRequest {
  method?: Method;
  m?: number;
  hypothetical?: {
    plan: number[];
    responses: number[][];
  };
}

export interface WhatIfResponse {
  v: number;
  recommendation: Recommendation;
  projected: RunEntry | null;
  based_on_runs: number;
}

export interface ErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
