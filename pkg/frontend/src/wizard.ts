/**
 * New-session wizard: raw form state, client-side validation, and the
 * translation into the config document the service accepts.
 *
 * Validation runs before any network call; a form that fails it never
 * reaches the API.  Server-side 422s are surfaced separately by the app.
 */

import type { ApiClient } from "./api.js";
import type {
  CreateResponse,
  Criterion,
  Family,
  Method,
  SessionConfig,
} from "./types.js";

export interface WizardForm {
  family: Family;
  /** Gamma shape parameter, raw input text. */
  shape: string;
  /** Normal-family noise scale, raw input text. */
  sigma: string;
  /** One candidate point per line, coordinates separated by commas. */
  candidatesText: string;
  /** Initial parameter guess, comma separated. */
  theta0Text: string;
  criterion: Criterion;
  method: Method;
  /** First-run size, raw input text. */
  m1: string;
}

/** The benchmark gamma setting: vertices of the centred unit square. */
export const GAMMA_VERTEX_PRESET: WizardForm = {
  family: "gamma_log",
  shape: "0.1",
  sigma: "",
  candidatesText: "1, 1\n1, -1\n-1, 1\n-1, -1",
  theta0Text: "1, 1, 1",
  criterion: "D",
  method: "load",
  m1: "4",
};

export const BLANK_FORM: WizardForm = {
  family: "gamma_log",
  shape: "1.0",
  sigma: "1.0",
  candidatesText: "",
  theta0Text: "",
  criterion: "D",
  method: "load",
  m1: "4",
};

export interface WizardResult {
  config: SessionConfig | null;
  errors: Record<string, string>;
}

export class WizardValidationError extends Error {
  readonly errors: Record<string, string>;

  constructor(errors: Record<string, string>) {
    super(Object.values(errors).join("; "));
    this.name = "WizardValidationError";
    this.errors = errors;
  }
}

function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

export function parseVector(text: string): number[] | null {
  const parts = text.split(/[,\s]+/).filter(p => p.length > 0);
  if (!parts.length) return null;
  const values: number[] = [];
  for (const part of parts) {
    const value = Number(part);
    if (!Number.isFinite(value)) return null;
    values.push(value);
  }
  return values;
}

export function parsePoints(text: string): number[][] | null {
  const lines = text.split("\n").map(l => l.trim()).filter(l => l.length > 0);
  if (!lines.length) return null;
  const points: number[][] = [];
  for (const line of lines) {
    const point = parseVector(line);
    if (point === null) return null;
    points.push(point);
  }
  const dim = points[0].length;
  if (points.some(p => p.length !== dim)) return null;
  return points;
}

/** Exponent rows for the planar model 1, x1, ..., xd. */
function planarRegressors(dim: number): number[][] {
  const rows: number[][] = [new Array(dim).fill(0)];
  for (let k = 0; k < dim; k++) {
    const row = new Array(dim).fill(0);
    row[k] = 1;
    rows.push(row);
  }
  return rows;
}

/**
 * Validate the form and build the config document.  All checks are local;
 * nothing here talks to the server.
 */
export function buildConfig(form: WizardForm): WizardResult {
  const errors: Record<string, string> = {};

  if (form.family !== "gamma_log" && form.family !== "normal_sqrt") {
    errors.family = "model family must be gamma_log or normal_sqrt";
  }
  let shape: number | null = null;
  let sigma: number | null = null;
  if (form.family === "gamma_log") {
    shape = parseNumber(form.shape);
    if (shape === null || shape <= 0) {
      errors.shape = "shape must be a positive number";
    }
  }
  if (form.family === "normal_sqrt") {
    sigma = parseNumber(form.sigma);
    if (sigma === null || sigma <= 0) {
      errors.sigma = "sigma must be a positive number";
    }
  }

  const candidates = parsePoints(form.candidatesText);
  if (candidates === null) {
    errors.candidates = "candidates must be one numeric point per line";
  } else if (candidates.length < 2) {
    errors.candidates = "at least two candidate points are required";
  }

  const theta0 = parseVector(form.theta0Text);
  if (theta0 === null) {
    errors.theta0 = "initial parameters must be a list of numbers";
  } else if (candidates !== null && theta0.length !== candidates[0].length + 1) {
    errors.theta0 =
      `expected ${candidates[0].length + 1} parameters for ` +
      `${candidates[0].length}-coordinate candidates`;
  }

  if (form.criterion !== "D" && form.criterion !== "A") {
    errors.criterion = "criterion must be D or A";
  }
  if (!["flod", "load", "moad", "aod"].includes(form.method)) {
    errors.method = "unknown design policy";
  }

  const m1 = parseNumber(form.m1);
  if (m1 === null || !Number.isInteger(m1) || m1 < 1) {
    errors.m1 = "first run size must be a positive integer";
  }

  if (Object.keys(errors).length > 0) {
    return { config: null, errors };
  }

  const model: SessionConfig["model"] = { family: form.family };
  if (form.family === "gamma_log") model.shape = shape!;
  if (form.family === "normal_sqrt") model.sigma = sigma!;
  return {
    config: {
      model,
      regressors: planarRegressors(candidates![0].length),
      candidates: candidates!,
      criterion: form.criterion,
      theta0: theta0!,
      method: form.method,
      m1: m1!,
    },
    errors: {},
  };
}

/**
 * Validate, then create the session.  Throws WizardValidationError without
 * touching the network when the form is invalid.
 */
export async function submitWizard(api: ApiClient, form: WizardForm,
                                   idempotencyKey?: string):
    Promise<CreateResponse> {
  const { config, errors } = buildConfig(form);
  if (config === null) throw new WizardValidationError(errors);
  return api.createSession(config, idempotencyKey);
}
