/**
 * Thin typed client for the v1 session API.
 *
 * Each method maps to exactly one endpoint and returns the decoded JSON
 * payload unchanged.  Failures become {@link ApiError} carrying the
 * server's own code, message, and detail verbatim so forms can show them
 * inline.
 */

import type {
  CreateResponse,
  ErrorBody,
  ListResponse,
  Method,
  RecordRunResponse,
  Recommendation,
  SessionConfig,
  SessionPayload,
  WhatIfRequest,
  WhatIfResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: unknown;

  constructor(status: number, body: ErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

export interface HealthResponse {
  status: string;
  v: number;
  sessions: number;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: typeof fetch;

  constructor(base = "", fetchFn: typeof fetch = fetch) {
    // strip a trailing slash so path joins stay predictable
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  private async request<T>(method: string, path: string,
                           body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.base}${path}`, init);
    const text = await resp.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!resp.ok) {
      const fallback: ErrorBody = {
        code: `http_${resp.status}`,
        message: text || resp.statusText,
      };
      const body_ = (payload && typeof payload === "object"
        && "code" in (payload as object))
        ? payload as ErrorBody : fallback;
      throw new ApiError(resp.status, body_);
    }
    return payload as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("GET", "/healthz");
  }

  createSession(config: SessionConfig,
                idempotencyKey?: string): Promise<CreateResponse> {
    const body: Record<string, unknown> = { config };
    if (idempotencyKey !== undefined) {
      body.idempotency_key = idempotencyKey;
    }
    return this.request("POST", "/v1/sessions", body);
  }

  listSessions(): Promise<ListResponse> {
    return this.request("GET", "/v1/sessions");
  }

  getSession(id: string): Promise<SessionPayload> {
    return this.request("GET", `/v1/sessions/${encodeURIComponent(id)}`);
  }

  recordRun(id: string, plan: number[],
            responses: number[][]): Promise<RecordRunResponse> {
    return this.request("POST", `/v1/sessions/${encodeURIComponent(id)}/runs`,
                        { plan, responses });
  }

  recommendation(id: string,
                 opts: { method?: Method; m?: number } = {}):
      Promise<Recommendation> {
    const params = new URLSearchParams();
    if (opts.method !== undefined) params.set("method", opts.method);
    if (opts.m !== undefined) params.set("m", String(opts.m));
    const query = params.toString();
    const suffix = query ? `?${query}` : "";
    return this.request(
      "GET",
      `/v1/sessions/${encodeURIComponent(id)}/recommendation${suffix}`);
  }

  whatIf(id: string, body: WhatIfRequest): Promise<WhatIfResponse> {
    return this.request(
      "POST", `/v1/sessions/${encodeURIComponent(id)}/what-if`, body);
  }
}
