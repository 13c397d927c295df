/**
 * Page wiring: hash routing, the two-second payload poll, and the forms.
 *
 * Dynamic regions are repainted from server payloads; the forms are built
 * once per page so typing survives the poll.  Everything numeric on
 * screen came out of a response body.
 */

import { ApiClient, ApiError } from "./api.js";
import { fmtPlan } from "./format.js";
import { PollHandle, startPolling } from "./poll.js";
import {
  Method,
  Recommendation,
  SessionPayload,
  WhatIfRequest,
  WhatIfResponse,
  isDeficitRationale,
} from "./types.js";
import { render } from "./vnode.js";
import {
  deficitChart,
  recommendationCard,
  runTable,
  sessionHeader,
  sessionList,
  trajectoryChart,
  whatIfPanel,
} from "./views.js";
import {
  BLANK_FORM,
  GAMMA_VERTEX_PRESET,
  WizardForm,
  buildConfig,
} from "./wizard.js";
import { parseVector } from "./wizard.js";

const api = new ApiClient("");

let poll: PollHandle | null = null;

interface SessionState {
  id: string;
  payload: SessionPayload | null;
  committed: Recommendation | null;
}

const state: SessionState = { id: "", payload: null, committed: null };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function setBanner(message: string, kind = "error") {
  el("banner").innerHTML = message
    ? render({ tag: "div", attrs: { class: `banner banner-${kind}` },
               children: [message] })
    : "";
}

/* ---------------------------------------------------------------- home */

const WIZARD_FIELDS: Array<[keyof WizardForm, string, string]> = [
  ["shape", "gamma shape", "input"],
  ["sigma", "noise sigma", "input"],
  ["candidatesText", "candidate points (one per line)", "textarea"],
  ["theta0Text", "initial parameters", "input"],
  ["m1", "first run size", "input"],
];

function wizardFormHtml(form: WizardForm): string {
  const select = (name: string, options: string[], chosen: string) =>
    `<label>${name} <select id="wiz-${name}">` +
    options.map(o =>
      `<option value="${o}"${o === chosen ? " selected" : ""}>${o}</option>`)
      .join("") +
    "</select></label>";
  const fields = WIZARD_FIELDS.map(([key, label, tag]) => {
    const value = String(form[key]);
    const widget = tag === "textarea"
      ? `<textarea id="wiz-${key}" rows="4">${value}</textarea>`
      : `<input id="wiz-${key}" value="${value}">`;
    return `<label>${label} ${widget}` +
           `<span class="field-error" id="err-${key}"></span></label>`;
  }).join("");
  return `
    <section class="wizard">
      <h2>New session</h2>
      <button id="wiz-preset" type="button">gamma vertex preset</button>
      ${select("family", ["gamma_log", "normal_sqrt"], form.family)}
      ${select("criterion", ["D", "A"], form.criterion)}
      ${select("method", ["flod", "load", "moad", "aod"], form.method)}
      ${fields}
      <button id="wiz-submit" type="button">create session</button>
      <div id="wiz-server-error" class="field-error"></div>
    </section>`;
}

function readWizardForm(): WizardForm {
  const get = (id: string) =>
    (document.getElementById(`wiz-${id}`) as HTMLInputElement).value;
  return {
    family: get("family") as WizardForm["family"],
    shape: get("shape"),
    sigma: get("sigma"),
    candidatesText: get("candidatesText"),
    theta0Text: get("theta0Text"),
    criterion: get("criterion") as WizardForm["criterion"],
    method: get("method") as WizardForm["method"],
    m1: get("m1"),
  };
}

function fillWizardForm(form: WizardForm) {
  for (const key of Object.keys(form) as Array<keyof WizardForm>) {
    const input = document.getElementById(`wiz-${key}`);
    if (input) (input as HTMLInputElement).value = String(form[key]);
  }
}

function clearWizardErrors() {
  for (const [key] of WIZARD_FIELDS) {
    const span = document.getElementById(`err-${key}`);
    if (span) span.textContent = "";
  }
  el("wiz-server-error").textContent = "";
}

async function submitFromWizard() {
  clearWizardErrors();
  const form = readWizardForm();
  const { config, errors } = buildConfig(form);
  if (config === null) {
    // invalid form: report inline, never call the API
    for (const [field, message] of Object.entries(errors)) {
      const span = document.getElementById(`err-${field}`);
      if (span) span.textContent = message;
      else el("wiz-server-error").textContent = message;
    }
    return;
  }
  try {
    const created = await api.createSession(config);
    window.location.hash = `#/session/${created.id}`;
  } catch (err) {
    if (err instanceof ApiError) {
      el("wiz-server-error").textContent = `${err.code}: ${err.message}`;
    } else {
      el("wiz-server-error").textContent = String(err);
    }
  }
}

async function renderHome() {
  stopPolling();
  el("app").innerHTML = `
    ${wizardFormHtml(BLANK_FORM)}
    <section><h2>Sessions</h2><div id="session-list">loading…</div></section>
    <div id="banner"></div>`;
  el("wiz-preset").addEventListener("click",
                                    () => fillWizardForm(GAMMA_VERTEX_PRESET));
  el("wiz-submit").addEventListener("click", () => void submitFromWizard());
  try {
    const listing = await api.listSessions();
    el("session-list").innerHTML = render(sessionList(listing.sessions));
  } catch (err) {
    el("session-list").textContent = String(err);
  }
}

/* ------------------------------------------------------------- session */

function repaintSession(payload: SessionPayload,
                        committed: Recommendation | null) {
  el("session-header").innerHTML = render(sessionHeader(payload));
  if (committed) {
    let chart = "";
    if (isDeficitRationale(committed.rationale)) {
      chart = render(deficitChart(committed.rationale, payload.candidates));
    }
    el("rec-region").innerHTML =
      render(recommendationCard(committed, payload.candidates)) + chart;
  }
  el("traj-region").innerHTML =
    render(trajectoryChart(payload.runs)) + render(runTable(payload.runs));
}

function defaultRunSize(payload: SessionPayload): number {
  return payload.totals.runs === 0 ? payload.config.m1 : 1;
}

async function refreshRecommendation() {
  if (!state.payload) return;
  state.committed = await api.recommendation(state.id, {
    m: defaultRunSize(state.payload),
  });
  fillRunForm(state.committed.plan);
}

function fillRunForm(plan: number[]) {
  plan.forEach((count, i) => {
    const input = document.getElementById(`run-count-${i}`);
    if (input) (input as HTMLInputElement).value = String(count);
  });
  const label = document.getElementById("run-committed");
  if (label) label.textContent = `committed plan ${fmtPlan(plan)}`;
}

function runFormHtml(payload: SessionPayload): string {
  const rows = payload.candidates.map((point, i) => `
    <div class="run-entry">
      <span>[${point.join(", ")}]</span>
      <input id="run-count-${i}" size="3" value="0">
      <input id="run-resp-${i}" placeholder="responses, comma separated">
      <span class="field-error" id="run-err-${i}"></span>
    </div>`).join("");
  return `
    <section class="run-form">
      <h3>Record a run</h3>
      <p id="run-committed"></p>
      ${rows}
      <button id="run-submit" type="button">record</button>
      <span class="field-error" id="run-error"></span>
    </section>`;
}

async function submitRun() {
  if (!state.payload || !state.committed) return;
  el("run-error").textContent = "";
  const k = state.payload.candidates.length;
  const plan: number[] = [];
  const responses: number[][] = [];
  for (let i = 0; i < k; i++) {
    const errSpan = el(`run-err-${i}`);
    errSpan.textContent = "";
    const count = Number((el(`run-count-${i}`) as HTMLInputElement).value);
    if (!Number.isInteger(count) || count < 0) {
      errSpan.textContent = "count must be a nonnegative integer";
      return;
    }
    const rawText = (el(`run-resp-${i}`) as HTMLInputElement).value;
    const values = rawText.trim() ? parseVector(rawText) : [];
    if (values === null) {
      errSpan.textContent = "responses must be numbers";
      return;
    }
    if (values.length !== count) {
      errSpan.textContent =
        `${count} responses expected, got ${values.length}`;
      return;
    }
    plan.push(count);
    responses.push(values);
  }
  // the run must follow the committed plan; recommit via what-if to change it
  const committed = state.committed.plan;
  if (plan.some((c, i) => c !== committed[i])) {
    el("run-error").textContent =
      `counts must match the committed plan ${fmtPlan(committed)}`;
    return;
  }
  try {
    await api.recordRun(state.id, plan, responses);
    for (let i = 0; i < k; i++) {
      (el(`run-resp-${i}`) as HTMLInputElement).value = "";
    }
    await refreshSession();
    await refreshRecommendation();
    if (state.payload) repaintSession(state.payload, state.committed);
    setBanner("");
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      setBanner("session changed elsewhere; reload to continue", "conflict");
      el("run-error").innerHTML =
        'another writer got there first — ' +
        '<button id="run-refresh" type="button">refresh</button>';
      el("run-refresh").addEventListener("click", () => void reloadSession());
    } else if (err instanceof ApiError) {
      el("run-error").textContent = `${err.code}: ${err.message}`;
    } else {
      el("run-error").textContent = String(err);
    }
  }
}

/* ------------------------------------------------------------- what-if */

const WHATIF_METHODS: Method[] = ["load", "moad", "flod"];

function whatIfFormHtml(): string {
  const checks = WHATIF_METHODS.map(m =>
    `<label><input type="checkbox" id="wi-method-${m}" checked>${m}</label>`)
    .join(" ");
  return `
    <section class="whatif-form">
      <h3>What if?</h3>
      <div>${checks}</div>
      <label>next run size m
        <input type="range" id="wi-m" min="1" max="8" value="1">
        <span id="wi-m-label">1</span>
      </label>
      <label>hypothetical plan (optional)
        <input id="wi-plan" placeholder="e.g. 0, 2, 0, 0"></label>
      <label>hypothetical responses (one candidate per line)
        <textarea id="wi-resp" rows="4"></textarea></label>
      <button id="wi-run" type="button">compare policies</button>
      <span class="field-error" id="wi-error"></span>
      <div id="whatif-results"></div>
    </section>`;
}

function readHypothetical(): WhatIfRequest["hypothetical"] | null | undefined {
  const planText = (el("wi-plan") as HTMLInputElement).value.trim();
  if (!planText) return undefined;
  const plan = parseVector(planText);
  if (plan === null) return null;
  const lines = (el("wi-resp") as HTMLTextAreaElement).value.split("\n");
  const responses: number[][] = plan.map((_, i) => {
    const line = (lines[i] ?? "").trim();
    const values = line ? parseVector(line) : [];
    return values ?? [];
  });
  return { plan, responses };
}

async function runWhatIf() {
  if (!state.payload) return;
  el("wi-error").textContent = "";
  const m = Number((el("wi-m") as HTMLInputElement).value);
  const hypo = readHypothetical();
  if (hypo === null) {
    el("wi-error").textContent = "hypothetical plan must be numeric";
    return;
  }
  const methods = WHATIF_METHODS.filter(name =>
    (el(`wi-method-${name}`) as HTMLInputElement).checked);
  try {
    const columns: Array<{ label: string; resp: WhatIfResponse }> = [];
    for (const method of methods) {
      const body: WhatIfRequest = { method, m };
      if (hypo !== undefined) body.hypothetical = hypo;
      columns.push({ label: method, resp: await api.whatIf(state.id, body) });
    }
    el("whatif-results").innerHTML =
      render(whatIfPanel(columns, state.payload.candidates));
    wireCommitButtons(columns);
  } catch (err) {
    el("wi-error").textContent = err instanceof ApiError
      ? `${err.code}: ${err.message}` : String(err);
  }
}

function wireCommitButtons(columns: Array<{ label: string;
                                            resp: WhatIfResponse }>) {
  const host = el("whatif-results");
  const cols = host.querySelectorAll(".whatif-col");
  cols.forEach((col, idx) => {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = "commit this plan";
    button.addEventListener("click", () => {
      state.committed = columns[idx].resp.recommendation;
      fillRunForm(state.committed.plan);
      if (state.payload) repaintSession(state.payload, state.committed);
    });
    col.appendChild(button);
  });
}

/* ------------------------------------------------------------ lifecycle */

async function refreshSession() {
  const previous = state.payload?.totals.runs;
  state.payload = await api.getSession(state.id);
  if (previous !== undefined && previous !== state.payload.totals.runs) {
    // someone else recorded a run; pick up the new recommendation too
    await refreshRecommendation();
  }
}

async function reloadSession() {
  setBanner("");
  await refreshSession();
  await refreshRecommendation();
  if (state.payload) repaintSession(state.payload, state.committed);
}

function stopPolling() {
  if (poll) {
    poll.stop();
    poll = null;
  }
}

async function renderSession(id: string) {
  stopPolling();
  state.id = id;
  state.payload = null;
  state.committed = null;
  el("app").innerHTML = `
    <p><a href="#/">all sessions</a></p>
    <div id="banner"></div>
    <div id="session-header"></div>
    <div id="rec-region"></div>
    <div id="traj-region"></div>
    <div id="forms"></div>`;
  try {
    state.payload = await api.getSession(id);
  } catch (err) {
    el("session-header").textContent = String(err);
    return;
  }
  el("forms").innerHTML = runFormHtml(state.payload) + whatIfFormHtml();
  el("run-submit").addEventListener("click", () => void submitRun());
  el("wi-run").addEventListener("click", () => void runWhatIf());
  const slider = el("wi-m") as HTMLInputElement;
  slider.addEventListener("input", () => {
    el("wi-m-label").textContent = slider.value;
  });
  await refreshRecommendation();
  repaintSession(state.payload, state.committed);
  poll = startPolling(async () => {
    if (window.location.hash !== `#/session/${id}`) return;
    await refreshSession();
    if (state.payload) repaintSession(state.payload, state.committed);
  });
}

function route() {
  const hash = window.location.hash || "#/";
  const match = hash.match(/^#\/session\/(.+)$/);
  if (match) {
    void renderSession(decodeURIComponent(match[1]));
  } else {
    void renderHome();
  }
}

export function main() {
  window.addEventListener("hashchange", route);
  route();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  main();
}
