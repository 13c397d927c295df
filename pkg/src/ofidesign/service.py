"""Live sequential-experiment service.

Each experiment is one session backed by an append-only JSON-lines event
log (created + one event per recorded run, fsynced).  Derived state is a
pure fold of that log, so a restart rebuilds every session exactly.
Recommendations and what-if analyses are pure reads: they work on a copy
of the session state and never touch the log.

Mutations to one session are serialized by a non-blocking per-session
lock; a concurrent writer gets 409 and should refetch.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
import uuid
from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import adaptive, criteria, design_opt, information, mle
from .config import ConfigError, ExperimentConfig
from .criteria import psi
from .structures import ContinuousDesign

API_VERSION = 1


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail

    def body(self) -> dict:
        return {"code": self.code, "message": self.message,
                "detail": self.detail}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _json_safe(obj):
    """Recursively convert numpy scalars and drop non-finite floats."""
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class EventStore:
    """One append-only JSON-lines file per session."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)

    def path(self, sid: str) -> str:
        return os.path.join(self.root, f"{sid}.jsonl")

    def append(self, sid: str, event: dict) -> None:
        with open(self.path(sid), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, sid: str) -> list:
        events = []
        with open(self.path(sid), encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events

    def session_ids(self) -> list:
        try:
            names = sorted(os.listdir(self.root))
        except FileNotFoundError:
            return []
        return [n[:-6] for n in names if n.endswith(".jsonl")]


@dataclasses.dataclass
class SessionRuntime:
    sid: str
    config: ExperimentConfig
    state: adaptive.PolicyState
    created_at: str
    idempotency_key: str | None = None
    trajectory: list = dataclasses.field(default_factory=list)
    lock: threading.Lock = dataclasses.field(default_factory=threading.Lock)


def _clone_state(state: adaptive.PolicyState) -> adaptive.PolicyState:
    return dataclasses.replace(
        state, history=state.history.copy(), plans=list(state.plans),
        records=list(state.records))


def _build_state(config: ExperimentConfig) -> adaptive.PolicyState:
    try:
        return adaptive.PolicyState.create(
            config.method, config.criterion, config.model, config.fmap,
            config.theta0, config.candidates)
    except design_opt.RankDeficientError as exc:
        raise ServiceError(422, "invalid", "initial design is unsolvable",
                           detail=str(exc)) from exc
    except ValueError as exc:
        raise ServiceError(422, "invalid", str(exc)) from exc


def _validate_run(runtime: SessionRuntime, payload: dict):
    plan = payload.get("plan")
    responses = payload.get("responses")
    d = len(runtime.state.candidates)
    if (not isinstance(plan, list) or len(plan) != d
            or not all(isinstance(c, int) and c >= 0 for c in plan)):
        raise ServiceError(400, "bad_request",
                           f"plan must be {d} nonnegative integer counts")
    if sum(plan) < 1:
        raise ServiceError(400, "bad_request",
                           "plan must allocate at least one observation")
    if not isinstance(responses, list) or len(responses) != d:
        raise ServiceError(400, "bad_request",
                           f"responses must be {d} lists, one per candidate")
    clean = []
    for i, (c, ys) in enumerate(zip(plan, responses)):
        if not isinstance(ys, list) or len(ys) != c:
            raise ServiceError(
                400, "bad_request",
                f"responses[{i}] must contain exactly plan[{i}]={c} values")
        arr = np.asarray(ys, dtype=float)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ServiceError(422, "invalid",
                               f"responses[{i}] contains non-finite values")
        try:
            if arr.size:
                runtime.state.model.check_support(arr)
        except ValueError as exc:
            raise ServiceError(422, "invalid",
                               f"responses[{i}]: {exc}") from exc
        clean.append(arr)
    return np.asarray(plan, dtype=np.int64), clean


def _run_summary(state: adaptive.PolicyState, plan: adaptive.RunPlan,
                 recorded_at: str) -> dict:
    entry = {
        "j": plan.j,
        "plan": plan.counts.tolist(),
        "m": int(plan.m),
        "flags": list(plan.flags),
        "recorded_at": recorded_at,
        "omega": None, "Q": None,
        "eff_theta": None, "eff_mle": None, "theta_hat": None,
    }
    try:
        q, total = information.info_ratios(state.model, state.theta0,
                                           state.fmap, state.history)
        entry["Q"] = total
        omega = information.omega_weights(state.model, state.theta0,
                                          state.fmap, state.history)
        entry["omega"] = omega.tolist()
        eff = criteria.observed_efficiency(state.criterion, state.model,
                                           state.theta0, state.fmap,
                                           state.flod, state.history)
        entry["eff_theta"] = eff.value
    except (information.DegenerateDataError, ValueError):
        entry["flags"] = entry["flags"] + ["efficiency_unavailable"]
    try:
        report = criteria.observed_efficiency_at_mle(
            state.criterion, state.model, state.fmap,
            lambda th: design_opt.flod_continuous(
                state.criterion, state.model, th, state.fmap,
                state.candidates),
            state.history, init=state.theta0)
        entry["eff_mle"] = report.value
        entry["theta_hat"] = report.theta_hat.tolist()
    except (mle.SingularInformationError, design_opt.RankDeficientError,
            information.DegenerateDataError, ValueError, RuntimeError):
        pass
    return _json_safe(entry)


def _apply_run(runtime: SessionRuntime, plan_counts, responses,
               recorded_at: str) -> dict:
    state = runtime.state
    plan = adaptive.RunPlan(j=state.runs_recorded + 1, method=state.method,
                            counts=plan_counts, m=int(plan_counts.sum()))
    state.observe_run(plan, responses)
    entry = _run_summary(state, plan, recorded_at)
    runtime.trajectory.append(entry)
    return entry


def _forecast(state: adaptive.PolicyState, plan: adaptive.RunPlan) -> dict | None:
    """Projected efficiency if the plan is followed, from expected
    information of the plan plus observed information of the history."""
    theta = state.theta0
    if plan.provenance.get("theta_hat") is not None:
        theta = np.asarray(plan.provenance["theta_hat"], dtype=float)
    lam = ContinuousDesign(state.candidates.points,
                           plan.counts / plan.m, proper=True)
    try:
        k = information.projected_information(state.model, theta, state.fmap,
                                              lam, plan.m, state.history)
        n_new = state.history.total_n + plan.m
        projected = psi(state.criterion, k.values / n_new)
        flod_at = design_opt.flod_continuous(state.criterion, state.model,
                                             theta, state.fmap,
                                             state.candidates)
        star = psi(state.criterion,
                   information.efi(state.model, theta, state.fmap, flod_at))
        value = star / projected if np.isfinite(projected) else 0.0
        return _json_safe({"criterion": state.criterion,
                           "projected_efficiency": value,
                           "at_theta": theta.tolist()})
    except (ValueError, design_opt.RankDeficientError):
        return None


def _recommendation(runtime: SessionRuntime, method: str, m: int) -> dict:
    if method not in adaptive.METHODS:
        raise ServiceError(400, "bad_request",
                           f"method must be one of {', '.join(adaptive.METHODS)}")
    if m < 1:
        raise ServiceError(400, "bad_request", "m must be at least 1")
    state = _clone_state(runtime.state)
    plan = adaptive.next_run(state, method, m)
    return _json_safe({
        "v": API_VERSION,
        "method": plan.method,
        "j": plan.j,
        "m": int(plan.m),
        "plan": plan.counts.tolist(),
        "rationale": plan.provenance,
        "flags": list(plan.flags),
        "forecast": _forecast(runtime.state, plan),
    })


def _session_payload(runtime: SessionRuntime) -> dict:
    state = runtime.state
    return _json_safe({
        "v": API_VERSION,
        "id": runtime.sid,
        "created_at": runtime.created_at,
        "config": runtime.config.to_dict(),
        "config_hash": runtime.config.config_hash(),
        "candidates": state.candidates.points.tolist(),
        "w_star": state.w_star.tolist(),
        "totals": {
            "runs": state.runs_recorded,
            "n": state.history.total_n,
            "counts": state.history.counts().tolist(),
        },
        "runs": runtime.trajectory,
        "current": runtime.trajectory[-1] if runtime.trajectory else None,
    })


class Registry:
    """All live sessions plus the store that makes them durable."""

    def __init__(self, store: EventStore):
        self.store = store
        self.sessions: dict = {}
        self.by_key: dict = {}
        self.create_lock = threading.Lock()
        for sid in store.session_ids():
            runtime = self._fold(sid, store.read(sid))
            self.sessions[sid] = runtime
            if runtime.idempotency_key:
                self.by_key[runtime.idempotency_key] = sid

    def _fold(self, sid: str, events: list) -> SessionRuntime:
        if not events or events[0].get("type") != "created":
            raise ServiceError(500, "corrupt_store",
                               f"session {sid} log does not start with create")
        head = events[0]
        config = ExperimentConfig.from_dict(head["config"])
        runtime = SessionRuntime(
            sid=sid, config=config, state=_build_state(config),
            created_at=head["created_at"],
            idempotency_key=head.get("idempotency_key"))
        for event in events[1:]:
            if event.get("type") != "run_recorded":
                raise ServiceError(500, "corrupt_store",
                                   f"unknown event type {event.get('type')!r}")
            counts = np.asarray(event["plan"], dtype=np.int64)
            responses = [np.asarray(ys, dtype=float)
                         for ys in event["responses"]]
            _apply_run(runtime, counts, responses, event["recorded_at"])
        return runtime

    def get(self, sid: str) -> SessionRuntime:
        runtime = self.sessions.get(sid)
        if runtime is None:
            raise ServiceError(404, "not_found", f"no session {sid}")
        return runtime

    def create(self, config_doc, idempotency_key=None) -> SessionRuntime:
        with self.create_lock:
            if idempotency_key and idempotency_key in self.by_key:
                return self.sessions[self.by_key[idempotency_key]]
            try:
                config = ExperimentConfig.from_dict(config_doc)
            except ConfigError as exc:
                raise ServiceError(422, "invalid", str(exc)) from exc
            sid = uuid.uuid4().hex[:12]
            runtime = SessionRuntime(sid=sid, config=config,
                                     state=_build_state(config),
                                     created_at=_now(),
                                     idempotency_key=idempotency_key)
            self.store.append(sid, {
                "type": "created", "v": API_VERSION,
                "created_at": runtime.created_at,
                "idempotency_key": idempotency_key,
                "config": config.to_dict(),
            })
            self.sessions[sid] = runtime
            if idempotency_key:
                self.by_key[idempotency_key] = sid
            return runtime

    def record_run(self, sid: str, payload: dict) -> dict:
        runtime = self.get(sid)
        if not runtime.lock.acquire(blocking=False):
            raise ServiceError(409, "conflict",
                               "another write to this session is in progress")
        try:
            counts, responses = _validate_run(runtime, payload)
            recorded_at = _now()
            # validate against a copy first so a failure leaves no trace
            probe = _clone_state(runtime.state)
            try:
                probe_plan = adaptive.RunPlan(j=probe.runs_recorded + 1,
                                              method=probe.method,
                                              counts=counts,
                                              m=int(counts.sum()))
                probe.observe_run(probe_plan, responses)
            except ValueError as exc:
                raise ServiceError(400, "bad_request", str(exc)) from exc
            self.store.append(sid, {
                "type": "run_recorded", "v": API_VERSION,
                "recorded_at": recorded_at,
                "plan": [int(c) for c in counts],
                "responses": [[float(y) for y in ys] for ys in responses],
            })
            return _apply_run(runtime, counts, responses, recorded_at)
        finally:
            runtime.lock.release()


def create_app(store_path, static_dir=None) -> FastAPI:
    app = FastAPI(title="sequential design service", docs_url=None,
                  redoc_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    registry = Registry(EventStore(store_path))
    app.state.registry = registry

    @app.exception_handler(ServiceError)
    async def service_error(request: Request, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "v": API_VERSION,
                "sessions": len(registry.sessions)}

    @app.post("/v1/sessions", status_code=201)
    async def create_session(request: Request):
        body = await _body(request)
        config_doc = body.get("config")
        if not isinstance(config_doc, dict):
            raise ServiceError(422, "invalid", "body must carry a config object")
        runtime = registry.create(config_doc, body.get("idempotency_key"))
        first = _recommendation(runtime, runtime.config.method,
                                runtime.config.m1) \
            if runtime.state.runs_recorded == 0 else None
        return {
            "v": API_VERSION,
            "id": runtime.sid,
            "created_at": runtime.created_at,
            "config_hash": runtime.config.config_hash(),
            "first_recommendation": first,
        }

    @app.get("/v1/sessions")
    async def list_sessions():
        rows = []
        for sid in sorted(registry.sessions):
            runtime = registry.sessions[sid]
            rows.append({
                "id": sid,
                "created_at": runtime.created_at,
                "config_hash": runtime.config.config_hash(),
                "method": runtime.config.method,
                "criterion": runtime.config.criterion,
                "runs": runtime.state.runs_recorded,
                "n": runtime.state.history.total_n,
            })
        return {"v": API_VERSION, "sessions": rows}

    @app.get("/v1/sessions/{sid}")
    async def get_session(sid: str):
        return _session_payload(registry.get(sid))

    @app.post("/v1/sessions/{sid}/runs")
    async def record_run(sid: str, request: Request):
        body = await _body(request)
        entry = registry.record_run(sid, body)
        runtime = registry.get(sid)
        return {
            "v": API_VERSION,
            "run": entry,
            "totals": {
                "runs": runtime.state.runs_recorded,
                "n": runtime.state.history.total_n,
                "counts": runtime.state.history.counts().tolist(),
            },
        }

    @app.get("/v1/sessions/{sid}/recommendation")
    async def recommendation(sid: str, method: str | None = None,
                             m: str = "1"):
        runtime = registry.get(sid)
        try:
            size = int(m)
        except ValueError:
            raise ServiceError(400, "bad_request", "m must be an integer")
        return _recommendation(runtime, method or runtime.config.method, size)

    @app.post("/v1/sessions/{sid}/what-if")
    async def what_if(sid: str, request: Request):
        runtime = registry.get(sid)
        body = await _body(request)
        method = body.get("method") or runtime.config.method
        m = body.get("m", 1)
        if not isinstance(m, int) or m < 1:
            raise ServiceError(400, "bad_request", "m must be a positive integer")
        shadow = SessionRuntime(sid=runtime.sid, config=runtime.config,
                                state=_clone_state(runtime.state),
                                created_at=runtime.created_at,
                                trajectory=list(runtime.trajectory))
        projected = None
        hypo = body.get("hypothetical")
        if hypo is not None:
            if not isinstance(hypo, dict):
                raise ServiceError(400, "bad_request",
                                   "hypothetical must carry plan and responses")
            counts, responses = _validate_run(shadow, hypo)
            projected = _apply_run(shadow, counts, responses, _now())
        return {
            "v": API_VERSION,
            "recommendation": _recommendation(shadow, method, m),
            "projected": projected,
            "based_on_runs": runtime.state.runs_recorded,
        }

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=static_dir, html=True),
                  name="ui")
    return app


async def _body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ServiceError(400, "bad_request", "body must be JSON") from exc
    if not isinstance(body, dict):
        raise ServiceError(400, "bad_request", "body must be a JSON object")
    return body
