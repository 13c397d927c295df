"""Tests for the session HTTP service.

State is a pure fold of the append-only event log, so a rebuilt service
must answer every read identically.  Recommendations and what-if calls
are reads: they never change what a later GET returns.
"""

import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ofidesign.config import ExperimentConfig
from ofidesign.service import create_app

GOOD = {
    "model": {"family": "gamma_log", "shape": 1.0},
    "regressors": [[0, 0], [1, 0], [0, 1]],
    "candidates": [[-1, -1], [1, -1], [-1, 1], [1, 1]],
    "criterion": "D",
    "theta0": [1.0, 1.0, 1.0],
    "method": "load",
}

RUN1 = {"plan": [1, 1, 1, 1],
        "responses": [[2.0], [3.0], [1.5], [2.5]]}
RUN2 = {"plan": [2, 0, 1, 1],
        "responses": [[1.2, 0.8], [], [2.2], [0.5]]}


@pytest.fixture()
def store(tmp_path):
    return str(tmp_path / "store")


@pytest.fixture()
def client(store):
    with TestClient(create_app(store)) as c:
        yield c


def make_session(client, **overrides):
    doc = dict(GOOD)
    doc.update(overrides)
    resp = client.post("/v1/sessions", json={"config": doc})
    assert resp.status_code == 201
    return resp.json()


class TestLifecycle:

    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        body = resp.json()
        assert body["status"] == "ok" and body["v"] == 1
        assert body["sessions"] == 0

    def test_create_returns_first_recommendation(self, client):
        body = make_session(client)
        assert body["v"] == 1
        assert body["config_hash"] == \
            ExperimentConfig.from_dict(GOOD).config_hash()
        first = body["first_recommendation"]
        # equal-interest start: four equally weighted corners, one run of 4
        assert first["plan"] == [1, 1, 1, 1]
        assert first["m"] == 4 and first["j"] == 1

    def test_get_session_state(self, client):
        sid = make_session(client)["id"]
        body = client.get(f"/v1/sessions/{sid}").json()
        assert body["id"] == sid
        assert body["config_hash"] == \
            ExperimentConfig.from_dict(GOOD).config_hash()
        assert body["totals"] == {"runs": 0, "n": 0, "counts": [0, 0, 0, 0]}
        assert body["runs"] == [] and body["current"] is None
        assert len(body["w_star"]) == 4
        assert abs(sum(body["w_star"]) - 1.0) < 1e-9

    def test_record_runs_and_trajectory(self, client):
        sid = make_session(client)["id"]
        r1 = client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        assert r1.status_code == 200
        assert r1.json()["totals"] == {"runs": 1, "n": 4,
                                       "counts": [1, 1, 1, 1]}
        r2 = client.post(f"/v1/sessions/{sid}/runs", json=RUN2)
        assert r2.json()["totals"] == {"runs": 2, "n": 8,
                                       "counts": [3, 1, 2, 2]}
        body = client.get(f"/v1/sessions/{sid}").json()
        assert [e["j"] for e in body["runs"]] == [1, 2]
        assert body["current"] == body["runs"][-1]
        entry = body["runs"][0]
        assert entry["plan"] == [1, 1, 1, 1]
        assert entry["Q"] is not None and entry["Q"] > 0
        assert len(entry["omega"]) == 4
        assert 0.0 <= entry["eff_theta"] <= 1.0 + 1e-12

    def test_list_sessions(self, client):
        ids = sorted(make_session(client, seed=i)["id"] for i in (1, 2, 3))
        rows = client.get("/v1/sessions").json()["sessions"]
        assert [r["id"] for r in rows] == ids
        assert all(r["method"] == "load" and r["criterion"] == "D"
                   and r["runs"] == 0 for r in rows)
        assert client.get("/healthz").json()["sessions"] == 3

    def test_idempotent_create(self, client):
        doc = dict(GOOD)
        a = client.post("/v1/sessions",
                        json={"config": doc, "idempotency_key": "abc"})
        b = client.post("/v1/sessions",
                        json={"config": doc, "idempotency_key": "abc"})
        assert a.json()["id"] == b.json()["id"]
        assert len(client.get("/v1/sessions").json()["sessions"]) == 1


class TestReplay:

    def test_restart_rebuilds_sessions_exactly(self, store):
        with TestClient(create_app(store)) as c1:
            sid = make_session(c1)["id"]
            c1.post(f"/v1/sessions/{sid}/runs", json=RUN1)
            c1.post(f"/v1/sessions/{sid}/runs", json=RUN2)
            before = c1.get(f"/v1/sessions/{sid}").json()
            rec_before = c1.get(
                f"/v1/sessions/{sid}/recommendation?m=2").json()
        with TestClient(create_app(store)) as c2:
            after = c2.get(f"/v1/sessions/{sid}").json()
            rec_after = c2.get(
                f"/v1/sessions/{sid}/recommendation?m=2").json()
        assert after == before
        assert rec_after == rec_before

    def test_event_log_contents(self, store):
        with TestClient(create_app(store)) as c:
            sid = make_session(c)["id"]
            c.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        with open(f"{store}/{sid}.jsonl") as fh:
            events = [json.loads(line) for line in fh]
        assert [e["type"] for e in events] == ["created", "run_recorded"]
        assert events[0]["config"]["criterion"] == "D"
        assert events[1]["plan"] == [1, 1, 1, 1]


class TestReads:

    def test_recommendation_is_pure(self, client):
        sid = make_session(client)["id"]
        client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        before = client.get(f"/v1/sessions/{sid}").json()
        r1 = client.get(f"/v1/sessions/{sid}/recommendation?m=3").json()
        r2 = client.get(f"/v1/sessions/{sid}/recommendation?m=3").json()
        assert r1 == r2
        assert sum(r1["plan"]) == 3 and r1["j"] == 2
        assert client.get(f"/v1/sessions/{sid}").json() == before

    def test_load_rationale_is_self_consistent(self, client):
        # the response payload must contain enough to recompute the plan
        sid = make_session(client)["id"]
        client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        m = 2
        rec = client.get(f"/v1/sessions/{sid}/recommendation?m={m}").json()
        r = rec["rationale"]
        w_star = np.asarray(r["w_star"])
        omega = np.asarray(r["omega"])
        w_prime = w_star + (r["Q"] / m) * (w_star - omega)
        assert np.allclose(w_prime, r["w_prime"], rtol=1e-9, atol=1e-12)
        clipped = np.clip(w_prime, 0.0, None)
        assert np.allclose(clipped / clipped.sum(), r["w_tilde"],
                           rtol=1e-9, atol=1e-12)
        assert abs(w_prime.sum() - 1.0) < 1e-9
        assert sum(rec["plan"]) == m

    def test_recommendation_method_override(self, client):
        sid = make_session(client)["id"]
        client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        rec = client.get(
            f"/v1/sessions/{sid}/recommendation?method=moad&m=1").json()
        assert rec["method"] == "moad"
        assert "theta_hat" in rec["rationale"]

    def test_what_if_does_not_touch_session(self, client):
        sid = make_session(client)["id"]
        client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
        before = client.get(f"/v1/sessions/{sid}").json()
        resp = client.post(f"/v1/sessions/{sid}/what-if", json={
            "method": "load", "m": 2,
            "hypothetical": {"plan": [0, 2, 0, 0],
                             "responses": [[], [9.0, 0.1], [], []]}})
        assert resp.status_code == 200
        body = resp.json()
        assert body["based_on_runs"] == 1
        assert body["projected"]["j"] == 2
        assert body["projected"]["plan"] == [0, 2, 0, 0]
        assert sum(body["recommendation"]["plan"]) == 2
        # the hypothetical run moved the shadow's allocation signal
        assert body["recommendation"]["rationale"]["omega"] \
            != client.get(f"/v1/sessions/{sid}/recommendation?m=2") \
                     .json()["rationale"]["omega"]
        assert client.get(f"/v1/sessions/{sid}").json() == before

    def test_what_if_without_hypothetical(self, client):
        sid = make_session(client)["id"]
        body = client.post(f"/v1/sessions/{sid}/what-if",
                           json={"m": 4}).json()
        assert body["projected"] is None
        assert body["recommendation"]["plan"] == [1, 1, 1, 1]


class TestErrors:

    def test_unknown_session(self, client):
        assert client.get("/v1/sessions/feed").status_code == 404
        assert client.get(
            "/v1/sessions/feed/recommendation").status_code == 404
        assert client.post("/v1/sessions/feed/runs",
                           json=RUN1).status_code == 404

    def test_create_validation(self, client):
        assert client.post("/v1/sessions", json={}).status_code == 422
        bad = dict(GOOD, criterion="E")
        resp = client.post("/v1/sessions", json={"config": bad})
        assert resp.status_code == 422
        assert "criterion" in resp.json()["message"]
        r = client.post("/v1/sessions",
                        content=b"[1,2]",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_unsolvable_initial_design(self, client):
        bad = dict(GOOD, candidates=[[-1, -1], [1, 1]])
        resp = client.post("/v1/sessions", json={"config": bad})
        assert resp.status_code == 422
        assert resp.json()["code"] == "invalid"

    def test_run_payload_validation(self, client):
        sid = make_session(client)["id"]
        url = f"/v1/sessions/{sid}/runs"
        cases_400 = [
            {"plan": [1, 1, 1], "responses": [[1.0], [1.0], [1.0]]},
            {"plan": [1, -1, 1, 1],
             "responses": [[1.0], [1.0], [1.0], [1.0]]},
            {"plan": [0, 0, 0, 0], "responses": [[], [], [], []]},
            {"plan": [1, 1, 1, 1], "responses": [[1.0], [1.0], [1.0]]},
            {"plan": [2, 1, 1, 1],
             "responses": [[1.0], [1.0], [1.0], [1.0]]},
        ]
        for payload in cases_400:
            assert client.post(url, json=payload).status_code == 400, payload

    def test_out_of_support_responses(self, client):
        sid = make_session(client)["id"]
        url = f"/v1/sessions/{sid}/runs"
        # gamma responses must be strictly positive and finite
        zero = {"plan": [1, 1, 1, 1],
                "responses": [[0.0], [1.0], [1.0], [1.0]]}
        neg = {"plan": [1, 1, 1, 1],
               "responses": [[1.0], [-2.0], [1.0], [1.0]]}
        for payload in (zero, neg):
            assert client.post(url, json=payload).status_code == 422, payload
        # NaN survives lax JSON decoding but must be rejected server-side
        nan = {"plan": [1, 1, 1, 1],
               "responses": [[1.0], [1.0], [float("nan")], [1.0]]}
        resp = client.post(url, content=json.dumps(nan),
                           headers={"content-type": "application/json"})
        assert resp.status_code == 422
        # nothing should have been recorded
        body = client.get(f"/v1/sessions/{sid}").json()
        assert body["totals"]["runs"] == 0

    def test_recommendation_validation(self, client):
        sid = make_session(client)["id"]
        base = f"/v1/sessions/{sid}/recommendation"
        assert client.get(f"{base}?method=greedy").status_code == 400
        assert client.get(f"{base}?m=0").status_code == 400
        assert client.get(f"{base}?m=two").status_code == 400

    def test_concurrent_write_conflict(self, client):
        sid = make_session(client)["id"]
        registry = client.app.state.registry
        runtime = registry.get(sid)
        assert runtime.lock.acquire(blocking=False)
        try:
            resp = client.post(f"/v1/sessions/{sid}/runs", json=RUN1)
            assert resp.status_code == 409
            assert resp.json()["code"] == "conflict"
        finally:
            runtime.lock.release()
        # the write goes through once the lock is free
        assert client.post(f"/v1/sessions/{sid}/runs",
                           json=RUN1).status_code == 200
