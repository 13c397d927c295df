#!/usr/bin/env python3
"""Tour the session HTTP API without binding a port.

Creates an experiment session, records two runs of real observations,
asks for the next recommendation, and runs a what-if comparison, all
against an in-process test client.  The same endpoints are served by
``ofidesign serve --store DIR``; every mutation lands in an append-only
event log under the store directory, so restarting the service replays
each session exactly.
"""

import argparse
import json
import tempfile

from fastapi.testclient import TestClient

from ofidesign.service import create_app

CONFIG = {
    "model": {"family": "gamma_log", "shape": 1.0},
    "regressors": [[0, 0], [1, 0], [0, 1]],
    "candidates": [[-1, -1], [1, -1], [-1, 1], [1, 1]],
    "criterion": "D",
    "theta0": [1.0, 1.0, 1.0],
    "method": "load",
}


def show(title, payload):
    print(f"\n== {title} ==")
    print(json.dumps(payload, indent=1, sort_keys=True))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--store", default=None,
                        help="event-log directory (default: temporary)")
    args = parser.parse_args()

    store = args.store or tempfile.mkdtemp(prefix="ofidesign-demo-")
    with TestClient(create_app(store)) as client:
        created = client.post("/v1/sessions",
                              json={"config": CONFIG}).json()
        sid = created["id"]
        show("session created (note the equal-split first recommendation)",
             created)

        run1 = {"plan": [1, 1, 1, 1],
                "responses": [[2.0], [3.0], [1.5], [2.5]]}
        show("first run recorded",
             client.post(f"/v1/sessions/{sid}/runs", json=run1).json())

        run2 = {"plan": [2, 0, 1, 1],
                "responses": [[1.2, 0.8], [], [2.2], [0.5]]}
        show("second run recorded",
             client.post(f"/v1/sessions/{sid}/runs", json=run2).json())

        show("recommended third run (m=2): the rationale carries the "
             "reallocation arithmetic",
             client.get(f"/v1/sessions/{sid}/recommendation?m=2").json())

        what_if = {"m": 2, "hypothetical": {
            "plan": [0, 2, 0, 0], "responses": [[], [9.0, 0.1], [], []]}}
        show("what-if: two extreme observations at the second corner",
             client.post(f"/v1/sessions/{sid}/what-if",
                         json=what_if).json())

        show("session state (unchanged by the what-if)",
             client.get(f"/v1/sessions/{sid}").json()["totals"])

    print(f"\nevent log: {store}/{sid}.jsonl")
    print("restart `ofidesign serve` on the same store to replay it.")


if __name__ == "__main__":
    main()
