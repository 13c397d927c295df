"""Command-line entry point.

Three subcommands: ``flod`` solves a locally optimal design for a config,
``simulate`` runs a Monte Carlo study (or a canned reproduction) and
writes CSV/JSON artifacts, ``serve`` starts the session HTTP service.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import design_opt, simulation
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofidesign",
        description="Information-driven design of sequential experiments: "
                    "solve locally optimal designs, run simulation studies, "
                    "or serve the live session API.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_flod = sub.add_parser(
        "flod", help="solve the locally optimal design for a config")
    p_flod.add_argument("--config", required=True,
                        help="path to the experiment config JSON")
    p_flod.add_argument("--n", type=int, default=None,
                        help="also compute the exact n-observation design")
    p_flod.add_argument("--out", default=None,
                        help="write the result JSON here instead of stdout")

    p_sim = sub.add_parser(
        "simulate", help="run a Monte Carlo study and export artifacts")
    p_sim.add_argument("--config", default=None,
                       help="path to the experiment config JSON")
    p_sim.add_argument("--reproduce", default=None,
                       choices=simulation.REPRODUCTIONS,
                       help="run a canned study instead of a config")
    p_sim.add_argument("--R", type=int, default=None,
                       help="replication count override")
    p_sim.add_argument("--seed", type=int, default=1,
                       help="master seed")
    p_sim.add_argument("--out", default="results",
                       help="output directory for CSV/JSON artifacts")
    p_sim.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: available cores)")

    p_serve = sub.add_parser("serve", help="serve the session HTTP API")
    p_serve.add_argument("--store", required=True,
                         help="directory for session event logs")
    p_serve.add_argument("--bind", default="127.0.0.1:8000",
                         help="host:port to listen on")
    p_serve.add_argument("--ui", default=None,
                         help="static directory to mount at /ui")
    return parser


def cmd_flod(args) -> int:
    config = load_config(args.config)
    design = design_opt.flod_continuous(
        config.criterion, config.model, config.theta0, config.fmap,
        config.candidates)
    diag = design.diagnostics
    doc = {
        "criterion": config.criterion,
        "continuous": design.to_json(),
        "psi": diag.psi_value,
        "optimality_gap": diag.gap,
        "iterations": diag.iterations,
        "config_hash": config.config_hash(),
    }
    if args.n is not None:
        exact = design_opt.flod_exact(config.criterion, config.model,
                                      config.theta0, config.fmap,
                                      config.candidates, args.n)
        doc["exact"] = exact.to_json()
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.reproduce:
        paths = simulation.reproduce(args.reproduce, args.out, R=args.R,
                                     seed=args.seed, threads=args.threads)
    else:
        if not args.config:
            raise ConfigError("simulate needs --config or --reproduce")
        config = load_config(args.config).study_config()
        if args.R:
            config.R = args.R
        config.seed = args.seed
        result = simulation.run_study(config, threads=args.threads)
        paths = simulation.export_results(result, args.out)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        host, port_text = args.bind.rsplit(":", 1)
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"--bind must be host:port, got {args.bind!r}")
    from .service import create_app
    app = create_app(args.store, static_dir=args.ui)
    import uvicorn
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"flod": cmd_flod, "simulate": cmd_simulate, "serve": cmd_serve}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (design_opt.RankDeficientError, simulation.StudyError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
