"""Monte Carlo study harness.

Runs every (method, criterion) arm of a study over R replications with
common random numbers: within a replication all arms consume the same
per-point response streams, which pairs the comparisons and cuts the
variance of relative-efficiency ratios.  Aggregates percentile summaries
of the efficiency statistics and relative efficiencies of the final MLE
covariance versus the fixed-design baseline.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .engine import BatchResult, BatchSpec, build_draws, run_batch
from .criteria import relative_efficiency
from .models import (GammaLog, NormalSqrt, RegressorMap, ResponseModel,
                     model_from_spec, model_to_spec)
from .structures import CandidateSet

PERCENTILES = (5, 10, 25, 50, 75, 95)
FAILURE_LIMIT = 0.01


class StudyError(RuntimeError):
    """A study-level failure (too many broken replications)."""


@dataclass
class StudyConfig:
    model: ResponseModel
    fmap: RegressorMap
    candidates: CandidateSet
    truth: tuple
    theta0: tuple
    criteria: tuple = ("D", "A")
    methods: tuple = ("flod", "load", "moad")
    m1: int = 4
    m_step: int = 1
    milestones: tuple = (12, 36, 100)
    R: int = 10000
    seed: int = 1
    compute_eff_mle: bool = True

    def canonical(self) -> dict:
        return {
            "model": model_to_spec(self.model),
            "exponents": np.asarray(self.fmap.exponents).tolist(),
            "candidates": self.candidates.points.tolist(),
            "truth": list(map(float, self.truth)),
            "theta0": list(map(float, self.theta0)),
            "criteria": list(self.criteria),
            "methods": list(self.methods),
            "m1": self.m1,
            "m_step": self.m_step,
            "milestones": list(self.milestones),
            "R": self.R,
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class StudyResult:
    config: StudyConfig
    arms: dict  # (method, criterion) -> BatchResult
    percentile_rows: list = field(default_factory=list)
    releff_rows: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def percentile(self, method, n, criterion, stat, pct) -> float:
        for row in self.percentile_rows:
            if (row["method"], row["n"], row["criterion"], row["stat"]) == (
                    method, n, criterion, stat):
                return row[f"p{pct:02d}"]
        raise KeyError((method, n, criterion, stat))

    def releff(self, method, n, criterion) -> float:
        for row in self.releff_rows:
            if (row["method"], row["n"], row["criterion"]) == (
                    method, n, criterion):
                return row["releff"]
        raise KeyError((method, n, criterion))


def _arm_spec(config: StudyConfig, method, criterion, rep_start, count) -> BatchSpec:
    return BatchSpec(
        model=config.model, fmap=config.fmap, candidates=config.candidates,
        truth=np.asarray(config.truth, dtype=float),
        theta0=np.asarray(config.theta0, dtype=float),
        criterion=criterion, method=method, m1=config.m1,
        m_step=config.m_step, milestones=config.milestones,
        R=count, seed=config.seed, rep_start=rep_start,
        compute_eff_mle=config.compute_eff_mle)


def _run_block(config: StudyConfig, rep_start: int, count: int) -> dict:
    """All arms for a contiguous block of replications, sharing one draw set."""
    F = config.fmap.design_matrix(config.candidates.points)
    eta_true = F @ np.asarray(config.truth, dtype=float)
    draws = build_draws(config.model, eta_true, count, config.seed,
                        max(config.milestones), rep_start=rep_start)
    out = {}
    for criterion in config.criteria:
        for method in config.methods:
            spec = _arm_spec(config, method, criterion, rep_start, count)
            out[(method, criterion)] = run_batch(spec, draws)
    return out


def _merge_blocks(blocks: list) -> dict:
    if len(blocks) == 1:
        return blocks[0]
    merged = {}
    for key in blocks[0]:
        parts = [b[key] for b in blocks]
        base = parts[0]
        for other in parts[1:]:
            for n, stats in other.milestones.items():
                tgt = base.milestones[n]
                tgt.eff_theta = np.concatenate([tgt.eff_theta, stats.eff_theta])
                tgt.omega_gap = np.concatenate([tgt.omega_gap, stats.omega_gap])
                tgt.proper = np.concatenate([tgt.proper, stats.proper])
                if tgt.eff_mle is not None:
                    tgt.eff_mle = np.concatenate([tgt.eff_mle, stats.eff_mle])
                    tgt.theta_hat = np.vstack([tgt.theta_hat, stats.theta_hat])
                    tgt.mle_ok = np.concatenate([tgt.mle_ok, stats.mle_ok])
            base.load_fallbacks += other.load_fallbacks
        merged[key] = base
    return merged


def run_study(config: StudyConfig, threads: int | None = 1) -> StudyResult:
    if threads is None:
        threads = os.cpu_count() or 1
    threads = max(1, min(int(threads), config.R))
    if threads == 1:
        arms = _run_block(config, 0, config.R)
    else:
        bounds = np.linspace(0, config.R, threads + 1).astype(int)
        jobs = [(config, int(lo), int(hi - lo))
                for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(_run_block, *zip(*[(c, s, n) for c, s, n in jobs])))
        arms = _merge_blocks(blocks)

    result = StudyResult(config=config, arms=arms)
    _aggregate(result)
    return result


def _aggregate(result: StudyResult):
    config = result.config
    for (method, criterion), batch in sorted(result.arms.items()):
        for n in config.milestones:
            stats = batch.milestones[n]
            result.percentile_rows.append(_prow(
                method, n, criterion, "eff_theta", stats.eff_theta))
            if stats.eff_mle is None:
                continue
            ok = stats.mle_ok
            frac = 1.0 - ok.mean()
            result.failures[(method, criterion, n)] = int((~ok).sum())
            if frac > FAILURE_LIMIT:
                raise StudyError(
                    f"{method}/{criterion} at n={n}: {frac:.2%} of "
                    f"replications failed (limit {FAILURE_LIMIT:.0%})")
            result.percentile_rows.append(_prow(
                method, n, criterion, "eff_mle", stats.eff_mle[ok]))
    # relative efficiency vs the fixed design, from MLE sampling covariance
    for criterion in config.criteria:
        if ("flod", criterion) not in result.arms:
            continue
        base = result.arms[("flod", criterion)]
        for n in config.milestones:
            ref_stats = base.milestones[n]
            if ref_stats.theta_hat is None:
                continue
            var_ref = np.cov(ref_stats.theta_hat[ref_stats.mle_ok].T)
            for method in config.methods:
                if method == "flod":
                    continue
                stats = result.arms[(method, criterion)].milestones[n]
                var_alt = np.cov(stats.theta_hat[stats.mle_ok].T)
                result.releff_rows.append({
                    "method": method, "n": n, "criterion": criterion,
                    "releff": relative_efficiency(criterion, var_ref, var_alt),
                })


def _prow(method, n, criterion, stat, values) -> dict:
    row = {"method": method, "n": n, "criterion": criterion, "stat": stat}
    pts = np.percentile(np.asarray(values, dtype=float), PERCENTILES)
    for pct, v in zip(PERCENTILES, pts):
        row[f"p{pct:02d}"] = float(v)
    return row


# ---------------------------------------------------------------------------
# convergence-rate study

def rate_study(model, fmap, candidates, truth, theta0, n_grid=(16, 32, 64, 128, 256),
               R=2000, seed=1, m1=4, m_step=1, methods=("flod", "load"),
               threads: int | None = 1) -> dict:
    """Median allocation gap max|omega - w*| per n, with its log-log slope.

    Near-machine-zero medians (deterministic data) are dropped; a method
    with fewer than two usable grid points reports slope None and is
    marked skipped.
    """
    if len(n_grid) < 4:
        raise ValueError("need at least 4 grid points for a slope estimate")
    config = StudyConfig(
        model=model, fmap=fmap, candidates=candidates, truth=tuple(truth),
        theta0=tuple(theta0), criteria=("D",), methods=tuple(methods),
        m1=m1, m_step=m_step, milestones=tuple(n_grid), R=R, seed=seed,
        compute_eff_mle=False)
    study = run_study(config, threads=threads)
    out = {}
    for method in methods:
        batch = study.arms[(method, "D")]
        medians = {n: float(np.median(batch.milestones[n].omega_gap))
                   for n in n_grid}
        usable = [(n, v) for n, v in medians.items() if v > 1e-13]
        if len(usable) < 2:
            out[method] = {"medians": medians, "slope": None, "skipped": True}
            continue
        logs_n = np.log([n for n, _ in usable])
        logs_v = np.log([v for _, v in usable])
        slope = float(np.polyfit(logs_n, logs_v, 1)[0])
        out[method] = {"medians": medians, "slope": slope, "skipped": False}
    return out


# ---------------------------------------------------------------------------
# artifact export

def _csv_lines(header, rows, keys, config_hash, seed):
    lines = [f"# config_hash: {config_hash}", f"# seed: {seed}", header]
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in keys))
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_results(result: StudyResult, out_dir, formats=("csv", "json")):
    """Write percentile and relative-efficiency tables; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    config_hash = result.config.config_hash()
    seed = result.config.seed
    paths = []
    if "csv" in formats:
        pct_keys = ["method", "n", "criterion", "stat"] + [
            f"p{p:02d}" for p in PERCENTILES]
        path = os.path.join(out_dir, "percentiles.csv")
        with open(path, "w") as fh:
            fh.write(_csv_lines(",".join(pct_keys), result.percentile_rows,
                                pct_keys, config_hash, seed))
        paths.append(path)
        rel_keys = ["method", "n", "criterion", "releff"]
        path = os.path.join(out_dir, "releff.csv")
        with open(path, "w") as fh:
            fh.write(_csv_lines(",".join(rel_keys), result.releff_rows,
                                rel_keys, config_hash, seed))
        paths.append(path)
    if "json" in formats:
        payload = {
            "config_hash": config_hash,
            "seed": seed,
            "config": result.config.canonical(),
            "percentiles": result.percentile_rows,
            "releff": result.releff_rows,
            "excluded_replications": {
                f"{m}/{c}/n={n}": v
                for (m, c, n), v in sorted(result.failures.items())},
        }
        path = os.path.join(out_dir, "results.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# canned setups used by the reproduction CLI and the test suite

def square_vertices() -> CandidateSet:
    return CandidateSet([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])


def planar_map() -> RegressorMap:
    return RegressorMap.monomials(((0, 0), (1, 0), (0, 1)))


def gamma_study_config(R=10000, seed=1, milestones=(12, 36, 100)) -> StudyConfig:
    return StudyConfig(
        model=GammaLog(shape=0.1), fmap=planar_map(),
        candidates=square_vertices(), truth=(1.0, 1.0, 1.0),
        theta0=(1.0, 1.0, 1.0), criteria=("D", "A"),
        methods=("flod", "load", "moad"), m1=4, m_step=1,
        milestones=tuple(milestones), R=R, seed=seed)


def normal_study_config(R=10000, seed=1, milestones=(25, 50, 100)) -> StudyConfig:
    return StudyConfig(
        model=NormalSqrt(sigma=5.0), fmap=planar_map(),
        candidates=square_vertices(), truth=(1.0, 1.0, 1.0),
        theta0=(1.0, 1.0, 1.0), criteria=("D", "A"),
        methods=("flod", "load", "moad", "aod"), m1=4, m_step=1,
        milestones=tuple(milestones), R=R, seed=seed)


def rate_study_default(R=2000, seed=1, threads=1) -> dict:
    return rate_study(GammaLog(shape=1.0), planar_map(), square_vertices(),
                      truth=(1.0, 1.0, 1.0), theta0=(1.0, 1.0, 1.0),
                      R=R, seed=seed, threads=threads)


REPRODUCTIONS = ("table2", "table3", "fig1", "fig2", "rates")


def reproduce(name: str, out_dir, R=None, seed=1, threads: int | None = 1):
    """Emit the artifact behind one published summary; returns written paths."""
    if name not in REPRODUCTIONS:
        raise ValueError(f"unknown reproduction {name!r}; "
                         f"choose from {', '.join(REPRODUCTIONS)}")
    if name == "rates":
        rates = rate_study_default(R=R or 2000, seed=seed, threads=threads)
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "rates.json")
        with open(path, "w") as fh:
            json.dump(rates, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return [path]
    if name in ("table2", "fig1"):
        config = gamma_study_config(R=R or 10000, seed=seed)
    else:
        config = normal_study_config(R=R or 10000, seed=seed)
    result = run_study(config, threads=threads)
    return export_results(result, out_dir)
