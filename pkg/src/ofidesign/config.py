"""Experiment configuration: one JSON document shared by the CLI and the
session service.

Validation errors always name the offending field so callers can surface
them directly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .models import RegressorMap, ResponseModel, model_from_spec, model_to_spec
from .simulation import StudyConfig
from .structures import CandidateSet


class ConfigError(ValueError):
    pass


_KNOWN_KEYS = {
    "model", "regressors", "candidates", "criterion", "theta0", "truth",
    "method", "methods", "criteria", "m1", "m_step", "milestones",
    "R", "seed",
}


@dataclass
class ExperimentConfig:
    model: ResponseModel
    fmap: RegressorMap
    candidates: CandidateSet
    criterion: str
    theta0: np.ndarray
    truth: np.ndarray | None = None
    method: str = "load"
    methods: tuple = ()
    criteria: tuple = ()
    m1: int = 4
    m_step: int = 1
    milestones: tuple = ()
    R: int = 10000
    seed: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        for name in ("model", "regressors", "candidates", "criterion", "theta0"):
            if name not in doc:
                raise ConfigError(f"missing config field: {name}")
        try:
            model = model_from_spec(doc["model"])
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc
        try:
            fmap = RegressorMap.monomials(tuple(map(tuple, doc["regressors"])))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"regressors: {exc}") from exc
        try:
            candidates = CandidateSet(doc["candidates"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"candidates: {exc}") from exc
        point_dim = len(fmap.exponents[0])
        if candidates.points.shape[1] != point_dim:
            raise ConfigError(
                "candidates: point dimension "
                f"{candidates.points.shape[1]} does not match regressors "
                f"({point_dim}-dimensional points)")
        criterion = doc["criterion"]
        if criterion not in ("D", "A"):
            raise ConfigError(f"criterion: must be 'D' or 'A', got {criterion!r}")
        theta0 = _vector(doc, "theta0", fmap.dimension)
        truth = _vector(doc, "truth", fmap.dimension) if "truth" in doc else None
        method = doc.get("method", "load")
        if method not in ("flod", "load", "moad", "aod"):
            raise ConfigError(f"method: unknown method {method!r}")
        methods = tuple(doc.get("methods", ()))
        for m in methods:
            if m not in ("flod", "load", "moad", "aod"):
                raise ConfigError(f"methods: unknown method {m!r}")
        criteria = tuple(doc.get("criteria", ()))
        for c in criteria:
            if c not in ("D", "A"):
                raise ConfigError(f"criteria: must be 'D' or 'A', got {c!r}")
        m1 = _positive_int(doc, "m1", default=4)
        m_step = _positive_int(doc, "m_step", default=1)
        milestones = tuple(
            _positive_int({"n": n}, "n") for n in doc.get("milestones", ()))
        if "milestones" in doc and not milestones:
            raise ConfigError("milestones: must not be empty")
        R = _positive_int(doc, "R", default=10000)
        seed = doc.get("seed", 1)
        if not isinstance(seed, int):
            raise ConfigError("seed: must be an integer")
        return cls(model=model, fmap=fmap, candidates=candidates,
                   criterion=criterion, theta0=theta0, truth=truth,
                   method=method, methods=methods, criteria=criteria,
                   m1=m1, m_step=m_step, milestones=milestones,
                   R=R, seed=seed, raw=dict(doc))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {
            "model": model_to_spec(self.model),
            "regressors": np.asarray(self.fmap.exponents).tolist(),
            "candidates": self.candidates.points.tolist(),
            "criterion": self.criterion,
            "theta0": self.theta0.tolist(),
            "method": self.method,
            "m1": self.m1,
            "m_step": self.m_step,
            "R": self.R,
            "seed": self.seed,
        }
        if self.truth is not None:
            doc["truth"] = self.truth.tolist()
        if self.methods:
            doc["methods"] = list(self.methods)
        if self.criteria:
            doc["criteria"] = list(self.criteria)
        if self.milestones:
            doc["milestones"] = list(self.milestones)
        return doc

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def study_config(self) -> StudyConfig:
        """Promote to a simulation study; needs truth and milestones."""
        if self.truth is None:
            raise ConfigError("missing config field: truth (required to simulate)")
        if not self.milestones:
            raise ConfigError("missing config field: milestones (required to simulate)")
        methods = self.methods or ("flod", self.method)
        if "flod" not in methods:
            methods = ("flod",) + tuple(methods)
        criteria = self.criteria or (self.criterion,)
        return StudyConfig(
            model=self.model, fmap=self.fmap, candidates=self.candidates,
            truth=tuple(self.truth), theta0=tuple(self.theta0),
            criteria=tuple(criteria), methods=tuple(methods),
            m1=self.m1, m_step=self.m_step, milestones=tuple(self.milestones),
            R=self.R, seed=self.seed)


def _vector(doc, name, p) -> np.ndarray:
    try:
        vec = np.asarray(doc[name], dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if vec.shape[0] != p:
        raise ConfigError(f"{name}: expected {p} entries, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ConfigError(f"{name}: entries must be finite")
    return vec


def _positive_int(doc, name, default=None):
    value = doc.get(name, default)
    if value is None:
        raise ConfigError(f"missing config field: {name}")
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ConfigError(f"{name}: must be a positive integer")
    return value


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    return ExperimentConfig.from_json(text)
