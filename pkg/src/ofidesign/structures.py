"""Core value types shared across the package.

Designs (continuous weight measures and integer-count plans), grouped
response data, and information matrices classified by definiteness.
Design points are compared exactly: two rows are the same support point
iff every coordinate matches bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

# Definiteness labels carried by InfoMatrix.
POSITIVE_DEFINITE = "positive_definite"
PSD_SINGULAR = "psd_singular"
INDEFINITE = "indefinite"

SYMMETRY_RTOL = 1e-12
DEFINITENESS_RTOL = 1e-10
WEIGHT_SUM_TOL = 1e-12


def as_points(points) -> np.ndarray:
    """Coerce to a (d, s) float array of design points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (d, s) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def point_key(x) -> tuple:
    """Hashable exact-match key for one design point."""
    return tuple(np.asarray(x, dtype=float).ravel().tolist())


def _check_distinct(pts: np.ndarray, label: str) -> None:
    keys = [point_key(row) for row in pts]
    if len(set(keys)) != len(keys):
        raise ValueError(f"{label} contains duplicate points")


def definiteness_tolerance(trace: float, p: int) -> float:
    """Eigenvalue threshold used to classify definiteness."""
    return DEFINITENESS_RTOL * max(1.0, abs(float(trace)) / p)


def classify_eigenvalues(eigs: np.ndarray) -> str:
    """Classify a symmetric matrix from its (ascending) eigenvalues."""
    p = eigs.shape[-1]
    tol = definiteness_tolerance(eigs.sum(), p)
    smallest = float(eigs[0])
    if smallest > tol:
        return POSITIVE_DEFINITE
    if smallest >= -tol:
        return PSD_SINGULAR
    return INDEFINITE


@dataclass
class CandidateSet:
    """Finite set of admissible design points."""

    points: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points)
        _check_distinct(self.points, "candidate set")

    def __len__(self) -> int:
        return self.points.shape[0]

    def index_of(self, x) -> int:
        key = point_key(x)
        for i, row in enumerate(self.points):
            if point_key(row) == key:
                return i
        raise KeyError(f"point {key} is not a candidate")


@dataclass
class ContinuousDesign:
    """Design measure: support points with weights.

    ``proper`` is False for improper measures (negative weights allowed),
    which arise when observed-information weights go negative.  Weights
    always sum to 1.
    """

    points: np.ndarray
    weights: np.ndarray
    proper: bool = True
    diagnostics: object | None = None

    def __post_init__(self):
        self.points = as_points(self.points)
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.weights.shape[0] != self.points.shape[0]:
            raise ValueError("weights and points length mismatch")
        _check_distinct(self.points, "design")
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError("design weights must sum to 1")
        if self.proper and np.any(self.weights < -WEIGHT_SUM_TOL):
            raise ValueError("proper design weights must be nonnegative")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def to_json(self) -> dict:
        return {
            "support": [
                {"x": list(map(float, x)), "weight": float(w)}
                for x, w in zip(self.points, self.weights)
            ]
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ContinuousDesign":
        support = payload["support"]
        pts = [entry["x"] for entry in support]
        ws = [entry["weight"] for entry in support]
        return cls(as_points(pts), np.asarray(ws, dtype=float))


@dataclass
class ExactDesign:
    """Integer-count run plan on a finite support."""

    points: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points)
        counts = np.asarray(self.counts)
        if not np.issubdtype(counts.dtype, np.integer):
            rounded = np.rint(counts)
            if np.any(np.abs(rounded - counts) > 1e-9):
                raise ValueError("counts must be integers")
            counts = rounded.astype(np.int64)
        self.counts = counts.astype(np.int64)
        if self.counts.shape[0] != self.points.shape[0]:
            raise ValueError("counts and points length mismatch")
        _check_distinct(self.points, "design")
        if np.any(self.counts < 0) or self.counts.sum() < 1:
            raise ValueError("counts must be nonnegative with a positive total")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def to_continuous(self) -> ContinuousDesign:
        return ContinuousDesign(self.points, self.counts / self.n)

    def to_json(self) -> dict:
        return {
            "support": [
                {"x": list(map(float, x)), "count": int(c)}
                for x, c in zip(self.points, self.counts)
            ]
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ExactDesign":
        support = payload["support"]
        pts = [entry["x"] for entry in support]
        cs = [entry["count"] for entry in support]
        return cls(as_points(pts), np.asarray(cs, dtype=np.int64))


@dataclass
class DataSet:
    """Responses grouped by support point, with run boundaries.

    ``groups[i]`` holds every response observed at ``points[i]`` in
    arrival order; ``run_sizes`` records how many observations each run
    contributed, so sum(run_sizes) equals the total observation count.
    """

    points: np.ndarray
    groups: list[np.ndarray]
    run_sizes: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.points = as_points(self.points)
        _check_distinct(self.points, "data set")
        if len(self.groups) != self.points.shape[0]:
            raise ValueError("groups and points length mismatch")
        self.groups = [np.asarray(g, dtype=float).ravel() for g in self.groups]
        self.run_sizes = [int(m) for m in self.run_sizes]
        if sum(self.run_sizes) != self.total_n:
            raise ValueError("run sizes must account for every observation")
        self._index = {point_key(x): i for i, x in enumerate(self.points)}

    @classmethod
    def empty(cls, points) -> "DataSet":
        pts = as_points(points)
        return cls(pts, [np.empty(0) for _ in range(pts.shape[0])], [])

    @property
    def total_n(self) -> int:
        return int(sum(g.size for g in self.groups))

    @property
    def n_runs(self) -> int:
        return len(self.run_sizes)

    def counts(self) -> np.ndarray:
        return np.array([g.size for g in self.groups], dtype=np.int64)

    def index_of(self, x) -> int:
        return self._index[point_key(x)]

    def add_point(self, x) -> int:
        """Register a new support point (for mid-experiment deviations)."""
        key = point_key(x)
        if key in self._index:
            return self._index[key]
        row = np.asarray(x, dtype=float).reshape(1, -1)
        if row.shape[1] != self.points.shape[1]:
            raise ValueError("new point dimension mismatch")
        self.points = np.vstack([self.points, row])
        self.groups.append(np.empty(0))
        self._index[key] = self.points.shape[0] - 1
        return self._index[key]

    def append_run(self, counts, responses: list) -> None:
        """Record one run: counts per point and matching response arrays."""
        counts = np.asarray(counts, dtype=np.int64).ravel()
        if counts.shape[0] != self.points.shape[0]:
            raise ValueError("run counts length mismatch")
        if np.any(counts < 0) or counts.sum() < 1:
            raise ValueError("run must contain at least one observation")
        if len(responses) != counts.shape[0]:
            raise ValueError("responses length mismatch")
        cleaned = []
        for i, (c, ys) in enumerate(zip(counts, responses)):
            ys = np.asarray(ys, dtype=float).ravel()
            if ys.size != c:
                raise ValueError(
                    f"point {i}: run plans {int(c)} observations but "
                    f"{ys.size} responses were supplied"
                )
            cleaned.append(ys)
        for i, ys in enumerate(cleaned):
            if ys.size:
                self.groups[i] = np.concatenate([self.groups[i], ys])
        self.run_sizes.append(int(counts.sum()))

    def copy(self) -> "DataSet":
        return DataSet(
            self.points.copy(),
            [g.copy() for g in self.groups],
            list(self.run_sizes),
        )

    def to_json(self) -> dict:
        return {
            "points": [list(map(float, x)) for x in self.points],
            "groups": [list(map(float, g)) for g in self.groups],
            "run_sizes": list(self.run_sizes),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "DataSet":
        return cls(
            as_points(payload["points"]),
            [np.asarray(g, dtype=float) for g in payload["groups"]],
            list(payload["run_sizes"]),
        )


@dataclass
class InfoMatrix:
    """Symmetric information matrix with a definiteness tag.

    Eigenvalues are computed once at construction and reused for both
    classification and criterion evaluation.
    """

    values: np.ndarray
    eigenvalues: np.ndarray
    definiteness: str

    @classmethod
    def from_values(cls, values) -> "InfoMatrix":
        m = np.asarray(values, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("information matrix must be square")
        scale = max(1.0, float(np.abs(m).max()))
        if float(np.abs(m - m.T).max()) > SYMMETRY_RTOL * scale:
            raise ValueError("information matrix must be symmetric")
        m = 0.5 * (m + m.T)
        eigs = np.linalg.eigvalsh(m)
        return cls(m, eigs, classify_eigenvalues(eigs))

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def is_positive_definite(self) -> bool:
        return self.definiteness == POSITIVE_DEFINITE

    def to_json(self) -> dict:
        return {
            "values": [float(v) for v in self.values.ravel()],  # row-major
            "shape": list(self.values.shape),
            "definiteness": self.definiteness,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "InfoMatrix":
        shape = tuple(payload["shape"])
        vals = np.asarray(payload["values"], dtype=float).reshape(shape)
        return cls.from_values(vals)
