"""Optimal-design solvers on finite candidate sets.

Continuous weights are found by multiplicative reweighting (exponent 1
for D, 1/2 for A) with vertex-exchange polishing, certified by the
directional-derivative optimality gap

    gap = max_i d_i / (sum_k w_k d_k) - 1,

where d_i = mu_i f_i' K^-1 f_i for D and mu_i f_i' K^-2 f_i for A, and K
is the (possibly prior-augmented) information matrix.  Exact designs
come from composition enumeration when the count is manageable and from
a best-improvement exchange heuristic seeded at the rounded continuous
optimum otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import psi_batch, psi_from_eigenvalues
from .models import RegressorMap, ResponseModel
from .numerics import (apportion, compositions, composition_count,
                       first_within_min, pick_max)
from .structures import (
    CandidateSet,
    ContinuousDesign,
    ExactDesign,
    definiteness_tolerance,
)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000
PRUNE_WEIGHT = 1e-8
ENUMERATION_LIMIT = 100_000


class RankDeficientError(ValueError):
    """Candidate set cannot produce a positive definite information matrix."""


@dataclass
class SolverDiagnostics:
    iterations: int
    gap: float
    psi_value: float
    flagged: bool = False
    message: str = ""


@dataclass
class AugmentedProblem:
    """Next-run optimization against already-collected information.

    ``prior`` is the unnormalized information carried into the run (for
    example J from history, or total-count-scaled expected information of
    the past design); ``run_size`` is the number of new observations.
    ``blend_weight`` is the share run_size/(run_size + prior mass), kept
    for reporting only: minimizing the blended and the unnormalized
    objective is the same whenever that mass is positive.
    """

    prior: np.ndarray
    run_size: int
    blend_weight: float | None = None

    def __post_init__(self):
        self.prior = np.asarray(self.prior, dtype=float)
        if self.prior.ndim != 2 or self.prior.shape[0] != self.prior.shape[1]:
            raise ValueError("prior information matrix must be square")
        if self.run_size < 1:
            raise ValueError("run size must be at least 1")


def _atoms(model: ResponseModel, theta, fmap: RegressorMap, points):
    theta = np.asarray(theta, dtype=float).ravel()
    F = fmap.design_matrix(points)
    mu = np.asarray(model.expected_elemental_info(F @ theta), dtype=float)
    if np.any(mu < 0):
        raise ValueError("expected elemental information must be nonnegative")
    return mu, F


def _eig_state(kind, K):
    """Eigendecomposition of K plus its criterion value (inf if degenerate)."""
    eigs, vecs = np.linalg.eigh(K)
    value = float(psi_from_eigenvalues(kind, eigs[None, :])[0])
    return eigs, vecs, value


def _directions(kind, eigs, vecs, mu, F):
    G = F @ vecs
    power = eigs if kind == "D" else eigs ** 2
    return mu * (G ** 2 / power).sum(axis=1)


def _info(weights, mu, F, prior, m):
    K = m * np.einsum("i,ip,iq->pq", weights * mu, F, F)
    if prior is not None:
        K = K + prior
    return K


def _golden_minimize(fn, lo, hi, iters=90):
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = fn(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def solve_weights(kind: str, mu: np.ndarray, F: np.ndarray,
                  prior: np.ndarray | None = None, m: float = 1.0,
                  tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER):
    """Minimize psi(m * sum_i w_i mu_i f_i f_i' + prior) over the simplex.

    Returns (weights, SolverDiagnostics).  Raises RankDeficientError when
    no starting point yields a positive definite matrix.
    """
    d = mu.shape[0]
    exponent = 1.0 if kind == "D" else 0.5

    starts = [np.full(d, 1.0 / d)]
    if np.any(mu <= 0) and np.any(mu > 0):
        w0 = np.where(mu > 0, 1.0, 0.0)
        starts.append(w0 / w0.sum())
    if prior is not None:
        starts.extend(np.eye(d))
    w = None
    for cand in starts:
        if np.isfinite(psi_from_eigenvalues(
                kind, np.linalg.eigvalsh(_info(cand, mu, F, prior, m))[None, :])[0]):
            w = cand.copy()
            break
    if w is None:
        raise RankDeficientError(
            "candidate set cannot produce a positive definite information matrix")

    def objective(weights):
        eigs = np.linalg.eigvalsh(_info(weights, mu, F, prior, m))
        return float(psi_from_eigenvalues(kind, eigs[None, :])[0])

    def exchange(weights, dirs):
        b = int(pick_max(dirs[None, :], weights[None, :])[0])
        support = weights > 1e-14
        masked = np.where(support, -dirs, -np.inf)
        s = int(pick_max(masked[None, :], -weights[None, :])[0])
        if b == s:
            return weights, False
        def phi_fn(alpha):
            cand = weights.copy()
            cand[b] += alpha
            cand[s] -= alpha
            return objective(cand)
        alpha, val = _golden_minimize(phi_fn, -weights[b], weights[s])
        if val < objective(weights) - 1e-15:
            out = weights.copy()
            out[b] += alpha
            out[s] -= alpha
            out = np.clip(out, 0.0, None)
            return out / out.sum(), True
        return weights, False

    gap = np.inf
    value = objective(w)
    iterations = 0
    stall = 0
    while iterations < max_iter:
        iterations += 1
        K = _info(w, mu, F, prior, m)
        eigs, vecs, value = _eig_state(kind, K)
        if not np.isfinite(value):
            w, _ = exchange(w, np.ones(d))
            continue
        dirs = _directions(kind, eigs, vecs, mu, F)
        dbar = float(w @ dirs)
        if dbar <= 0:
            break
        gap = float(dirs.max() / dbar - 1.0)
        if gap < tol:
            break
        new_w = w * (dirs / dbar) ** exponent
        total = new_w.sum()
        if total <= 0 or not np.isfinite(total):
            break
        new_w = new_w / total
        new_value = objective(new_w)
        if new_value <= value + 1e-15:
            if value - new_value < 1e-14 * max(1.0, abs(value)):
                stall += 1
            else:
                stall = 0
            w, value = new_w, new_value
        else:
            stall += 1
        if stall >= 25:
            w, _ = exchange(w, dirs)
            stall = 0

    return w, SolverDiagnostics(iterations=iterations, gap=gap, psi_value=value)


def flod_continuous(kind: str, model: ResponseModel, theta,
                    fmap: RegressorMap, candidates: CandidateSet,
                    tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER) -> ContinuousDesign:
    """Locally optimal continuous design at theta over the candidate set.

    Support weights below 1e-8 are pruned and the rest renormalized;
    solver diagnostics (iterations, final gap, criterion value) ride on
    the returned design.
    """
    mu, F = _atoms(model, theta, fmap, candidates.points)
    w, diag = solve_weights(kind, mu, F, tol=tol, max_iter=max_iter)
    if diag.gap > tol:
        diag.flagged = True
        diag.message = f"optimality gap {diag.gap:.3e} above tolerance"
    keep = w > PRUNE_WEIGHT
    pruned = np.where(keep, w, 0.0)
    pruned = pruned / pruned.sum()
    design = ContinuousDesign(candidates.points[keep], pruned[keep])
    design.diagnostics = diag
    return design


def full_support_weights(design: ContinuousDesign,
                         candidates: CandidateSet) -> np.ndarray:
    """Design weights aligned to candidate indices (zero off support)."""
    w = np.zeros(len(candidates))
    for x, wt in zip(design.points, design.weights):
        w[candidates.index_of(x)] = wt
    return w


def round_design(design, n: int) -> ExactDesign:
    """Efficient rounding of a continuous design to n observations."""
    if isinstance(design, ContinuousDesign):
        points, weights = design.points, design.weights
    else:
        points, weights = design
        points = np.asarray(points, dtype=float)
    counts = apportion(np.asarray(weights, dtype=float), n)
    return ExactDesign(points, counts)


def _enumerate_exact(kind, mu, F, n, prior=None):
    comps = np.asarray(compositions(n, mu.shape[0]), dtype=float)
    mats = np.einsum("ci,ip,iq->cpq", comps * mu, F, F)
    if prior is not None:
        mats = mats + prior
    values = psi_batch(kind, mats)
    # symmetric candidates tie exactly; first near-minimal composition wins
    best = int(first_within_min(values))
    return comps[best].astype(np.int64), float(values[best])


def flod_exact(kind: str, model: ResponseModel, theta, fmap: RegressorMap,
               candidates: CandidateSet, n: int) -> ExactDesign:
    """Locally optimal exact design with n observations.

    Full enumeration when the composition count is manageable, otherwise
    a best-improvement exchange from the rounded continuous optimum (so
    the result is never worse than rounding).
    """
    p = fmap.dimension
    if n < p:
        raise ValueError(f"need at least p={p} observations, got {n}")
    mu, F = _atoms(model, theta, fmap, candidates.points)
    d = mu.shape[0]
    if composition_count(n, d) <= ENUMERATION_LIMIT:
        counts, value = _enumerate_exact(kind, mu, F, n)
        if not np.isfinite(value):
            raise RankDeficientError(
                "no exact design over the candidate set is nondegenerate")
        return ExactDesign(candidates.points, counts)

    continuous = flod_continuous(kind, model, theta, fmap, candidates)
    counts = np.zeros(d, dtype=np.int64)
    rounded = round_design(continuous, n)
    for x, c in zip(rounded.points, rounded.counts):
        counts[candidates.index_of(x)] = c

    def value_of(cs):
        eigs = np.linalg.eigvalsh(np.einsum("i,ip,iq->pq", cs * mu, F, F))
        return float(psi_from_eigenvalues(kind, eigs[None, :])[0])

    best_val = value_of(counts)
    for _ in range(10_000):
        improved = False
        best_move = None
        for src in range(d):
            if counts[src] == 0:
                continue
            for dst in range(d):
                if dst == src:
                    continue
                counts[src] -= 1
                counts[dst] += 1
                val = value_of(counts)
                counts[src] += 1
                counts[dst] -= 1
                if val < best_val - 1e-15:
                    best_val = val
                    best_move = (src, dst)
                    improved = True
        if not improved:
            break
        src, dst = best_move
        counts[src] -= 1
        counts[dst] += 1
    return ExactDesign(candidates.points, counts)


def augmented_optimal(kind: str, model: ResponseModel, theta,
                      fmap: RegressorMap, candidates: CandidateSet,
                      problem: AugmentedProblem, exact: bool = True):
    """Best next run against prior information.

    Exact mode enumerates every run-size composition over the candidates
    and returns an ExactDesign (counts aligned to candidate order);
    continuous mode returns a ContinuousDesign.  When every candidate run
    is degenerate the equal-allocation fallback is returned flagged.
    """
    mu, F = _atoms(model, theta, fmap, candidates.points)
    d = mu.shape[0]
    if exact:
        counts, value = _enumerate_exact(kind, mu, F, problem.run_size,
                                         prior=problem.prior)
        if not np.isfinite(value):
            counts = apportion(np.full(d, 1.0 / d), problem.run_size)
            design = ExactDesign(candidates.points, counts)
            design_diag = SolverDiagnostics(0, np.inf, np.inf, flagged=True,
                                            message="all run designs degenerate")
        else:
            design = ExactDesign(candidates.points, counts)
            design_diag = SolverDiagnostics(0, 0.0, value)
        return design, design_diag
    try:
        w, diag = solve_weights(kind, mu, F, prior=problem.prior,
                                m=float(problem.run_size))
    except RankDeficientError:
        w = np.full(d, 1.0 / d)
        diag = SolverDiagnostics(0, np.inf, np.inf, flagged=True,
                                 message="all run designs degenerate")
    design = ContinuousDesign(candidates.points, w)
    design.diagnostics = diag
    return design, diag
