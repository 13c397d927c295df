"""Shared deterministic kernels used by both the scalar policy path and the
vectorized replication engine.

Everything here operates on (R, d) batches; scalar callers pass a single
row.  Tie-breaking is fixed so independently computed trajectories agree
exactly: candidates tie first on the primary value, then on larger weight,
then on lower index.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


TIE_RTOL = 1e-9


def first_within_min(values: np.ndarray) -> np.ndarray:
    """Index (along axis 0) of the first entry within TIE_RTOL of the min.

    Symmetric candidate geometries produce exactly tied objective values
    whose floating-point ordering depends on evaluation order; taking the
    first near-minimal entry makes the choice evaluation-order invariant.
    """
    v = np.asarray(values, dtype=float)
    vmin = v.min(axis=0)
    tol = TIE_RTOL * np.maximum(1.0, np.abs(vmin))
    with np.errstate(invalid="ignore"):
        near = v <= vmin + tol
    return near.argmax(axis=0)


def pick_max(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row-wise argmax of ``values`` with (larger weight, lower index) ties.

    ``values`` may contain -inf to exclude entries.  Returns (R,) indices.
    """
    values = np.asarray(values, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), values.shape)
    best = values.max(axis=1, keepdims=True)
    tied = values == best
    w_masked = np.where(tied, weights, -np.inf)
    best_w = w_masked.max(axis=1, keepdims=True)
    final = tied & (w_masked == best_w)
    return final.argmax(axis=1)  # argmax returns the first True: lowest index


def apportion(weights: np.ndarray, n: int) -> np.ndarray:
    """Efficient rounding of weight rows to integer counts summing to n.

    Starts from ceil((n - d/2) * w) on the positive-weight support (d is
    the per-row support size), then adds to the most under-served point
    (smallest count/weight) or removes from the most over-served one until
    each row totals n.  Zero-weight points receive zero.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if n < 1:
        raise ValueError("total count must be at least 1")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    pos = w > 0
    d_pos = pos.sum(axis=1, keepdims=True)
    if np.any(d_pos == 0):
        raise ValueError("each row needs at least one positive weight")
    base = np.ceil((n - d_pos / 2.0) * w)
    counts = np.where(pos, np.maximum(base, 0.0), 0.0).astype(np.int64)

    with np.errstate(divide="ignore", invalid="ignore"):
        while True:
            deficit_rows = counts.sum(axis=1) < n
            if not deficit_rows.any():
                break
            ratio = np.where(pos, counts / np.where(pos, w, 1.0), np.inf)
            pick = pick_max(np.where(pos, -ratio, -np.inf), w)
            rows = np.nonzero(deficit_rows)[0]
            counts[rows, pick[rows]] += 1
        while True:
            surplus_rows = counts.sum(axis=1) > n
            if not surplus_rows.any():
                break
            removable = pos & (counts > 0)
            ratio = np.where(removable, (counts - 1) / np.where(pos, w, 1.0), -np.inf)
            # remove where (count-1)/w is largest; ties prefer smaller weight
            pick = pick_max(ratio, -w)
            rows = np.nonzero(surplus_rows)[0]
            counts[rows, pick[rows]] -= 1

    out = counts if np.asarray(weights).ndim > 1 else counts[0]
    return out


def cumulative_step(weights: np.ndarray, counts: np.ndarray, m: int) -> np.ndarray:
    """Allocate m new observations so cumulative counts track total * weights.

    Largest-deficit rule: each observation goes to the point whose count
    lags its target (new_total * w_i) the most.  Keeps every point within
    one count of its continuous target.  Returns the (R, d) increment.
    """
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    cum = np.atleast_2d(np.asarray(counts, dtype=np.int64)).copy()
    if m < 1:
        raise ValueError("run size must be at least 1")
    start_total = cum.sum(axis=1, keepdims=True)
    new = np.zeros_like(cum)
    pos = w > 0
    for k in range(1, m + 1):
        target = (start_total + k) * w
        deficit = np.where(pos, target - (cum + new), -np.inf)
        pick = pick_max(deficit, w)
        new[np.arange(new.shape[0]), pick] += 1
    out = new if np.asarray(weights).ndim > 1 else new[0]
    return out


@lru_cache(maxsize=64)
def compositions(total: int, parts: int) -> tuple:
    """All nonnegative integer tuples of length ``parts`` summing to ``total``.

    Lexicographically ascending; this order is the tie-break shared by the
    exact design solvers.
    """
    if parts < 1:
        raise ValueError("parts must be >= 1")
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def composition_count(total: int, parts: int) -> int:
    from math import comb

    return comb(total + parts - 1, parts - 1)
