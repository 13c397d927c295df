"""Expected and observed Fisher information, and the decomposition that
links them through per-point information ratios.

For grouped data the observed information splits point by point: each
support point contributes (sum of observed elemental info) * f f', and
dividing that sum by the expected elemental info gives the point's
information ratio q_i.  Normalizing the ratios yields weights omega that
define the induced design tau, for which

    n * ofi(data) = Q * efi(tau),      Q = sum_i q_i.

The blended design nu combines a planned next run with the accumulated
ratios; its expected information reproduces the projected information
matrix m * M(next) + J(history) up to the factor (m + Q).
"""

from __future__ import annotations

import numpy as np

from .models import RegressorMap, ResponseModel
from .structures import ContinuousDesign, DataSet, ExactDesign, InfoMatrix

# Relative cancellation threshold below which the total ratio Q is treated
# as degenerate (callers decide the fallback).
_Q_CANCEL_RTOL = 1e-12


class DegenerateDataError(ValueError):
    """Raised when accumulated information ratios cancel to zero."""


def efi(model: ResponseModel, theta, fmap: RegressorMap, design) -> InfoMatrix:
    """Expected (normalized) information of a design at theta."""
    if isinstance(design, ExactDesign):
        design = design.to_continuous()
    theta = np.asarray(theta, dtype=float).ravel()
    F = fmap.design_matrix(design.points)
    mu = model.expected_elemental_info(F @ theta)
    m = np.einsum("i,ip,iq->pq", design.weights * mu, F, F)
    return InfoMatrix.from_values(m)


def _group_info_sums(model: ResponseModel, theta, fmap: RegressorMap,
                     data: DataSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point sums of observed elemental information, with features."""
    theta = np.asarray(theta, dtype=float).ravel()
    F = fmap.design_matrix(data.points)
    etas = F @ theta
    sums = np.zeros(data.points.shape[0])
    for i, (eta_i, ys) in enumerate(zip(etas, data.groups)):
        if ys.size:
            sums[i] = float(np.sum(model.observed_elemental_info(eta_i, ys)))
    return sums, etas, F


def observed_info_raw(model: ResponseModel, theta, fmap: RegressorMap,
                      data: DataSet) -> np.ndarray:
    """Unnormalized observed information J = sum_ij I(x_i, y_ij) f_i f_i'."""
    sums, _, F = _group_info_sums(model, theta, fmap, data)
    return np.einsum("i,ip,iq->pq", sums, F, F)


def ofi(model: ResponseModel, theta, fmap: RegressorMap,
        data: DataSet) -> InfoMatrix:
    """Observed information normalized by the sample size."""
    n = data.total_n
    if n < 1:
        raise ValueError("observed information needs at least one observation")
    return InfoMatrix.from_values(observed_info_raw(model, theta, fmap, data) / n)


def info_ratio_sum(model: ResponseModel, theta, fmap: RegressorMap,
                   x, ys) -> float:
    """Sum over one point's responses of observed / expected elemental info."""
    theta = np.asarray(theta, dtype=float).ravel()
    f = fmap(np.asarray(x, dtype=float))
    eta_x = float(np.asarray(f, dtype=float).ravel() @ theta)
    mu = float(model.expected_elemental_info(np.asarray(eta_x)))
    if mu == 0.0 or not np.isfinite(mu):
        raise ValueError("expected elemental information vanishes at this point")
    ys = np.asarray(ys, dtype=float).ravel()
    if ys.size == 0:
        return 0.0
    return float(np.sum(model.observed_elemental_info(eta_x, ys)) / mu)


def info_ratios(model: ResponseModel, theta, fmap: RegressorMap,
                data: DataSet) -> tuple[np.ndarray, float]:
    """Per-point information ratios q and their total Q.

    Points without observations contribute q_i = 0 regardless of their
    expected information; occupied points require it to be nonzero.
    """
    sums, etas, _ = _group_info_sums(model, theta, fmap, data)
    mu = model.expected_elemental_info(etas)
    q = np.zeros_like(sums)
    occupied = data.counts() > 0
    bad = occupied & ((mu == 0.0) | ~np.isfinite(mu))
    if np.any(bad):
        raise ValueError(
            "expected elemental information vanishes at an occupied point")
    q[occupied] = sums[occupied] / mu[occupied]
    return q, float(q.sum())


def omega_weights(model: ResponseModel, theta, fmap: RegressorMap,
                  data: DataSet) -> np.ndarray:
    """Normalized information-ratio weights omega = q / Q.

    Raises DegenerateDataError when the total Q cancels to (numerically)
    zero; the caller chooses the fallback.
    """
    q, total = info_ratios(model, theta, fmap, data)
    scale = float(np.abs(q).sum())
    if scale == 0.0 or abs(total) < _Q_CANCEL_RTOL * max(1.0, scale):
        raise DegenerateDataError("total information ratio is zero")
    return q / total


def induced_design(model: ResponseModel, theta, fmap: RegressorMap,
                   data: DataSet) -> ContinuousDesign:
    """Design weighted by each point's share of accumulated information.

    Flagged improper when any share is negative (possible when observed
    elemental information is negative).
    """
    omega = omega_weights(model, theta, fmap, data)
    proper = bool(np.all(omega >= 0.0))
    return ContinuousDesign(data.points.copy(), omega, proper=proper)


def blended_weight(w: float, run_size: float, total_ratio: float,
                   omega: float) -> float:
    """Weight of one point in the design blending a planned run with the
    accumulated information: (m*w + Q*omega) / (m + Q)."""
    denom = run_size + total_ratio
    if denom == 0.0:
        raise ValueError("run size and total information ratio cancel")
    return (run_size * w + total_ratio * omega) / denom


def projected_information(model: ResponseModel, theta, fmap: RegressorMap,
                          next_run: ContinuousDesign, run_size: int,
                          history: DataSet | None) -> InfoMatrix:
    """Unnormalized information expected after the next run:
    run_size * M(next_run) + J(history)."""
    if run_size < 1:
        raise ValueError("run size must be at least 1")
    m_next = efi(model, theta, fmap, next_run).values * float(run_size)
    if history is not None and history.total_n > 0:
        m_next = m_next + observed_info_raw(model, theta, fmap, history)
    return InfoMatrix.from_values(m_next)
