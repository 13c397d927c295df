"""Design criteria and efficiency measures.

Both criteria are minimized and are positively homogeneous of degree -1:

* D: psi(M) = det(M^-1)^(1/p)
* A: psi(M) = trace(M^-1)

Matrices that are not positive definite get the sentinel value +inf
(``DEGENERATE``), which makes them compare as worse than any finite value
inside a minimization.  Efficiency ratios with a degenerate denominator
are reported as 0 with a flag rather than propagating the sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import information as info_mod
from . import mle as mle_mod
from .models import RegressorMap, ResponseModel
from .structures import (
    ContinuousDesign,
    DataSet,
    InfoMatrix,
    definiteness_tolerance,
)

DEGENERATE = float("inf")

CRITERIA = ("D", "A")


def _check_kind(kind: str) -> str:
    if kind not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {kind!r}")
    return kind


def psi_from_eigenvalues(kind: str, eigs: np.ndarray) -> np.ndarray:
    """Criterion values from stacked ascending eigenvalues (..., p).

    Rows whose smallest eigenvalue is not clearly positive (relative to
    the matrix scale) are degenerate and map to +inf.
    """
    _check_kind(kind)
    eigs = np.asarray(eigs, dtype=float)
    p = eigs.shape[-1]
    trace = eigs.sum(axis=-1)
    tol = 1e-10 * np.maximum(1.0, np.abs(trace) / p)
    pd = eigs[..., 0] > tol
    out = np.full(eigs.shape[:-1], DEGENERATE)
    if np.any(pd):
        good = eigs[pd]
        if kind == "D":
            out[pd] = np.exp(-np.log(good).mean(axis=-1))
        else:
            out[pd] = (1.0 / good).sum(axis=-1)
    return out


def psi_batch(kind: str, mats: np.ndarray) -> np.ndarray:
    """Criterion over stacked symmetric matrices (..., p, p)."""
    mats = np.asarray(mats, dtype=float)
    eigs = np.linalg.eigvalsh(mats)
    return psi_from_eigenvalues(kind, eigs)


def psi(kind: str, m) -> float:
    """Criterion value of one information matrix (InfoMatrix or array).

    Raw arrays go through the symmetry check; batched callers that have
    already validated their stacks use psi_batch directly.
    """
    if not isinstance(m, InfoMatrix):
        m = InfoMatrix.from_values(np.asarray(m, dtype=float))
    return float(psi_from_eigenvalues(kind, m.eigenvalues[None, :])[0])


@dataclass
class EfficiencyReport:
    """Outcome of an efficiency ratio psi(optimal) / psi(design)."""

    value: float
    numerator: float
    denominator: float
    degenerate: bool = False
    proper: bool = True
    theta_hat: np.ndarray | None = None
    cross_check_gap: float | None = None


def psi_efficiency(kind: str, m_optimal, m_design) -> EfficiencyReport:
    """Ratio psi(m_optimal) / psi(m_design); 0 with a flag when the
    candidate matrix is degenerate."""
    num = psi(kind, m_optimal)
    if not np.isfinite(num):
        raise ValueError("reference (optimal) information matrix is degenerate")
    den = psi(kind, m_design)
    if not np.isfinite(den):
        return EfficiencyReport(0.0, num, den, degenerate=True)
    return EfficiencyReport(num / den, num, den)


def observed_efficiency(kind: str, model: ResponseModel, theta,
                        fmap: RegressorMap, flod: ContinuousDesign,
                        data: DataSet) -> EfficiencyReport:
    """Efficiency of the information-weighted data design against the
    locally optimal design, both evaluated at ``theta``.

    Cross-checked, when the total information ratio Q is positive, against
    the equivalent unnormalized form psi(Q * M_opt) / psi(J).
    """
    _check_kind(kind)
    m_opt = info_mod.efi(model, theta, fmap, flod)
    tau = info_mod.induced_design(model, theta, fmap, data)
    m_tau = info_mod.efi(model, theta, fmap, tau)
    report = psi_efficiency(kind, m_opt, m_tau)
    report.proper = tau.proper

    q, total_q = info_mod.info_ratios(model, theta, fmap, data)
    if total_q > 0 and not report.degenerate:
        j_raw = info_mod.observed_info_raw(model, theta, fmap, data)
        alt_num = psi(kind, total_q * m_opt.values)
        alt_den = psi(kind, j_raw)
        if np.isfinite(alt_den):
            alt = alt_num / alt_den
            gap = abs(alt - report.value) / max(1.0, abs(report.value))
            report.cross_check_gap = gap
            if gap > 1e-8:
                raise RuntimeError(
                    "efficiency cross-check failed: normalized and "
                    f"unnormalized forms differ by {gap:.3e}")
    return report


def observed_efficiency_at_mle(kind: str, model: ResponseModel,
                               fmap: RegressorMap,
                               flod_solver: Callable[[np.ndarray], ContinuousDesign],
                               data: DataSet,
                               init=None) -> EfficiencyReport:
    """Same ratio with theta replaced by the MLE everywhere, including
    re-solving the locally optimal design at the MLE."""
    _check_kind(kind)
    if init is None:
        init = np.ones(fmap.dimension)
    fit = mle_mod.fit_mle(model, fmap, data, init)
    theta_hat = fit.theta_hat
    flod_hat = flod_solver(theta_hat)
    report = observed_efficiency(kind, model, theta_hat, fmap, flod_hat, data)
    report.theta_hat = theta_hat
    return report


def relative_efficiency(kind: str, var_reference, var_alternative) -> float:
    """Sampling-variance comparison of two estimators.

    D: (det(var_reference)/det(var_alternative))^(1/p);
    A: trace(var_reference)/trace(var_alternative).
    Values above 1 favor the alternative.
    """
    _check_kind(kind)
    ref = np.asarray(var_reference, dtype=float)
    alt = np.asarray(var_alternative, dtype=float)
    if ref.shape != alt.shape or ref.ndim != 2 or ref.shape[0] != ref.shape[1]:
        raise ValueError("covariance matrices must be square and congruent")
    p = ref.shape[0]
    for name, m in (("reference", ref), ("alternative", alt)):
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] <= definiteness_tolerance(eigs.sum(), p):
            raise ValueError(f"{name} covariance matrix is singular")
    if kind == "D":
        sign_r, logdet_r = np.linalg.slogdet(ref)
        sign_a, logdet_a = np.linalg.slogdet(alt)
        if sign_r <= 0 or sign_a <= 0:
            raise ValueError("covariance determinants must be positive")
        return float(np.exp((logdet_r - logdet_a) / p))
    return float(np.trace(ref) / np.trace(alt))
