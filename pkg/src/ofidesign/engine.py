"""Vectorized replication engine for simulation studies.

All replications advance in lockstep as (R, d) arrays: counts and
per-point response sums are enough state for both families because every
elemental quantity is affine in y.  Draws are pregenerated per
(replication, point) with the same stream keying as the scalar path, so
row r of the engine reproduces the scalar policy trajectory of
replication r exactly (same plans, same tie-breaks); the test suite
checks that equivalence.

Per-run policy work is batched: the reallocation rule is a handful of
(R, d) array ops, and the refitting policies use a batched damped-Newton
MLE plus criterion evaluation of every run composition via stacked
eigendecompositions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import design_opt
from .criteria import psi, psi_batch
from .mle import MODE_EQUIV_LOGLIK
from .models import GammaLog, NormalSqrt, RegressorMap, ResponseModel
from .numerics import (TIE_RTOL, apportion, compositions, cumulative_step,
                       first_within_min)
from .streams import point_stream_raw
from .structures import CandidateSet

_Q_CANCEL_RTOL = 1e-12  # matches information.omega_weights


@dataclass
class BatchSpec:
    """One method arm of a study, run for R replications."""

    model: ResponseModel
    fmap: RegressorMap
    candidates: CandidateSet
    truth: np.ndarray
    theta0: np.ndarray
    criterion: str
    method: str
    m1: int
    m_step: int
    milestones: tuple
    R: int
    seed: int
    rep_start: int = 0
    compute_eff_mle: bool = True
    record_plans: bool = False

    def __post_init__(self):
        self.truth = np.asarray(self.truth, dtype=float).ravel()
        self.theta0 = np.asarray(self.theta0, dtype=float).ravel()
        self.milestones = tuple(sorted(int(n) for n in self.milestones))
        for n in self.milestones:
            if n < self.m1 or (n - self.m1) % self.m_step != 0:
                raise ValueError(
                    f"milestone n={n} unreachable with m1={self.m1}, "
                    f"m_step={self.m_step}")


@dataclass
class MilestoneStats:
    n: int
    eff_theta: np.ndarray
    omega_gap: np.ndarray
    proper: np.ndarray
    eff_mle: np.ndarray | None = None
    theta_hat: np.ndarray | None = None
    mle_ok: np.ndarray | None = None


@dataclass
class BatchResult:
    milestones: dict
    load_fallbacks: int = 0
    plans: list = field(default_factory=list)


@dataclass
class DrawBlock:
    """Pregenerated responses with prefix sums for O(1) group statistics."""

    ys: np.ndarray
    cum_y: np.ndarray
    cum_aux: np.ndarray  # gamma: cumsum log y; normal: cumsum y^2


def build_draws(model: ResponseModel, eta_true: np.ndarray, R: int, seed: int,
                n_max: int, rep_start: int = 0) -> DrawBlock:
    eta_true = np.asarray(eta_true, dtype=float).ravel()
    d = eta_true.shape[0]
    ys = np.empty((R, d, n_max))
    for r in range(R):
        for i in range(d):
            raw = point_stream_raw(model, seed, rep_start + r, i, n_max)
            ys[r, i] = model.response_from_standard(eta_true[i], raw)
    aux = np.log(ys) if isinstance(model, GammaLog) else ys ** 2
    zeros = np.zeros((R, d, 1))
    cum_y = np.concatenate([zeros, np.cumsum(ys, axis=2)], axis=2)
    cum_aux = np.concatenate([zeros, np.cumsum(aux, axis=2)], axis=2)
    return DrawBlock(ys=ys, cum_y=cum_y, cum_aux=cum_aux)


def _gather(cum: np.ndarray, counts: np.ndarray) -> np.ndarray:
    return np.take_along_axis(cum, counts[:, :, None], axis=2)[:, :, 0]


# ---------------------------------------------------------------------------
# family-specific group statistics (affine in y, so (counts, sums) suffice)

def _mu(model, eta):
    if isinstance(model, GammaLog):
        return np.full_like(np.asarray(eta, dtype=float), model.shape)
    return 4.0 * eta ** 2 / model.sigma ** 2


def _info_sums(model, eta, counts, S):
    if isinstance(model, GammaLog):
        return model.shape * S * np.exp(-eta)
    return 2.0 * (3.0 * counts * eta ** 2 - S) / model.sigma ** 2


def _score_sums(model, eta, counts, S):
    if isinstance(model, GammaLog):
        return model.shape * (S * np.exp(-eta) - counts)
    return 2.0 * eta * (S - counts * eta ** 2) / model.sigma ** 2


def _loglik(model, eta, counts, S, aux):
    if isinstance(model, GammaLog):
        a = model.shape
        const = a * math.log(a) - math.lgamma(a)
        with np.errstate(over="ignore"):
            terms = ((a - 1.0) * aux + counts * const - a * counts * eta
                     - a * S * np.exp(-eta))
    else:
        s2 = model.sigma ** 2
        terms = (-(aux - 2.0 * eta ** 2 * S + counts * eta ** 4) / (2.0 * s2)
                 - counts * (math.log(model.sigma) + 0.5 * math.log(2 * math.pi)))
    return terms.sum(axis=-1)


def _q_ratios(model, eta, counts, S):
    """Per-point information ratios; unoccupied points contribute zero."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(model, GammaLog):
            q = S * np.exp(-eta)
        else:
            q = (3.0 * counts * eta ** 2 - S) / (2.0 * eta ** 2)
    return np.where(counts > 0, q, 0.0)


def _psi_batch_safe(kind, mats):
    finite = np.isfinite(mats).all(axis=(1, 2))
    out = np.full(mats.shape[0], np.inf)
    if finite.any():
        out[finite] = psi_batch(kind, mats[finite])
    return out


# ---------------------------------------------------------------------------
# batched MLE

def _newton_batch(model, F, counts, S, aux, init, tol, max_iter):
    R = counts.shape[0]
    p = F.shape[1]
    theta = np.array(np.broadcast_to(init, (R, p)), dtype=float)
    eye = np.eye(p)

    def evaluate(th, rows=slice(None)):
        eta = th @ F.T
        ll = _loglik(model, eta, counts[rows], S[rows], aux[rows])
        grad = _score_sums(model, eta, counts[rows], S[rows]) @ F
        info = _info_sums(model, eta, counts[rows], S[rows])
        return ll, grad, info

    ll, grad, info = evaluate(theta)
    gnorm = np.linalg.norm(grad, axis=1)
    converged = gnorm <= tol * np.maximum(1.0, np.abs(ll))
    stuck = np.zeros(R, dtype=bool)
    for _ in range(max_iter):
        active = ~converged & ~stuck
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        a = np.einsum("rd,dp,dq->rpq", info[idx], F, F)
        eigs = np.linalg.eigvalsh(a)
        scale = np.maximum(1.0, np.abs(eigs).max(axis=1))
        need = eigs[:, 0] <= 1e-10 * scale
        ridge = np.where(need, np.abs(eigs[:, 0]) + 1e-6 * scale, 0.0)
        a = a + ridge[:, None, None] * eye
        step = np.linalg.solve(a, grad[idx][:, :, None])[:, :, 0]
        lam = np.ones(idx.shape[0])
        improved = np.zeros(idx.shape[0], dtype=bool)
        trial_theta = theta[idx].copy()
        trial_ll = ll[idx].copy()
        base_theta = theta[idx]
        base_ll = ll[idx]
        for _h in range(40):
            open_rows = ~improved
            if not open_rows.any():
                break
            cand = base_theta[open_rows] + lam[open_rows, None] * step[open_rows]
            eta_c = cand @ F.T
            rows = idx[open_rows]
            ll_c = _loglik(model, eta_c, counts[rows], S[rows], aux[rows])
            better = ll_c > base_ll[open_rows]
            if better.any():
                sub = np.nonzero(open_rows)[0][better]
                trial_theta[sub] = cand[better]
                trial_ll[sub] = ll_c[better]
                improved[sub] = True
            lam = np.where(improved, lam, lam * 0.5)
        theta[idx[improved]] = trial_theta[improved]
        stall = ~improved
        if stall.any():
            # mirror the scalar fitter: a stalled line search near the
            # optimum still accepts the full step when it halves the
            # gradient, so the ascent can finish to the gradient criterion
            rows = idx[stall]
            cand = base_theta[stall] + step[stall]
            ll_c, grad_c, info_c = evaluate(cand, rows)
            gnorm_c = np.linalg.norm(grad_c, axis=1)
            gnorm_b = np.linalg.norm(grad[rows], axis=1)
            ok_rows = ((ll_c >= base_ll[stall]
                        - 1e-12 * np.maximum(1.0, np.abs(base_ll[stall])))
                       & (gnorm_c <= 0.5 * gnorm_b))
            acc = rows[ok_rows]
            if acc.size:
                theta[acc] = cand[ok_rows]
                ll[acc] = ll_c[ok_rows]
                grad[acc] = grad_c[ok_rows]
                info[acc] = info_c[ok_rows]
                converged[acc] = gnorm_c[ok_rows] <= tol * np.maximum(
                    1.0, np.abs(ll_c[ok_rows]))
            stuck[rows[~ok_rows]] = True
        moved = idx[improved]
        if moved.size:
            ll_m, grad_m, info_m = evaluate(theta[moved], moved)
            ll[moved] = ll_m
            grad[moved] = grad_m
            info[moved] = info_m
            gnorm_m = np.linalg.norm(grad_m, axis=1)
            converged[moved] = gnorm_m <= tol * np.maximum(1.0, np.abs(ll_m))
    return theta, ll, converged


def batch_mle(model, F, counts, S, aux, init, tol=1e-8, max_iter=200):
    """Batched fit; for the normal family runs the sign-flip multistart.

    Selection mirrors fit_mle: per row the highest log likelihood wins,
    and modes within the statistical-equivalence window of the best
    resolve toward the solution closest to init, then by start order.
    """
    R = counts.shape[0]
    p = F.shape[1]
    init = np.asarray(init, dtype=float)
    init_rows = np.array(np.broadcast_to(init, (R, p)), dtype=float)
    if isinstance(model, GammaLog):
        return _newton_batch(model, F, counts, S, aux, init_rows, tol, max_iter)

    from itertools import product
    thetas, lls, convs, dists = [], [], [], []
    for signs in product((1.0, -1.0), repeat=p):
        start = init_rows * np.asarray(signs)
        theta, ll, conv = _newton_batch(model, F, counts, S, aux, start,
                                        tol, max_iter)
        thetas.append(theta)
        lls.append(ll)
        convs.append(conv)
        dists.append(np.linalg.norm(theta - init_rows, axis=1))
    lls = np.asarray(lls)
    dists = np.asarray(dists)
    best_ll = lls.max(axis=0)
    window = np.maximum(MODE_EQUIV_LOGLIK,
                        TIE_RTOL * np.maximum(1.0, np.abs(best_ll)))
    in_window = lls >= best_ll - window
    pick = np.argmin(np.where(in_window, dists, np.inf), axis=0)
    rows = np.arange(R)
    best_theta = np.stack(thetas, axis=0)[pick, rows]
    return best_theta, lls[pick, rows], np.asarray(convs)[pick, rows]


# ---------------------------------------------------------------------------
# batched locally optimal weights (for efficiency at the MLE)

def batch_flod_weights(kind, mu, F, tol=1e-6, max_iter=20000):
    """Multiplicative-update optimal weights row by row.

    Returns (weights, gap, ok); rows whose information is degenerate for
    the equal-weight start are marked not ok and skipped.
    """
    R, d = mu.shape
    exponent = 1.0 if kind == "D" else 0.5
    w = np.full((R, d), 1.0 / d)
    gap = np.full(R, np.inf)
    k0 = np.einsum("rd,dp,dq->rpq", w * mu, F, F)
    ok = np.isfinite(_psi_batch_safe(kind, k0))
    active = ok.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        k = np.einsum("rd,dp,dq->rpq", w[idx] * mu[idx], F, F)
        det = np.linalg.det(k)
        bad = ~np.isfinite(det) | (det <= 0)
        if bad.any():
            ok[idx[bad]] = False
            active[idx[bad]] = False
            keep = ~bad
            idx = idx[keep]
            if idx.size == 0:
                continue
            k = k[keep]
        kinv = np.linalg.inv(k)
        if kind == "A":
            kinv = kinv @ kinv
        dirs = mu[idx] * np.einsum("ip,rpq,iq->ri", F, kinv, F)
        dbar = (w[idx] * dirs).sum(axis=1)
        g = dirs.max(axis=1) / dbar - 1.0
        gap[idx] = g
        done = g < tol
        still = idx[~done]
        active[idx[done]] = False
        if still.size:
            rows = ~done
            upd = w[still] * (dirs[rows] / dbar[rows, None]) ** exponent
            w[still] = upd / upd.sum(axis=1, keepdims=True)
    return w, gap, ok


# ---------------------------------------------------------------------------
# the lockstep run

def run_batch(spec: BatchSpec, draws: DrawBlock | None = None) -> BatchResult:
    model, fmap, kind = spec.model, spec.fmap, spec.criterion
    pts = spec.candidates.points
    F = fmap.design_matrix(pts)
    d = pts.shape[0]
    R = spec.R
    eta_true = F @ spec.truth
    eta0 = F @ spec.theta0
    if isinstance(model, NormalSqrt) and (np.any(eta_true == 0) or np.any(eta0 == 0)):
        raise ValueError("normal/sqrt studies need nonzero predictors at "
                         "every candidate point")

    flod0 = design_opt.flod_continuous(kind, model, spec.theta0, fmap,
                                       spec.candidates)
    w_star0 = design_opt.full_support_weights(flod0, spec.candidates)
    flod_true = design_opt.flod_continuous(kind, model, spec.truth, fmap,
                                           spec.candidates)
    w_star_true = design_opt.full_support_weights(flod_true, spec.candidates)
    from . import information as info_mod
    psi_star_true = psi(kind, info_mod.efi(model, spec.truth, fmap, flod_true))

    n_max = max(spec.milestones)
    if draws is None:
        draws = build_draws(model, eta_true, R, spec.seed, n_max,
                            rep_start=spec.rep_start)

    counts = np.zeros((R, d), dtype=np.int64)
    flod_counter = np.zeros((1, d), dtype=np.int64)
    mu_true = _mu(model, eta_true)
    mu0 = _mu(model, eta0)
    result = BatchResult(milestones={})
    # first run: equal allocation over the optimal support
    support = w_star0 > 0
    equal = np.where(support, 1.0 / support.sum(), 0.0)
    first = apportion(equal, spec.m1)

    def family_aux(counts_now):
        return _gather(draws.cum_aux, counts_now)

    def milestone_snapshot(n_now):
        S = _gather(draws.cum_y, counts)
        q = _q_ratios(model, eta_true, counts, S)
        total = q.sum(axis=1)
        absq = np.abs(q).sum(axis=1)
        good = np.isfinite(total) & (absq > 0) & (
            np.abs(total) >= _Q_CANCEL_RTOL * np.maximum(1.0, absq))
        omega = np.full((R, d), np.nan)
        omega[good] = q[good] / total[good, None]
        omega_gap = np.abs(omega - w_star_true).max(axis=1)
        proper = good & np.all(q >= 0, axis=1)

        coef = _info_sums(model, eta_true, counts, S)
        j_true = np.einsum("rd,dp,dq->rpq", coef, F, F)
        m_tau = np.full_like(j_true, np.nan)
        m_tau[good] = j_true[good] / total[good, None, None]
        psi_tau = _psi_batch_safe(kind, m_tau)
        eff_theta = np.where(np.isfinite(psi_tau), psi_star_true / psi_tau, 0.0)
        if isinstance(model, GammaLog):
            worst = float(eff_theta.max())
            if worst > 1.0 + 1e-12:
                raise AssertionError(
                    f"efficiency bound violated for gamma data: {worst}")
        stats = MilestoneStats(n=n_now, eff_theta=eff_theta,
                               omega_gap=omega_gap, proper=proper)

        if spec.compute_eff_mle:
            aux = family_aux(counts)
            theta_hat, ll, ok = batch_mle(model, F, counts, S, aux,
                                          spec.theta0)
            eta_hat = theta_hat @ F.T
            S_now = S
            q_hat = _q_ratios(model, eta_hat, counts, S_now)
            total_hat = q_hat.sum(axis=1)
            coef_hat = _info_sums(model, eta_hat, counts, S_now)
            j_hat = np.einsum("rd,dp,dq->rpq", coef_hat, F, F)
            with np.errstate(divide="ignore", invalid="ignore"):
                m_tau_hat = j_hat / total_hat[:, None, None]
            psi_tau_hat = _psi_batch_safe(kind, m_tau_hat)
            if isinstance(model, GammaLog):
                psi_star_hat = np.full(R, psi_star_true)
                flod_ok = np.ones(R, dtype=bool)
            else:
                mu_hat = _mu(model, eta_hat)
                w_hat, gap_hat, flod_ok = batch_flod_weights(kind, mu_hat, F)
                m_star_hat = np.einsum("rd,dp,dq->rpq", w_hat * mu_hat, F, F)
                psi_star_hat = _psi_batch_safe(kind, m_star_hat)
                flod_ok = flod_ok & np.isfinite(psi_star_hat) & (gap_hat < 1e-3)
            usable = ok & flod_ok
            eff_mle = np.full(R, np.nan)
            finite = usable & np.isfinite(psi_tau_hat)
            eff_mle[finite] = psi_star_hat[finite] / psi_tau_hat[finite]
            eff_mle[usable & ~np.isfinite(psi_tau_hat)] = 0.0
            theta_out = np.where(usable[:, None], theta_hat, np.nan)
            stats.eff_mle = eff_mle
            stats.theta_hat = theta_out
            stats.mle_ok = usable
        result.milestones[n_now] = stats

    total_n = 0
    j = 0
    milestone_set = set(spec.milestones)
    while total_n < n_max:
        j += 1
        m = spec.m1 if j == 1 else spec.m_step
        if j == 1:
            new = np.broadcast_to(first, (R, d))
            flod_counter = flod_counter + first
        elif spec.method == "flod" or (
                spec.method == "aod" and not model.efi_depends_on_theta):
            row = cumulative_step(w_star0, flod_counter, m)
            flod_counter = flod_counter + row
            new = np.broadcast_to(row.astype(np.int64), (R, d))
        elif spec.method == "load":
            S = _gather(draws.cum_y, counts)
            q = _q_ratios(model, eta0, counts, S)
            total = q.sum(axis=1)
            absq = np.abs(q).sum(axis=1)
            degen = (absq == 0) | (np.abs(total) < _Q_CANCEL_RTOL
                                   * np.maximum(1.0, absq))
            w_tilde = np.tile(w_star0, (R, 1))
            goodr = ~degen
            if goodr.any():
                omega = q[goodr] / total[goodr, None]
                w_prime = (w_star0 + total[goodr, None]
                           * (w_star0 - omega) / m)
                wt = np.where(w_prime > 0, w_prime, 0.0)
                sums = wt.sum(axis=1)
                safe = sums > 0
                wt[safe] = wt[safe] / sums[safe, None]
                wt[~safe] = w_star0
                w_tilde[goodr] = wt
            result.load_fallbacks += int(degen.sum())
            new = apportion(w_tilde, m)
        elif spec.method in ("moad", "aod"):
            S = _gather(draws.cum_y, counts)
            aux = family_aux(counts)
            # every refit is anchored at the experiment's initial guess, so
            # the sign-flip multistart and its distance tie-break use the
            # same reference point on every run
            theta_hat, ll, ok = batch_mle(model, F, counts, S, aux,
                                          spec.theta0)
            theta_used = np.where(ok[:, None], theta_hat, spec.theta0)
            eta_hat = theta_used @ F.T
            if spec.method == "moad":
                prior_coef = _info_sums(model, eta_hat, counts, S)
            else:
                prior_coef = counts * _mu(model, eta_hat)
            prior = np.einsum("rd,dp,dq->rpq", prior_coef, F, F)
            mu_hat = _mu(model, eta_hat)
            comps = np.asarray(compositions(m, d), dtype=float)
            vals = np.empty((comps.shape[0], R))
            for ci, comp in enumerate(comps):
                mats = prior + np.einsum("rd,dp,dq->rpq", comp * mu_hat, F, F)
                vals[ci] = _psi_batch_safe(kind, mats)
            pickc = first_within_min(vals)
            new = comps[pickc].astype(np.int64)
            all_inf = ~np.isfinite(np.min(vals, axis=0))
            if all_inf.any():
                fallback = apportion(np.full(d, 1.0 / d), m)
                new = new.copy()
                new[all_inf] = fallback
        else:
            raise ValueError(f"unknown method {spec.method!r}")

        counts = counts + new
        total_n += m
        if spec.record_plans:
            result.plans.append(np.array(new, dtype=np.int64, copy=True))
        if total_n in milestone_set:
            milestone_snapshot(total_n)
    return result
