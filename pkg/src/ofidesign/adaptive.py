"""Sequential allocation policies.

Four policies share one state object:

* ``flod``: fixed allocation tracking the locally optimal weights at the
  initial guess; never looks at data.
* ``load``: after each run, reweights the optimal-design weights by how
  far each point's accumulated information share lags its target,
  w' = w* + Q (w* - omega) / m, clips negatives and renormalizes.
* ``moad``: refits theta, then picks the run minimizing the criterion of
  run information plus observed history information.
* ``aod``: like moad but the carried-over term is the expected
  information of the realized past design at the refit theta.  Families
  whose expected information is theta-free make this equivalent to flod,
  so the plan is flagged and follows the fixed allocation.

The first run always spreads observations evenly over the optimal
support.  All count conversions go through the shared rounding kernels
so independently computed trajectories agree exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import criteria, design_opt, information, mle
from .models import RegressorMap, ResponseModel
from .numerics import apportion, cumulative_step
from .streams import ResponseStreams
from .structures import CandidateSet, ContinuousDesign, DataSet

METHODS = ("flod", "load", "moad", "aod")


@dataclass
class RunPlan:
    """Planned allocation for one run, aligned to candidate order."""

    j: int
    method: str
    counts: np.ndarray
    m: int
    provenance: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).ravel()
        if int(self.counts.sum()) != self.m:
            raise ValueError("plan counts must sum to the run size")
        if np.any(self.counts < 0):
            raise ValueError("plan counts must be nonnegative")


@dataclass
class RunRecord:
    """Post-run diagnostics for export: one JSON line per run."""

    j: int
    plan: list
    omega: list
    Q: float
    eff_theta: float
    eff_mle: Optional[float] = None
    theta_hat: Optional[list] = None

    def to_json_line(self) -> str:
        payload = {"j": self.j, "plan": self.plan, "omega": self.omega,
                   "Q": self.Q, "eff_theta": self.eff_theta}
        if self.eff_mle is not None:
            payload["eff_mle"] = self.eff_mle
        if self.theta_hat is not None:
            payload["theta_hat"] = self.theta_hat
        return json.dumps(payload)


@dataclass
class PolicyState:
    """Everything a policy needs between runs."""

    method: str
    criterion: str
    model: ResponseModel
    fmap: RegressorMap
    theta0: np.ndarray
    candidates: CandidateSet
    flod: ContinuousDesign
    w_star: np.ndarray
    history: DataSet
    plans: list = field(default_factory=list)
    records: list = field(default_factory=list)
    last_fit: Optional[mle.MleResult] = None

    @classmethod
    def create(cls, method: str, criterion: str, model: ResponseModel,
               fmap: RegressorMap, theta0, candidates: CandidateSet,
               tol: float = design_opt.DEFAULT_TOL) -> "PolicyState":
        if method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {method!r}")
        theta0 = np.asarray(theta0, dtype=float).ravel()
        flod = design_opt.flod_continuous(criterion, model, theta0, fmap,
                                          candidates, tol=tol)
        w_star = design_opt.full_support_weights(flod, candidates)
        return cls(method=method, criterion=criterion, model=model, fmap=fmap,
                   theta0=theta0, candidates=candidates, flod=flod,
                   w_star=w_star, history=DataSet.empty(candidates.points))

    @property
    def runs_recorded(self) -> int:
        return self.history.n_runs

    def observe_run(self, plan: RunPlan, responses: list) -> None:
        self.history.append_run(plan.counts, responses)
        self.plans.append(plan)


def first_run(state: PolicyState, m1: int) -> RunPlan:
    """Equal allocation across the optimal support points.

    When m1 is smaller than the support size the plan is flagged and the
    largest-weight points get one observation each.
    """
    if m1 < 1:
        raise ValueError("first run size must be at least 1")
    support = state.w_star > 0
    d = int(support.sum())
    counts = np.zeros(len(state.candidates), dtype=np.int64)
    flags = []
    if m1 < d:
        order = np.lexsort((np.arange(len(state.w_star)), -state.w_star))
        counts[order[:m1]] = 1
        flags.append("first_run_smaller_than_support")
    else:
        equal = np.where(support, 1.0 / d, 0.0)
        counts = apportion(equal, m1)
    return RunPlan(j=1, method=state.method, counts=counts, m=m1,
                   provenance={"w_star": state.w_star.tolist()}, flags=flags)


def _omega_or_none(state: PolicyState):
    try:
        q, total = information.info_ratios(state.model, state.theta0,
                                           state.fmap, state.history)
        omega = information.omega_weights(state.model, state.theta0,
                                          state.fmap, state.history)
        return q, total, omega
    except information.DegenerateDataError:
        return None, 0.0, None


def load_next_run(state: PolicyState, m: int) -> RunPlan:
    """Reallocation rule: w' = w* + Q (w* - omega) / m, clipped to the
    nonnegative simplex, then rounded to counts."""
    if state.runs_recorded == 0:
        return first_run(state, m)
    j = state.runs_recorded + 1
    q, total, omega = _omega_or_none(state)
    flags = []
    if omega is None:
        w_tilde = state.w_star.copy()
        w_prime = state.w_star.copy()
        omega_out = None
        flags.append("degenerate_total_ratio_fallback")
    else:
        w_prime = state.w_star + total * (state.w_star - omega) / m
        positive = np.clip(w_prime, 0.0, None)
        if positive.sum() <= 0:
            w_tilde = state.w_star.copy()
            flags.append("all_weights_clipped_fallback")
        else:
            w_tilde = np.where(w_prime > 0, w_prime, 0.0)
            w_tilde = w_tilde / w_tilde.sum()
        omega_out = omega.tolist()
    counts = apportion(w_tilde, m)
    return RunPlan(j=j, method="load", counts=counts, m=m, provenance={
        "w_star": state.w_star.tolist(),
        "omega": omega_out,
        "Q": total,
        "w_prime": w_prime.tolist(),
        "w_tilde": w_tilde.tolist(),
    }, flags=flags)


def _fit_theta(state: PolicyState):
    """MLE on history anchored at theta0; theta0 fallback when it fails.

    Every refit uses the experiment's initial guess as the multistart
    anchor so the mode-equivalence tie-break has the same reference point
    on every run.
    """
    try:
        fit = mle.fit_mle(state.model, state.fmap, state.history,
                          state.theta0)
    except mle.SingularInformationError:
        return state.theta0, None, ["mle_singular_fallback"]
    state.last_fit = fit
    if not fit.converged:
        return state.theta0, fit, ["mle_nonconverged_fallback"]
    return fit.theta_hat, fit, []


def moad_next_run(state: PolicyState, m: int, exact: bool = True) -> RunPlan:
    """Criterion-minimizing run against observed history information."""
    if state.runs_recorded == 0:
        return first_run(state, m)
    j = state.runs_recorded + 1
    theta_hat, fit, flags = _fit_theta(state)
    prior = information.observed_info_raw(state.model, theta_hat, state.fmap,
                                          state.history)
    blend = None
    try:
        _, total = information.info_ratios(state.model, theta_hat, state.fmap,
                                           state.history)
        if m + total > 0:
            blend = m / (m + total)
    except (information.DegenerateDataError, ValueError):
        blend = None
    problem = design_opt.AugmentedProblem(prior, m, blend_weight=blend)
    design, diag = design_opt.augmented_optimal(
        state.criterion, state.model, theta_hat, state.fmap,
        state.candidates, problem, exact=exact)
    if diag.flagged:
        flags.append("degenerate_objective_fallback")
    counts = design.counts if exact else apportion(design.weights, m)
    return RunPlan(j=j, method="moad", counts=counts, m=m, provenance={
        "theta_hat": np.asarray(theta_hat, dtype=float).tolist(),
        "blend_weight": blend,
        "objective": None if not np.isfinite(diag.psi_value) else diag.psi_value,
    }, flags=flags)


def aod_next_run(state: PolicyState, m: int, exact: bool = True) -> RunPlan:
    """Criterion-minimizing run against expected past-design information.

    Falls back (flagged) to the fixed allocation for families whose
    expected information does not involve theta.
    """
    if state.runs_recorded == 0:
        return first_run(state, m)
    if not state.model.efi_depends_on_theta:
        plan = flod_next_run(state, m)
        plan.method = "aod"
        plan.flags.append("efi_theta_free_equivalent_to_flod")
        return plan
    j = state.runs_recorded + 1
    theta_hat, fit, flags = _fit_theta(state)
    counts_past = state.history.counts().astype(float)
    mu_hat, F = design_opt._atoms(state.model, theta_hat, state.fmap,
                                  state.history.points)
    prior = np.einsum("i,ip,iq->pq", counts_past * mu_hat, F, F)
    total_past = float(counts_past.sum())
    blend = m / (m + total_past) if m + total_past > 0 else None
    problem = design_opt.AugmentedProblem(prior, m, blend_weight=blend)
    design, diag = design_opt.augmented_optimal(
        state.criterion, state.model, theta_hat, state.fmap,
        state.candidates, problem, exact=exact)
    if diag.flagged:
        flags.append("degenerate_objective_fallback")
    counts = design.counts if exact else apportion(design.weights, m)
    return RunPlan(j=j, method="aod", counts=counts, m=m, provenance={
        "theta_hat": np.asarray(theta_hat, dtype=float).tolist(),
        "blend_weight": blend,
    }, flags=flags)


def flod_next_run(state: PolicyState, m: int) -> RunPlan:
    """Fixed policy: cumulative counts track total * w_star."""
    if state.runs_recorded == 0:
        return first_run(state, m)
    j = state.runs_recorded + 1
    counts = cumulative_step(state.w_star, state.history.counts(), m)
    return RunPlan(j=j, method="flod", counts=counts, m=m,
                   provenance={"w_star": state.w_star.tolist()})


_DISPATCH = {
    "flod": flod_next_run,
    "load": load_next_run,
    "moad": moad_next_run,
    "aod": aod_next_run,
}


def next_run(state: PolicyState, method: str | None = None,
             m: int = 1) -> RunPlan:
    method = method or state.method
    if method not in _DISPATCH:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    if state.runs_recorded == 0:
        return first_run(state, m)
    return _DISPATCH[method](state, m)


def run_experiment(state: PolicyState, schedule: list[int], truth,
                   seed: int, replication: int = 0,
                   final_mle: bool = True) -> tuple[DataSet, list[RunRecord]]:
    """Simulate a full experiment under the state's policy.

    ``schedule`` lists run sizes (first entry is the first run).  Truth
    drives sampling only; policies see theta0 and the data.  Per-run
    records carry omega, Q and the efficiency at theta0; the final record
    adds the MLE and its efficiency when requested.
    """
    truth = np.asarray(truth, dtype=float).ravel()
    F = state.fmap.design_matrix(state.candidates.points)
    streams = ResponseStreams(state.model, F @ truth, seed,
                              n_max=int(sum(schedule)), replication=replication)
    records: list[RunRecord] = []
    for idx, m in enumerate(schedule):
        plan = next_run(state, state.method, m)
        responses = [streams.take(i, int(c)) if c else np.empty(0)
                     for i, c in enumerate(plan.counts)]
        state.observe_run(plan, responses)
        try:
            omega = information.omega_weights(state.model, state.theta0,
                                              state.fmap, state.history)
            _, total = information.info_ratios(state.model, state.theta0,
                                               state.fmap, state.history)
            eff = criteria.observed_efficiency(
                state.criterion, state.model, state.theta0, state.fmap,
                state.flod, state.history)
            record = RunRecord(j=idx + 1, plan=plan.counts.tolist(),
                               omega=omega.tolist(), Q=total, eff_theta=eff.value)
        except (information.DegenerateDataError, ValueError):
            record = RunRecord(j=idx + 1, plan=plan.counts.tolist(),
                               omega=[], Q=0.0, eff_theta=0.0)
        records.append(record)
    if final_mle and records:
        try:
            report = criteria.observed_efficiency_at_mle(
                state.criterion, state.model, state.fmap,
                lambda th: design_opt.flod_continuous(
                    state.criterion, state.model, th, state.fmap,
                    state.candidates),
                state.history, init=state.theta0)
            records[-1].eff_mle = report.value
            records[-1].theta_hat = report.theta_hat.tolist()
        except (mle.SingularInformationError, ValueError):
            pass
    return state.history, records


def export_trajectory(records: list[RunRecord], path) -> None:
    """Write per-run records as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json_line() + "\n")
