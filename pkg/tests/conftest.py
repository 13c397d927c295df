"""Shared fixtures: the two response families on the unit-square vertex
problem that anchors most checks, plus dataset builders."""

from __future__ import annotations

import numpy as np
import pytest

from ofidesign.models import GammaLog, NormalSqrt, RegressorMap
from ofidesign.structures import CandidateSet, DataSet

VERTICES = ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))


@pytest.fixture
def fmap() -> RegressorMap:
    return RegressorMap.monomials(((0, 0), (1, 0), (0, 1)))


@pytest.fixture
def vertices() -> CandidateSet:
    return CandidateSet(np.asarray(VERTICES))


@pytest.fixture
def gamma() -> GammaLog:
    return GammaLog(shape=0.1)


@pytest.fixture
def gamma_unit() -> GammaLog:
    return GammaLog(shape=1.0)


@pytest.fixture
def normal() -> NormalSqrt:
    return NormalSqrt(sigma=5.0)


@pytest.fixture
def normal_unit() -> NormalSqrt:
    return NormalSqrt(sigma=1.0)


def mean_response(model, eta):
    """The response value at which observed elemental info equals expected.

    Both families satisfy I(eta, y) = mu(eta) exactly when y sits at the
    model mean (gamma: e^eta; squared-link normal: eta^2).
    """
    if isinstance(model, GammaLog):
        return float(np.exp(eta))
    return float(np.asarray(eta) ** 2)


def balanced_dataset(model, fmap, theta, points, counts, rng=None,
                     at_mean=False) -> DataSet:
    """DataSet with ``counts`` observations per point, one run.

    ``at_mean`` pins every response at the model mean so observed and
    expected elemental information coincide; otherwise responses are
    sampled from the model at ``theta``.
    """
    pts = np.asarray(points, dtype=float)
    theta = np.asarray(theta, dtype=float)
    etas = fmap.design_matrix(pts) @ theta
    data = DataSet.empty(pts)
    responses = []
    for eta_i, c in zip(etas, counts):
        if c == 0:
            responses.append(np.empty(0))
        elif at_mean:
            responses.append(np.full(int(c), mean_response(model, eta_i)))
        else:
            responses.append(np.asarray(model.sample(eta_i, rng, size=int(c)),
                                        dtype=float).ravel())
    data.append_run(np.asarray(counts, dtype=np.int64), responses)
    return data


def random_gamma_dataset(rng, fmap, points, model=None, theta=None,
                         max_per_point=5, min_per_point=0) -> DataSet:
    """Random gamma dataset over the given points, at least one obs total.

    ``min_per_point=1`` guarantees full support (needed when the test
    requires a nonsingular information matrix).
    """
    model = model or GammaLog(shape=0.1)
    theta = np.ones(fmap.dimension) if theta is None else theta
    counts = rng.integers(min_per_point, max_per_point + 1, size=len(points))
    if counts.sum() == 0:
        counts[rng.integers(len(points))] = 1
    return balanced_dataset(model, fmap, theta, points, counts, rng=rng)
