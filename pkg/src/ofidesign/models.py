"""Response-model families and regressor maps.

Each family works through a scalar linear predictor eta = theta' f(x) and
exposes the elemental quantities everything else is built from:

* ``log_density(eta, y)``       log density of one response
* ``score(eta, y)``             d/d eta of the log density
* ``observed_elemental_info``   -d^2/d eta^2 of the log density
* ``expected_elemental_info``   expectation of the above under the model
* ``sample`` / ``standard_draws`` + ``response_from_standard``

Two families are provided.  ``GammaLog`` has gamma responses with known
shape ``a`` and mean exp(eta) (scale exp(eta)/a); its observed elemental
information a*y*exp(-eta) is positive whenever y > 0 and its expected
elemental information is the constant a, so optimal designs for it do not
depend on theta.  ``NormalSqrt`` has y = eta^2 + e with e ~ N(0, sigma^2);
its observed elemental information 2*(3*eta^2 - y)/sigma^2 can be
negative and its expected elemental information 4*eta^2/sigma^2 varies
with theta.

All elemental functions broadcast over numpy arrays; the simulation
engine relies on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Union

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .structures import DataSet

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class _MonomialExpand:
    """Monomial product expansion from a (p, s) exponent table.

    Module-level class rather than a closure so maps built by
    ``RegressorMap.monomials`` survive pickling into worker processes.
    """

    def __init__(self, exp: np.ndarray):
        self.exp = exp

    def __call__(self, x: np.ndarray) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        return np.prod(pts[..., None, :] ** self.exp, axis=-1)


@dataclass(frozen=True)
class RegressorMap:
    """Feature expansion f(x) from design points in R^s to R^p.

    ``expand`` must be vectorized: given an (..., s) array it returns an
    (..., p) array.  ``monomials`` builds the common polynomial case from
    a (p, s) exponent table, e.g. [[0,0],[1,0],[0,1]] for (1, x1, x2).
    """

    dimension: int
    expand: Callable[[np.ndarray], np.ndarray]
    exponents: tuple | None = None

    @classmethod
    def monomials(cls, exponents) -> "RegressorMap":
        exp = np.asarray(exponents, dtype=float)
        if exp.ndim != 2 or exp.shape[0] == 0:
            raise ValueError("exponents must be a nonempty (p, s) array")
        p = exp.shape[0]
        return cls(dimension=p, expand=_MonomialExpand(exp),
                   exponents=tuple(map(tuple, exp.tolist())))

    def __call__(self, x) -> np.ndarray:
        out = np.asarray(self.expand(np.asarray(x, dtype=float)), dtype=float)
        if out.shape[-1] != self.dimension:
            raise ValueError("regressor map returned wrong dimension")
        return out

    def design_matrix(self, points) -> np.ndarray:
        """(d, p) feature matrix for a stack of points."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return self(pts)


def eta(theta, x, fmap: RegressorMap) -> float:
    """Linear predictor theta' f(x) for a single point."""
    theta = np.asarray(theta, dtype=float).ravel()
    f = np.asarray(fmap(np.asarray(x, dtype=float)), dtype=float).ravel()
    if theta.shape[0] != f.shape[0]:
        raise ValueError("theta dimension does not match the regressor map")
    return float(f @ theta)


class GammaLog:
    """Gamma responses with log link: E[y] = exp(eta), known shape."""

    family = "gamma_log"
    efi_depends_on_theta = False

    def __init__(self, shape: float):
        shape = float(shape)
        if not shape > 0:
            raise ValueError("gamma shape must be positive")
        self.shape = shape

    def check_support(self, y) -> None:
        y = np.asarray(y, dtype=float)
        if y.size and not np.all(y > 0):
            raise ValueError("gamma responses must be positive")

    def log_density(self, eta, y):
        self.check_support(y)
        a = self.shape
        eta = np.asarray(eta, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return ((a - 1.0) * np.log(y) + a * math.log(a) - a * eta
                    - a * y * np.exp(-eta) - math.lgamma(a))

    def score(self, eta, y):
        a = self.shape
        return a * (np.asarray(y, dtype=float) * np.exp(-np.asarray(eta, dtype=float)) - 1.0)

    def observed_elemental_info(self, eta, y):
        y = np.asarray(y, dtype=float)
        if y.size and np.any(y < 0):
            raise ValueError("gamma responses must be nonnegative")
        return self.shape * y * np.exp(-np.asarray(eta, dtype=float))

    def expected_elemental_info(self, eta):
        return np.full_like(np.asarray(eta, dtype=float), self.shape)

    def standard_draws(self, rng: np.random.Generator, size):
        # standardized draw g ~ Gamma(shape, 1); y = exp(eta)/shape * g
        return rng.standard_gamma(self.shape, size=size)

    def response_from_standard(self, eta, draws):
        return np.exp(np.asarray(eta, dtype=float)) / self.shape * np.asarray(draws, dtype=float)

    def sample(self, eta, rng: np.random.Generator, size=None):
        eta = np.asarray(eta, dtype=float)
        if size is None:
            size = eta.shape
        return self.response_from_standard(eta, self.standard_draws(rng, size))


class NormalSqrt:
    """Normal errors around a squared predictor: y = eta^2 + N(0, sigma^2)."""

    family = "normal_sqrt"
    efi_depends_on_theta = True

    def __init__(self, sigma: float):
        sigma = float(sigma)
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.sigma = sigma

    def check_support(self, y) -> None:
        return None  # all real responses are admissible

    def log_density(self, eta, y):
        eta = np.asarray(eta, dtype=float)
        y = np.asarray(y, dtype=float)
        z = (y - eta ** 2) / self.sigma
        return -0.5 * z ** 2 - math.log(self.sigma) - _LOG_SQRT_2PI

    def score(self, eta, y):
        eta = np.asarray(eta, dtype=float)
        y = np.asarray(y, dtype=float)
        return 2.0 * eta * (y - eta ** 2) / self.sigma ** 2

    def observed_elemental_info(self, eta, y):
        eta = np.asarray(eta, dtype=float)
        y = np.asarray(y, dtype=float)
        return 2.0 * (3.0 * eta ** 2 - y) / self.sigma ** 2

    def expected_elemental_info(self, eta):
        eta = np.asarray(eta, dtype=float)
        return 4.0 * eta ** 2 / self.sigma ** 2

    def standard_draws(self, rng: np.random.Generator, size):
        return rng.standard_normal(size=size)

    def response_from_standard(self, eta, draws):
        return np.asarray(eta, dtype=float) ** 2 + self.sigma * np.asarray(draws, dtype=float)

    def sample(self, eta, rng: np.random.Generator, size=None):
        eta = np.asarray(eta, dtype=float)
        if size is None:
            size = eta.shape
        return self.response_from_standard(eta, self.standard_draws(rng, size))


ResponseModel = Union[GammaLog, NormalSqrt]

_FAMILIES = {"gamma_log", "normal_sqrt"}


def model_from_spec(spec: dict) -> ResponseModel:
    """Build a model from its JSON form {family, shape? , sigma?}."""
    if not isinstance(spec, dict) or "family" not in spec:
        raise ValueError("model spec must be an object with a 'family' field")
    family = spec["family"]
    if family == "gamma_log":
        if "shape" not in spec:
            raise ValueError("model spec field 'shape' is required for gamma_log")
        return GammaLog(spec["shape"])
    if family == "normal_sqrt":
        if "sigma" not in spec:
            raise ValueError("model spec field 'sigma' is required for normal_sqrt")
        return NormalSqrt(spec["sigma"])
    raise ValueError(
        f"model spec field 'family' must be one of {sorted(_FAMILIES)}, got {family!r}")


def model_to_spec(model: ResponseModel) -> dict:
    if isinstance(model, GammaLog):
        return {"family": "gamma_log", "shape": model.shape}
    if isinstance(model, NormalSqrt):
        return {"family": "normal_sqrt", "sigma": model.sigma}
    raise TypeError(f"unknown model type {type(model)!r}")


def log_likelihood(model: ResponseModel, theta, fmap: RegressorMap,
                   data: "DataSet") -> float:
    """Total log likelihood of grouped data (constants kept).

    Empty data gives 0, the additive identity.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    total = 0.0
    F = fmap.design_matrix(data.points)
    etas = F @ theta
    for eta_i, ys in zip(etas, data.groups):
        if ys.size:
            total += float(np.sum(model.log_density(eta_i, ys)))
    return total
