import numpy as np
import pytest

from ofidesign import design_opt, information, mle
from ofidesign.criteria import (
    DEGENERATE,
    EfficiencyReport,
    observed_efficiency,
    observed_efficiency_at_mle,
    psi,
    psi_batch,
    psi_efficiency,
    relative_efficiency,
)
from ofidesign.numerics import compositions
from ofidesign.structures import ContinuousDesign, InfoMatrix

from conftest import balanced_dataset, random_gamma_dataset


def _random_pd(rng, p=3):
    a = rng.normal(size=(p, p))
    return a @ a.T + p * np.eye(p)


# ------------------------------------------------------------------ psi core

def test_psi_identity_matrix():
    assert psi("D", np.eye(3)) == pytest.approx(1.0)
    assert psi("A", np.eye(3)) == pytest.approx(3.0)


def test_psi_reference_values():
    assert psi("A", np.diag([1.0, 2.0, 4.0])) == pytest.approx(1.75)
    for c in (0.5, 2.0, 7.0):
        assert psi("D", c * np.eye(3)) == pytest.approx(1.0 / c)


def test_psi_matches_direct_formulas():
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = _random_pd(rng)
        inv = np.linalg.inv(m)
        assert psi("D", m) == pytest.approx(np.linalg.det(inv) ** (1 / 3),
                                            rel=1e-10)
        assert psi("A", m) == pytest.approx(np.trace(inv), rel=1e-10)


def test_psi_homogeneity_degree_minus_one():
    rng = np.random.default_rng(1)
    for _ in range(10):
        m = _random_pd(rng)
        for c in (0.1, 3.0, 250.0):
            for kind in ("D", "A"):
                assert psi(kind, c * m) == pytest.approx(psi(kind, m) / c,
                                                         rel=1e-10)


def test_psi_monotone_under_information_increase():
    rng = np.random.default_rng(2)
    for _ in range(20):
        m1 = _random_pd(rng)
        bump = rng.normal(size=(3, 2))
        m2 = m1 + bump @ bump.T  # m2 - m1 is positive semi-definite
        for kind in ("D", "A"):
            assert psi(kind, m2) <= psi(kind, m1) + 1e-12


def test_psi_degenerate_sentinel():
    assert psi("D", np.diag([1.0, 1.0, 0.0])) == DEGENERATE
    assert psi("A", np.diag([1.0, 1.0, -1.0])) == DEGENERATE
    # sentinel orders worse than any finite value in a minimization
    assert psi("D", np.eye(3)) < DEGENERATE


def test_psi_rejects_asymmetric_input():
    with pytest.raises(ValueError):
        psi("D", np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_psi_rejects_unknown_criterion():
    with pytest.raises(ValueError):
        psi("E", np.eye(2))


def test_psi_accepts_info_matrix_wrapper():
    m = InfoMatrix.from_values(np.diag([2.0, 2.0]))
    assert psi("D", m) == pytest.approx(0.5)


def test_psi_batch_stacks():
    mats = np.stack([np.eye(3), 2 * np.eye(3), np.diag([1.0, 1.0, 0.0])])
    np.testing.assert_allclose(psi_batch("D", mats)[:2], [1.0, 0.5])
    assert psi_batch("D", mats)[2] == DEGENERATE


# ------------------------------------------------------------ psi efficiency

def test_psi_efficiency_of_itself_is_one():
    m = np.diag([2.0, 3.0, 4.0])
    report = psi_efficiency("D", m, m)
    assert report.value == pytest.approx(1.0)
    assert not report.degenerate


def test_psi_efficiency_scaling():
    m = np.diag([2.0, 3.0, 4.0])
    report = psi_efficiency("D", m, 0.5 * m)
    assert report.value == pytest.approx(0.5)


def test_psi_efficiency_degenerate_denominator_is_zero_flagged():
    report = psi_efficiency("A", np.eye(3), np.diag([1.0, 1.0, -1.0]))
    assert report.value == 0.0
    assert report.degenerate


def test_psi_efficiency_rejects_degenerate_reference():
    with pytest.raises(ValueError):
        psi_efficiency("D", np.diag([1.0, 0.0]), np.eye(2))


# ------------------------------------------------------- observed efficiency

def test_observed_efficiency_is_one_for_mean_pinned_balanced_data(
        fmap, vertices, gamma):
    theta = np.ones(3)
    flod = design_opt.flod_continuous("D", gamma, theta, fmap, vertices)
    data = balanced_dataset(gamma, fmap, theta, vertices.points,
                            [3, 3, 3, 3], at_mean=True)
    report = observed_efficiency("D", gamma, theta, fmap, flod, data)
    assert report.value == pytest.approx(1.0, abs=1e-9)
    assert report.proper


def test_observed_efficiency_dual_forms_agree(fmap, vertices, gamma):
    rng = np.random.default_rng(5)
    theta = np.ones(3)
    flod = design_opt.flod_continuous("D", gamma, theta, fmap, vertices)
    for _ in range(50):
        data = random_gamma_dataset(rng, fmap, vertices.points, model=gamma,
                                    min_per_point=1)
        for kind in ("D", "A"):
            report = observed_efficiency(kind, gamma, theta, fmap, flod, data)
            assert report.cross_check_gap is not None
            assert report.cross_check_gap <= 1e-8
            # independent recomputation of the unnormalized form
            q, total = information.info_ratios(gamma, theta, fmap, data)
            j_raw = information.observed_info_raw(gamma, theta, fmap, data)
            m_opt = information.efi(gamma, theta, fmap, flod)
            alt = psi(kind, total * m_opt.values) / psi(kind, j_raw)
            assert report.value == pytest.approx(alt, rel=1e-8)


def test_observed_efficiency_bounded_by_one_for_gamma(fmap, vertices, gamma):
    """Positive elemental information keeps realized efficiency at most 1."""
    rng = np.random.default_rng(6)
    theta = np.ones(3)
    for kind in ("D", "A"):
        flod = design_opt.flod_continuous(kind, gamma, theta, fmap, vertices)
        for _ in range(200):
            data = random_gamma_dataset(rng, fmap, vertices.points, model=gamma)
            report = observed_efficiency(kind, gamma, theta, fmap, flod, data)
            assert report.value <= 1.0 + 1e-12


def test_observed_efficiency_improper_induced_design_flagged(fmap, vertices):
    """A point with strongly negative accumulated information makes the
    induced design improper and the information matrix indefinite."""
    from ofidesign.models import NormalSqrt
    from ofidesign.structures import DataSet

    model = NormalSqrt(sigma=5.0)
    theta = np.array([1.0, 0.0, 0.0])  # eta = 1 at every vertex
    flod = design_opt.flod_continuous("D", model, theta, fmap, vertices)
    data = DataSet.empty(vertices.points)
    # elemental info 2(3 - y)/25: y=53 gives -4 (q=-25); y=-22 gives +2
    data.append_run([1, 1, 1, 1], [np.array([53.0]), np.array([-22.0]),
                                   np.array([-22.0]), np.array([-22.0])])
    report = observed_efficiency("D", model, theta, fmap, flod, data)
    assert not report.proper
    assert report.degenerate
    assert report.value == 0.0


def test_flod_solution_matches_weight_grid_oracle(fmap, vertices, gamma):
    """Brute-force weight grid pins the continuous optimum."""
    theta = np.ones(3)
    F = fmap.design_matrix(vertices.points)
    mu = gamma.expected_elemental_info(F @ theta)
    # step 1/48 so the equal-quarters design sits exactly on the grid
    grid = np.asarray(compositions(48, 4), dtype=float) / 48.0
    mats = np.einsum("ki,i,ip,iq->kpq", grid, mu, F, F)
    for kind in ("D", "A"):
        solver = design_opt.flod_continuous(kind, gamma, theta, fmap, vertices)
        psi_star = psi(kind, information.efi(gamma, theta, fmap, solver).values)
        grid_min = psi_batch(kind, mats).min()
        # grid designs can never beat the continuous optimum, and the
        # optimum is a grid point here, so the two must coincide
        assert grid_min >= psi_star * (1 - 1e-9)
        assert grid_min == pytest.approx(psi_star, rel=1e-6)


# ------------------------------------------------ observed efficiency at MLE

def test_observed_efficiency_at_mle_matches_manual_recomputation(
        fmap, vertices, gamma):
    rng = np.random.default_rng(7)
    theta = np.ones(3)
    data = balanced_dataset(gamma, fmap, theta, vertices.points,
                            [3, 3, 3, 3], rng=rng)

    def solver(th):
        return design_opt.flod_continuous("A", gamma, th, fmap, vertices)

    report = observed_efficiency_at_mle("A", gamma, fmap, solver, data,
                                        init=theta)
    # second path: raw-definition arithmetic at the returned MLE
    th = report.theta_hat
    F = fmap.design_matrix(vertices.points)
    etas = F @ th
    mu = gamma.expected_elemental_info(etas)
    q = np.array([gamma.observed_elemental_info(e, ys).sum() / m
                  for e, m, ys in zip(etas, mu, data.groups)])
    omega = q / q.sum()
    m_tau = np.einsum("i,i,ip,iq->pq", omega, mu, F, F)
    flod_hat = solver(th)
    m_opt = information.efi(gamma, th, fmap, flod_hat).values
    want = psi("A", m_opt) / psi("A", m_tau)
    assert report.value == pytest.approx(want, rel=1e-9)


def test_observed_efficiency_at_mle_is_one_when_data_sits_at_mean(
        fmap, vertices, gamma):
    theta = np.array([0.8, 0.1, -0.2])
    data = balanced_dataset(gamma, fmap, theta, vertices.points,
                            [3, 3, 3, 3], at_mean=True)

    def solver(th):
        return design_opt.flod_continuous("D", gamma, th, fmap, vertices)

    report = observed_efficiency_at_mle("D", gamma, fmap, solver, data,
                                        init=theta)
    # balanced counts match the equal-weight optimum and the data sit at
    # the fitted mean, so the realized information is exactly optimal
    assert report.value == pytest.approx(1.0, abs=1e-6)
    np.testing.assert_allclose(report.theta_hat, theta, atol=1e-6)


# --------------------------------------------------------- relative efficiency

def test_relative_efficiency_reference_values():
    v = np.diag([1.0, 2.0, 3.0])
    assert relative_efficiency("D", v, v) == pytest.approx(1.0)
    assert relative_efficiency("A", 2.0 * v, v) == pytest.approx(2.0)
    # both criteria are degree-1 in a scale factor, which is what makes
    # their ratios comparable: det(cV)/det(V) = c^p, then the 1/p root
    assert relative_efficiency("D", 8.0 * v, v) == pytest.approx(8.0)
    assert relative_efficiency("D", np.diag([4.0, 1.0, 1.0]), np.eye(3)) == \
        pytest.approx(4.0 ** (1.0 / 3.0))


def test_relative_efficiency_rejects_singular_covariance():
    good = np.eye(2)
    bad = np.diag([1.0, 0.0])
    with pytest.raises(ValueError):
        relative_efficiency("D", bad, good)
    with pytest.raises(ValueError):
        relative_efficiency("A", good, bad)


def test_relative_efficiency_shape_check():
    with pytest.raises(ValueError):
        relative_efficiency("D", np.eye(2), np.eye(3))


def test_efficiency_report_fields_round_out():
    report = EfficiencyReport(0.5, 1.0, 2.0)
    assert report.value == 0.5
    assert not report.degenerate
    assert report.proper
