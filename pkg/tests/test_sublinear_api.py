import numpy as np
import pytest

from rgexpect.domain import constant_domain
from rgexpect.pathspace import Payoff, TimeGrid
from rgexpect.payoffs import constant, running_max, stopped, terminal_square, terminal_value
from rgexpect.sublinear_api import (
    RandomVariable,
    SublinearExpectation,
    expectation,
    lipschitz_check,
    lp_norm,
    property_suite,
    time_consistency_check,
)
from rgexpect.tree_solver import enumerate_policies

from instances import random_domain, random_eta, random_payoff

D14 = constant_domain(1.0, 4.0)


def test_constant_variable():
    dom, g = random_domain(np.random.default_rng(0), "path"), TimeGrid(1.0, 5)
    op = SublinearExpectation(dom, g, 0.0, 2)
    for t in range(6):
        np.testing.assert_array_equal(op(constant(-2.0), t), -2.0)
        assert lp_norm(constant(-2.0), 1 + t, dom, g) == pytest.approx(2.0, abs=1e-12)


def test_square_expectation_matches_enumeration():
    g = TimeGrid(1.0, 3)
    e0 = expectation(terminal_square(), 0, D14, g, M=4)
    assert isinstance(e0, float)
    assert e0 == pytest.approx(enumerate_policies(terminal_square(), D14, g, 0.0, 4), abs=1e-12)
    assert e0 == pytest.approx(4.0, abs=1e-12)


def test_terminal_level_is_the_variable():
    rng = np.random.default_rng(1)
    dom, xi, g = random_domain(rng), random_payoff(rng), TimeGrid(1.0, 4)
    op = SublinearExpectation(dom, g, 0.0, 2)
    np.testing.assert_array_equal(op(xi, 4), xi(op.states(4)))


def test_lp_norm_examples():
    g = TimeGrid(1.0, 6)
    assert lp_norm(terminal_value(), 2, D14, g) == pytest.approx(2.0, abs=1e-12)
    assert lp_norm(RandomVariable(terminal_value(), 2), 2, D14, g) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(ValueError):
        lp_norm(terminal_value(), 0.5, D14, g)
    with pytest.raises(ValueError):
        RandomVariable(terminal_value(), 0.5)


@pytest.mark.parametrize("seed", range(5))
def test_lp_norm_triangle_and_jensen(seed):
    rng = np.random.default_rng(seed)
    dom, g = random_domain(rng), TimeGrid(1.0, 6)
    op = SublinearExpectation(dom, g, 0.0, 2)
    X, Y = random_payoff(rng), random_payoff(rng)
    for p in (1, 1.5, 2, 3):
        assert op.lp_norm(X + Y, p) <= op.lp_norm(X, p) + op.lp_norm(Y, p) + 1e-12
    norms = [op.lp_norm(X, p) for p in (1, 1.5, 2, 4)]
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_sublinearity_at_root(seed):
    rng = np.random.default_rng(seed + 10)
    dom, g = random_domain(rng), TimeGrid(1.0, 6)
    op = SublinearExpectation(dom, g, 0.0, 2)
    X, Y = random_payoff(rng), random_payoff(rng)
    lam = float(rng.uniform(0, 3))
    assert op(X + Y)[0] <= op(X)[0] + op(Y)[0] + 1e-12
    assert op(X.scale(lam))[0] == pytest.approx(lam * op(X)[0], abs=1e-12)


def test_property_suite_examples():
    rng = np.random.default_rng(2)
    dom, g, t = random_domain(rng, "state"), TimeGrid(1.0, 6), 3
    X = random_payoff(rng)
    op = SublinearExpectation(dom, g, 0.0, 2)
    # X' = X + 1 dominates X
    assert np.all(op(X, t) <= op(X + constant(1.0), t))
    # indicator-like function of the first t increments
    ind = Payoff(lambda p: np.tanh(20 * p[:, min(t, p.shape[1] - 1)]))
    report = op.property_suite(X, ind, random_eta(rng, t), t)
    assert report.passed
    assert report["translation"].residual <= 1e-12
    assert report["homogeneity"].residual <= 1e-12
    names = [r.name for r in report.results]
    assert names == ["monotonicity", "translation", "homogeneity", "subadditivity", "additivity", "contraction"]


@pytest.mark.parametrize("seed", range(8))
def test_property_suite_random(seed):
    rng = np.random.default_rng(seed + 20)
    N = int(rng.integers(2, 7))
    t = int(rng.integers(0, N + 1))
    dom, g = random_domain(rng), TimeGrid(float(rng.uniform(0.5, 2)), N)
    assert property_suite(random_payoff(rng), random_payoff(rng), random_eta(rng, t), t, dom, g).passed


def test_eta_takes_both_signs():
    rng = np.random.default_rng(3)
    op = SublinearExpectation(D14, TimeGrid(1.0, 5), 0.0, 2)
    n = op.level_values(random_eta(rng, 3), 3)
    assert n.min() < 0 < n.max()


def test_measurability():
    op = SublinearExpectation(D14, TimeGrid(1.0, 5), 0.0, 2)
    assert op.measurable(stopped(running_max(), 2), 2)
    assert not op.measurable(running_max(), 2)
    assert op.measurable(running_max(), 5)


def test_time_consistency_examples():
    rng = np.random.default_rng(4)
    dom, xi, g = random_domain(rng, "path"), random_payoff(rng), TimeGrid(1.0, 5)
    assert time_consistency_check(xi, 2, 2, dom, g) == 0.0
    assert time_consistency_check(xi, 0, 5, dom, g) == 0.0
    assert time_consistency_check(xi, 1, 3, dom, g) <= 1e-12
    with pytest.raises(ValueError):
        time_consistency_check(xi, 3, 1, dom, g)


def test_lipschitz_examples():
    rng = np.random.default_rng(5)
    dom, g = random_domain(rng), TimeGrid(1.0, 5)
    op = SublinearExpectation(dom, g, 0.0, 2)
    xi = random_payoff(rng)
    assert lipschitz_check(xi, xi, 2, 1, dom, g, op=op)
    shifted = xi + constant(0.7)
    d = op(xi, 2) - op(shifted, 2)
    np.testing.assert_allclose(np.abs(d), 0.7, atol=1e-12)
    assert op.lp_norm(xi - shifted, 2) == pytest.approx(0.7, abs=1e-12)
    for p in (1, 2):
        assert lipschitz_check(xi, shifted, 2, p, dom, g, op=op)
        assert lipschitz_check(xi, random_payoff(rng), 3, p, dom, g, op=op)
