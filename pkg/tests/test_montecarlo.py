import math

import numpy as np
import pytest

from rgexpect.domain import Policy, constant_domain
from rgexpect.montecarlo import lower_bound_check, simulate, thread_count
from rgexpect.pathspace import Payoff, TimeGrid
from rgexpect.payoffs import constant, running_max, terminal_square
from rgexpect.tree_solver import policy_value, sample_policy, solve

D14 = constant_domain(1.0, 4.0)


def test_constant_payoff_has_zero_error():
    est = simulate(Policy.constant(2.0, 5), constant(1.25), TimeGrid(1.0, 5), 40_000, seed=3)
    assert est.mean == 1.25 and est.std_error == 0.0 and est.n_samples == 40_000


def test_reproducible_and_thread_independent():
    g = TimeGrid(1.0, 6)
    pol = sample_policy(D14, g, np.random.default_rng(0))
    runs = [simulate(pol, running_max(), g, 50_000, seed=11, threads=n) for n in (1, 1, 3)]
    assert runs[0] == runs[1] == runs[2]
    assert simulate(pol, running_max(), g, 50_000, seed=12) != runs[0]


def test_unit_volatility_square():
    est = simulate(Policy.constant(1.0, 8), terminal_square(), TimeGrid(1.0, 8), 100_000, seed=0)
    assert abs(est.mean - 1.0) <= 3 * est.std_error


def test_standard_error_definition():
    g = TimeGrid(1.0, 4)
    est = simulate(Policy.constant(2.0, 4), terminal_square(), g, 16, seed=5, stratified=True)
    leaves = np.array([(2 * i - 4) ** 2 * 0.5 for i in (0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 4)])
    assert est.mean == pytest.approx(leaves.mean(), abs=1e-12)
    assert est.std_error == pytest.approx(leaves.std(ddof=1) / 4, rel=1e-12)


def test_lower_bound_examples():
    g = TimeGrid(1.0, 8)
    field, opt = solve(terminal_square(), D14, g, 0.0, 2)
    assert field.root == pytest.approx(4.0, abs=1e-12)
    rep = lower_bound_check(opt.policy, terminal_square(), g, field.root, 20_000, seed=1)
    assert rep.within
    weak = lower_bound_check(Policy.constant(2.0, 8), terminal_square(), g, field.root, 20_000, seed=1)
    assert weak.below_upper and not weak.above_lower
    assert abs(weak.estimate.mean - 2.0) <= 3 * weak.estimate.std_error
    full = simulate(opt.policy, terminal_square(), g, 2**8, stratified=True)
    assert full.mean == field.root


def test_stratified_equals_policy_value():
    rng = np.random.default_rng(2)
    g = TimeGrid(1.3, 7)
    pol = sample_policy(D14, g, rng)
    xi = running_max()
    assert simulate(pol, xi, g, 2**7, stratified=True).mean == policy_value(pol, xi, g)


def test_one_sided_tail_over_seeds():
    g = TimeGrid(1.0, 6)
    field, opt = solve(running_max(), D14, g, 0.0, 2)
    runs = [simulate(opt.policy, running_max(), g, 2000, seed=s) for s in range(100)]
    assert sum(e.mean > field.root + 3 * e.std_error for e in runs) <= 1


def test_gaussian_model_against_quadrature():
    sigma2, T = 2.0, 1.0
    z, w = np.polynomial.hermite_e.hermegauss(60)
    exact = float(np.sum(w * np.cos(math.sqrt(sigma2 * T) * z)) / math.sqrt(2 * math.pi))
    xi = Payoff.from_terminal(np.cos)
    est = simulate(lambda k, x: np.full_like(x, sigma2), xi, TimeGrid(T, 10), 100_000, seed=4, model="gaussian")
    assert abs(est.mean - exact) <= 3 * est.std_error


def test_violations_are_counted():
    g = TimeGrid(1.0, 4)
    fb = lambda k, x: np.where(x > 0, 5.0, 2.0)  # noqa: E731
    est = simulate(fb, terminal_square(), g, 5000, seed=0, domain=D14)
    assert est.violations > 0 and est.flagged
    ok = simulate(lambda k, x: np.full_like(x, 2.0), terminal_square(), g, 5000, seed=0, domain=D14)
    assert ok.violations == 0 and not ok.flagged


def test_argument_errors(monkeypatch):
    g = TimeGrid(1.0, 3)
    pol = Policy.constant(2.0, 3)
    with pytest.raises(ValueError):
        simulate(pol, terminal_square(), g, 0)
    with pytest.raises(ValueError):
        simulate(pol, terminal_square(), g, 10, model="gaussian")
    with pytest.raises(ValueError):
        simulate(pol, terminal_square(), g, 10, model="levy")
    with pytest.raises(ValueError):
        simulate(pol, terminal_square(), g, 10, stratified=True)
    with pytest.raises(ValueError):
        simulate(Policy.constant(2.0, 4), terminal_square(), g, 10)
    monkeypatch.setenv("RGEXPECT_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("RGEXPECT_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("RGEXPECT_THREADS", "-1")
    with pytest.raises(ValueError):
        thread_count()
