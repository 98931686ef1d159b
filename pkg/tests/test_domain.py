import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgexpect.domain import (
    DomainProcess,
    InfeasibleError,
    Policy,
    VolatilityInterval,
    admissibility_margin,
    ball_domain,
    constant_domain,
    delta_interior,
    lipschitz_modulus,
    make_interval_domain,
    path_domain,
    piecewise_linear,
    stability_radius,
    state_domain,
    uc_check,
    volatility_grid,
)
from rgexpect.pathspace import TimeGrid, realize_tree

from instances import random_domain


def state_example():
    return make_interval_domain(lambda x: 1 + 0.5 * np.minimum(np.abs(x), 1), 4.0, lip_a=0.5)


def test_interval_validation():
    VolatilityInterval(0.0, 1.0)
    for lo, hi in [(-1, 2), (2, 2), (3, 1)]:
        with pytest.raises(ValueError):
            VolatilityInterval(lo, hi)


def test_delta_interior_examples():
    iv = VolatilityInterval(1, 4)
    assert delta_interior(iv, 0.5) == VolatilityInterval(1.5, 3.5)
    assert delta_interior(iv, 0) == iv
    assert delta_interior(iv, 2) is None
    assert delta_interior(iv, 1.5) is None
    with pytest.raises(ValueError):
        delta_interior(iv, -0.1)


@given(st.floats(0, 5), st.floats(0.01, 5), st.floats(0, 3), st.floats(0, 3))
def test_delta_interior_monotone(lo, width, d1, d2):
    d1, d2 = sorted((d1, d2))
    iv = VolatilityInterval(lo, lo + width)
    small, big = delta_interior(iv, d2), delta_interior(iv, d1)
    if small is not None:
        assert big is not None and small.issubset(big)


def test_volatility_grid():
    g = volatility_grid(np.array([1.0]), np.array([4.0]), 0.5, 3)
    np.testing.assert_allclose(g, [[1.5, 2.5, 3.5]])
    with pytest.raises(InfeasibleError):
        volatility_grid(np.array([1.0]), np.array([4.0]), 1.5, 3)


def test_margin_examples():
    g = TimeGrid(1.0, 3)
    dom = constant_domain(1, 4)
    r = admissibility_margin(Policy.constant(2.0, 3), dom, g)
    assert (r.delta_star, r.deg, r.admissible) == (1.0, 0.5, True)
    r = admissibility_margin(Policy.constant(1.0, 3), dom, g)
    assert r.delta_star == 0 and not r.admissible and r.feasible
    r = admissibility_margin(Policy.constant(2.5, 3), dom, g)
    assert (r.delta_star, r.deg) == (1.5, 0.75)


def test_margin_reports_offending_node():
    g = TimeGrid(1.0, 3)
    alpha = [np.full(2**k, 2.0) for k in range(3)]
    alpha[2][3] = 5.0
    r = admissibility_margin(Policy(tuple(alpha)), constant_domain(1, 4), g)
    assert not r.feasible and r.worst_node == (2, 3) and r.delta_star == -1.0


def test_deg_capped_at_one():
    r = admissibility_margin(Policy.constant(5.0, 2), constant_domain(1, 9), TimeGrid(1.0, 2))
    assert r.delta_star == 4.0 and r.deg == 1.0


def test_modulus_examples():
    d = np.array([0.01, 0.2, 1.0, 3.0])
    const = make_interval_domain(1.0, 4.0)
    assert const.kind == "constant"
    np.testing.assert_allclose([const.modulus(x) for x in d], d / 2)
    np.testing.assert_allclose([state_example().modulus(x) for x in d], d / 2)
    path = make_interval_domain(lambda k, p: 1 + 0.2 * np.minimum(np.max(p, axis=1), 1), 4.0, lip_a=0.2, kind="path")
    np.testing.assert_allclose([path.modulus(x) for x in d], d / 2)
    # a steep edge makes eps' the binding term
    np.testing.assert_allclose(lipschitz_modulus(4.0)(1.0), 1.0 / 8)


@given(st.floats(0.0, 10.0), st.floats(1e-3, 5.0))
def test_modulus_bounded_by_half_delta(lip, delta):
    assert lipschitz_modulus(lip)(delta) <= delta / 2


def test_construction_rejects_crossing_edges():
    with pytest.raises(ValueError):
        make_interval_domain(lambda x: 1 + np.abs(x), 4.0)
    with pytest.raises(ValueError):
        make_interval_domain(3.0, 2.0)
    with pytest.raises(ValueError):
        path_domain(lambda k, p: np.max(np.abs(p), axis=1) * 10, lambda k, p: np.full(p.shape[0], 4.0), 10)


def test_ball_domain():
    d = ball_domain(2.0, 0.5)
    iv = d.at(0, [0.0])
    assert (iv.lo, iv.hi) == (1.5, 2.5)


def test_piecewise_linear_tables():
    f, lip = piecewise_linear([-1, 0, 1], [1.5, 1.0, 1.5])
    np.testing.assert_allclose(f(np.array([-3, -0.5, 0, 2])), [1.5, 1.25, 1.0, 1.5])
    assert lip == 0.5
    with pytest.raises(ValueError):
        piecewise_linear([0, 0], [1, 2])


def test_progressive_measurability():
    rng = np.random.default_rng(0)
    dom = random_domain(rng, "path")
    paths = np.cumsum(np.concatenate([np.zeros((50, 1)), rng.normal(size=(50, 6))], axis=1), axis=1)
    for k in range(6):
        other = paths.copy()
        other[:, k + 1 :] += rng.normal(size=(50, 6 - k))
        np.testing.assert_array_equal(dom.bounds(k, paths[:, : k + 1])[0], dom.bounds(k, other[:, : k + 1])[0])


def test_shifted_domain_sees_concatenated_path():
    dom = random_domain(np.random.default_rng(1), "path")
    prefix = np.array([0.0, 0.4, -0.2])
    suffix = np.array([[0.0, 0.3, 0.9]])
    sh = dom.shifted(2, prefix)
    full = np.array([[0.0, 0.4, -0.2, 0.1, 0.7]])
    np.testing.assert_allclose(sh.bounds(2, suffix)[0], dom.bounds(4, full)[0], atol=1e-15)


def test_uc_check_examples():
    g = TimeGrid(1.0, 6)
    assert uc_check(constant_domain(1, 4), 0.3, g, 2000).max_violation == 0
    rep = uc_check(state_example(), 0.2, g, 10_000, seed=1)
    assert rep.passed and rep.epsilon == pytest.approx(0.1)
    # jump at x = 0 with a modulus that claims uniform continuity
    jump = DomainProcess(
        lambda k, p: np.where(p[:, -1] > 0, 2.0, 1.0),
        lambda k, p: np.full(p.shape[0], 4.0),
        lipschitz_modulus(0.0),
    )
    assert uc_check(jump, 0.2, g, 2000).max_violation > 0
    with pytest.raises(ValueError):
        uc_check(jump, 0.0, g)


def test_stability_radius_examples():
    g = TimeGrid(1.0, 4)
    assert stability_radius(0, [0.0], Policy.constant(2.0, 4), constant_domain(1, 4), g) == 0.125
    assert stability_radius(0, [0.0], Policy.constant(3.25, 4), state_example(), g) == pytest.approx(0.09375)
    with pytest.raises(ValueError):
        stability_radius(0, [0.0], Policy.constant(1.0, 4), constant_domain(1, 4), g)


@pytest.mark.parametrize("kind", ["constant", "state", "path"])
def test_stability_radius_contract(kind):
    rng = np.random.default_rng({"constant": 0, "state": 1, "path": 2}[kind])
    dom = random_domain(rng, kind)
    g = TimeGrid(1.0, 6)
    k = 2
    lo, hi = dom.bounds(0, np.zeros((1, 1)))
    # policy in the middle of the tightest interval the domain can produce
    mid = float(lo[0] + hi[0]) / 2 + 0.25 * (hi[0] - lo[0]) / 2
    pol = Policy.constant(mid, g.N - k)
    prefix = realize_tree(Policy.constant(mid, g.N), g, levels=k)[k][1]
    eps = stability_radius(k, prefix, pol, dom, g)
    assert 0 < eps <= 1
    for _ in range(1000 if kind != "path" else 200):
        bump = rng.uniform(-eps, eps, size=k + 1)
        bump[0] = 0.0
        r = admissibility_margin(pol, dom.shifted(k, prefix + bump), g.shifted(k))
        assert r.deg >= eps


def test_policy_validation_and_suffix():
    with pytest.raises(ValueError):
        Policy((np.ones(1), np.ones(3)))
    pol = Policy(tuple(np.arange(2**k, dtype=float) + 10 * k for k in range(3)))
    s = pol.suffix(1, 1)
    np.testing.assert_array_equal(s.alpha[0], [11.0])
    np.testing.assert_array_equal(s.alpha[1], [22.0, 23.0])


def test_from_feedback_tracks_paths():
    dom = state_domain(lambda x: 1 + 0.5 * np.minimum(np.abs(x), 1), lambda x: np.full(np.shape(x), 4.0), 0.5)
    g = TimeGrid(1.0, 3)
    pol = Policy.from_feedback(lambda k, p, lo, hi: lo, dom, g)
    paths = realize_tree(pol, g)
    for k in range(3):
        np.testing.assert_allclose(pol.alpha[k], 1 + 0.5 * np.minimum(np.abs(paths[k][:, -1]), 1))
