import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgexpect.domain import Policy
from rgexpect.pathspace import (
    DiscretePath,
    Payoff,
    TimeGrid,
    concat,
    enumerate_nodes,
    index_signs,
    realize_path,
    realize_tree,
    shift_payoff,
    sign_index,
    sup_norm,
)
from rgexpect.payoffs import constant, running_max, terminal_value


def test_time_grid():
    g = TimeGrid(1.0, 4)
    assert g.dt == 0.25
    assert abs(g.dt * g.N - g.T) <= math.ulp(g.T)
    np.testing.assert_array_equal(g.times(), [0, 0.25, 0.5, 0.75, 1.0])
    for bad in [(0.0, 3), (-1.0, 3), (1.0, 0), (1.0, 2.5), (math.inf, 2)]:
        with pytest.raises(ValueError):
            TimeGrid(*bad)


def test_shifted_grid_keeps_step():
    g = TimeGrid(1.0, 7)
    h = g.shifted(3).shifted(2)
    assert h.N == 2 and h.dt == g.dt


def test_discrete_path_starts_at_zero():
    assert DiscretePath([0, 1, 2]).step == 2
    with pytest.raises(ValueError):
        DiscretePath([1, 2])
    with pytest.raises(ValueError):
        DiscretePath([0, 1, 2, 3], TimeGrid(1.0, 2))


def test_concat_examples():
    np.testing.assert_array_equal(concat([0], [0, 1, -1]), [0, 1, -1])
    np.testing.assert_array_equal(concat([0, 2], [0, 1], TimeGrid(1.0, 2)), [0, 2, 3])
    with pytest.raises(ValueError):
        concat([0, 2], [1, 1])
    with pytest.raises(ValueError):
        concat([0, 2, 3], [0, 1], TimeGrid(1.0, 2))


paths = st.lists(st.floats(-5, 5, allow_nan=False), min_size=0, max_size=5).map(lambda v: np.array([0.0] + v))


@given(paths, paths, paths)
def test_concat_associative(a, b, c):
    left = concat(concat(a, b), c)
    right = concat(a, concat(b, c))
    np.testing.assert_allclose(left, right, rtol=0, atol=1e-12)
    assert left.shape == right.shape


def test_concat_broadcasts_batches():
    out = concat(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([0.0, 2.0]))
    np.testing.assert_array_equal(out, [[0, 1, 3], [0, -1, 1]])


def test_shift_payoff_examples():
    assert shift_payoff(constant(5.0), 2, [0, 1, 2])([0, 3]) == 5.0
    xi = terminal_value()
    shifted = shift_payoff(xi, 1, [0, 2])
    assert shifted([0, 0.5, -1.5]) == 2 + (-1.5)
    suffix = np.array([0, -1, 0.5, -2])
    got = shift_payoff(running_max(), 2, [0, 3, 1])(suffix)
    assert got == max(3, 1 + suffix.max())
    with pytest.raises(ValueError):
        shift_payoff(xi, 2, [0, 1])


@given(paths, paths, paths)
def test_shift_consistency(bar, w, tail):
    xi = Payoff(lambda p: np.sin(p).sum(axis=1) + p.max(axis=1))
    s, t_rel = bar.size - 1, w.size - 1
    lhs = shift_payoff(shift_payoff(xi, s, bar), t_rel, w)(tail)
    rhs = shift_payoff(xi, s + t_rel, concat(bar, w))(tail)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_shift_keeps_bound_and_modulus():
    xi = running_max()
    sh = shift_payoff(xi, 1, [0, 1])
    assert sh.bound == xi.bound and sh.modulus is xi.modulus


def test_sup_norm():
    p = [0, 1, -3]
    assert sup_norm(p, 0, 2) == 3
    assert sup_norm(p, 0, 1) == 1
    assert sup_norm(np.zeros(4)) == 0
    with pytest.raises(ValueError):
        sup_norm(p, 2, 1)


@given(paths, st.data())
def test_sup_norm_monotone_in_interval(p, data):
    n = p.size - 1
    s1 = data.draw(st.integers(0, n))
    t1 = data.draw(st.integers(s1, n))
    s0 = data.draw(st.integers(0, s1))
    t0 = data.draw(st.integers(t1, n))
    assert sup_norm(p, s1, t1) <= sup_norm(p, s0, t0)


def test_enumerate_nodes():
    g = TimeGrid(1.0, 3)
    assert enumerate_nodes(g, 0) == [()]
    assert enumerate_nodes(g, 1) == [(-1,), (1,)]
    nodes = enumerate_nodes(g, 3)
    assert len(nodes) == 8 and nodes == sorted(nodes)
    assert [sign_index(s) for s in nodes] == list(range(8))
    assert all(index_signs(i, 3) == s for i, s in enumerate(nodes))
    with pytest.raises(ValueError):
        enumerate_nodes(g, 4)


def test_realize_path_examples():
    up = realize_path([1, 1, 1, 1], Policy.constant(1.0, 4), TimeGrid(1.0, 4))
    np.testing.assert_allclose(up, [0, 0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(realize_path([1, -1], Policy.constant(4.0, 2), TimeGrid(2.0, 2)), [0, 2, 0])
    with pytest.raises(ValueError):
        realize_path([1, 0], Policy.constant(1.0, 2), TimeGrid(1.0, 2))


def test_realized_quadratic_variation_is_alpha():
    rng = np.random.default_rng(3)
    g = TimeGrid(1.5, 5)
    pol = Policy(tuple(rng.uniform(1, 3, 2**k) for k in range(5)))
    signs = rng.choice([-1, 1], size=5).tolist()
    x = realize_path(signs, pol, g)
    node = 0
    for j, s in enumerate(signs):
        assert (x[j + 1] - x[j]) ** 2 / g.dt == pytest.approx(pol.alpha[j][node], rel=1e-12)
        node = 2 * node + (s > 0)


def test_realize_path_adapted():
    rng = np.random.default_rng(4)
    g = TimeGrid(1.0, 6)
    pol = Policy(tuple(rng.uniform(1, 3, 2**k) for k in range(6)))
    signs = rng.choice([-1, 1], size=6)
    base = realize_path(signs.tolist(), pol, g)
    for j in range(6):
        other = signs.copy()
        other[j:] = rng.permutation(other[j:]) * -1
        np.testing.assert_array_equal(realize_path(other.tolist(), pol, g)[: j + 1], base[: j + 1])


def test_realize_tree_matches_realize_path():
    rng = np.random.default_rng(5)
    g = TimeGrid(1.0, 4)
    pol = Policy(tuple(rng.uniform(1, 3, 2**k) for k in range(4)))
    leaves = realize_tree(pol, g)[-1]
    for i, s in enumerate(enumerate_nodes(g, 4)):
        np.testing.assert_array_equal(leaves[i], realize_path(s, pol, g))
