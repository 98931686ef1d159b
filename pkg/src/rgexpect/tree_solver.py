"""Backward dynamic programming for the worst-case value ``V_k`` on binomial trees.

Three solvers share one recursion,

    V_k(w) = max_a  1/2 [ V_{k+1}(w, x_k + sqrt(a dt)) + V_{k+1}(w, x_k - sqrt(a dt)) ],

with ``a`` ranging over an ``M``-point grid of the delta-interior of ``D_k(w)``.

``tree``
    Exact, path-dependent.  A state is a full path prefix.  Because the
    increment size depends on the chosen volatility, level ``k`` holds
    ``(2M)**k`` states; child ``2m + s`` of a state uses grid volatility ``m``
    and sign ``s`` (0 = down, 1 = up).
``lattice``
    Exact for Markov problems (terminal payoff, state domain).  States are
    values of ``x_k``; coinciding states are merged.
``markov``
    Markov problems on a fixed ``x`` grid with linear interpolation.  An
    approximation, used where the lattice does not recombine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import DomainProcess, InfeasibleError, Policy, admissibility_margin, volatility_grid
from .pathspace import Payoff, TimeGrid, realize_tree

__all__ = [
    "MAX_STATES",
    "TreeSizeError",
    "PathTree",
    "ValueField",
    "OptimalPolicy",
    "PastedPolicy",
    "FilteringResult",
    "build_tree",
    "backward",
    "solve",
    "enumerate_policies",
    "pairwise_mean",
    "policy_value",
    "conditional_values",
    "dpp_check",
    "paste_policies",
    "upward_filtering_sequence",
    "sample_policy",
]

MAX_STATES = 2**21
_SIGNS = np.array([-1.0, 1.0])
_MERGE_TOL = 1e-12


class TreeSizeError(ValueError):
    """The requested tree exceeds the state budget."""


@dataclass(frozen=True)
class PathTree:
    """Forward expansion of all reachable path prefixes from a set of roots."""

    grid: TimeGrid
    delta: float
    M: int
    start: int
    paths: tuple
    vols: tuple

    @property
    def n_steps(self) -> int:
        return len(self.paths) - 1

    @property
    def leaves(self) -> np.ndarray:
        return self.paths[-1]


def build_tree(
    domain: DomainProcess,
    grid: TimeGrid,
    delta: float,
    M: int,
    roots=None,
    start: int = 0,
    n_steps: Optional[int] = None,
    max_states: int = MAX_STATES,
) -> PathTree:
    roots = np.zeros((1, 1)) if roots is None else np.atleast_2d(np.asarray(roots, dtype=float))
    if roots.shape[1] != start + 1:
        raise ValueError(f"roots at level {start} need {start + 1} values, got {roots.shape[1]}")
    n_steps = grid.N - start if n_steps is None else n_steps
    if n_steps < 0 or start + n_steps > grid.N:
        raise ValueError(f"cannot expand {n_steps} steps from level {start} on a grid with N = {grid.N}")
    size = roots.shape[0] * float(2 * M) ** n_steps
    if size > max_states:
        raise TreeSizeError(
            f"tree would hold {size:.3g} leaf states (budget {max_states}); "
            "reduce N or M, or use a Markov method"
        )
    paths, vols = [roots], []
    for j in range(n_steps):
        k = start + j
        p = paths[-1]
        lo, hi = domain.bounds(k, p)
        try:
            v = volatility_grid(lo, hi, delta, M)
        except InfeasibleError as exc:
            i = int(np.flatnonzero(~(lo + delta < hi - delta))[0])
            raise InfeasibleError(f"step {k}, path {p[i].tolist()}: {exc}") from None
        inc = np.sqrt(v * grid.dt)
        last = p[:, -1, None, None] + _SIGNS[None, None, :] * inc[:, :, None]
        paths.append(np.column_stack([np.repeat(p, 2 * M, axis=0), last.reshape(-1)]))
        vols.append(v)
    return PathTree(grid, float(delta), int(M), start, tuple(paths), tuple(vols))


def _step(child_values: np.ndarray, n: int, M: int):
    w = child_values.reshape(n, M, 2)
    avg = 0.5 * (w[:, :, 0] + w[:, :, 1])
    # argmax returns the first maximum, i.e. the smallest volatility on ties
    idx = np.argmax(avg, axis=1)
    return avg[np.arange(n), idx], idx


def backward(tree: PathTree, terminal: np.ndarray) -> tuple[tuple, tuple]:
    """Max-recursion from the leaves of ``tree`` back to its roots."""
    v = np.asarray(terminal, dtype=float)
    if v.shape != (tree.leaves.shape[0],):
        raise ValueError(f"terminal values need shape ({tree.leaves.shape[0]},), got {v.shape}")
    values, argmax = [v], []
    for j in reversed(range(tree.n_steps)):
        v, idx = _step(v, tree.paths[j].shape[0], tree.M)
        values.append(v)
        argmax.append(idx)
    return tuple(reversed(values)), tuple(reversed(argmax))


def _row_keys(rows: np.ndarray) -> np.ndarray:
    rows = np.ascontiguousarray(np.asarray(rows, dtype=float) + 0.0)
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


@dataclass(frozen=True)
class ValueField:
    """Node values of ``V_k`` for ``k = 0..N``.

    ``states[k]`` holds path prefixes ``(n_k, k + 1)`` for the tree method and
    state values ``x`` for the Markov methods.
    """

    grid: TimeGrid
    delta: float
    M: int
    method: str
    values: tuple
    states: tuple
    argmax: tuple
    vols: tuple
    children: Optional[tuple] = None

    @property
    def exact(self) -> bool:
        return self.method in ("tree", "lattice")

    @property
    def root(self) -> float:
        if self.method == "markov":
            return float(np.interp(0.0, self.states[0], self.values[0]))
        return float(self.values[0][0])

    def value_at(self, k: int, prefixes) -> np.ndarray:
        """``V_k`` at the given prefixes, which must be states of the field."""
        p = np.atleast_2d(np.asarray(prefixes, dtype=float))
        if self.method == "markov":
            return np.interp(p[:, -1], self.states[k], self.values[k])
        if self.method == "lattice":
            xs = self.states[k]
            pos = np.clip(np.searchsorted(xs, p[:, -1]), 1, max(xs.size - 1, 1))
            near = np.where(
                np.abs(xs[pos - 1] - p[:, -1]) <= np.abs(xs[np.minimum(pos, xs.size - 1)] - p[:, -1]), pos - 1, pos
            )
            near = np.minimum(near, xs.size - 1)
            if np.any(np.abs(xs[near] - p[:, -1]) > _MERGE_TOL * np.maximum(1.0, np.abs(p[:, -1]))):
                raise KeyError(f"state not on the lattice at level {k}")
            return self.values[k][near]
        table = _row_keys(self.states[k])
        order = np.argsort(table)
        query = _row_keys(p)
        pos = np.searchsorted(table[order], query)
        pos = np.minimum(pos, table.size - 1)
        hit = table[order][pos] == query
        if not np.all(hit):
            i = int(np.flatnonzero(~hit)[0])
            raise KeyError(f"prefix {p[i].tolist()} is not a state of the tree at level {k}")
        return self.values[k][order[pos]]


@dataclass(frozen=True)
class OptimalPolicy:
    """Argmax feedback of a solve, with its sign-indexed form when it fits in memory."""

    field: ValueField
    domain: DomainProcess
    policy: Optional[Policy]
    grid_index: Optional[tuple]

    def feedback(self, k: int, x) -> np.ndarray:
        """Volatility chosen at step ``k`` in state ``x`` (Markov methods)."""
        f = self.field
        if f.method == "tree":
            raise ValueError("tree policies are path-dependent; use .policy")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs = f.states[k]
        i = np.clip(np.searchsorted(xs, x), 1, max(xs.size - 1, 1))
        i = np.where(np.abs(xs[i - 1] - x) <= np.abs(xs[np.minimum(i, xs.size - 1)] - x), i - 1, i)
        i = np.minimum(i, xs.size - 1)
        j = f.argmax[k][i]
        lo, hi = self.domain.state_bounds(k, x)
        lo, hi = lo + f.delta, hi - f.delta
        return lo + (j / (f.M - 1)) * (hi - lo)


def _tree_policy(field: ValueField) -> tuple[Policy, tuple]:
    M2 = 2 * field.M
    state = np.zeros(1, dtype=np.int64)
    alpha, chosen = [], []
    for k in range(field.grid.N):
        j = field.argmax[k][state]
        alpha.append(field.vols[k][state, j])
        chosen.append(j)
        if field.children is None:
            base = state * M2 + 2 * j
            state = np.column_stack([base, base + 1]).reshape(-1)
        else:
            state = field.children[k][state, j, :].reshape(-1)
    return Policy(tuple(alpha)), tuple(chosen)


def _solve_tree(xi, domain, grid, delta, M, max_states) -> ValueField:
    tree = build_tree(domain, grid, delta, M, max_states=max_states)
    values, argmax = backward(tree, xi(tree.leaves))
    return ValueField(grid, float(delta), M, "tree", values, tree.paths, argmax, tree.vols)


def _merge(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(x, kind="stable")
    s = x[order]
    new = np.empty(s.size, dtype=bool)
    new[0] = True
    new[1:] = np.diff(s) > _MERGE_TOL * np.maximum(1.0, np.abs(s[1:]))
    group = np.cumsum(new) - 1
    inv = np.empty_like(group)
    inv[order] = group
    return s[new], inv


def _solve_lattice(xi, domain, grid, delta, M, max_states) -> ValueField:
    states, vols, children = [np.zeros(1)], [], []
    for k in range(grid.N):
        x = states[-1]
        lo, hi = domain.state_bounds(k, x)
        v = volatility_grid(lo, hi, delta, M)
        cand = x[:, None, None] + _SIGNS[None, None, :] * np.sqrt(v * grid.dt)[:, :, None]
        uniq, inv = _merge(cand.reshape(-1))
        if uniq.size > max_states:
            raise TreeSizeError(f"lattice does not recombine: {uniq.size} states at step {k + 1}")
        states.append(uniq)
        vols.append(v)
        children.append(inv.reshape(x.size, M, 2))
    v = np.asarray(xi.terminal(states[-1]), dtype=float)
    values, argmax = [v], []
    for k in reversed(range(grid.N)):
        v, idx = _step(v[children[k]].reshape(-1), states[k].size, M)
        values.append(v)
        argmax.append(idx)
    return ValueField(
        grid, float(delta), M, "lattice", tuple(reversed(values)), tuple(states), tuple(reversed(argmax)),
        tuple(vols), tuple(children),
    )


def _solve_markov(xi, domain, grid, delta, M, h) -> ValueField:
    probe = np.linspace(-100.0, 100.0, 20001)
    top = max(float(np.max(domain.state_bounds(k, probe)[1])) for k in range(grid.N))
    s_max = math.sqrt(top * grid.dt)
    h = s_max / 256 if h is None else float(h)
    n = int(math.ceil(grid.N * s_max / h)) + 1
    xs = h * np.arange(-n, n + 1)
    v = np.asarray(xi.terminal(xs), dtype=float)
    values, argmax, vols = [v], [], []
    for k in reversed(range(grid.N)):
        lo, hi = domain.state_bounds(k, xs)
        g = volatility_grid(lo, hi, delta, M)
        inc = np.sqrt(g * grid.dt)
        down = np.interp(xs[:, None] - inc, xs, v)
        up = np.interp(xs[:, None] + inc, xs, v)
        avg = 0.5 * (down + up)
        idx = np.argmax(avg, axis=1)
        v = avg[np.arange(xs.size), idx]
        values.append(v)
        argmax.append(idx)
        vols.append(g)
    return ValueField(
        grid, float(delta), M, "markov", tuple(reversed(values)), (xs,) * (grid.N + 1),
        tuple(reversed(argmax)), tuple(reversed(vols)),
    )


def solve(
    xi: Payoff,
    domain: DomainProcess,
    grid: TimeGrid,
    delta: float = 0.0,
    M: int = 9,
    method: str = "auto",
    max_states: int = MAX_STATES,
    h: Optional[float] = None,
) -> tuple[ValueField, OptimalPolicy]:
    """Worst-case values ``V_k`` and the argmax policy.

    ``method="auto"`` takes the exact tree when it fits in ``max_states``,
    otherwise the lattice, and the interpolated Markov solver when the
    lattice does not recombine.  Check ``field.method``/``field.exact``.
    """
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if isinstance(M, bool) or int(M) != M or M < 2:
        raise ValueError(f"M must be an integer >= 2, got {M}")
    M = int(M)
    markov = domain.markov and xi.terminal is not None
    if method == "auto":
        if (2 * M) ** grid.N <= max_states:
            method = "tree"
        elif not markov:
            raise TreeSizeError(f"path-dependent problem with (2M)^N = {(2 * M) ** grid.N} states is too large")
        else:
            try:
                field = _solve_lattice(xi, domain, grid, delta, M, max_states)
            except TreeSizeError:
                field = _solve_markov(xi, domain, grid, delta, M, h)
            return field, _optimal(field, domain)
    if method == "tree":
        field = _solve_tree(xi, domain, grid, delta, M, max_states)
    elif method in ("lattice", "markov"):
        if not markov:
            raise ValueError(f"method {method!r} needs a terminal payoff and a constant or state domain")
        if method == "lattice":
            field = _solve_lattice(xi, domain, grid, delta, M, max_states)
        else:
            field = _solve_markov(xi, domain, grid, delta, M, h)
    else:
        raise ValueError(f"unknown method {method!r}")
    return field, _optimal(field, domain)


def _optimal(field: ValueField, domain: DomainProcess) -> OptimalPolicy:
    if field.method in ("tree", "lattice") and field.grid.N <= 20:
        policy, chosen = _tree_policy(field)
        return OptimalPolicy(field, domain, policy, chosen)
    opt = OptimalPolicy(field, domain, None, None)
    if field.grid.N <= 20:
        policy = Policy.from_feedback(lambda k, p, lo, hi: opt.feedback(k, p[:, -1]), domain, field.grid)
        return OptimalPolicy(field, domain, policy, None)
    return opt


def enumerate_policies(
    xi: Payoff, domain: DomainProcess, grid: TimeGrid, delta: float = 0.0, M: int = 4, max_policies: int = 2**20
) -> float:
    """Brute-force maximum of the expected payoff over every grid-valued adapted policy.

    A policy picks one of the ``M`` grid volatilities at each of the
    ``2**N - 1`` sign nodes; each is realized forward and averaged over all
    ``2**N`` sign sequences.
    """
    N = grid.N
    if N > 4:
        raise ValueError(f"enumeration is limited to N <= 4, got N = {N}")
    n_nodes = 2**N - 1
    count = M**n_nodes
    if count > max_policies:
        raise ValueError(f"{M}^{n_nodes} = {count} policies exceed the enumeration budget {max_policies}")
    offsets = [2**k - 1 for k in range(N)]
    weights = M ** np.arange(n_nodes, dtype=np.int64)
    best = -math.inf
    chunk = max(1, 2**16 // 2**N)
    for first in range(0, count, chunk):
        ids = np.arange(first, min(first + chunk, count), dtype=np.int64)
        digits = (ids[:, None] // weights[None, :]) % M
        P = ids.size
        paths = np.zeros((P, 1, 1))
        for k in range(N):
            flat = paths.reshape(P * 2**k, k + 1)
            lo, hi = domain.bounds(k, flat)
            g = volatility_grid(lo, hi, delta, M)
            j = digits[:, offsets[k] : offsets[k] + 2**k].reshape(-1)
            a = g[np.arange(P * 2**k), j]
            inc = np.sqrt(a * grid.dt).reshape(P, 2**k)
            nxt = np.repeat(paths, 2, axis=1)
            last = nxt[:, :, -1] + np.tile(_SIGNS, 2**k)[None, :] * np.repeat(inc, 2, axis=1)
            paths = np.concatenate([nxt, last[:, :, None]], axis=2)
        vals = xi(paths.reshape(P * 2**N, N + 1)).reshape(P, 2**N).mean(axis=1)
        best = max(best, float(np.max(vals)))
    return best


def pairwise_mean(values: np.ndarray, levels: Optional[int] = None) -> np.ndarray:
    """Average sibling pairs ``levels`` times along the last axis, as the backward recursion does."""
    v = np.asarray(values, dtype=float)
    levels = int(round(math.log2(v.shape[-1]))) if levels is None else levels
    for _ in range(levels):
        v = 0.5 * (v[..., 0::2] + v[..., 1::2])
    return v


def policy_value(policy: Policy, xi: Payoff, grid: TimeGrid, domain: Optional[DomainProcess] = None) -> float:
    """``E[xi]`` under the policy: average over all ``2**N`` sign sequences.

    With ``domain`` given the policy must stay inside the closed domain.
    """
    if policy.n_steps != grid.N:
        raise ValueError(f"policy has {policy.n_steps} steps, grid has {grid.N}")
    if domain is not None:
        report = admissibility_margin(policy, domain, grid)
        if not report.feasible:
            raise ValueError(f"policy leaves the domain at node {report.worst_node} (margin {report.delta_star})")
    return float(pairwise_mean(xi(realize_tree(policy, grid)[-1]))[0])


def conditional_values(policy: Policy, xi: Payoff, grid: TimeGrid, t: int) -> np.ndarray:
    """``E[xi | F_t]`` under the policy at each of the ``2**t`` sign nodes."""
    if not 0 <= t <= grid.N:
        raise ValueError(f"level must lie in [0, {grid.N}]")
    leaves = xi(realize_tree(policy, grid)[-1])
    return pairwise_mean(leaves, grid.N - t)


def resolve_levels(field: ValueField, domain: DomainProcess, s: int, t: int) -> np.ndarray:
    """Re-solve ``[s, t]`` from every level-``s`` state with ``V_t`` from ``field`` as terminal payoff."""
    if field.method != "tree":
        raise ValueError("re-solving needs a tree field (path states)")
    if not 0 <= s <= t <= field.grid.N:
        raise ValueError(f"need 0 <= s <= t <= N, got s={s}, t={t}")
    sub = build_tree(domain, field.grid, field.delta, field.M, roots=field.states[s], start=s, n_steps=t - s)
    values, _ = backward(sub, field.value_at(t, sub.leaves))
    return values[0]


def dpp_check(
    field: ValueField, domain: DomainProcess, s: int, t: int, delta: Optional[float] = None, M: Optional[int] = None
) -> float:
    """Largest gap between ``V_s`` and the re-solved ``[s, t]`` problem with terminal ``V_t``."""
    if (delta is not None and delta != field.delta) or (M is not None and M != field.M):
        raise ValueError(f"field was solved with delta={field.delta}, M={field.M}")
    return float(np.max(np.abs(resolve_levels(field, domain, s, t) - field.values[s])))


def _splice(base: Policy, t: int, cells: np.ndarray, replacements: Sequence[Policy]) -> Policy:
    N = base.n_steps
    alpha = list(base.alpha[:t])
    for k in range(t, N):
        n = np.arange(2**k)
        m = n >> (k - t)
        rel = n - (m << (k - t))
        a = base.alpha[k].copy()
        for i, r in enumerate(replacements, start=1):
            sel = cells[m] == i
            if not np.any(sel):
                continue
            a[sel] = r.alpha[k - t][rel[sel]] if r.n_steps == N - t else r.alpha[k][n[sel]]
        alpha.append(a)
    return Policy(tuple(alpha))


def _descendants(mask_t: np.ndarray, t: int, N: int) -> list[np.ndarray]:
    return [np.ones(2**k, dtype=bool) if k < t else mask_t[np.arange(2**k) >> (k - t)] for k in range(N)]


@dataclass(frozen=True)
class PastedPolicy:
    policy: Policy
    cells: np.ndarray
    margin: float
    piece_margins: tuple


def paste_policies(
    base: Policy,
    t: int,
    partition: Sequence,
    replacements: Sequence[Policy],
    domain: DomainProcess,
    grid: TimeGrid,
    strict: bool = True,
) -> PastedPolicy:
    """Follow ``base`` up to step ``t``, then replacement ``i`` on cell ``i``.

    ``partition[i]`` is a boolean mask over the ``2**t`` level-``t`` sign nodes
    or a predicate on the level-``t`` path prefix.  Cells must be disjoint;
    nodes in no cell keep ``base``.  A replacement with ``N - t`` steps is a
    shifted policy reused on every node of its cell; one with ``N`` steps is a
    full policy that must agree with ``base`` before ``t``.  With ``strict``
    every piece needs a positive margin, otherwise only closed feasibility.
    """
    N = grid.N
    if base.n_steps != N:
        raise ValueError(f"base policy has {base.n_steps} steps, grid has {N}")
    if not 0 <= t < N:
        raise ValueError(f"pasting time must lie in [0, {N}), got {t}")
    if len(partition) != len(replacements):
        raise ValueError("need one replacement per partition cell")
    prefixes = realize_tree(base, grid, levels=t)[t]
    cells = np.zeros(2**t, dtype=np.int64)
    for i, cell in enumerate(partition, start=1):
        if callable(cell):
            mask = np.array([bool(cell(p)) for p in prefixes])
        else:
            mask = np.asarray(cell, dtype=bool).reshape(-1)
            if mask.size != 2**t:
                raise ValueError(f"cell {i} mask needs {2**t} entries, got {mask.size}")
        if np.any(cells[mask] != 0):
            raise ValueError(f"partition cells overlap (cell {i})")
        cells[mask] = i
    for i, r in enumerate(replacements, start=1):
        if r.n_steps == N:
            if any(not np.array_equal(r.alpha[k], base.alpha[k]) for k in range(t)):
                raise ValueError(f"full replacement {i} must agree with the base policy before step {t}")
        elif r.n_steps != N - t:
            raise ValueError(f"replacement {i} has {r.n_steps} steps; expected {N - t} or {N}")

    floor = 0.0 if strict else -1e-12
    pieces = [admissibility_margin(base, domain, grid, _descendants(cells == 0, t, N)).delta_star]
    shifted_grid = grid.shifted(t)
    for i, r in enumerate(replacements, start=1):
        nodes = np.flatnonzero(cells == i)
        if r.n_steps == N:
            masks = [np.zeros(2**k, dtype=bool) if k < t else m for k, m in enumerate(_descendants(cells == i, t, N))]
            margin = admissibility_margin(r, domain, grid, masks).delta_star
        else:
            margin = min(
                (admissibility_margin(r, domain.shifted(t, prefixes[m]), shifted_grid).delta_star for m in nodes),
                default=math.inf,
            )
        pieces.append(margin)
    for i, m in enumerate(pieces):
        if not m > floor:
            what = "base policy" if i == 0 else f"replacement {i}"
            raise ValueError(f"{what} is not admissible on its cell (margin {m})")
    pasted = _splice(base, t, cells, replacements)
    report = admissibility_margin(pasted, domain, grid)
    return PastedPolicy(pasted, cells, report.delta_star, tuple(pieces))


@dataclass(frozen=True)
class FilteringResult:
    policies: tuple
    values: tuple

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def upward_filtering_sequence(policies: Sequence[Policy], xi: Payoff, grid: TimeGrid, t: int) -> FilteringResult:
    """Paste pairwise on ``{E_new > E_current}`` at step ``t``.

    All policies must agree before ``t``.  The conditional values of the
    resulting sequence increase nodewise to the pointwise maximum.
    """
    if not policies:
        raise ValueError("need at least one policy")
    first = policies[0]
    for i, p in enumerate(policies[1:], start=1):
        if p.n_steps != first.n_steps or any(not np.array_equal(p.alpha[k], first.alpha[k]) for k in range(t)):
            raise ValueError(f"policy {i} does not agree with policy 0 before step {t}")
    current = first
    cv = conditional_values(current, xi, grid, t)
    out_p, out_v = [current], [cv]
    for p in policies[1:]:
        better = conditional_values(p, xi, grid, t) > cv
        if np.any(better):
            current = _splice(current, t, better.astype(np.int64), [p])
            cv = conditional_values(current, xi, grid, t)
        out_p.append(current)
        out_v.append(cv)
    return FilteringResult(tuple(out_p), tuple(out_v))


def sample_policy(
    domain: DomainProcess,
    grid: TimeGrid,
    rng: np.random.Generator,
    inner=(0.1, 0.9),
    base: Optional[Policy] = None,
    t: int = 0,
) -> Policy:
    """Random adapted policy placed uniformly inside ``[lo + u0 (hi - lo), lo + u1 (hi - lo)]``.

    With ``base`` the policy copies ``base`` before step ``t``.
    """
    u0, u1 = inner

    def fn(k, paths, lo, hi):
        if base is not None and k < t:
            return base.alpha[k]
        return lo + rng.uniform(u0, u1, size=lo.shape) * (hi - lo)

    return Policy.from_feedback(fn, domain, grid)
