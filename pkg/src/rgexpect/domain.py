"""Path-dependent volatility intervals, delta-interiors and admissibility margins."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .pathspace import TimeGrid, as_path, concat, realize_tree

__all__ = [
    "InfeasibleError",
    "VolatilityInterval",
    "DomainProcess",
    "Policy",
    "MarginReport",
    "UcReport",
    "delta_interior",
    "volatility_grid",
    "constant_domain",
    "ball_domain",
    "state_domain",
    "path_domain",
    "make_interval_domain",
    "lipschitz_modulus",
    "piecewise_linear",
    "node_margins",
    "admissibility_margin",
    "uc_check",
    "stability_radius",
]

# slack for comparing a volatility against a closed interval endpoint
_CLOSED_TOL = 1e-12


class InfeasibleError(ValueError):
    """The delta-interior of the domain is empty at a reachable node."""


@dataclass(frozen=True)
class VolatilityInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def __contains__(self, a: float) -> bool:
        return self.lo <= a <= self.hi

    def issubset(self, other: "VolatilityInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi


def delta_interior(iv: VolatilityInterval, delta: float) -> Optional[VolatilityInterval]:
    """``[lo + delta, hi - delta]``, or ``None`` when that interval is empty or a point."""
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    lo, hi = iv.lo + delta, iv.hi - delta
    if lo < hi:
        return VolatilityInterval(lo, hi)
    return None


def volatility_grid(lo, hi, delta: float, M: int) -> np.ndarray:
    """``M`` equally spaced volatilities spanning the delta-interior, one row per node."""
    if M < 2:
        raise ValueError(f"volatility grid needs M >= 2 points, got {M}")
    lo = np.asarray(lo, dtype=float) + delta
    hi = np.asarray(hi, dtype=float) - delta
    bad = ~(lo < hi)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InfeasibleError(f"empty delta-interior at node {i}: [{lo[i]}, {hi[i]}] with delta={delta}")
    j = np.arange(M) / (M - 1)
    return lo[:, None] + j[None, :] * (hi - lo)[:, None]


def lipschitz_modulus(lip_a: float, lip_b: float = 0.0) -> Callable[[float], float]:
    """Uniform-continuity certificate for ``[a, b]`` when ``a`` and ``b`` are Lipschitz in sup-norm.

    ``eps'(delta)`` keeps both endpoints within ``delta / 2``; the result is
    ``min(eps'(delta), delta / 2)``.
    """
    lip = max(float(lip_a), float(lip_b))
    if lip < 0:
        raise ValueError("Lipschitz constants must be >= 0")

    def modulus(delta: float) -> float:
        eps_prime = math.inf if lip == 0 else delta / (2.0 * lip)
        return min(eps_prime, delta / 2.0)

    return modulus


@dataclass(frozen=True)
class DomainProcess:
    """Set-valued process ``D_k(prefix) = [lower, upper]``.

    ``lower`` and ``upper`` take ``(k, prefixes)`` with ``prefixes`` of shape
    ``(n, k + 1)``.  Markov kinds (``constant``, ``state``) also carry
    ``state_lower`` / ``state_upper`` taking ``(k, x)``.
    """

    lower: Callable[[int, np.ndarray], np.ndarray]
    upper: Callable[[int, np.ndarray], np.ndarray]
    modulus: Callable[[float], float]
    kind: str = "path"
    state_lower: Optional[Callable[[int, np.ndarray], np.ndarray]] = field(default=None, repr=False)
    state_upper: Optional[Callable[[int, np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("constant", "state", "path"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind != "path" and (self.state_lower is None or self.state_upper is None):
            raise ValueError(f"{self.kind} domains need state_lower/state_upper")

    @property
    def markov(self) -> bool:
        return self.kind != "path"

    def bounds(self, k: int, prefixes) -> tuple[np.ndarray, np.ndarray]:
        p = np.atleast_2d(as_path(prefixes))
        if p.shape[1] != k + 1:
            raise ValueError(f"prefixes at step {k} need {k + 1} values, got {p.shape[1]}")
        n = p.shape[0]
        lo = np.broadcast_to(np.asarray(self.lower(k, p), dtype=float), (n,))
        hi = np.broadcast_to(np.asarray(self.upper(k, p), dtype=float), (n,))
        return lo, hi

    def state_bounds(self, k: int, x) -> tuple[np.ndarray, np.ndarray]:
        if not self.markov:
            raise ValueError("path-dependent domains have no state form")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = np.broadcast_to(np.asarray(self.state_lower(k, x), dtype=float), x.shape)
        hi = np.broadcast_to(np.asarray(self.state_upper(k, x), dtype=float), x.shape)
        return lo, hi

    def at(self, k: int, prefix) -> VolatilityInterval:
        lo, hi = self.bounds(k, np.asarray(as_path(prefix))[None, :])
        return VolatilityInterval(float(lo[0]), float(hi[0]))

    def shifted(self, k: int, prefix) -> "DomainProcess":
        """The domain seen from node ``(k, prefix)``, acting on suffix paths."""
        p = as_path(prefix)
        if p.ndim != 1 or p.size != k + 1:
            raise ValueError(f"prefix must have length {k + 1}")
        lower, upper = self.lower, self.upper
        kw = {}
        if self.markov:
            x_k, sl, su = float(p[-1]), self.state_lower, self.state_upper
            kw = dict(
                state_lower=lambda j, x: sl(k + j, x_k + x),
                state_upper=lambda j, x: su(k + j, x_k + x),
            )
        return DomainProcess(
            lambda j, s: lower(k + j, concat(p, s)),
            lambda j, s: upper(k + j, concat(p, s)),
            self.modulus,
            self.kind,
            **kw,
        )


def _const(v):
    return lambda k, z: np.full(np.shape(z)[:1], v, dtype=float)


def constant_domain(lo: float, hi: float) -> DomainProcess:
    VolatilityInterval(lo, hi)
    return DomainProcess(_const(lo), _const(hi), lipschitz_modulus(0.0), "constant", _const(lo), _const(hi))


def ball_domain(center: float, radius: float) -> DomainProcess:
    """Scalar ball ``{|g - center| <= radius}``, i.e. ``[center - radius, center + radius]``."""
    return constant_domain(center - radius, center + radius)


def state_domain(a: Callable, b: Callable, lip_a: float, lip_b: float = 0.0, modulus=None, probe=True) -> DomainProcess:
    """Markov domain ``[a(x_k), b(x_k)]`` for functions of the current state."""
    dom = DomainProcess(
        lambda k, p: a(p[:, -1]),
        lambda k, p: b(p[:, -1]),
        modulus or lipschitz_modulus(lip_a, lip_b),
        "state",
        lambda k, x: a(x),
        lambda k, x: b(x),
    )
    if probe:
        xs = np.linspace(-20.0, 20.0, 4001)
        _check_probe(*dom.state_bounds(0, xs), where=lambda i: f"x = {xs[i]:.4g}")
    return dom


def path_domain(a: Callable, b: Callable, lip_a: float, lip_b: float = 0.0, modulus=None, probe=True) -> DomainProcess:
    """Domain ``[a(k, prefix), b(k, prefix)]`` for functions of the whole prefix."""
    dom = DomainProcess(a, b, modulus or lipschitz_modulus(lip_a, lip_b), "path")
    if probe:
        rng = np.random.default_rng(0)
        for k in range(8):
            steps = rng.normal(0.0, 0.7, size=(256, k))
            prefixes = np.concatenate([np.zeros((256, 1)), np.cumsum(steps, axis=1)], axis=1)
            _check_probe(*dom.bounds(k, prefixes), where=lambda i, k=k: f"step {k}, probe path {i}")
    return dom


def _check_probe(lo, hi, where):
    bad = ~((lo >= 0) & (lo < hi))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"need 0 <= a < b, violated at {where(i)}: a={lo[i]}, b={hi[i]}")


def make_interval_domain(a, b, lip_a: float = 0.0, lip_b: float = 0.0, kind: Optional[str] = None, modulus=None):
    """Random interval ``[a, b]`` from constants, state functions or path functions.

    ``kind`` defaults to ``constant`` for numbers and ``state`` for callables.
    """
    if kind is None:
        kind = "constant" if not (callable(a) or callable(b)) else "state"
    if kind == "constant":
        return constant_domain(float(a), float(b))
    fa = a if callable(a) else None
    fb = b if callable(b) else None
    if kind == "state":
        fa = fa or (lambda x, v=float(a): np.full(np.shape(x), v))
        fb = fb or (lambda x, v=float(b): np.full(np.shape(x), v))
        return state_domain(fa, fb, lip_a, lip_b, modulus)
    if kind == "path":
        fa = fa or _const(float(a))
        fb = fb or _const(float(b))
        return path_domain(fa, fb, lip_a, lip_b, modulus)
    raise ValueError(f"unknown domain kind {kind!r}")


def piecewise_linear(xs, ys) -> tuple[Callable[[np.ndarray], np.ndarray], float]:
    """Interpolant through breakpoints (flat outside) and its Lipschitz constant."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 1:
        raise ValueError("breakpoint lists must be 1-D and of equal length")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    lip = float(np.max(np.abs(np.diff(ys) / np.diff(xs)))) if xs.size > 1 else 0.0
    return (lambda x: np.interp(x, xs, ys)), lip


@dataclass(frozen=True)
class Policy:
    """Adapted volatility control on the sign tree; level ``k`` holds ``2**k`` values."""

    alpha: tuple

    def __post_init__(self):
        levels = []
        for k, a in enumerate(self.alpha):
            a = np.array(a, dtype=float).reshape(-1)
            if a.size != 2**k:
                raise ValueError(f"policy level {k} needs {2**k} values, got {a.size}")
            a.setflags(write=False)
            levels.append(a)
        if not levels:
            raise ValueError("a policy needs at least one step")
        object.__setattr__(self, "alpha", tuple(levels))

    @property
    def n_steps(self) -> int:
        return len(self.alpha)

    @classmethod
    def constant(cls, value: float, n_steps: int) -> "Policy":
        return cls(tuple(np.full(2**k, float(value)) for k in range(n_steps)))

    @classmethod
    def from_feedback(cls, fn: Callable, domain: DomainProcess, grid: TimeGrid) -> "Policy":
        """Build from ``fn(k, prefixes, lo, hi) -> alpha`` evaluated along the realized paths."""
        levels = []
        paths = np.zeros((1, 1))
        for k in range(grid.N):
            lo, hi = domain.bounds(k, paths)
            a = np.broadcast_to(np.asarray(fn(k, paths, lo, hi), dtype=float), lo.shape).copy()
            levels.append(a)
            inc = np.sqrt(a * grid.dt)
            nxt = np.repeat(paths, 2, axis=0)
            paths = np.column_stack([nxt, nxt[:, -1] + np.tile([-1.0, 1.0], a.size) * np.repeat(inc, 2)])
        return cls(tuple(levels))

    def suffix(self, t: int, node: int) -> "Policy":
        """The policy seen from sign node ``node`` at level ``t`` (acts on the shifted tree)."""
        if not 0 <= t < self.n_steps or not 0 <= node < 2**t:
            raise ValueError(f"no node {node} at level {t}")
        return Policy(tuple(self.alpha[t + j][node * 2**j : (node + 1) * 2**j] for j in range(self.n_steps - t)))


@dataclass(frozen=True)
class MarginReport:
    delta_star: float
    deg: float
    admissible: bool
    worst_node: Optional[tuple[int, int]]

    @property
    def feasible(self) -> bool:
        """Inside the closed domain at every node (margin may be zero)."""
        return self.delta_star >= -_CLOSED_TOL


def node_margins(policy: Policy, domain: DomainProcess, grid: TimeGrid) -> list[np.ndarray]:
    """``min(alpha - lo, hi - alpha)`` at every sign node, level by level."""
    if policy.n_steps != grid.N:
        raise ValueError(f"policy has {policy.n_steps} steps, grid has {grid.N}")
    paths = realize_tree(policy, grid, levels=grid.N - 1)
    out = []
    for k in range(grid.N):
        lo, hi = domain.bounds(k, paths[k])
        a = policy.alpha[k]
        out.append(np.minimum(a - lo, hi - a))
    return out


def _report(margins: list[np.ndarray], masks=None) -> MarginReport:
    best, where = math.inf, None
    for k, m in enumerate(margins):
        if masks is not None:
            m = np.where(masks[k], m, math.inf)
        if m.size and np.min(m) < best:
            best = float(np.min(m))
            where = (k, int(np.argmin(m)))
    deg = min(best / 2.0, 1.0) if best > 0 else 0.0
    return MarginReport(best, deg, best > 0, where)


def admissibility_margin(policy: Policy, domain: DomainProcess, grid: TimeGrid, masks=None) -> MarginReport:
    """Largest delta with ``alpha`` in the delta-interior at every node, and ``deg = min(delta*/2, 1)``.

    ``masks`` optionally restricts the minimum to selected nodes per level.
    A negative ``delta_star`` means the policy leaves the closed domain at
    ``worst_node``.
    """
    return _report(node_margins(policy, domain, grid), masks)


@dataclass(frozen=True)
class UcReport:
    max_violation: float
    n_pairs: int
    epsilon: float
    worst: Optional[dict]

    @property
    def passed(self) -> bool:
        return self.max_violation <= 0.0


def uc_check(domain: DomainProcess, delta: float, grid: TimeGrid, n_samples: int = 10_000, seed: int = 0) -> UcReport:
    """Sample prefix pairs within ``modulus(delta)`` and test the delta/eps interior inclusion.

    Returns the largest amount by which ``Int^delta D(w (x) s)`` sticks out of
    ``Int^eps D(w' (x) s)`` over sampled prefixes ``w, w'`` and common suffixes ``s``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    eps = float(domain.modulus(delta))
    rng = np.random.default_rng(seed)
    N = grid.N
    t_lo = min(1, N - 1)
    ts = rng.integers(t_lo, N, size=n_samples)
    worst, worst_info = 0.0, None
    for t in np.unique(ts):
        n = int(np.sum(ts == t))
        vol = rng.uniform(0.25, 4.0, size=(n, 1))
        inc = rng.normal(0.0, 1.0, size=(n, N)) * np.sqrt(vol * grid.dt)
        path = np.concatenate([np.zeros((n, 1)), np.cumsum(inc, axis=1)], axis=1)
        bump = rng.uniform(-eps, eps, size=(n, t + 1)) if np.isfinite(eps) else np.zeros((n, t + 1))
        bump[:, 0] = 0.0
        other = path.copy()
        # perturb the prefix only; the suffix increments stay common
        other[:, : t + 1] += bump
        other[:, t + 1 :] += bump[:, -1:]
        e = eps if np.isfinite(eps) else delta
        for s in range(t, N):
            lo, hi = domain.bounds(s, path[:, : s + 1])
            lo2, hi2 = domain.bounds(s, other[:, : s + 1])
            inner = (lo + delta) <= (hi - delta)
            v = np.maximum((lo2 + e) - (lo + delta), (hi - delta) - (hi2 - e))
            v = np.where(inner, np.maximum(v, 0.0), 0.0)
            i = int(np.argmax(v))
            if v[i] > worst:
                worst = float(v[i])
                worst_info = dict(t=int(t), s=s, prefix=path[i, : t + 1].copy(), other=other[i, : t + 1].copy())
    return UcReport(worst, n_samples, eps, worst_info)


def stability_radius(k: int, prefix, policy: Policy, domain: DomainProcess, grid: TimeGrid) -> float:
    """Radius ``min(modulus(deg) / 2, 1)`` within which ``policy`` stays admissible at ``(k, prefix)``.

    ``policy`` acts on the shifted tree of the remaining ``N - k`` steps.
    """
    report = admissibility_margin(policy, domain.shifted(k, prefix), grid.shifted(k))
    if not report.admissible:
        raise ValueError(f"policy is not admissible at step {k} (delta* = {report.delta_star})")
    return min(domain.modulus(report.deg) / 2.0, 1.0)
