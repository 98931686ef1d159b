"""Seeded forward simulation of ``x_{k+1} = x_k + sqrt(alpha_k dt) eps_k``."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .domain import DomainProcess, Policy
from .pathspace import Payoff, TimeGrid
from .tree_solver import pairwise_mean

__all__ = ["McEstimate", "BoundReport", "thread_count", "simulate", "lower_bound_check"]

BLOCK = 2**14
_CLOSED_TOL = 1e-12


def thread_count() -> int:
    """Worker cap from ``RGEXPECT_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("RGEXPECT_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("RGEXPECT_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    model: str
    violations: int = 0

    @property
    def flagged(self) -> bool:
        return self.violations > 0


def _block(policy, xi, grid, model, seed, b, n, domain, signs=None):
    if signs is None:
        rng = np.random.default_rng(np.random.SeedSequence([seed, b]))
        if model == "binomial":
            eps = np.where(rng.random((n, grid.N)) < 0.5, -1.0, 1.0)
        else:
            eps = rng.standard_normal((n, grid.N))
    else:
        eps = signs
    paths = np.zeros((n, grid.N + 1))
    node = np.zeros(n, dtype=np.int64)
    bad = np.zeros(n, dtype=bool)
    for k in range(grid.N):
        if isinstance(policy, Policy):
            a = policy.alpha[k][node]
            node = 2 * node + (eps[:, k] > 0)
        else:
            a = np.broadcast_to(np.asarray(policy(k, paths[:, k]), dtype=float), (n,))
        if domain is not None:
            lo, hi = domain.bounds(k, paths[:, : k + 1])
            bad |= (a < lo - _CLOSED_TOL) | (a > hi + _CLOSED_TOL)
        paths[:, k + 1] = paths[:, k] + eps[:, k] * np.sqrt(np.maximum(a, 0.0) * grid.dt)
    v = xi(paths)
    if signs is not None:
        mean = float(pairwise_mean(v)[0])
        return n, mean, float(np.sum((v - mean) ** 2)), int(np.sum(bad))
    mean = float(v[0]) if np.ptp(v) == 0 else float(np.mean(v))
    m2 = 0.0 if np.ptp(v) == 0 else float(np.sum((v - mean) ** 2))
    return n, mean, m2, int(np.sum(bad))


def _combine(parts):
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b, _ in parts:
        if n == 0:
            n, mean, m2 = nb, mb, m2b
            continue
        d = mb - mean
        tot = n + nb
        mean = mean + d * nb / tot
        m2 = m2 + m2b + d * d * n * nb / tot
        n = tot
    return n, mean, m2


def simulate(
    policy: Union[Policy, Callable[[int, np.ndarray], np.ndarray]],
    xi: Payoff,
    grid: TimeGrid,
    n_samples: int,
    seed: int = 0,
    model: str = "binomial",
    domain: Optional[DomainProcess] = None,
    stratified: bool = False,
    threads: Optional[int] = None,
) -> McEstimate:
    """Estimate ``E[xi]`` under a sign-tree policy or a feedback map ``(k, x) -> alpha``.

    Sample blocks of fixed size draw from ``SeedSequence([seed, block])`` and
    are reduced in block order, so results do not depend on the thread count.
    ``stratified`` visits each of the ``2**N`` sign sequences once.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    if model not in ("binomial", "gaussian"):
        raise ValueError(f"unknown increment model {model!r}")
    if isinstance(policy, Policy):
        if model != "binomial":
            raise ValueError("sign-tree policies need the binomial model")
        if policy.n_steps != grid.N:
            raise ValueError(f"policy has {policy.n_steps} steps, grid has {grid.N}")
    if stratified:
        if model != "binomial" or n_samples != 2**grid.N:
            raise ValueError("stratified sampling needs the binomial model and n_samples = 2**N")
        idx = np.arange(n_samples)[:, None]
        shifts = np.arange(grid.N - 1, -1, -1)[None, :]
        signs = np.where((idx >> shifts) & 1, 1.0, -1.0)
        parts = [_block(policy, xi, grid, model, seed, 0, n_samples, domain, signs)]
    else:
        sizes = [min(BLOCK, n_samples - s) for s in range(0, n_samples, BLOCK)]
        work = lambda b: _block(policy, xi, grid, model, seed, b, sizes[b], domain)  # noqa: E731
        workers = min(thread_count() if threads is None else threads, len(sizes))
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                parts = list(pool.map(work, range(len(sizes))))
        else:
            parts = [work(b) for b in range(len(sizes))]
    n, mean, m2 = _combine(parts)
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    return McEstimate(mean, se, n, seed, model, sum(p[3] for p in parts))


@dataclass(frozen=True)
class BoundReport:
    estimate: McEstimate
    value: float

    @property
    def below_upper(self) -> bool:
        return self.estimate.mean <= self.value + 3 * self.estimate.std_error

    @property
    def above_lower(self) -> bool:
        return self.estimate.mean >= self.value - 3 * self.estimate.std_error

    @property
    def within(self) -> bool:
        return self.below_upper and self.above_lower


def lower_bound_check(
    policy, xi: Payoff, grid: TimeGrid, value: float, n_samples: int, seed: int = 0, domain=None, stratified=False
) -> BoundReport:
    """Binomial re-sampling of ``policy`` compared with the tree value ``value`` at 3 standard errors."""
    est = simulate(policy, xi, grid, n_samples, seed, "binomial", domain, stratified)
    return BoundReport(est, float(value))
