"""Command-line front end.

    rgexpect {solve,pde,compare,mc,check,bench} CONFIG.toml [--section.key VALUE ...]

Exit codes: 0 success, 1 a check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from typing import Any, Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import payoffs as P
from .domain import (
    DomainProcess,
    InfeasibleError,
    Policy,
    admissibility_margin,
    ball_domain,
    constant_domain,
    path_domain,
    piecewise_linear,
    state_domain,
)
from .montecarlo import simulate
from .pathspace import Payoff, TimeGrid, realize_tree
from .pde_solver import compare_rep, solve_pde
from .sublinear_api import SublinearExpectation
from .tree_solver import (
    MAX_STATES,
    TreeSizeError,
    conditional_values,
    dpp_check,
    enumerate_policies,
    paste_policies,
    policy_value,
    sample_policy,
    solve,
    upward_filtering_sequence,
)


class ConfigError(ValueError):
    pass


_num = (int, float)
SCHEMA: dict[str, dict[str, tuple]] = {
    "grid": {"T": (_num, 1.0), "N": (int, 8)},
    "domain": {
        "kind": (str, "constant"),
        "lo": (_num, 1.0),
        "hi": (_num, 4.0),
        "center": (_num, None),
        "radius": (_num, None),
        "a_x": (list, None),
        "a_y": (list, None),
        "b_x": (list, None),
        "b_y": (list, None),
        "coef": (_num, 0.0),
        "cap": (_num, 1.0),
    },
    "payoff": {
        "name": (str, "terminal_square"),
        "scale": (_num, 1.0),
        "freq": (_num, 1.0),
        "xs": (list, None),
        "ys": (list, None),
    },
    "solver": {"delta": (_num, 0.0), "M": (int, 4), "method": (str, "auto"), "max_states": (int, MAX_STATES)},
    "pde": {"dx": (_num, 0.02), "cfl": (_num, 0.5), "x_width": (_num, None), "x0": (_num, 0.0), "n_save": (int, 11)},
    "mc": {
        "n": (int, 100_000),
        "seed": (int, 0),
        "model": (str, "binomial"),
        "stratified": (bool, False),
        "policy": ((str, int, float), "optimal"),
    },
    "output": {"csv": (str, "-"), "precision": (int, 17)},
    "check": {"t": (int, None), "seed": (int, 0), "tol": (_num, 1e-10)},
}


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path: str, overrides: list[str]) -> dict[str, dict[str, Any]]:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid: {exc}") from None
    it = iter(overrides)
    for flag in it:
        if not flag.startswith("--") or "." not in flag:
            raise ConfigError(f"unknown option {flag!r}; overrides look like --section.key VALUE")
        key, _, value = flag[2:].partition("=")
        if not _:
            try:
                value = next(it)
            except StopIteration:
                raise ConfigError(f"option {flag} needs a value") from None
        section, _, name = key.partition(".")
        raw.setdefault(section, {})[name] = _parse_value(value)

    cfg: dict[str, dict[str, Any]] = {}
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown config field {section}.{key}")
    for section, fields in SCHEMA.items():
        body = raw.get(section, {})
        out = {}
        for key, (typ, default) in fields.items():
            v = body.get(key, default)
            if v is not None:
                allowed = typ if isinstance(typ, tuple) else (typ,)
                if (isinstance(v, bool) and bool not in allowed) or not isinstance(v, allowed):
                    raise ConfigError(f"config field {section}.{key} has the wrong type: {v!r}")
            out[key] = v
        cfg[section] = out
    _validate(cfg)
    return cfg


def _validate(cfg):
    def need(cond, field, msg):
        if not cond:
            raise ConfigError(f"config field {field}: {msg}")

    g, s, d = cfg["grid"], cfg["solver"], cfg["domain"]
    need(g["T"] > 0, "grid.T", "must be > 0")
    need(g["N"] >= 1, "grid.N", "must be >= 1")
    need(s["M"] >= 2, "solver.M", "must be >= 2")
    need(s["delta"] >= 0, "solver.delta", "must be >= 0")
    need(s["method"] in ("auto", "tree", "lattice", "markov"), "solver.method", "unknown method")
    need(d["kind"] in ("constant", "ball", "state", "path"), "domain.kind", "unknown kind")
    if d["kind"] in ("constant", "path"):
        need(0 <= d["lo"] < d["hi"], "domain.lo", "need 0 <= lo < hi")
    if d["kind"] == "ball":
        need(d["center"] is not None and d["radius"] is not None, "domain.center", "ball needs center and radius")
        need(0 < d["radius"] <= d["center"], "domain.radius", "need 0 < radius <= center")
    if d["kind"] == "state":
        for k in ("a_x", "a_y", "b_x", "b_y"):
            need(d[k] is not None and len(d[k]) >= 1, f"domain.{k}", "breakpoint table required")
    need(cfg["payoff"]["name"] in P.PAYOFFS, "payoff.name", f"choose from {sorted(P.PAYOFFS)}")
    if cfg["payoff"]["name"] == "custom_table":
        need(cfg["payoff"]["xs"] is not None and cfg["payoff"]["ys"] is not None, "payoff.xs", "table required")
    need(cfg["pde"]["dx"] > 0, "pde.dx", "must be > 0")
    need(0 < cfg["pde"]["cfl"] <= 1, "pde.cfl", "must lie in (0, 1]")
    need(cfg["mc"]["n"] >= 1, "mc.n", "must be >= 1")
    need(cfg["mc"]["model"] in ("binomial", "gaussian"), "mc.model", "binomial or gaussian")
    need(1 <= cfg["output"]["precision"] <= 17, "output.precision", "must lie in [1, 17]")


def build_domain(d) -> DomainProcess:
    try:
        if d["kind"] == "constant":
            return constant_domain(d["lo"], d["hi"])
        if d["kind"] == "ball":
            return ball_domain(d["center"], d["radius"])
        if d["kind"] == "state":
            a, la = piecewise_linear(d["a_x"], d["a_y"])
            b, lb = piecewise_linear(d["b_x"], d["b_y"])
            return state_domain(a, b, la, lb)
        lo, hi, coef, cap = d["lo"], d["hi"], d["coef"], d["cap"]
        # lower edge moves with the running maximum of |x|, capped
        return path_domain(
            lambda k, p: lo + coef * np.minimum(np.max(np.abs(p), axis=1), cap),
            lambda k, p: np.full(p.shape[0], float(hi)),
            abs(coef),
        )
    except ValueError as exc:
        raise ConfigError(f"config field domain: {exc}") from None


def build_payoff(p) -> Payoff:
    name = p["name"]
    try:
        if name == "custom_table":
            return P.custom_table(p["xs"], p["ys"])
        if name == "terminal_cos":
            return P.terminal_cos(p["freq"], p["scale"])
        return P.PAYOFFS[name](p["scale"])
    except ValueError as exc:
        raise ConfigError(f"config field payoff: {exc}") from None


def _pde_bounds(d) -> tuple[Callable, Callable]:
    if d["kind"] == "state":
        return piecewise_linear(d["a_x"], d["a_y"])[0], piecewise_linear(d["b_x"], d["b_y"])[0]
    if d["kind"] == "ball":
        return d["center"] - d["radius"], d["center"] + d["radius"]
    if d["kind"] == "path":
        raise ConfigError("config field domain.kind: the PDE needs a constant, ball or state domain")
    return d["lo"], d["hi"]


class Writer:
    def __init__(self, cfg, out):
        self.prec = cfg["output"]["precision"]
        self.path = cfg["output"]["csv"]
        self.buf = io.StringIO()
        self.w = csv.writer(self.buf, lineterminator="\n")
        self.out = out

    def fmt(self, v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return format(float(v), f".{self.prec}g")
        return str(v)

    def row(self, *values):
        self.w.writerow([self.fmt(v) for v in values])

    def close(self):
        if self.path == "-":
            self.out.write(self.buf.getvalue())
        else:
            with open(self.path, "w", newline="") as fh:
                fh.write(self.buf.getvalue())


def _setup(cfg):
    grid = TimeGrid(float(cfg["grid"]["T"]), cfg["grid"]["N"])
    return grid, build_domain(cfg["domain"]), build_payoff(cfg["payoff"])


def _solve(cfg, grid, domain, xi):
    s = cfg["solver"]
    return solve(xi, domain, grid, s["delta"], s["M"], s["method"], s["max_states"])


def cmd_solve(cfg, out) -> int:
    grid, domain, xi = _setup(cfg)
    field, _ = _solve(cfg, grid, domain, xi)
    w = Writer(cfg, out)
    w.row("level", "node", "x", "value")
    for k in range(grid.N + 1):
        st = field.states[k]
        x = st[:, -1] if st.ndim == 2 else st
        for i in range(x.size):
            w.row(k, i, x[i], field.values[k][i])
    w.close()
    out.write(f"root,{w.fmt(field.root)}\nmethod,{field.method}\n")
    return 0


def cmd_pde(cfg, out) -> int:
    grid, _, xi = _setup(cfg)
    if xi.terminal is None:
        raise ConfigError("config field payoff.name: the PDE needs a terminal payoff")
    a, b = _pde_bounds(cfg["domain"])
    p = cfg["pde"]
    sol = solve_pde(xi.terminal, a, b, grid.T, p["dx"], p["cfl"], p["x_width"], p["x0"],
                    cfg["solver"]["delta"], n_save=p["n_save"])
    w = Writer(cfg, out)
    w.row("t", "x", "u")
    for n, t in enumerate(sol.t):
        for i, x in enumerate(sol.x):
            w.row(float(t), float(x), sol.u[n, i])
    w.close()
    out.write(f"u0,{w.fmt(sol.value(p['x0']))}\n")
    return 0


def cmd_compare(cfg, out) -> int:
    grid, domain, xi = _setup(cfg)
    if xi.terminal is None:
        raise ConfigError("config field payoff.name: the comparison needs a terminal payoff")
    a, b = _pde_bounds(cfg["domain"])
    s, p = cfg["solver"], cfg["pde"]
    c = compare_rep(xi.terminal, a, b, grid.T, grid.N, p["dx"], s["M"], s["delta"], p["cfl"], s["method"],
                    domain=domain)
    w = Writer(cfg, out)
    w.row("tree_value", "pde_value", "gap", "N", "dx", "M", "delta", "method")
    w.row(c.tree_value, c.pde_value, c.gap, c.N, float(c.dx), s["M"], float(s["delta"]), c.method)
    w.close()
    return 0


def _mc_policy(cfg, grid, domain, xi):
    choice = cfg["mc"]["policy"]
    if isinstance(choice, str):
        if choice != "optimal":
            raise ConfigError("config field mc.policy: 'optimal' or a constant volatility")
        field, opt = _solve(cfg, grid, domain, xi)
        if opt.policy is not None:
            return opt.policy, field.root
        return opt.feedback, field.root
    return Policy.constant(float(choice), grid.N), math.nan


def cmd_mc(cfg, out) -> int:
    grid, domain, xi = _setup(cfg)
    m = cfg["mc"]
    policy, _ = _mc_policy(cfg, grid, domain, xi)
    n = 2**grid.N if m["stratified"] else m["n"]
    est = simulate(policy, xi, grid, n, m["seed"], m["model"], domain, m["stratified"])
    w = Writer(cfg, out)
    w.row("mean", "std_error", "n", "seed", "model", "violations")
    w.row(est.mean, est.std_error, est.n_samples, est.seed, est.model, est.violations)
    w.close()
    return 0


def run_checks(cfg) -> list[tuple[str, float, bool]]:
    """Oracle, DPP, axiom, pasting, filtering and Monte Carlo checks on the configured instance."""
    grid, domain, xi = _setup(cfg)
    s, c = cfg["solver"], cfg["check"]
    tol = c["tol"]
    N = grid.N
    t = N // 2 if c["t"] is None else c["t"]
    if not 0 <= t < N:
        raise ConfigError("config field check.t: must lie in [0, N)")
    rng = np.random.default_rng(c["seed"])
    rows = []

    field, opt = solve(xi, domain, grid, s["delta"], s["M"], "tree", s["max_states"])
    v0 = field.root
    if N <= 4 and s["M"] ** (2**N - 1) <= 2**20:
        rows.append(("oracle_enumeration", abs(v0 - enumerate_policies(xi, domain, grid, s["delta"], s["M"])), 1e-12))
    dpp = max(dpp_check(field, domain, a, b) for a in range(N + 1) for b in range(a, N + 1))
    rows.append(("dpp", dpp, 1e-12))

    op = SublinearExpectation(domain, grid, s["delta"], s["M"], s["max_states"])
    tc = max(op.time_consistency(xi, a, b) for a in range(N + 1) for b in range(a, N + 1))
    rows.append(("time_consistency", tc, 1e-12))
    other = P.terminal_cos(1.3, 0.7)
    suite = op.property_suite(xi, other, lambda p: np.sin(2.0 * p[:, -1] + 0.5), t, tol)
    for r in suite.results:
        rows.append((f"axiom_{r.name}", r.residual, tol))

    base = sample_policy(domain, grid, rng)
    prefixes = realize_tree(base, grid, levels=t)[t]
    up = prefixes[:, -1] > 0
    reps = [sample_policy(domain, grid, rng, base=base, t=t), sample_policy(domain, grid, rng, base=base, t=t)]
    pasted = paste_policies(base, t, [up, ~up], reps, domain, grid)
    cv = conditional_values(pasted.policy, xi, grid, t)
    piece = np.where(up, conditional_values(reps[0], xi, grid, t), conditional_values(reps[1], xi, grid, t))
    root_mix = abs(policy_value(pasted.policy, xi, grid) - float(np.mean(piece)))
    rows.append(("pasting_margin", abs(pasted.margin - min(pasted.piece_margins)), 1e-12))
    rows.append(("pasting_conditional", float(np.max(np.abs(cv - piece))), 1e-12))
    rows.append(("pasting_root", root_mix, 1e-12))
    rows.append(("pasting_admissible", 0.0 if admissibility_margin(pasted.policy, domain, grid).admissible else 1.0, 0.0))

    if opt.policy is not None:
        seq = [opt.policy] + [sample_policy(domain, grid, rng, base=opt.policy, t=t) for _ in range(4)]
        res = upward_filtering_sequence(seq[::-1], xi, grid, t)
        drop = max(0.0, -float(np.min(np.diff(np.stack(res.values), axis=0))))
        vt = field.value_at(t, realize_tree(opt.policy, grid, levels=t)[t])
        rows.append(("filtering_monotone", drop, 0.0))
        rows.append(("filtering_reaches_value", float(np.max(np.abs(res.final - vt))), 1e-12))
        if N <= 20:
            est = simulate(opt.policy, xi, grid, 2**N, 0, stratified=True)
            rows.append(("mc_stratified", abs(est.mean - v0), 1e-12))
    return [(name, float(r), bool(r <= lim)) for name, r, lim in rows]


def cmd_check(cfg, out) -> int:
    rows = run_checks(cfg)
    w = Writer(cfg, out)
    w.row("test", "residual", "pass")
    for r in rows:
        w.row(*r)
    w.close()
    return 0 if all(r[2] for r in rows) else 1


def cmd_bench(cfg, out) -> int:
    grid, domain, xi = _setup(cfg)
    w = Writer(cfg, out)
    w.row("module", "seconds", "detail")

    t0 = time.perf_counter()
    field, opt = _solve(cfg, grid, domain, xi)
    w.row("tree_solver", time.perf_counter() - t0, field.method)
    if domain.markov and xi.terminal is not None:
        a, b = _pde_bounds(cfg["domain"])
        t0 = time.perf_counter()
        solve_pde(xi.terminal, a, b, grid.T, cfg["pde"]["dx"], cfg["pde"]["cfl"], n_save=2)
        w.row("pde_solver", time.perf_counter() - t0, f"dx={cfg['pde']['dx']}")
    if opt.policy is not None:
        t0 = time.perf_counter()
        simulate(opt.policy, xi, grid, cfg["mc"]["n"], cfg["mc"]["seed"])
        w.row("montecarlo", time.perf_counter() - t0, f"n={cfg['mc']['n']}")
    try:
        t0 = time.perf_counter()
        SublinearExpectation(domain, grid, cfg["solver"]["delta"], cfg["solver"]["M"])(xi, 0)
        w.row("sublinear_api", time.perf_counter() - t0, "E_0")
    except TreeSizeError:
        w.row("sublinear_api", math.nan, "tree too large")
    w.close()
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "pde": cmd_pde,
    "compare": cmd_compare,
    "mc": cmd_mc,
    "check": cmd_check,
    "bench": cmd_bench,
}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = argparse.ArgumentParser(prog="rgexpect", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="TOML run configuration")
    args, rest = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config, rest)
        return COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"rgexpect: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, TreeSizeError, ValueError) as exc:
        print(f"rgexpect: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
