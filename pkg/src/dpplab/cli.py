"""Config-driven command line entry point.

Configs are flat ``section.key = value`` lines (comments with #). One run
per process: ``dpplab run path/to/config [--seed S] [--out DIR] [--threads N]``.
Every artifact embeds the resolved config and seed so a run can be repeated
without the original file. Exit codes: 0 success, 1 runtime failure,
2 parse or schema error.
"""

from __future__ import annotations

import argparse
import ast
import csv
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .certifier import INEQUALITIES, certify_region
from .comparison import ComparisonParams, default_params
from .core import Ball, Box, ValueField, build_grid_domain
from .operators import GameSpec
from .regularity import fit_c_prime, holder_report
from .simulate import PullAway, PullToward, Stationary, estimate_value, run_episode
from .solver import boundary_field, solve_dpp

COMMANDS = ("solve", "simulate", "certify", "holder")


class ConfigError(Exception):
    """Bad config file: parse failure or missing/invalid keys."""


# -- config parsing -----------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    values: dict          # raw strings by dotted key
    path: str

    def has(self, key: str) -> bool:
        return key in self.values

    def raw(self, key: str) -> str:
        try:
            return self.values[key]
        except KeyError:
            raise ConfigError(f"missing key: {key}") from None

    def text(self, key: str, default=None) -> str:
        if default is not None and key not in self.values:
            return default
        return self.raw(key)

    def num(self, key: str, default=None) -> float:
        if default is not None and key not in self.values:
            return float(default)
        try:
            return float(self.raw(key))
        except ValueError:
            raise ConfigError(f"key {key} is not a number: "
                              f"{self.values[key]!r}") from None

    def integer(self, key: str, default=None) -> int:
        v = self.num(key, default)
        if v != int(v):
            raise ConfigError(f"key {key} must be an integer")
        return int(v)

    def point(self, key: str, default=None) -> np.ndarray:
        if default is not None and key not in self.values:
            return np.asarray(default, dtype=float)
        parts = self.raw(key).split(",")
        try:
            return np.asarray([float(p) for p in parts])
        except ValueError:
            raise ConfigError(f"key {key} is not a point: "
                              f"{self.values[key]!r}") from None

    def flag(self, key: str, default: bool = False) -> bool:
        if key not in self.values:
            return default
        v = self.values[key].lower()
        if v in ("true", "yes", "1", "on"):
            return True
        if v in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"key {key} is not a boolean: {self.values[key]!r}")


def parse_config(path: str) -> RunConfig:
    values: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, val = stripped.partition("=")
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key}")
        values[key] = val
    if "command" not in values:
        raise ConfigError("missing key: command")
    command = values["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; "
                          f"expected one of {', '.join(COMMANDS)}")
    return RunConfig(command, values, path)


# -- boundary expressions -------------------------------------------------------


_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.true_divide, ast.Pow: np.power}
_FUNCS = {"abs": np.abs, "sqrt": np.sqrt}


def compile_expression(text: str, n: int):
    """Vectorized boundary function from an arithmetic expression.

    Grammar: numbers, coordinates y1..yn, + - * / **, unary +-, abs(), sqrt().
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from None
    names = {f"y{i + 1}": i for i in range(n)}

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        elif isinstance(node, ast.Name) and node.id in names:
            pass
        elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
              and node.func.id in _FUNCS and len(node.args) == 1
              and not node.keywords):
            check(node.args[0])
        else:
            raise ConfigError(f"expression {text!r} uses an unsupported "
                              f"construct: {ast.dump(node)[:60]}")

    check(tree)

    def evaluate(node, pts):
        if isinstance(node, ast.Expression):
            return evaluate(node.body, pts)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](evaluate(node.left, pts),
                                          evaluate(node.right, pts))
        if isinstance(node, ast.UnaryOp):
            v = evaluate(node.operand, pts)
            return v if isinstance(node.op, ast.UAdd) else -v
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return pts[:, names[node.id]]
        return _FUNCS[node.func.id](evaluate(node.args[0], pts))

    def fn(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.broadcast_to(np.asarray(evaluate(tree, pts), dtype=float),
                               (len(pts),)).copy()

    return fn


def _preset(name: str, n: int):
    if name == "linear":
        return lambda pts: np.atleast_2d(np.asarray(pts, float))[:, 0].copy()
    if name == "cone":
        return lambda pts: np.linalg.norm(np.atleast_2d(np.asarray(pts, float)),
                                          axis=1)
    if name == "indicator-halfspace":
        return lambda pts: (np.atleast_2d(np.asarray(pts, float))[:, 0]
                            >= 0.0).astype(float)
    raise ConfigError(f"unknown boundary preset {name!r}; expected linear, "
                      "cone, or indicator-halfspace")


def boundary_function(cfg: RunConfig, n: int):
    if cfg.has("boundary.preset"):
        return _preset(cfg.raw("boundary.preset"), n)
    if cfg.has("boundary.expr"):
        return compile_expression(cfg.raw("boundary.expr"), n)
    raise ConfigError("missing key: boundary.expr (or boundary.preset)")


# -- shared builders ------------------------------------------------------------


def _shape(cfg: RunConfig):
    kind = cfg.raw("domain.shape")
    if kind == "disk":
        center = cfg.point("domain.center", default=(0.0, 0.0))
        return Ball(tuple(center), cfg.num("domain.radius"))
    if kind == "box":
        lo = cfg.point("domain.lo")
        hi = cfg.point("domain.hi")
        return Box(tuple(lo), tuple(hi))
    raise ConfigError(f"unknown domain.shape {kind!r}; expected disk or box")


def _game(cfg: RunConfig) -> GameSpec:
    kind = cfg.raw("game.kind")
    eps = cfg.num("game.epsilon")
    if kind == "tug_of_war":
        return GameSpec.tug_of_war(eps)
    if kind == "random_walk":
        return GameSpec.random_walk(eps)
    if kind == "space_dependent":
        return GameSpec.space_dependent(eps, cfg.num("game.alpha"))
    if kind == "directional":
        return GameSpec.directional(eps, cfg.num("game.alpha"))
    raise ConfigError(f"unknown game.kind {kind!r}")


def _strategy(cfg: RunConfig, key: str):
    text = cfg.raw(key)
    name, _, arg = text.partition(":")
    name = name.strip()
    if name == "stationary":
        return Stationary()
    target = [float(p) for p in arg.split(",")] if arg else None
    if target is None:
        raise ConfigError(f"key {key}: {name} needs a target point")
    if name == "pull_toward":
        return PullToward(target)
    if name == "pull_away":
        return PullAway(target)
    raise ConfigError(f"key {key}: unknown strategy {name!r}")


def _comparison_params(cfg: RunConfig) -> ComparisonParams:
    mode = cfg.text("cmp.mode", default="desk")
    n = cfg.integer("cmp.n", default=2)
    if not any(cfg.has(k) for k in ("cmp.delta", "cmp.C", "cmp.N",
                                    "cmp.epsilon")):
        return default_params(n, mode)
    base = default_params(n, "desk") if mode == "desk" else default_params(n, "strict")
    return ComparisonParams(
        n=n,
        delta=cfg.num("cmp.delta", default=base.delta),
        C=cfg.num("cmp.C", default=base.C),
        N=cfg.integer("cmp.N", default=base.N),
        epsilon=cfg.num("cmp.epsilon", default=base.epsilon),
        theta=cfg.num("cmp.theta", default=base.theta),
        mode=mode,
    )


def _resolved(cfg: RunConfig, seed: int, out: str) -> dict:
    resolved = dict(cfg.values)
    resolved["seed"] = repr(seed)
    resolved["out"] = out
    return resolved


def _write_json(path: str, payload: dict):
    with open(path, "w") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _float_cell(v: float) -> str:
    return repr(float(v))


# -- subcommand runners -----------------------------------------------------------


def _seed_of(cfg: RunConfig, override) -> int:
    if override is not None:
        return int(override)
    if cfg.command in ("simulate", "certify", "holder") or cfg.has("seed"):
        return cfg.integer("seed")
    return 0


def _run_solve(cfg: RunConfig, seed: int, out: str) -> dict:
    shape = _shape(cfg)
    spec = _game(cfg)
    domain = build_grid_domain(shape, cfg.num("domain.spacing"), spec.epsilon)
    F = boundary_function(cfg, domain.ndim)
    tol = cfg.num("solve.tol") if cfg.has("solve.tol") else None
    max_iter = cfg.integer("solve.max_iter", default=100_000)
    fld, diag = solve_dpp(domain, F, spec, tol=tol, max_iter=max_iter)
    field_path = os.path.join(out, "field.csv")
    with open(field_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(domain.ndim)] + ["value"])
        for p, v in zip(domain.points, fld.values):
            w.writerow([_float_cell(c) for c in p] + [_float_cell(v)])
    _write_json(os.path.join(out, "diagnostics.json"), {
        "config": _resolved(cfg, seed, out), "seed": seed,
        "iterations": diag.iterations, "final_residual": diag.final_residual,
        "converged": diag.converged, "tol": diag.tol,
        "n_interior": domain.n_interior, "n_strip": domain.n_strip,
    })
    return {"field": field_path, "converged": diag.converged}


def _run_simulate(cfg: RunConfig, seed: int, out: str) -> dict:
    spec = _game(cfg)
    x0 = cfg.point("simulate.x0")
    episodes = cfg.integer("simulate.episodes")
    max_steps = cfg.integer("simulate.max_steps", default=10_000)
    shape = _shape(cfg)
    F = boundary_function(cfg, len(x0))
    if cfg.flag("simulate.grid"):
        domain = build_grid_domain(shape, cfg.num("domain.spacing"),
                                   spec.epsilon)
        payoff = ValueField(domain, boundary_field(domain, F))
        where = domain
    else:
        payoff = F
        where = shape
    if spec.kind == "random_walk":
        sI = sII = None
    else:
        sI = _strategy(cfg, "simulate.strategy_I")
        sII = _strategy(cfg, "simulate.strategy_II")
    mean, half, rate = estimate_value(spec, sI, sII, x0, where, payoff,
                                      episodes, seed, max_steps=max_steps)
    artifacts = {}
    if cfg.flag("simulate.episode_csv"):
        ep_path = os.path.join(out, "episodes.csv")
        run_episode(spec, sI, sII, x0, where, payoff, seed,
                    max_steps=max_steps, log=ep_path)
        artifacts["episodes"] = ep_path
    _write_json(os.path.join(out, "outcome.json"), {
        "config": _resolved(cfg, seed, out), "seed": seed,
        "mean": mean if math.isfinite(mean) else repr(mean),
        "ci_half_width": half if math.isfinite(half) else repr(half),
        "truncation_rate": rate, "episodes": episodes,
    })
    return {"mean": mean, **artifacts}


def _run_certify(cfg: RunConfig, seed: int, out: str) -> dict:
    params = _comparison_params(cfg)
    names = tuple(s.strip() for s in
                  cfg.text("certify.inequalities", default="I,II,III,T").split(","))
    bad = [s for s in names if s not in INEQUALITIES]
    if bad:
        raise ConfigError(f"certify.inequalities: unknown entries {bad}")
    reports = certify_region(
        params, names, n_samples=cfg.integer("certify.samples", default=1000),
        seed=seed, alpha=cfg.num("certify.alpha", default=0.5))
    paths = {}
    for rep in reports:
        payload = json.loads(rep.to_json())
        payload["config"] = _resolved(cfg, seed, out)
        path = os.path.join(out, f"certificate_{rep.inequality}.json")
        _write_json(path, payload)
        paths[rep.inequality] = path
    return paths


def _run_holder(cfg: RunConfig, seed: int, out: str) -> dict:
    shape = _shape(cfg)
    spec = _game(cfg)
    domain = build_grid_domain(shape, cfg.num("domain.spacing"), spec.epsilon)
    F = boundary_function(cfg, domain.ndim)
    tol = cfg.num("solve.tol") if cfg.has("solve.tol") else None
    fld, _ = solve_dpp(domain, F, spec, tol=tol,
                       max_iter=cfg.integer("solve.max_iter", default=100_000))
    R = cfg.num("holder.R")
    center = cfg.point("holder.center", default=tuple([0.0] * domain.ndim))
    delta = cfg.num("holder.delta")
    pairs = cfg.integer("holder.pairs", default=2000)
    cp_text = cfg.text("holder.c_prime", default="fit")
    if cp_text == "fit":
        c_prime, _ = fit_c_prime(fld, delta, spec.epsilon, R, center, pairs,
                                 seed)
    else:
        c_prime = float(cp_text)
    rep = holder_report(fld, delta, spec.epsilon, R, center, c_prime, pairs,
                        seed)
    payload = json.loads(rep.to_json())
    del payload["quotients"]
    payload["config"] = _resolved(cfg, seed, out)
    payload["seed"] = seed
    _write_json(os.path.join(out, "holder.json"), payload)
    q_path = os.path.join(out, "quotients.csv")
    with open(q_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dist", "absdiff", "quotient"])
        for d, a, q in rep.quotients:
            w.writerow([_float_cell(d), _float_cell(a), _float_cell(q)])
    return {"K": rep.K, "c_prime": c_prime}


def run_config(path: str, seed=None, out=None) -> int:
    """Execute one config file. Returns the process exit status."""
    try:
        cfg = parse_config(path)
        out_dir = out if out is not None else cfg.text("out", default="artifacts")
        the_seed = _seed_of(cfg, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        os.makedirs(out_dir, exist_ok=True)
        runner = {"solve": _run_solve, "simulate": _run_simulate,
                  "certify": _run_certify, "holder": _run_holder}[cfg.command]
        runner(cfg, the_seed, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # runtime failure: report, don't traceback-spam
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dpplab",
        description="Game-step averaging operators: solve, simulate, "
                    "certify, and smoothness reports from one config file.")
    sub = parser.add_subparsers(dest="verb", required=True)
    runp = sub.add_parser("run", help="execute a config file")
    runp.add_argument("config", help="path to a key = value config")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config's seed")
    runp.add_argument("--out", default=None,
                      help="override the output directory")
    runp.add_argument("--threads", type=int, default=None,
                      help="cap numeric library threads (results do not "
                           "depend on it)")
    args = parser.parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    return run_config(args.config, seed=args.seed, out=args.out)


if __name__ == "__main__":
    sys.exit(main())
