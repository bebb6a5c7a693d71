"""Command-line entry point: ``nsrlab <command> ...``.

Exit codes: 0 ok, 1 validation failure, 2 config error, 3 degenerate
gradient, 4 overflow, 5 policy collapse.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .lqg import GaussianLinearPolicy, LinearSystem, default_double_integrator_policy, joint_second_moments, lift
from .lqg import multi_step_mean_grads, nsr as lqg_nsr, rotation_family
from .lqg.system import BUILTIN_SYSTEMS
from .mc import MCConfig
from .nonlinear import LinearEnv, MlpPolicy, PendulumEnv, PolyEnv, generic_variance_bound
from .optimize import (
    LqgProblem,
    NonlinearProblem,
    OptimizerConfig,
    PolyProblem,
    fmt,
    grid_csv,
    nsr_grid,
    run,
    sigma_grid,
    trajectory_csv,
)
from .poly import PolyPolicyParams, PolySystem, poly_nsr
from .poly.system import BUILTIN_POLY_SYSTEMS
from .types import DegreeCapExceeded, GradientTooSmall
from .validate import SUITES, BudgetError, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GRADIENT, EXIT_OVERFLOW, EXIT_COLLAPSE = 0, 1, 2, 3, 4, 5
BUILTINS = sorted(BUILTIN_SYSTEMS) + sorted(BUILTIN_POLY_SYSTEMS) + ["pendulum"]


class ConfigError(Exception):
    pass


# config ingestion


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def load_problem_system(spec: str):
    """Return ``(kind, system)`` with kind in {linear, poly, pendulum}."""
    if spec == "pendulum":
        return "pendulum", PendulumEnv()
    if spec in BUILTIN_SYSTEMS:
        return "linear", BUILTIN_SYSTEMS[spec]()
    if spec in BUILTIN_POLY_SYSTEMS:
        return "poly", BUILTIN_POLY_SYSTEMS[spec]()
    kind, _, path = spec.partition(":")
    try:
        if kind == "linear" and path:
            return "linear", LinearSystem.from_json(_read_json(path))
        if kind == "poly" and path:
            return "poly", PolySystem.from_json(_read_json(path))
        if Path(spec).exists():
            obj = _read_json(spec)
            return ("linear", LinearSystem.from_json(obj)) if "A" in obj else ("poly", PolySystem.from_json(obj))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid system config {spec}: {exc}") from exc
    raise ConfigError(f"unknown system '{spec}'; built-ins: {', '.join(BUILTINS)}")


def load_policy(spec: str, kind: str, system):
    if kind == "pendulum":
        if spec in (None, "default"):
            return None
        try:
            return MlpPolicy.from_json(_read_json(spec))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid MLP policy {spec}: {exc}") from exc
    if spec in (None, "default"):
        if kind == "linear":
            if system.n == 2 and system.m == 1:
                return default_double_integrator_policy()
            return GaussianLinearPolicy(K=np.zeros((system.m, system.n)), ell=np.zeros(system.m))
        return system.default_params()
    obj = _read_json(spec)
    try:
        if kind == "linear":
            return GaussianLinearPolicy.from_json(obj)
        return PolyPolicyParams(theta=obj["theta"], ell=obj["ell"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid policy {spec}: {exc}") from exc


def _override(kind, system, T=None, gamma=None):
    if kind == "pendulum" or (T is None and gamma is None):
        return system
    kw = {}
    if T is not None:
        kw["horizon_T"] = T
    if gamma is not None:
        kw["gamma"] = gamma
    if kind == "linear":
        return system.with_(**kw)
    obj = system.to_json()
    obj.update({"T": T} if T is not None else {})
    obj.update({"gamma": gamma} if gamma is not None else {})
    return PolySystem.from_json(obj)


# manifests


def content_hash(config: dict, inputs: list[str]) -> str:
    """Git-style blob hash over the resolved config and every input file."""
    payload = json.dumps(config, sort_keys=True).encode()
    for path in inputs:
        data = Path(path).read_bytes()
        payload += f"blob {len(data)}\0".encode() + data
    return hashlib.sha1(f"blob {len(payload)}\0".encode() + payload).hexdigest()


def write_output(out: Path, stem: str, body: str, command: str, config: dict, inputs: list[str],
                 seed, started: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ext = ".json" if body.lstrip().startswith("{") else ".csv"
    (out / f"{stem}{ext}").write_text(body)
    manifest = {
        "command": command,
        "config": config,
        "hash": content_hash(config, inputs),
        "output": f"{stem}{ext}",
        "seed": seed,
        "version": __version__,
        "wall_time": time.perf_counter() - started,
    }
    (out / f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _input_files(*specs) -> list[str]:
    files = []
    for s in specs:
        if not s:
            continue
        path = s.partition(":")[2] if s.startswith(("linear:", "poly:")) else s
        if Path(path).is_file():
            files.append(path)
    return files


# commands


def _parse_grid(text: str):
    parts = text.split(",")
    if len(parts) != 5:
        raise ConfigError("--grid expects axis1,axis2,min,max,steps")
    a1, a2 = parts[0], parts[1]
    try:
        lo, hi, steps = float(parts[2]), float(parts[3]), int(parts[4])
    except ValueError as exc:
        raise ConfigError(f"bad --grid numbers: {exc}") from exc
    if steps < 1 or not lo <= hi:
        raise ConfigError("--grid needs steps >= 1 and min <= max")
    return a1, a2, lo, hi, steps


def cmd_nsr(args) -> int:
    started = time.perf_counter()
    kind, system = load_problem_system(args.system)
    if kind == "pendulum":
        raise ConfigError("exact NSR needs a linear or polynomial system")
    system = _override(kind, system, args.T, args.gamma)
    pol = load_policy(args.policy, kind, system)
    config = {"system": args.system, "policy": args.policy or "default", "T": args.T, "gamma": args.gamma,
              "grid": args.grid, "log": args.log}
    inputs = _input_files(args.system, args.policy)
    out = Path(args.out)
    if args.grid:
        a1, a2, lo, hi, steps = _parse_grid(args.grid)
        if (a1, a2) == ("sigma0", "sigma"):
            if kind != "linear":
                raise ConfigError("the sigma0,sigma grid needs a linear system")
            vals = np.geomspace(lo, hi, steps) if args.log else np.linspace(lo, hi, steps)
            grid = sigma_grid(system, pol, vals, vals)
        else:
            try:
                i1, i2 = int(a1), int(a2)
            except ValueError as exc:
                raise ConfigError("grid axes are flat parameter indices or sigma0,sigma") from exc
            problem = LqgProblem(system, pol) if kind == "linear" else PolyProblem(system, pol)
            size = len(problem.initial())
            if not (0 <= i1 < size and 0 <= i2 < size) or i1 == i2:
                raise ConfigError(f"grid axes must be distinct indices in [0, {size})")
            grid = nsr_grid(problem, (i1, lo, hi, steps), (i2, lo, hi, steps), log=args.log)
        write_output(out, "nsr_grid", grid_csv(grid), "nsr", config, inputs, None, started)
        return EXIT_OK
    try:
        report = lqg_nsr(system, pol) if kind == "linear" else poly_nsr(system, pol)
    except GradientTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRADIENT
    body = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    write_output(out, "nsr_report", body, "nsr", config, inputs, None, started)
    print(body, end="")
    return EXIT_OK


def cmd_horizon_sweep(args) -> int:
    started = time.perf_counter()
    if args.system != "rotation":
        raise ConfigError("horizon-sweep supports the 'rotation' family (F = rho R(phi), B = [0;1], K = 0)")
    try:
        rhos = [float(r) for r in args.rho.split(",") if r.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --rho list: {exc}") from exc
    if not rhos or args.T_max < 1:
        raise ConfigError("need a nonempty --rho list and --T-max >= 1")
    rows = ["rho,T,variance,nsr"]
    code = EXIT_OK
    for rho in rhos:
        for T in range(1, args.T_max + 1):
            s, p = rotation_family(rho, phi=args.phi, T=T, gamma=args.gamma)
            with np.errstate(over="ignore", invalid="ignore"):
                mK, ml = joint_second_moments(lift(s, p))
                gK, gl = multi_step_mean_grads(s, p)
                gsq = float(np.sum(gK**2) + np.sum(gl**2))
                var = mK + ml - gsq
            if not (math.isfinite(var) and math.isfinite(gsq)):
                print(f"error: variance overflow at rho={rho}, T={T}", file=sys.stderr)
                code = EXIT_OVERFLOW
                break
            rows.append(f"{fmt(rho)},{T},{fmt(var)},{fmt(var / gsq) if gsq > 0 else 'nan'}")
    config = {"system": args.system, "rho": rhos, "T_max": args.T_max, "gamma": args.gamma, "phi": args.phi}
    write_output(Path(args.out), "horizon_sweep", "\n".join(rows) + "\n", "horizon-sweep", config, [], None,
                 started)
    return code


DEFAULT_LR = {"gd": 1e-3, "sgd": 1e-3, "adam": 3e-3}


def cmd_optimize(args) -> int:
    started = time.perf_counter()
    kind, system = load_problem_system(args.problem)
    system = _override(kind, system, args.T, args.gamma)
    pol = load_policy(args.policy, kind, system)
    if kind == "linear":
        problem = LqgProblem(system, pol)
    elif kind == "poly":
        problem = PolyProblem(system, pol)
    else:
        if pol is None:
            dims = (2, *[int(h) for h in args.hidden.split(",") if h], 1)
            pol = MlpPolicy.init(dims, seed=args.seed, ell=[math.log(args.sigma)])
        problem = NonlinearProblem(system, pol, args.T or 50, 1.0 if args.gamma is None else args.gamma)
    lr = args.lr if args.lr is not None else DEFAULT_LR[args.method]
    nsr_every = args.nsr_every or (10 if problem.exact else 50)
    try:
        cfg = OptimizerConfig(method=args.method, learning_rate=lr, iters=args.iters, batch_size=args.batch,
                              seed=args.seed, nsr_every=nsr_every, nsr_mc_rollouts=args.nsr_rollouts,
                              nsr_eval="exact" if problem.exact else "monte_carlo")
        result = run(problem, cfg, record_time=args.record_time)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    config = {"problem": args.problem, "policy": args.policy or "default", "method": args.method,
              "learning_rate": lr, "iters": args.iters, "batch_size": args.batch, "nsr_every": nsr_every,
              "T": args.T, "gamma": args.gamma, "hidden": args.hidden, "sigma": args.sigma,
              "nsr_rollouts": args.nsr_rollouts, "reason": result.reason}
    write_output(Path(args.out), "trajectory", trajectory_csv(result), "optimize", config,
                 _input_files(args.problem, args.policy), args.seed, started)
    if result.reason is not None:
        print(f"policy collapse: reason={result.reason} after {len(result)} records", file=sys.stderr)
        return EXIT_COLLAPSE
    return EXIT_OK


def cmd_bound(args) -> int:
    started = time.perf_counter()
    kind, system = load_problem_system(args.system)
    system = _override(kind, system, args.T, args.gamma)
    if kind == "linear":
        env = LinearEnv(system)
    elif kind == "poly":
        env = PolyEnv(system)
    else:
        env = system
    if args.policy not in (None, "default"):
        pol = MlpPolicy.from_json(_read_json(args.policy))
    else:
        dims = (env.state_dim, *[int(h) for h in args.hidden.split(",") if h], env.action_dim)
        pol = MlpPolicy.init(dims, seed=args.seed, ell=[math.log(args.sigma)] * env.action_dim)
    T = args.T or getattr(system, "horizon_T", 50)
    gamma = 1.0 if args.gamma is None else args.gamma
    try:
        rep = generic_variance_bound(env, pol, gamma, T, MCConfig(args.rollouts, seed=args.seed, horizon_T=T),
                             average_s0=args.average_s0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    body = json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n"
    config = {"system": args.system, "policy": args.policy or "default", "hidden": args.hidden,
              "sigma": args.sigma, "T": T, "gamma": gamma, "rollouts": args.rollouts, "average_s0": args.average_s0}
    write_output(Path(args.out), "bound_report", body, "bound", config, _input_files(args.system, args.policy),
                 args.seed, started)
    print(body, end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    budget = int(float(args.budget))
    try:
        results = run_suite(args.suite, budget=budget, seed=args.seed)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.id:>2}  {r.name:<{width}}  {r.seconds:7.2f}s  ({r.threshold})")
    machine = {"suite": args.suite, "budget": budget, "seed": args.seed,
               "criteria": [r.machine() for r in results], "all_passed": all(r.passed for r in results)}
    text = json.dumps(machine, indent=2, sort_keys=True) + "\n"
    if args.json:
        Path(args.json).parent.mkdir(parents=True, exist_ok=True)
        Path(args.json).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK if machine["all_passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsrlab", description="Exact and sampled REINFORCE gradient noise.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nsr", help="exact NSR at a point or on a grid")
    p.add_argument("--system", required=True, help=f"built-in ({', '.join(BUILTINS[:-1])}) or linear:/poly: path")
    p.add_argument("--policy", default="default", help="policy JSON or 'default'")
    p.add_argument("--T", type=int, default=None, help="override the horizon")
    p.add_argument("--gamma", type=float, default=None, help="override the discount (default 1.0)")
    p.add_argument("--grid", default=None, help="axis1,axis2,min,max,steps; axes are indices or sigma0,sigma")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nsr)

    p = sub.add_parser("horizon-sweep", help="exact variance against horizon for the rotation family")
    p.add_argument("--system", default="rotation")
    p.add_argument("--rho", required=True, help="comma-separated spectral radii")
    p.add_argument("--T-max", dest="T_max", type=int, default=60)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--phi", type=float, default=0.3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_horizon_sweep)

    p = sub.add_parser("optimize", help="GD / SGD / Adam trajectory with NSR annotations")
    p.add_argument("--problem", required=True)
    p.add_argument("--policy", default="default")
    p.add_argument("--method", choices=("gd", "sgd", "adam"), default="gd")
    p.add_argument("--lr", type=float, default=None, help="default 1e-3 (gd, sgd) or 3e-3 (adam)")
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nsr-every", dest="nsr_every", type=int, default=None)
    p.add_argument("--nsr-rollouts", dest="nsr_rollouts", type=int, default=20000)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None, help="default 1.0")
    p.add_argument("--hidden", default="16", help="MLP hidden widths for pendulum")
    p.add_argument("--sigma", type=float, default=0.3, help="initial MLP policy std")
    p.add_argument("--record-time", dest="record_time", action="store_true",
                   help="fill the wall_time column (breaks byte-identical reruns)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bound", help="generic-system variance bound vs Monte Carlo")
    p.add_argument("--system", default="pendulum")
    p.add_argument("--policy", default="default", help="MLP policy JSON or 'default'")
    p.add_argument("--hidden", default="16")
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--rollouts", type=int, default=100_000)
    p.add_argument("--average-s0", dest="average_s0", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("validate", help="run the acceptance battery")
    p.add_argument("--suite", choices=sorted(SUITES), default="all")
    p.add_argument("--budget", default="1e6", help="Monte Carlo samples per check (>= 1e5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", default=None, help="write machine JSON here instead of stdout")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegreeCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW


if __name__ == "__main__":
    sys.exit(main())
