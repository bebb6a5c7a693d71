"""GD / SGD / Adam ascent on the expected return with NSR logged along the way."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lqg.multi_step import multi_step_mean_grads, nsr as lqg_nsr, objective as lqg_objective
from .lqg.system import GaussianLinearPolicy, LinearSystem
from .mc import MCConfig, estimate_nsr, simulate
from .nonlinear import LinearEnv, LinearPolicy, MlpPolicy, PolyEnv, PolyFeaturePolicy
from .poly.exact import poly_nsr, poly_objective
from .poly.system import PolyPolicyParams, PolySystem
from .rng import CounterRNG
from .types import DivergedRollout, GradientTooSmall, NsrReport, NsrUndetermined

LOGSTD_FLOOR = -20.0
LOGSTD_CEIL = 0.5 * math.log(np.finfo(float).max)
METHODS = ("gd", "sgd", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "gd"
    learning_rate: float = 1e-3
    iters: int = 2000
    batch_size: int = 64
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    nsr_eval: str = "exact"
    nsr_every: int = 10
    nsr_mc_rollouts: int = 20000
    trajectory_id: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")
        if self.nsr_eval not in ("exact", "monte_carlo"):
            raise ValueError("nsr_eval must be exact or monte_carlo")
        if self.iters < 0 or self.batch_size < 1 or self.nsr_every < 1:
            raise ValueError("iters, batch_size and nsr_every must be positive")


@dataclass(frozen=True)
class TrajectoryRecord:
    iter: int
    params: np.ndarray
    objective: float
    grad_norm: float
    variance: float
    nsr: float
    wall_time: float


@dataclass
class RunResult:
    records: list = field(default_factory=list)
    reason: Optional[str] = None  # None when all iterations completed

    @property
    def collapsed(self) -> bool:
        return self.reason is not None

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


# problems: flat parameter vector = mean parameters (row-major) then ell


class LqgProblem:
    exact = True

    def __init__(self, sys: LinearSystem, pol: GaussianLinearPolicy, route: str = "joint"):
        self.sys, self.pol, self.route = sys, pol, route
        self.m, self.n = pol.K.shape

    def initial(self) -> np.ndarray:
        return self.pol.flat()

    def policy(self, x) -> GaussianLinearPolicy:
        return GaussianLinearPolicy.from_flat(x, self.m, self.n)

    def num_mean_params(self) -> int:
        return self.m * self.n

    def grad(self, x) -> np.ndarray:
        gK, gl = multi_step_mean_grads(self.sys, self.policy(x))
        return np.concatenate([gK.ravel(), gl])

    def objective(self, x) -> float:
        return lqg_objective(self.sys, self.policy(x))

    def report(self, x) -> NsrReport:
        return lqg_nsr(self.sys, self.policy(x), route=self.route)

    def sampler(self, x):
        pol = self.policy(x)
        return LinearEnv(self.sys), LinearPolicy(pol), self.sys.horizon_T, self.sys.gamma


class PolyProblem:
    exact = True

    def __init__(self, sys: PolySystem, params: PolyPolicyParams):
        self.sys, self.params = sys, params
        self.d, self.m = params.theta.shape

    def initial(self) -> np.ndarray:
        return self.params.flat()

    def policy(self, x) -> PolyPolicyParams:
        return PolyPolicyParams.from_flat(x, self.d, self.m)

    def num_mean_params(self) -> int:
        return self.d * self.m

    def report(self, x) -> NsrReport:
        return poly_nsr(self.sys, self.policy(x))

    def grad(self, x) -> np.ndarray:
        r = poly_nsr(self.sys, self.policy(x), grad_floor=1e-300)
        return np.concatenate([r.grad_theta.ravel(), r.grad_ell])

    def objective(self, x) -> float:
        return poly_objective(self.sys, self.policy(x))

    def sampler(self, x):
        return PolyEnv(self.sys), PolyFeaturePolicy(self.sys, self.policy(x)), self.sys.horizon_T, self.sys.gamma


class NonlinearProblem:
    exact = False

    def __init__(self, env, mlp: MlpPolicy, T: int, gamma: float = 1.0):
        self.env, self.mlp, self.T, self.gamma = env, mlp, T, gamma

    def initial(self) -> np.ndarray:
        return np.concatenate([self.mlp.params, self.mlp.ell])

    def policy(self, x) -> MlpPolicy:
        p = self.mlp.num_params
        return MlpPolicy(self.mlp.layer_dims, x[:p], x[p:])

    def num_mean_params(self) -> int:
        return self.mlp.num_params

    def sampler(self, x):
        return self.env, self.policy(x), self.T, self.gamma


def _stochastic_grad(problem, x, cfg: OptimizerConfig, it: int):
    env, pol, T, gamma = problem.sampler(x)
    rng = CounterRNG(cfg.seed, cfg.trajectory_id)
    idx = np.arange(it * cfg.batch_size, (it + 1) * cfg.batch_size)
    out = simulate(env, pol, T, gamma, rng, idx)
    g = np.hstack([out.G_theta, out.G_ell]).mean(axis=0)
    return g, float(out.R.mean())


def _annotate(problem, x, cfg: OptimizerConfig, it: int):
    """(variance, nsr) at ``x``; NaN when undetermined."""
    try:
        if cfg.nsr_eval == "exact" and problem.exact:
            r = problem.report(x)
            return r.variance, r.nsr
        env, pol, T, gamma = problem.sampler(x)
        mc = MCConfig(cfg.nsr_mc_rollouts, seed=cfg.seed, horizon_T=T, gamma=gamma,
                      stream=(cfg.trajectory_id << 32) + it + 1)
        est = estimate_nsr(env, pol, mc)
        return est.variance, est.nsr
    except NsrUndetermined as exc:
        return exc.estimate.variance, float("nan")
    except (GradientTooSmall, DivergedRollout, FloatingPointError, OverflowError):
        return float("nan"), float("nan")


def run(problem, cfg: OptimizerConfig, record_time: bool = False) -> RunResult:
    """Gradient ascent trajectory.  Collapse ends the run early with a reason tag."""
    if cfg.method == "gd" and not problem.exact:
        raise ValueError("GD needs a problem with exact gradients")
    x = problem.initial().astype(float).copy()
    n_mean = problem.num_mean_params()
    t0 = time.perf_counter()
    res = RunResult()
    m1 = np.zeros_like(x)
    m2 = np.zeros_like(x)

    def record(it, obj, gnorm, force_nsr=False):
        var = nsr = float("nan")
        if force_nsr or it % cfg.nsr_every == 0:
            var, nsr = _annotate(problem, x, cfg, it)
        wall = time.perf_counter() - t0 if record_time else 0.0
        res.records.append(TrajectoryRecord(it, x.copy(), float(obj), float(gnorm), float(var), float(nsr), wall))

    for it in range(cfg.iters + 1):
        try:
            with np.errstate(over="raise", invalid="raise"):
                if cfg.method == "gd":
                    g = problem.grad(x)
                    obj = problem.objective(x)
                else:
                    g, obj = _stochastic_grad(problem, x, cfg, it)
                    if problem.exact and cfg.nsr_eval == "exact":
                        obj = problem.objective(x)
        except (DivergedRollout, FloatingPointError, OverflowError):
            res.reason = "diverged_rollout"
            return res
        record(it, obj, np.linalg.norm(g), force_nsr=(it == cfg.iters))
        if it == cfg.iters:
            break
        if cfg.method == "adam":
            k = it + 1
            m1 = cfg.adam_beta1 * m1 + (1 - cfg.adam_beta1) * g
            m2 = cfg.adam_beta2 * m2 + (1 - cfg.adam_beta2) * g * g
            mhat = m1 / (1 - cfg.adam_beta1**k)
            vhat = m2 / (1 - cfg.adam_beta2**k)
            step = mhat / (np.sqrt(vhat) + cfg.adam_eps)
        else:
            step = g
        with np.errstate(over="ignore", invalid="ignore"):
            x = x + cfg.learning_rate * step
        # a log-std past ~354 makes the policy variance overflow
        if not np.all(np.isfinite(x)) or np.any(x[n_mean:] > LOGSTD_CEIL):
            res.reason = "params_nonfinite"
            return res
        if np.any(x[n_mean:] < LOGSTD_FLOOR):
            res.reason = "logstd_runaway"
            return res
    return res


@dataclass(frozen=True)
class GridCell:
    value1: float
    value2: float
    report: Optional[NsrReport]
    status: str


def nsr_grid(problem, axis1: Sequence, axis2: Sequence, log: bool = False) -> list[list[GridCell]]:
    """Exact NSR on a Cartesian grid over two flat-parameter coordinates.

    Each axis is ``(index, lo, hi, steps)``; other coordinates stay at the
    problem's initial values.  Cells with a vanishing gradient are marked.
    """
    base = problem.initial().astype(float)

    def values(lo, hi, steps):
        return np.geomspace(lo, hi, steps) if log else np.linspace(lo, hi, steps)

    i1, v1 = axis1[0], values(*axis1[1:])
    i2, v2 = axis2[0], values(*axis2[1:])
    grid = []
    for a in v1:
        row = []
        for b in v2:
            x = base.copy()
            x[i1], x[i2] = a, b
            row.append(_grid_cell(lambda: problem.report(x), a, b))
        grid.append(row)
    return grid


def _grid_cell(fn, a, b) -> GridCell:
    try:
        return GridCell(float(a), float(b), fn(), "ok")
    except GradientTooSmall:
        return GridCell(float(a), float(b), None, "gradient_too_small")


def sigma_grid(sys: LinearSystem, pol: GaussianLinearPolicy, sigma0_values, sigma_values) -> list[list[GridCell]]:
    """NSR over isotropic (sigma0, sigma) pairs with Sigma0 = sigma0^2 I, Sigma = sigma^2 I."""
    grid = []
    for s0 in sigma0_values:
        sys_i = sys.with_(Sigma0=s0**2 * np.eye(sys.n))
        row = []
        for s in sigma_values:
            p = GaussianLinearPolicy(K=pol.K, ell=np.full(sys.m, math.log(s)))
            row.append(_grid_cell(lambda: lqg_nsr(sys_i, p), s0, s))
        grid.append(row)
    return grid


def fmt(v: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(v))


def trajectory_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    p = len(result.records[0].params) if result.records else 0
    w.writerow(["iter", "objective", "grad_norm", "variance", "nsr"] + [f"param_{i}" for i in range(p)] + ["wall_time"])
    for r in result.records:
        w.writerow([r.iter, fmt(r.objective), fmt(r.grad_norm), fmt(r.variance), fmt(r.nsr)]
                   + [fmt(v) for v in r.params] + [fmt(r.wall_time)])
    return buf.getvalue()


def grid_csv(grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["axis1", "axis2", "nsr", "variance", "grad_norm_sq", "status"])
    for row in grid:
        for c in row:
            if c.report is None:
                w.writerow([fmt(c.value1), fmt(c.value2), "nan", "nan", "nan", c.status])
            else:
                w.writerow([fmt(c.value1), fmt(c.value2), fmt(c.report.nsr), fmt(c.report.variance),
                            fmt(c.report.grad_norm_sq), c.status])
    return buf.getvalue()
