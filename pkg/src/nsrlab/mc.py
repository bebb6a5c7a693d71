"""Monte Carlo rollout engine with batch-means standard errors.

Rollouts are split into ``batch_count`` contiguous batches; each batch is
simulated in fixed-size chunks and reduced in index order, so estimates are
bit-identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import CounterRNG
from .types import DivergedRollout, NsrUndetermined

CHUNK = 16384


@dataclass(frozen=True)
class MCConfig:
    n_rollouts: int
    seed: int = 0
    batch_count: int = 64
    horizon_T: int = 1
    gamma: float = 1.0
    stream: int = 0

    def __post_init__(self):
        if self.batch_count < 2:
            raise ValueError("batch_count must be at least 2")
        if self.n_rollouts < self.batch_count:
            raise ValueError("n_rollouts must be at least batch_count")
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be at least 1")


@dataclass
class SimOut:
    G_theta: np.ndarray
    G_ell: np.ndarray
    R: np.ndarray
    jac_sq: Optional[np.ndarray] = None  # (B, T) of ||J(s_t)||_F^2


def simulate(env, pol, T: int, gamma: float, rng: CounterRNG, idx: np.ndarray,
             s0: Optional[np.ndarray] = None, want_jac: bool = False) -> SimOut:
    """Roll out the rollouts numbered ``idx`` and return per-rollout estimator samples."""
    idx = np.asarray(idx)
    B = len(idx)
    n, m = env.state_dim, env.action_dim
    if s0 is None:
        S = env.initial(rng.normals(idx, 0, n))
    else:
        S = np.broadcast_to(np.asarray(s0, dtype=float), (B, n)).copy()
    sig2 = np.exp(2.0 * np.asarray(pol.ell, dtype=float))
    sig = np.sqrt(sig2)
    score_th = np.zeros((B, pol.num_params))
    score_l = np.zeros((B, m))
    R = np.zeros(B)
    jac = np.zeros((B, T)) if want_jac else None
    for t in range(T):
        eps = rng.normals(idx, t + 1, m) * sig[None, :]
        A = pol.mean(S) + eps
        score_th += pol.score_theta(S, eps)
        score_l += eps * eps / sig2[None, :] - 1.0
        if want_jac:
            jac[:, t] = pol.jac_fro_sq(S)
        S = env.step(S, A)
        if not np.all(np.isfinite(S)):
            raise DivergedRollout(t + 1)
        R += gamma**t * env.reward(S, A)
    if not np.all(np.isfinite(R)):
        raise DivergedRollout(T, "non-finite return")
    return SimOut(G_theta=R[:, None] * score_th, G_ell=R[:, None] * score_l, R=R, jac_sq=jac)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NSRLAB_THREADS", "1")))
    except ValueError:
        return 1


def batch_sums(cfg: MCConfig, stat_fn, sim_kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Per-batch sums of ``stat_fn(SimOut)`` rows and per-batch counts."""
    N, bc = cfg.n_rollouts, cfg.batch_count
    bounds = [b * N // bc for b in range(bc + 1)]
    rng = CounterRNG(cfg.seed, cfg.stream)

    def run(b):
        acc = None
        for lo in range(bounds[b], bounds[b + 1], CHUNK):
            hi = min(lo + CHUNK, bounds[b + 1])
            out = simulate(rng=rng, idx=np.arange(lo, hi), **sim_kwargs)
            s = np.sum(stat_fn(out), axis=0)
            acc = s if acc is None else acc + s
        return acc

    w = _workers()
    if w > 1:
        with ThreadPoolExecutor(w) as ex:
            sums = list(ex.map(run, range(bc)))
    else:
        sums = [run(b) for b in range(bc)]
    counts = np.diff(np.asarray(bounds)).astype(float)
    return np.vstack(sums), counts


def _mean_se(sums, counts, col_slice=slice(None)):
    means = sums[:, col_slice] / counts[:, None]
    total = sums[:, col_slice].sum(axis=0) / counts.sum()
    se = means.std(axis=0, ddof=1) / np.sqrt(len(counts))
    return total, se, means


@dataclass(frozen=True)
class MCNsrEstimate:
    mean_grad_theta: np.ndarray
    mean_grad_theta_se: np.ndarray
    mean_grad_ell: np.ndarray
    mean_grad_ell_se: np.ndarray
    second_moment_theta: float
    second_moment_theta_se: float
    second_moment_ell: float
    second_moment_ell_se: float
    variance: float
    variance_se: float
    grad_norm_sq: float
    nsr: float
    nsr_se: float
    objective: float
    objective_se: float
    n_rollouts: int
    extras: dict = field(default_factory=dict)

    @property
    def second_moment(self) -> float:
        return self.second_moment_theta + self.second_moment_ell

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        out["method"] = "monte_carlo"
        return out


def estimate_nsr(env, pol, cfg: MCConfig, s0: Optional[np.ndarray] = None) -> MCNsrEstimate:
    """Sample mean, second moments, variance and NSR of the estimator with SEs."""
    p, m = pol.num_params, env.action_dim

    def stats(out: SimOut):
        return np.hstack([
            out.G_theta,
            out.G_ell,
            np.sum(out.G_theta**2, axis=1, keepdims=True),
            np.sum(out.G_ell**2, axis=1, keepdims=True),
            out.R[:, None],
        ])

    sums, counts = batch_sums(cfg, stats, dict(env=env, pol=pol, T=cfg.horizon_T, gamma=cfg.gamma, s0=s0))
    N = counts.sum()
    mean, se, bm = _mean_se(sums, counts)
    g = mean[: p + m]
    g_b = bm[:, : p + m]
    m2 = mean[p + m] + mean[p + m + 1]
    m2_b = bm[:, p + m] + bm[:, p + m + 1]
    gsq = float(g @ g)
    k = len(counts)

    def lin_se(values):
        return float(np.std(values, ddof=1) / np.sqrt(k))

    # unbiased Frobenius variance; SEs by linearizing around the full-sample means
    corr = N / (N - 1.0)
    variance = corr * (m2 - gsq)
    var_se = corr * lin_se(m2_b - 2.0 * g_b @ g)
    gnorm = np.sqrt(gsq)
    gnorm_se = lin_se(g_b @ g / gnorm) if gnorm > 0 else float("inf")
    if gsq > 0:
        nsr = variance / gsq
        nsr_se = lin_se(corr * (m2_b / gsq - 2.0 * m2 * (g_b @ g) / gsq**2))
    else:
        nsr, nsr_se = float("nan"), float("nan")

    est = MCNsrEstimate(
        mean_grad_theta=g[:p], mean_grad_theta_se=se[:p],
        mean_grad_ell=g[p:], mean_grad_ell_se=se[p : p + m],
        second_moment_theta=float(mean[p + m]), second_moment_theta_se=float(se[p + m]),
        second_moment_ell=float(mean[p + m + 1]), second_moment_ell_se=float(se[p + m + 1]),
        variance=float(variance), variance_se=float(var_se), grad_norm_sq=gsq,
        nsr=float(nsr), nsr_se=float(nsr_se),
        objective=float(mean[-1]), objective_se=float(se[-1]), n_rollouts=int(N),
    )
    if not gnorm > 3.0 * gnorm_se:
        est = MCNsrEstimate(**{**est.__dict__, "nsr": float("nan"), "nsr_se": float("nan")})
        raise NsrUndetermined(
            f"mean-gradient norm {gnorm:.3e} not separated from zero (SE {gnorm_se:.3e})", estimate=est
        )
    return est


def estimate_return_moments(env, pol, cfg: MCConfig, order: int, s0: Optional[np.ndarray] = None):
    """Batch-means estimate ``(E[R^order], SE)``."""
    if order not in (1, 2, 4):
        raise ValueError("order must be 1, 2 or 4")
    sums, counts = batch_sums(cfg, lambda out: out.R[:, None] ** order,
                              dict(env=env, pol=pol, T=cfg.horizon_T, gamma=cfg.gamma, s0=s0))
    mean, se, _ = _mean_se(sums, counts)
    return float(mean[0]), float(se[0])


def rollout_statistics(env, pol, T: int, gamma: float, cfg: MCConfig, s0=None, stream: int = 0) -> dict:
    """Moments feeding the generic-system bound, all from one set of rollouts."""
    cfg = MCConfig(cfg.n_rollouts, cfg.seed, cfg.batch_count, T, gamma, cfg.stream * 1000003 + stream)

    def stats(out: SimOut):
        return np.hstack([
            out.R[:, None] ** 4,
            out.jac_sq**2,
            np.sum(out.G_theta**2, axis=1, keepdims=True),
            np.sum(out.G_ell**2, axis=1, keepdims=True),
        ])

    sums, counts = batch_sums(cfg, stats, dict(env=env, pol=pol, T=T, gamma=gamma, s0=s0, want_jac=True))
    mean, se, _ = _mean_se(sums, counts)
    return {
        "R4": float(mean[0]),
        "R4_se": float(se[0]),
        "J4": mean[1 : 1 + T],
        "m2_theta": float(mean[1 + T]),
        "m2_theta_se": float(se[1 + T]),
        "m2_ell": float(mean[2 + T]),
        "m2_ell_se": float(se[2 + T]),
    }
