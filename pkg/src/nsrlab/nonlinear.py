"""Environments, Gaussian policies with exact score functions, and moment bounds
for generic nonlinear systems.

Environments and policies are batched: states are arrays of shape (B, n),
actions (B, m).  A policy exposes its mean ``mean(S)``, the mean-parameter
score ``score_theta(S, eps) = J(s)^T Sigma^{-1} eps`` per row, and the
log-std vector ``ell``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core_math import spectral_norm
from .gaussian_moments import gaussian_norm4, qscore_norm4
from .lqg.system import GaussianLinearPolicy, LinearSystem
from .poly.system import PolyPolicyParams, PolySystem
from .types import DivergedRollout

# environments


class LinearEnv:
    def __init__(self, sys: LinearSystem):
        self.sys = sys
        self.state_dim, self.action_dim = sys.n, sys.m
        w, V = np.linalg.eigh(sys.Sigma0)
        self._root0 = V * np.sqrt(np.clip(w, 0.0, None))

    def step(self, S, A):
        return S @ self.sys.A.T + A @ self.sys.B.T

    def reward(self, S_next, A):
        return -(np.einsum("bi,ij,bj->b", S_next, self.sys.Qs, S_next)
                 + np.einsum("bi,ij,bj->b", A, self.sys.Qa, A))

    def initial(self, Z):
        return Z @ self._root0.T


class PolyEnv:
    def __init__(self, sys: PolySystem):
        self.sys = sys
        self.state_dim, self.action_dim = sys.n, sys.m

    def step(self, S, A):
        X = np.hstack([S, A])
        return np.stack([p.evaluate(X) for p in self.sys.transition], axis=1)

    def reward(self, S_next, A):
        return self.sys.reward.evaluate(np.hstack([S_next, A]))

    def initial(self, Z):
        return Z * np.sqrt(self.sys.sigma0)[None, :]


@dataclass(frozen=True)
class PendulumEnv:
    """Torque-driven pendulum measured from upright, state (angle, rate).

    Semi-implicit Euler with angle wrapped to [-pi, pi] and rate clipped.
    """

    g: float = 10.0
    mass: float = 1.0
    length: float = 1.0
    dt: float = 0.05
    max_speed: float = 8.0
    init_std: float = 0.7
    state_dim: int = 2
    action_dim: int = 1

    def step(self, S, A):
        th, thd = S[:, 0], S[:, 1]
        u = A[:, 0]
        acc = self.g / self.length * np.sin(th) + u / (self.mass * self.length**2)
        thd = np.clip(thd + self.dt * acc, -self.max_speed, self.max_speed)
        th = np.mod(th + self.dt * thd + np.pi, 2.0 * np.pi) - np.pi
        return np.stack([th, thd], axis=1)

    def reward(self, S_next, A):
        return -(S_next[:, 0] ** 2 + 0.1 * S_next[:, 1] ** 2 + 0.001 * A[:, 0] ** 2)

    def initial(self, Z):
        return self.init_std * Z


class ZeroRewardEnv:
    """Wraps an environment and reports zero reward (degenerate oracle case)."""

    def __init__(self, env):
        self.env = env
        self.state_dim, self.action_dim = env.state_dim, env.action_dim

    def step(self, S, A):
        return self.env.step(S, A)

    def reward(self, S_next, A):
        return np.zeros(S_next.shape[0])

    def initial(self, Z):
        return self.env.initial(Z)


# policies


class LinearPolicy:
    """Batched view of ``GaussianLinearPolicy``; parameters are K row-major."""

    def __init__(self, pol: GaussianLinearPolicy):
        self.pol = pol
        self.ell = pol.ell
        self.num_params = pol.K.size

    def mean(self, S):
        return S @ self.pol.K.T

    def score_theta(self, S, eps):
        v = eps / np.exp(2.0 * self.ell)[None, :]
        return (v[:, :, None] * S[:, None, :]).reshape(len(S), -1)

    def jac_fro_sq(self, S):
        return self.pol.K.shape[0] * np.sum(S * S, axis=1)


class PolyFeaturePolicy:
    """Batched ``Phi(s)^T theta`` policy; parameters are theta row-major."""

    def __init__(self, sys: PolySystem, params: PolyPolicyParams):
        self.sys, self.params = sys, params
        self.ell = params.ell
        self.num_params = params.theta.size

    def _features(self, S):
        return np.stack([np.stack([f.evaluate(S) for f in row], axis=1) for row in self.sys.features], axis=1)

    def mean(self, S):
        return np.einsum("bkj,kj->bj", self._features(S), self.params.theta)

    def score_theta(self, S, eps):
        v = eps / np.exp(2.0 * self.ell)[None, :]
        return (self._features(S) * v[:, None, :]).reshape(len(S), -1)

    def jac_fro_sq(self, S):
        return np.sum(self._features(S) ** 2, axis=(1, 2))


@dataclass
class MlpPolicy:
    """tanh MLP mean with identity output layer and diagonal log-std ``ell``.

    Flat parameter order: for each layer, the weight matrix (row-major,
    shape fan_out x fan_in) followed by its bias.
    """

    layer_dims: tuple
    params: np.ndarray
    ell: np.ndarray = field(default=None)

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if len(self.layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        self.params = np.asarray(self.params, dtype=float).ravel()
        if self.params.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {self.params.size}")
        m = self.layer_dims[-1]
        self.ell = np.zeros(m) if self.ell is None else np.atleast_1d(np.asarray(self.ell, dtype=float))
        if self.ell.shape != (m,):
            raise ValueError("ell must have one entry per output")

    @property
    def num_params(self) -> int:
        d = self.layer_dims
        return sum((d[i] + 1) * d[i + 1] for i in range(len(d) - 1))

    @classmethod
    def init(cls, layer_dims, seed: int = 0, scale: float = 1.0, ell=None) -> "MlpPolicy":
        rng = np.random.default_rng(seed)
        parts = []
        for fi, fo in zip(layer_dims[:-1], layer_dims[1:]):
            parts.append(rng.normal(size=fo * fi) * scale / np.sqrt(fi))
            parts.append(np.zeros(fo))
        return cls(tuple(layer_dims), np.concatenate(parts), ell)

    @classmethod
    def from_linear(cls, K, ell) -> "MlpPolicy":
        """Single affine layer ``K s`` with zero bias."""
        K = np.atleast_2d(np.asarray(K, dtype=float))
        m, n = K.shape
        return cls((n, m), np.concatenate([K.ravel(), np.zeros(m)]), ell)

    def layers(self):
        out, k = [], 0
        d = self.layer_dims
        for fi, fo in zip(d[:-1], d[1:]):
            W = self.params[k : k + fi * fo].reshape(fo, fi)
            k += fi * fo
            b = self.params[k : k + fo]
            k += fo
            out.append((W, b))
        return out

    def _forward(self, S):
        S = np.atleast_2d(np.asarray(S, dtype=float))
        acts = [S]
        layers = self.layers()
        h = S
        for i, (W, b) in enumerate(layers):
            z = h @ W.T + b
            h = np.tanh(z) if i < len(layers) - 1 else z
            acts.append(h)
        return acts

    def mean(self, S):
        return self._forward(S)[-1]

    def forward(self, s):
        return self.mean(np.atleast_2d(s))[0]

    def vjp(self, S, V):
        """Rows of ``J(s)^T v`` for each (s, v) pair: shape (B, num_params)."""
        acts = self._forward(S)
        layers = self.layers()
        grads = []
        delta = np.asarray(V, dtype=float)
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            h_in = acts[i]
            grads.append(np.concatenate([(delta[:, :, None] * h_in[:, None, :]).reshape(len(h_in), -1), delta], axis=1))
            if i:
                delta = (delta @ W) * (1.0 - acts[i] ** 2)
        return np.concatenate(grads[::-1], axis=1)

    def param_jacobian(self, s) -> np.ndarray:
        """Exact m x p Jacobian of the mean at one state."""
        s = np.atleast_2d(np.asarray(s, dtype=float))
        m = self.layer_dims[-1]
        return np.vstack([self.vjp(s, np.eye(m)[i : i + 1]) for i in range(m)])

    def score_theta(self, S, eps):
        return self.vjp(S, eps / np.exp(2.0 * self.ell)[None, :])

    def jac_fro_sq(self, S):
        m = self.layer_dims[-1]
        B = len(S)
        total = np.zeros(B)
        for i in range(m):
            V = np.zeros((B, m))
            V[:, i] = 1.0
            total += np.sum(self.vjp(S, V) ** 2, axis=1)
        return total

    def to_json(self) -> dict:
        return {"layer_dims": list(self.layer_dims), "params": [float(x) for x in self.params],
                "ell": [float(x) for x in self.ell]}

    @classmethod
    def from_json(cls, obj) -> "MlpPolicy":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple(obj["layer_dims"]), np.asarray(obj["params"]), np.asarray(obj["ell"]))


def mlp_forward(pol: MlpPolicy, s) -> np.ndarray:
    return pol.forward(s)


def mlp_param_jacobian(pol: MlpPolicy, s) -> np.ndarray:
    return pol.param_jacobian(s)


# sampling and bounds


def reinforce_sample(env, pol, gamma: float, T: int, rng, index: int = 0):
    """One estimator sample ``(G_theta, G_ell, return)`` from rollout ``index`` of ``rng``."""
    from .mc import simulate

    out = simulate(env, pol, T, gamma, rng, np.array([index]))
    return out.G_theta[0], out.G_ell[0], float(out.R[0])


@dataclass(frozen=True)
class BoundReport:
    bound_theta: float
    bound_ell: float
    mc_second_moment_theta: float
    mc_second_moment_theta_se: float
    mc_second_moment_ell: float
    mc_second_moment_ell_se: float
    inputs_summary: dict

    def to_dict(self) -> dict:
        return {
            "bound_theta": self.bound_theta,
            "bound_ell": self.bound_ell,
            "mc_second_moment_theta": self.mc_second_moment_theta,
            "mc_second_moment_theta_se": self.mc_second_moment_theta_se,
            "mc_second_moment_ell": self.mc_second_moment_ell,
            "mc_second_moment_ell_se": self.mc_second_moment_ell_se,
            "inputs": self.inputs_summary,
        }


def assemble_generic_bounds(T: int, sigma2, R4: float, J4: np.ndarray) -> tuple[float, float]:
    """Bounds on E||G_theta||^2 and E||G_ell||^2 from return and Jacobian fourth moments.

    ``J4[t]`` is E||J(s_t)||_F^4; ``R4`` is E[R^4].  Uses the exact Gaussian
    constants E||eps||^4 and E||q||^4.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    m = len(sigma2)
    inv_norm = spectral_norm(np.diag(1.0 / sigma2))
    rootR4 = np.sqrt(max(R4, 0.0))
    b_theta = T * inv_norm**2 * rootR4 * np.sqrt(gaussian_norm4(sigma2)) * float(np.sum(np.sqrt(np.clip(J4, 0.0, None))))
    # sqrt(E||q||^4) = 2 sqrt(m(m+14))
    b_ell = T**2 * np.sqrt(qscore_norm4(m)) * rootR4
    return float(b_theta), float(b_ell)


def generic_variance_bound(env, pol, gamma: float, T: int, cfg, s0: Optional[np.ndarray] = None,
                   average_s0: int = 0) -> BoundReport:
    """Generic-system bounds on the conditional estimator second moments.

    Moments are estimated by Monte Carlo with the initial state held at
    ``s0`` (zero by default).  With ``average_s0 > 0`` that many initial
    states are drawn and the per-state bounds and moments are averaged.
    """
    from .mc import rollout_statistics

    if cfg.n_rollouts < 10_000:
        raise ValueError("n_rollouts must be at least 1e4 for the bound")
    if average_s0 > 0:
        from .rng import CounterRNG

        Z = CounterRNG(cfg.seed, 0x5EED).normals(np.arange(average_s0), 0, env.state_dim)
        starts = env.initial(Z)
    else:
        starts = np.zeros((1, env.state_dim)) if s0 is None else np.atleast_2d(s0)

    reps = []
    for k, start in enumerate(starts):
        stats = rollout_statistics(env, pol, T, gamma, cfg, s0=start, stream=k)
        sig = np.exp(2.0 * pol.ell)
        bt, bl = assemble_generic_bounds(T, sig, stats["R4"], stats["J4"])
        reps.append((bt, bl, stats))
    bt = float(np.mean([r[0] for r in reps]))
    bl = float(np.mean([r[1] for r in reps]))
    st = [r[2] for r in reps]
    k = len(st)
    mt = float(np.mean([s["m2_theta"] for s in st]))
    ml = float(np.mean([s["m2_ell"] for s in st]))
    set_ = float(np.sqrt(np.sum([s["m2_theta_se"] ** 2 for s in st])) / k)
    sel = float(np.sqrt(np.sum([s["m2_ell_se"] ** 2 for s in st])) / k)
    summary = {
        "T": T,
        "m": len(pol.ell),
        "sigma2": [float(v) for v in np.exp(2.0 * pol.ell)],
        "R4": [s["R4"] for s in st],
        "R4_se": [s["R4_se"] for s in st],
        "J4": [s["J4"].tolist() for s in st],
        "num_initial_states": k,
    }
    return BoundReport(bt, bl, mt, set_, ml, sel, summary)


theorem8_bound = generic_variance_bound  # name fixed by the public interface


def _guard_finite(S, step: int):
    if not np.all(np.isfinite(S)):
        raise DivergedRollout(step)
