from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core_math import as_diag_cov
from .multipoly import MultiPoly


@dataclass(frozen=True)
class PolySystem:
    """Polynomial dynamics ``s' = P(s, a)`` with policy mean ``Phi(s)^T theta``.

    ``transition`` holds n polynomials and ``reward`` one polynomial, all in
    the (n + m) variables (state, action); the reward is applied to
    (s_{t+1}, a_t).  ``features[k][j]`` is a polynomial in the n state
    variables.  ``sigma0`` and ``sigma`` are variances; ``sigma`` is the
    default exploration variance used by ``default_params``.
    """

    state_dim: int
    action_dim: int
    transition: tuple
    reward: MultiPoly
    features: tuple
    horizon_T: int = 1
    gamma: float = 1.0
    sigma0: np.ndarray = field(default_factory=lambda: np.ones(1))
    sigma: np.ndarray = field(default_factory=lambda: np.ones(1))
    degree_cap: int = 64
    name: str = "custom"

    def __post_init__(self):
        n, m = self.state_dim, self.action_dim
        if len(self.transition) != n:
            raise ValueError(f"need {n} transition polynomials")
        for p in list(self.transition) + [self.reward]:
            if p.num_vars != n + m:
                raise ValueError("transition and reward must use n + m variables")
        feats = tuple(tuple(row) for row in self.features)
        if not feats or any(len(row) != m for row in feats):
            raise ValueError("features must be a d x m array of polynomials")
        for row in feats:
            for f in row:
                if f.num_vars != n:
                    raise ValueError("features must use the n state variables")
        object.__setattr__(self, "transition", tuple(self.transition))
        object.__setattr__(self, "features", feats)
        s0 = as_diag_cov(self.sigma0)
        sg = as_diag_cov(self.sigma)
        if s0.shape != (n,) or sg.shape != (m,):
            raise ValueError("variance vectors must have lengths n and m")
        object.__setattr__(self, "sigma0", s0)
        object.__setattr__(self, "sigma", sg)
        if int(self.horizon_T) < 0:
            raise ValueError("horizon_T must be nonnegative")
        if not 0.0 < float(self.gamma) <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.state_dim

    @property
    def m(self) -> int:
        return self.action_dim

    @property
    def d(self) -> int:
        return len(self.features)

    def with_(self, **changes) -> "PolySystem":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return PolySystem(**kw)

    def default_params(self) -> "PolyPolicyParams":
        return PolyPolicyParams(theta=np.zeros((self.d, self.m)), ell=0.5 * np.log(self.sigma))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "state_dim": self.n,
            "action_dim": self.m,
            "transition": [p.to_terms() for p in self.transition],
            "reward": self.reward.to_terms(),
            "features": [[f.to_terms() for f in row] for row in self.features],
            "T": self.horizon_T,
            "gamma": self.gamma,
            "sigma0": [float(v) for v in self.sigma0],
            "sigma": [float(v) for v in self.sigma],
            "degree_cap": self.degree_cap,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PolySystem":
        n, m = int(obj["state_dim"]), int(obj["action_dim"])
        return cls(
            state_dim=n,
            action_dim=m,
            transition=tuple(MultiPoly.from_terms(n + m, p) for p in obj["transition"]),
            reward=MultiPoly.from_terms(n + m, obj["reward"]),
            features=tuple(tuple(MultiPoly.from_terms(n, f) for f in row) for row in obj["features"]),
            horizon_T=int(obj.get("T", 1)),
            gamma=float(obj.get("gamma", 1.0)),
            sigma0=np.asarray(obj["sigma0"], dtype=float),
            sigma=np.asarray(obj["sigma"], dtype=float),
            degree_cap=int(obj.get("degree_cap", 64)),
            name=obj.get("name", "custom"),
        )


@dataclass(frozen=True)
class PolyPolicyParams:
    theta: np.ndarray
    ell: np.ndarray

    def __post_init__(self):
        th = np.atleast_2d(np.asarray(self.theta, dtype=float))
        ell = np.atleast_1d(np.asarray(self.ell, dtype=float))
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(ell))):
            raise ValueError("policy parameters must be finite")
        if th.shape[1] != len(ell):
            raise ValueError("theta must be d x m with m = len(ell)")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "ell", ell)

    @property
    def sigma2(self) -> np.ndarray:
        return np.exp(2.0 * self.ell)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta.ravel(), self.ell])

    @classmethod
    def from_flat(cls, x, d: int, m: int) -> "PolyPolicyParams":
        x = np.asarray(x, dtype=float)
        return cls(theta=x[: d * m].reshape(d, m), ell=x[d * m : d * m + m])


def _scalar_system(drift_power: int, reward_terms, feature_power: int, T: int, name: str,
                   h: float = 0.05, sigma0: float = 0.1, sigma: float = 0.09) -> PolySystem:
    """1-D system ``s' = s + h(-s^k + a)`` with features ``(s, s^j)``."""
    nv = 2  # (s, a)
    P = MultiPoly.from_terms(nv, [([1, 0], 1.0), ([drift_power, 0], -h), ([0, 1], h)])
    r = MultiPoly.from_terms(nv, reward_terms)
    feats = ((MultiPoly.variable(1, 0),), (MultiPoly.from_terms(1, [([feature_power], 1.0)]),))
    return PolySystem(state_dim=1, action_dim=1, transition=(P,), reward=r, features=feats,
                      horizon_T=T, gamma=1.0, sigma0=np.array([sigma0]), sigma=np.array([sigma]),
                      name=name)


def quadratic_1d(T: int = 6) -> PolySystem:
    return _scalar_system(2, [([2, 0], -1.0), ([0, 2], -1.0)], 2, T, "quadratic-1d")


def cubic_1d(T: int = 3) -> PolySystem:
    return _scalar_system(3, [([6, 0], -1.25), ([0, 2], -1.0)], 3, T, "cubic-1d")


def linear_as_poly(A, B, Qs, Qa, T: int, gamma: float, sigma0, sigma) -> PolySystem:
    """Degree-1 encoding of a linear system with features ``Phi(s) = s`` per action.

    ``theta`` is then the transpose of the gain K (d = n rows, m columns).
    """
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    Qs, Qa = np.atleast_2d(Qs), np.atleast_2d(Qa)
    n, m = B.shape
    nv = n + m
    trans = []
    for i in range(n):
        terms = []
        for j in range(n):
            e = [0] * nv
            e[j] = 1
            terms.append((e, A[i, j]))
        for j in range(m):
            e = [0] * nv
            e[n + j] = 1
            terms.append((e, B[i, j]))
        trans.append(MultiPoly.from_terms(nv, terms))
    terms = []
    for Q, off in ((Qs, 0), (Qa, n)):
        k = Q.shape[0]
        for i in range(k):
            for j in range(k):
                e = [0] * nv
                e[off + i] += 1
                e[off + j] += 1
                terms.append((e, -Q[i, j]))
    reward = MultiPoly.from_terms(nv, terms)
    # Phi[k][j] = s_k, so mean action j is sum_k s_k theta[k, j]
    feats = tuple(tuple(MultiPoly.variable(n, k) for _ in range(m)) for k in range(n))
    return PolySystem(state_dim=n, action_dim=m, transition=tuple(trans), reward=reward, features=feats,
                      horizon_T=T, gamma=gamma, sigma0=np.asarray(sigma0, dtype=float),
                      sigma=np.asarray(sigma, dtype=float), name="linear")


BUILTIN_POLY_SYSTEMS = {"quadratic-1d": quadratic_1d, "cubic-1d": cubic_1d}


def load_poly_system(spec: str) -> PolySystem:
    if spec in BUILTIN_POLY_SYSTEMS:
        return BUILTIN_POLY_SYSTEMS[spec]()
    p = Path(spec)
    if not p.exists():
        raise KeyError(spec)
    return PolySystem.from_json(json.loads(p.read_text()))
