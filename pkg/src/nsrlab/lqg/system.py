from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core_math import DimensionError, as_mat, check_psd, mat_from_json, mat_to_json


@dataclass(frozen=True)
class LinearSystem:
    """Linear dynamics ``s' = A s + B a`` with reward ``-(s'^T Qs s' + a^T Qa a)``."""

    A: np.ndarray
    B: np.ndarray
    Qs: np.ndarray
    Qa: np.ndarray
    gamma: float = 1.0
    horizon_T: int = 1
    Sigma0: np.ndarray | None = None

    def __post_init__(self):
        A, B = as_mat(self.A), as_mat(self.B)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got {B.shape}")
        m = B.shape[1]
        Qs = check_psd(self.Qs, "Qs")
        Qa = check_psd(self.Qa, "Qa")
        S0 = check_psd(np.eye(n) if self.Sigma0 is None else self.Sigma0, "Sigma0")
        if Qs.shape != (n, n) or Qa.shape != (m, m) or S0.shape != (n, n):
            raise DimensionError("cost/covariance shapes inconsistent with (A, B)")
        if not 0.0 < float(self.gamma) <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if int(self.horizon_T) < 1:
            raise ValueError("horizon_T must be at least 1")
        for name, val in (("A", A), ("B", B), ("Qs", Qs), ("Qa", Qa), ("Sigma0", S0)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "horizon_T", int(self.horizon_T))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def with_(self, **changes) -> "LinearSystem":
        kw = dict(A=self.A, B=self.B, Qs=self.Qs, Qa=self.Qa, gamma=self.gamma,
                  horizon_T=self.horizon_T, Sigma0=self.Sigma0)
        kw.update(changes)
        return LinearSystem(**kw)

    def to_json(self) -> dict:
        return {
            "A": mat_to_json(self.A),
            "B": mat_to_json(self.B),
            "Qs": mat_to_json(self.Qs),
            "Qa": mat_to_json(self.Qa),
            "gamma": self.gamma,
            "T": self.horizon_T,
            "Sigma0": mat_to_json(self.Sigma0),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearSystem":
        return cls(
            A=mat_from_json(obj["A"]),
            B=mat_from_json(obj["B"]),
            Qs=mat_from_json(obj["Qs"]),
            Qa=mat_from_json(obj["Qa"]),
            gamma=obj.get("gamma", 1.0),
            horizon_T=obj.get("T", 1),
            Sigma0=mat_from_json(obj["Sigma0"]) if "Sigma0" in obj else None,
        )


@dataclass(frozen=True)
class GaussianLinearPolicy:
    """``a ~ N(K s, diag(exp(2 ell)))``."""

    K: np.ndarray
    ell: np.ndarray

    def __post_init__(self):
        K = as_mat(self.K)
        ell = np.atleast_1d(np.asarray(self.ell, dtype=float))
        if ell.shape != (K.shape[0],):
            raise DimensionError(f"ell must have length {K.shape[0]}")
        if not np.all(np.isfinite(ell)):
            raise ValueError("ell must be finite")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "ell", ell)

    @property
    def sigma2(self) -> np.ndarray:
        return np.exp(2.0 * self.ell)

    @property
    def Sigma(self) -> np.ndarray:
        return np.diag(self.sigma2)

    def closed_loop(self, sys: LinearSystem) -> np.ndarray:
        return sys.A + sys.B @ self.K

    def flat(self) -> np.ndarray:
        return np.concatenate([self.K.ravel(), self.ell])

    @classmethod
    def from_flat(cls, x, m: int, n: int) -> "GaussianLinearPolicy":
        x = np.asarray(x, dtype=float)
        return cls(K=x[: m * n].reshape(m, n), ell=x[m * n : m * n + m])

    def to_json(self) -> dict:
        return {"K": mat_to_json(self.K), "ell": [float(v) for v in self.ell]}

    @classmethod
    def from_json(cls, obj: dict) -> "GaussianLinearPolicy":
        return cls(K=mat_from_json(obj["K"]), ell=np.asarray(obj["ell"], dtype=float))


def check_compatible(sys: LinearSystem, pol: GaussianLinearPolicy):
    if pol.K.shape != (sys.m, sys.n):
        raise DimensionError(f"K must be {sys.m}x{sys.n}, got {pol.K.shape}")


def double_integrator(h: float = 0.1, T: int = 1, gamma: float = 1.0, sigma0_sq: float = 1.0) -> LinearSystem:
    return LinearSystem(
        A=np.array([[1.0, h], [0.0, 1.0]]),
        B=np.array([[0.0], [h]]),
        Qs=np.eye(2),
        Qa=np.array([[0.01]]),
        gamma=gamma,
        horizon_T=T,
        Sigma0=sigma0_sq * np.eye(2),
    )


def default_double_integrator_policy(sigma: float = 0.5) -> GaussianLinearPolicy:
    return GaussianLinearPolicy(K=np.array([[-1.0, -3.0]]), ell=np.array([np.log(sigma)]))


def rotation_family(rho: float, phi: float = 0.3, T: int = 1, gamma: float = 0.9,
                    sigma_sq: float = 0.1, Qa: float = 0.01):
    """2-state / 1-input system with closed loop ``rho * R(phi)`` and K = 0.

    Returns ``(system, policy)``; the closed-loop spectral radius is exactly
    ``rho`` by construction.
    """
    c, s = np.cos(phi), np.sin(phi)
    A = rho * np.array([[c, -s], [s, c]])
    sys = LinearSystem(A=A, B=np.array([[0.0], [1.0]]), Qs=np.eye(2), Qa=np.array([[Qa]]),
                       gamma=gamma, horizon_T=T, Sigma0=np.eye(2))
    pol = GaussianLinearPolicy(K=np.zeros((1, 2)), ell=np.array([0.5 * np.log(sigma_sq)]))
    return sys, pol


BUILTIN_SYSTEMS = {"double-integrator": double_integrator}


def load_system(spec: str) -> LinearSystem:
    if spec in BUILTIN_SYSTEMS:
        return BUILTIN_SYSTEMS[spec]()
    p = Path(spec)
    if not p.exists():
        raise KeyError(spec)
    return LinearSystem.from_json(json.loads(p.read_text()))
