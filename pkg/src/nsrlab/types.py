from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class GradientTooSmall(ValueError):
    """Mean gradient norm is below the reporting floor (stationary regime)."""


class DegreeCapExceeded(ValueError):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class DivergedRollout(FloatingPointError):
    def __init__(self, step: int, message: str = ""):
        super().__init__(message or f"non-finite state at step {step}")
        self.step = step


class NsrUndetermined(ValueError):
    """Monte Carlo mean gradient cannot be told apart from zero."""

    def __init__(self, message: str, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class NsrReport:
    """Mean gradient, second moments, variance and NSR of a REINFORCE estimator.

    ``grad_theta`` is the mean-parameter block (the gain ``K`` for linear
    policies), ``grad_ell`` the log-std block.  Second moments are Frobenius
    norms squared of the respective estimator blocks.
    """

    grad_theta: np.ndarray
    grad_ell: np.ndarray
    second_moment_theta: float
    second_moment_ell: float
    variance: float
    nsr: float
    grad_norm_sq: float
    method_tag: str = "exact"
    stderr: Optional[float] = None
    extras: dict = field(default_factory=dict)

    @property
    def variance_theta(self) -> float:
        return self.second_moment_theta - float(np.sum(self.grad_theta**2))

    @property
    def variance_ell(self) -> float:
        return self.second_moment_ell - float(np.sum(self.grad_ell**2))

    @property
    def nsr_theta(self) -> float:
        g = float(np.sum(self.grad_theta**2))
        return self.variance_theta / g if g > 0 else float("nan")

    @property
    def nsr_ell(self) -> float:
        g = float(np.sum(self.grad_ell**2))
        return self.variance_ell / g if g > 0 else float("nan")

    # the gain block is called K in the linear setting
    @property
    def grad_K(self) -> np.ndarray:
        return self.grad_theta

    @property
    def second_moment_K(self) -> float:
        return self.second_moment_theta

    def to_dict(self) -> dict:
        return {
            "method": self.method_tag,
            "grad_theta": np.asarray(self.grad_theta).tolist(),
            "grad_ell": np.asarray(self.grad_ell).tolist(),
            "second_moment_theta": self.second_moment_theta,
            "second_moment_ell": self.second_moment_ell,
            "variance": self.variance,
            "variance_theta": self.variance_theta,
            "variance_ell": self.variance_ell,
            "grad_norm_sq": self.grad_norm_sq,
            "nsr": self.nsr,
            "nsr_theta": self.nsr_theta,
            "nsr_ell": self.nsr_ell,
            "stderr": self.stderr,
        }


def assemble_report(grad_theta, grad_ell, m2_theta, m2_ell, grad_floor=1e-12, method_tag="exact", **extras):
    grad_theta = np.asarray(grad_theta, dtype=float)
    grad_ell = np.asarray(grad_ell, dtype=float)
    if grad_floor <= 0:
        raise ValueError("grad_floor must be positive")
    gsq = float(np.sum(grad_theta**2) + np.sum(grad_ell**2))
    if gsq < grad_floor:
        raise GradientTooSmall(f"||grad J||^2 = {gsq:.3e} below floor {grad_floor:.1e}")
    variance = float(m2_theta + m2_ell - gsq)
    return NsrReport(
        grad_theta=grad_theta,
        grad_ell=grad_ell,
        second_moment_theta=float(m2_theta),
        second_moment_ell=float(m2_ell),
        variance=variance,
        nsr=variance / gsq,
        grad_norm_sq=gsq,
        method_tag=method_tag,
        extras=dict(extras),
    )
