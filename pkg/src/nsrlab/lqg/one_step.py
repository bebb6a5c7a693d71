"""Closed forms for the single-step (T = 1) linear-Gaussian problem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gaussian_moments import is_moment, w_times_quad_sq
from .system import GaussianLinearPolicy, LinearSystem, check_compatible


@dataclass(frozen=True)
class OneStepCore:
    Mss: np.ndarray
    Mse: np.ndarray
    Mee: np.ndarray


def one_step_core(sys: LinearSystem, pol: GaussianLinearPolicy) -> OneStepCore:
    check_compatible(sys, pol)
    F = pol.closed_loop(sys)
    K = pol.K
    return OneStepCore(
        Mss=F.T @ sys.Qs @ F + K.T @ sys.Qa @ K,
        Mse=F.T @ sys.Qs @ sys.B + K.T @ sys.Qa,
        Mee=sys.B.T @ sys.Qs @ sys.B + sys.Qa,
    )


def one_step_mean_grads(sys: LinearSystem, pol: GaussianLinearPolicy):
    """Exact (grad_K, grad_ell) of the one-step objective."""
    core = one_step_core(sys, pol)
    grad_K = -2.0 * core.Mse.T @ sys.Sigma0
    grad_ell = -2.0 * pol.sigma2 * np.diag(core.Mee)
    return grad_K, grad_ell


def one_step_second_moments(sys: LinearSystem, pol: GaussianLinearPolicy):
    """Exact ``(E||G_K||_F^2, E||G_ell||^2)`` for T = 1."""
    core = one_step_core(sys, pol)
    sig = pol.sigma2
    if np.any(sig <= 0):
        raise ValueError("policy covariance must be positive definite")
    n, m = sys.n, sys.m
    S0 = sys.Sigma0
    I_n = np.eye(n)
    Mss, Mse, Mee = core.Mss, core.Mse, core.Mee
    Sig_inv2 = np.diag(sig**-2)

    is_sig_inv2 = is_moment(sig, [Sig_inv2])
    U = Mse @ Mse.T
    V = Mse @ np.diag(sig) @ Mse.T

    e1 = is_sig_inv2 * is_moment(S0, [I_n, Mss, Mss])
    e2 = is_moment(S0, [I_n]) * is_moment(sig, [Sig_inv2, Mee, Mee])
    e3 = 2.0 * is_moment(S0, [I_n, Mss]) * is_moment(sig, [Sig_inv2, Mee])
    e4 = 4.0 * (2.0 * is_moment(S0, [I_n, U]) + is_sig_inv2 * is_moment(S0, [I_n, V]))
    m2_K = e1 + e2 + e3 + e4

    root = np.sqrt(sig)
    S = root[:, None] * Mee * root[None, :]
    l1 = 2.0 * m * is_moment(S0, [Mss, Mss])
    l2 = w_times_quad_sq(m, S)
    l3 = 2.0 * is_moment(S0, [Mss]) * (2.0 * m + 8.0) * float(np.trace(S))
    l4 = 4.0 * (2.0 * m + 8.0) * is_moment(S0, [V])
    m2_ell = l1 + l2 + l3 + l4
    return float(m2_K), float(m2_ell)
