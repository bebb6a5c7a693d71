"""Upper bounds on estimator variance and the lifted state-map norm sandwich."""

from __future__ import annotations

import numpy as np

from ..core_math import as_mat, matrix_powers, spectral_norm, sym
from ..gaussian_moments import is_moment
from .lift import LiftedSystem


def variance_upper_bound(L: LiftedSystem) -> tuple[float, float]:
    """``(bound_K, bound_ell)`` dominating the Frobenius variance of each block.

    The gain bound splits ``||s_bar||^2 <= 2||FS s0||^2 + 2||FE eps_bar||^2``
    and evaluates each half exactly; the log-std bound uses Cauchy-Schwarz over
    time steps and ``||q||^2 <= 2 ||Sigma^{-1/2} eps||^4 + 2m`` per step.
    """
    if np.any(L.sigma2 <= 0):
        raise ValueError("policy covariance must be positive definite")
    S0, Sb = L.Sigma0, L.Sigma_bar
    Mss, Mse, Mee = L.Mss_bar, L.Mse_bar, L.Mee_bar
    T, m = L.T, L.m
    is0 = lambda *f: is_moment(S0, f)  # noqa: E731
    isb = lambda *f: is_moment(Sb, f)  # noqa: E731

    inv2 = np.diag(Sb**-2)
    S = L.FS.T @ L.FS
    E = L.FE.T @ L.FE
    U = Mse @ Mse.T
    MS = Mse * Sb[None, :]
    V = MS @ Mse.T
    W = MS @ E @ MS.T
    Z = sym(Mse @ E @ MS.T)

    i2 = isb(inv2)
    x1, x2 = is0(Mss), is0(Mss, Mss)
    star = (
        i2 * is0(S, Mss, Mss)
        + is0(S) * isb(inv2, Mee, Mee)
        + 2.0 * is0(S, Mss) * isb(inv2, Mee)
        + 4.0 * (i2 * is0(S, V) + 2.0 * is0(S, U))
    )
    i2E = isb(inv2, E)
    dagger = (
        i2E * x2
        + isb(inv2, E, Mee, Mee)
        + 2.0 * x1 * isb(inv2, E, Mee)
        + 4.0 * i2E * is0(V)
        + 8.0 * isb(E) * is0(U)
        + 8.0 * i2 * is0(W)
        + 32.0 * is0(Z)
    )
    bound_K = 2.0 * star + 2.0 * dagger

    inv1 = np.diag(1.0 / Sb)
    d = m * T
    v = is0(V)
    quartic = (
        x2 * isb(inv1, inv1)
        + isb(inv1, inv1, Mee, Mee)
        + 2.0 * x1 * isb(inv1, inv1, Mee)
        + 4.0 * (d + 2) * (d + 4) * v
    )
    plain = x2 + isb(Mee, Mee) + 2.0 * x1 * isb(Mee) + 4.0 * v
    bound_ell = T * (2.0 * quartic + 2.0 * m * T * plain)
    return float(bound_K), float(bound_ell)


def lifted_state_map_norm_bounds(F, T: int) -> tuple[float, float, float]:
    """``(max_t ||F^t||^2, ||FS||^2, sum_t ||F^t||^2)`` over t = 0..T-1."""
    if T < 1:
        raise ValueError("T must be at least 1")
    F = as_mat(F)
    P = matrix_powers(F, T - 1)
    sq = [spectral_norm(Pt) ** 2 for Pt in P]
    exact = spectral_norm(np.vstack(P)) ** 2
    return float(max(sq)), float(exact), float(sum(sq))
