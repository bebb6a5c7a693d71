"""Stacked T-step maps from (s0, eps_bar) to all states and actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core_math import kron, matrix_powers
from .system import GaussianLinearPolicy, LinearSystem, check_compatible


@dataclass(frozen=True)
class LiftedSystem:
    """Block maps of the unrolled closed loop.

    ``s_bar = FS s0 + FE eps_bar`` stacks s_0..s_{T-1}; the ``p`` variants
    stack s_1..s_T.  ``a_bar = KS s0 + KE eps_bar``.  The return is
    ``-(s0^T Mss_bar s0 + 2 s0^T Mse_bar eps_bar + eps_bar^T Mee_bar eps_bar)``.
    """

    FS: np.ndarray
    FSp: np.ndarray
    FE: np.ndarray
    FEp: np.ndarray
    KS: np.ndarray
    KE: np.ndarray
    Mss_bar: np.ndarray
    Mse_bar: np.ndarray
    Mee_bar: np.ndarray
    Sigma_bar: np.ndarray
    Dgamma: np.ndarray
    sigma2: np.ndarray
    Sigma0: np.ndarray
    n: int
    m: int
    T: int

    def state_block(self, t: int):
        """Rows of (FS, FE) producing s_t."""
        r = slice(t * self.n, (t + 1) * self.n)
        return self.FS[r], self.FE[r]

    def returns(self, s0: np.ndarray, eps_bar: np.ndarray) -> np.ndarray:
        """Return of each sample (rows of ``s0`` and ``eps_bar``) from the lifted blocks."""
        x = np.einsum("bi,ij,bj->b", s0, self.Mss_bar, s0)
        y = np.einsum("bi,ij,bj->b", s0, self.Mse_bar, eps_bar)
        z = np.einsum("bi,ij,bj->b", eps_bar, self.Mee_bar, eps_bar)
        return -(x + 2.0 * y + z)


def lift(sys: LinearSystem, pol: GaussianLinearPolicy) -> LiftedSystem:
    check_compatible(sys, pol)
    n, m, T = sys.n, sys.m, sys.horizon_T
    F = pol.closed_loop(sys)
    B, K = sys.B, pol.K
    P = matrix_powers(F, T)

    FS = np.vstack(P[:T])
    FSp = np.vstack(P[1 : T + 1])
    KS = np.vstack([K @ P[t] for t in range(T)])
    FE = np.zeros((n * T, m * T))
    FEp = np.zeros((n * T, m * T))
    KE = np.zeros((m * T, m * T))
    PB = [Pk @ B for Pk in P]
    for t in range(T):
        rs, ra = slice(t * n, (t + 1) * n), slice(t * m, (t + 1) * m)
        for i in range(t + 1):
            c = slice(i * m, (i + 1) * m)
            FEp[rs, c] = PB[t - i]
            if i < t:
                FE[rs, c] = PB[t - 1 - i]
                KE[ra, c] = K @ PB[t - 1 - i]
        KE[ra, ra] = np.eye(m)

    Dg = sys.gamma ** np.arange(T)
    Qs_g = kron(np.diag(Dg), sys.Qs)
    Qa_g = kron(np.diag(Dg), sys.Qa)
    Mss = FSp.T @ Qs_g @ FSp + KS.T @ Qa_g @ KS
    Mse = FSp.T @ Qs_g @ FEp + KS.T @ Qa_g @ KE
    Mee = FEp.T @ Qs_g @ FEp + KE.T @ Qa_g @ KE
    sig = pol.sigma2
    return LiftedSystem(
        FS=FS, FSp=FSp, FE=FE, FEp=FEp, KS=KS, KE=KE,
        Mss_bar=0.5 * (Mss + Mss.T), Mse_bar=Mse, Mee_bar=0.5 * (Mee + Mee.T),
        Sigma_bar=np.tile(sig, T), Dgamma=Dg, sigma2=sig.copy(), Sigma0=sys.Sigma0,
        n=n, m=m, T=T,
    )
