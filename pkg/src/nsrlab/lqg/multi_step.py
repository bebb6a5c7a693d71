"""Exact T-step moments of the REINFORCE estimator for linear-Gaussian control.

Two exact routes are provided for the second moments:

* ``multi_step_second_moments`` sums closed-form contributions over every
  pair of time steps (t, p).  Cost grows like T^2 Gaussian-moment calls.
* ``joint_second_moments`` writes every gain-estimator entry and every
  log-std entry as a product of two quadratic forms in the joint Gaussian
  vector (s0, eps_bar), so each second moment is one four-factor Gaussian
  moment.  Cost grows like m*n calls on a larger covariance, which is what
  long-horizon sweeps use.

The two are algebraically independent and are cross-checked in the tests.
"""

from __future__ import annotations

import numpy as np

from ..core_math import sym
from ..gaussian_moments import is_moment
from ..types import NsrReport, assemble_report
from .lift import LiftedSystem, lift
from .system import GaussianLinearPolicy, LinearSystem, check_compatible

ROUTES = ("pairwise", "joint")


def _check_lift(L: LiftedSystem):
    if L.T < 1:
        raise ValueError("horizon must be at least 1")
    if np.any(L.sigma2 <= 0):
        raise ValueError("policy covariance must be positive definite")


def _pair_terms_K(L: LiftedSystem, t: int, p: int, cache: dict) -> float:
    n, m = L.n, L.m
    S0, Sb = L.Sigma0, L.Sigma_bar
    Mss, Mse, Mee = L.Mss_bar, L.Mse_bar, L.Mee_bar
    Ne = m * L.T

    F_t, E_t = L.state_block(t)
    F_p, E_p = L.state_block(p)
    G = sym(F_t.T @ F_p)
    J = F_t.T @ E_p + F_p.T @ E_t
    U = sym(E_t.T @ E_p)
    W = np.zeros((Ne, Ne))
    W[t * m : (t + 1) * m, p * m : (p + 1) * m] = np.diag(L.sigma2**-2)
    W = sym(W)

    SW = Sb[:, None] * W
    SU = Sb[:, None] * U
    SM = cache["SM"]
    alpha = float(np.trace(SW))
    beta = float(np.trace(SU))
    delta = float(np.sum(SW * SU.T))
    mu = cache["mu"]
    kappa = float(np.sum(SW * SM.T))

    A1 = SW * Sb[None, :]  # Sb W Sb
    AU = SU * Sb[None, :]
    V0 = cache["V0"]
    Vtp = Mse @ A1 @ Mse.T
    Vtil = Mse @ AU @ Mse.T
    Vhat = sym(Mse @ (A1 @ U * Sb[None, :]) @ Mse.T)

    Jt = J.T
    MS = cache["MS"]  # Mse Sb
    Vj0 = sym(MS @ Jt)
    Vj1 = sym(Mse @ A1 @ Jt)
    Vj2 = sym(Mse @ cache["A2"] @ Jt)
    A3 = sym(A1 @ Mee * Sb[None, :])
    Vj3 = sym(Mse @ A3 @ Jt)

    is0 = lambda *f: is_moment(S0, f)  # noqa: E731
    isb = lambda *f: is_moment(Sb, f)  # noqa: E731

    e1 = is0(G, Mss, Mss) * alpha + cache["x2"] * isb(W, U)
    e2 = is0(G) * isb(W, Mee, Mee) + isb(W, U, Mee, Mee)
    e3 = 2.0 * is0(G, Mss) * isb(W, Mee) + 2.0 * cache["x1"] * isb(W, U, Mee)
    e4 = 4.0 * (
        alpha * is0(G, V0)
        + 2.0 * is0(G, Vtp)
        + (alpha * beta + 2.0 * delta) * cache["v0"]
        + 2.0 * beta * is0(Vtp)
        + 2.0 * alpha * is0(Vtil)
        + 8.0 * is0(Vhat)
    )
    e5 = 4.0 * (alpha * is0(Mss, Vj0) + 2.0 * is0(Mss, Vj1))
    e6 = 4.0 * (
        (alpha * mu + 2.0 * kappa) * is0(Vj0)
        + 2.0 * mu * is0(Vj1)
        + 2.0 * alpha * is0(Vj2)
        + 8.0 * is0(Vj3)
    )
    return e1 + e2 + e3 + e4 + e5 + e6


def _pair_terms_ell(L: LiftedSystem, t: int, p: int, cache: dict) -> float:
    m, Ne = L.m, L.m * L.T
    Sb = L.Sigma_bar
    Mee = L.Mee_bar
    d = 1.0 / L.sigma2
    isb = lambda *f: is_moment(Sb, f)  # noqa: E731

    def Q(step, i):
        M = np.zeros((Ne, Ne))
        M[step * m + i, step * m + i] = 1.0
        return M

    def Wl(step):
        M = np.zeros((Ne, Ne))
        r = slice(step * m, (step + 1) * m)
        M[r, r] = np.diag(d)
        return M

    Wt, Wp = Wl(t), Wl(p)
    quad4 = sum(d[i] ** 2 * isb(Q(t, i), Q(p, i), Mee, Mee) for i in range(m))
    quad3 = sum(d[i] ** 2 * isb(Q(t, i), Q(p, i), Mee) for i in range(m))
    same = t == p

    e1 = 2.0 * m * cache["x2"] if same else 0.0
    e2 = quad4 - isb(Wt, Mee, Mee) - isb(Wp, Mee, Mee) + m * cache["z2"]
    e3 = 2.0 * cache["x1"] * (quad3 - isb(Wt, Mee) - isb(Wp, Mee) + m * cache["z1"])
    e4 = 0.0
    if same:
        Mse = L.Mse_bar
        tail = 0.0
        for i in range(m):
            j = t * m + i
            col = Mse[:, j] * Sb[j] ** 3
            Vi = np.outer(col, Mse[:, j])
            tail += d[i] ** 2 * is_moment(L.Sigma0, [Vi])
        e4 = 8.0 * m * cache["v0"] + 32.0 * tail
    return e1 + e2 + e3 + e4


def _shared_cache(L: LiftedSystem) -> dict:
    Sb = L.Sigma_bar
    Mse, Mee, Mss = L.Mse_bar, L.Mee_bar, L.Mss_bar
    MS = Mse * Sb[None, :]
    V0 = MS @ Mse.T
    SM = Sb[:, None] * Mee
    return {
        "MS": MS,
        "V0": V0,
        "SM": SM,
        "A2": SM * Sb[None, :],
        "mu": float(np.trace(SM)),
        "v0": is_moment(L.Sigma0, [V0]),
        "x1": is_moment(L.Sigma0, [Mss]),
        "x2": is_moment(L.Sigma0, [Mss, Mss]),
        "z1": is_moment(Sb, [Mee]),
        "z2": is_moment(Sb, [Mee, Mee]),
    }


def _pairwise_sum(values: list[float]) -> float:
    """Pairwise tree reduction in index order."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0])


def multi_step_second_moments(L: LiftedSystem) -> tuple[float, float]:
    """Exact ``(E||G_K||_F^2, E||G_ell||^2)`` by summing over time-step pairs.

    Each pair's contribution is symmetric in (t, p), so only t <= p is
    evaluated and off-diagonal pairs are doubled.
    """
    _check_lift(L)
    cache = _shared_cache(L)
    kvals, lvals = [], []
    for t in range(L.T):
        for p in range(t, L.T):
            w = 1.0 if t == p else 2.0
            kvals.append(w * _pair_terms_K(L, t, p, cache))
            lvals.append(w * _pair_terms_ell(L, t, p, cache))
    return _pairwise_sum(kvals), _pairwise_sum(lvals)


def _joint_setup(L: LiftedSystem):
    n, Ne = L.n, L.m * L.T
    N = n + Ne
    omega = np.zeros((N, N))
    omega[:n, :n] = L.Sigma0
    omega[n:, n:] = np.diag(L.Sigma_bar)
    Q = np.zeros((N, N))
    Q[:n, :n] = L.Mss_bar
    Q[:n, n:] = L.Mse_bar
    Q[n:, :n] = L.Mse_bar.T
    Q[n:, n:] = L.Mee_bar
    # Z[t] maps xi to s_t
    Z = [np.hstack(L.state_block(t)) for t in range(L.T)]
    return N, omega, Q, Z


def _gain_entry_form(L: LiftedSystem, Z, N: int, i: int, j: int) -> np.ndarray:
    """Symmetric C with (sum_t Sigma^-1 eps_t s_t^T)_{ij} = xi^T C xi."""
    C = np.zeros((N, N))
    for t in range(L.T):
        C[L.n + t * L.m + i, :] += Z[t][j] / L.sigma2[i]
    return sym(C)


def _ell_entry_form(L: LiftedSystem, N: int, i: int) -> np.ndarray:
    """Diagonal D with sum_t eps_{t,i}^2 / sigma_i^2 = xi^T D xi."""
    D = np.zeros((N, N))
    for t in range(L.T):
        k = L.n + t * L.m + i
        D[k, k] = 1.0 / L.sigma2[i]
    return D


def joint_second_moments(L: LiftedSystem) -> tuple[float, float]:
    """Same quantities as ``multi_step_second_moments`` via joint quadratic forms."""
    _check_lift(L)
    N, omega, Q, Z = _joint_setup(L)
    T = float(L.T)
    m2K = 0.0
    for i in range(L.m):
        for j in range(L.n):
            C = _gain_entry_form(L, Z, N, i, j)
            m2K += is_moment(omega, [C, C, Q, Q])
    qq = is_moment(omega, [Q, Q])
    m2l = 0.0
    for i in range(L.m):
        D = _ell_entry_form(L, N, i)
        m2l += is_moment(omega, [D, D, Q, Q]) - 2.0 * T * is_moment(omega, [D, Q, Q]) + T * T * qq
    return float(m2K), float(m2l)


def joint_mean_grads(L: LiftedSystem):
    """Mean gradients as expectations of the same quadratic-form products."""
    _check_lift(L)
    N, omega, Q, Z = _joint_setup(L)
    gK = np.zeros((L.m, L.n))
    for i in range(L.m):
        for j in range(L.n):
            gK[i, j] = -is_moment(omega, [_gain_entry_form(L, Z, N, i, j), Q])
    q1 = is_moment(omega, [Q])
    gl = np.array([-(is_moment(omega, [_ell_entry_form(L, N, i), Q]) - L.T * q1) for i in range(L.m)])
    return gK, gl


def state_covariances(sys: LinearSystem, pol: GaussianLinearPolicy) -> list[np.ndarray]:
    """``[P_0, ..., P_T]`` with ``P_{t+1} = F P_t F^T + B Sigma B^T``."""
    F = pol.closed_loop(sys)
    BSB = sys.B @ pol.Sigma @ sys.B.T
    P = [sys.Sigma0]
    for _ in range(sys.horizon_T):
        P.append(F @ P[-1] @ F.T + BSB)
    return P


def _cost_to_go(sys: LinearSystem, pol: GaussianLinearPolicy) -> list[np.ndarray]:
    """``[Lam_1, ..., Lam_T]`` from the backward recursion, indexed so out[t] = Lam_{t+1}."""
    F, K, g = pol.closed_loop(sys), pol.K, sys.gamma
    base = sys.Qs / g
    lam = [base]
    for _ in range(sys.horizon_T - 1):
        lam.append(base + K.T @ sys.Qa @ K + g * F.T @ lam[-1] @ F)
    return lam[::-1]


def multi_step_mean_grads(sys: LinearSystem, pol: GaussianLinearPolicy):
    check_compatible(sys, pol)
    F, K, g = pol.closed_loop(sys), pol.K, sys.gamma
    P = state_covariances(sys, pol)
    lam_next = _cost_to_go(sys, pol)
    gK = np.zeros_like(K)
    acc = np.zeros((sys.m, sys.m))
    for t in range(sys.horizon_T):
        w = g**t
        gK += w * (sys.Qa @ K @ P[t] + g * sys.B.T @ lam_next[t] @ F @ P[t])
        acc += w * (sys.Qa + g * sys.B.T @ lam_next[t] @ sys.B)
    return -2.0 * gK, -2.0 * pol.sigma2 * np.diag(acc)


def objective(sys: LinearSystem, pol: GaussianLinearPolicy) -> float:
    """Expected discounted return over the horizon."""
    check_compatible(sys, pol)
    P = state_covariances(sys, pol)
    K, Qa = pol.K, sys.Qa
    act = float(np.trace(Qa @ pol.Sigma))
    total = 0.0
    for t in range(sys.horizon_T):
        total += sys.gamma**t * (np.trace(sys.Qs @ P[t + 1]) + np.trace(Qa @ K @ P[t] @ K.T) + act)
    return -float(total)


def nsr(sys: LinearSystem, pol: GaussianLinearPolicy, grad_floor: float = 1e-12,
        route: str = "pairwise") -> NsrReport:
    """Exact NSR of the stacked estimator ``[G_K, G_ell]``."""
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    gK, gl = multi_step_mean_grads(sys, pol)
    L = lift(sys, pol)
    m2 = multi_step_second_moments(L) if route == "pairwise" else joint_second_moments(L)
    return assemble_report(gK, gl, m2[0], m2[1], grad_floor=grad_floor, method_tag="exact",
                           route=route, T=sys.horizon_T)
