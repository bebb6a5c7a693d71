"""Symbolic rollout of polynomial systems and exact estimator moments.

Everything is expressed in the noise vector xi = (s0, eps_0, ..., eps_{T-1});
expectations factor over coordinates because all covariances are diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..types import DegreeCapExceeded, NsrReport, assemble_report
from .multipoly import MultiPoly, expect as _expect, expect_product, substitute
from .system import PolyPolicyParams, PolySystem


@dataclass(frozen=True)
class Rollout:
    states: list  # s_0..s_T, each a list of n polys
    actions: list  # a_0..a_{T-1}, each a list of m polys
    num_vars: int


@dataclass(frozen=True)
class EstimatorPolys:
    return_poly: MultiPoly
    score_theta: list  # d x m
    score_ell: list  # m
    Ghat_theta: list | None  # d x m
    Ghat_ell: list | None  # m


def noise_variances(sys: PolySystem, params: PolyPolicyParams) -> np.ndarray:
    return np.concatenate([sys.sigma0, np.tile(params.sigma2, sys.horizon_T)])


def _eps(sys: PolySystem, nv: int, t: int, j: int) -> MultiPoly:
    return MultiPoly.variable(nv, sys.n + t * sys.m + j)


def _policy_mean(sys: PolySystem, params: PolyPolicyParams, state: list) -> list:
    feats = [[substitute(f, state) for f in row] for row in sys.features]
    nv = state[0].num_vars
    out = []
    for j in range(sys.m):
        acc = MultiPoly(nv)
        for k in range(sys.d):
            acc = acc + feats[k][j].scale(params.theta[k, j])
        out.append(acc)
    return out, feats


def _check_params(sys: PolySystem, params: PolyPolicyParams):
    if params.theta.shape != (sys.d, sys.m):
        raise ValueError(f"theta must be {sys.d}x{sys.m}")


def propagate(sys: PolySystem, params: PolyPolicyParams) -> Rollout:
    """States and actions as polynomials in xi."""
    _check_params(sys, params)
    n, m, T = sys.n, sys.m, sys.horizon_T
    nv = n + m * T
    s = [MultiPoly.variable(nv, i) for i in range(n)]
    states, actions = [s], []
    for t in range(T):
        mean, _ = _policy_mean(sys, params, s)
        a = [mean[j] + _eps(sys, nv, t, j) for j in range(m)]
        try:
            s = [substitute(P, s + a) for P in sys.transition]
        except DegreeCapExceeded as exc:
            raise DegreeCapExceeded(str(exc), step=t + 1) from exc
        deg = max(p.degree for p in s)
        if deg > sys.degree_cap:
            raise DegreeCapExceeded(f"state degree {deg} exceeds cap {sys.degree_cap} at step {t + 1}",
                                    step=t + 1)
        actions.append(a)
        states.append(s)
    return Rollout(states=states, actions=actions, num_vars=nv)


def estimator_polys(sys: PolySystem, params: PolyPolicyParams, rollout: Rollout | None = None,
                    with_products: bool = True) -> EstimatorPolys:
    """Return, scores and (unless ``with_products`` is off) the estimator entries."""
    ro = rollout or propagate(sys, params)
    n, m, T, nv = sys.n, sys.m, sys.horizon_T, ro.num_vars
    inv = 1.0 / params.sigma2
    R = MultiPoly(nv)
    for t in range(T):
        r_t = substitute(sys.reward, ro.states[t + 1] + ro.actions[t])
        R = R + r_t.scale(sys.gamma**t)

    sth = [[MultiPoly(nv) for _ in range(m)] for _ in range(sys.d)]
    sl = [MultiPoly.constant(nv, -float(T)) for _ in range(m)]
    for t in range(T):
        mean, feats = _policy_mean(sys, params, ro.states[t])
        for j in range(m):
            eps = _eps(sys, nv, t, j)
            # the action residual must reduce to the injected noise exactly
            resid = ro.actions[t][j] - mean[j] - eps
            if not resid.is_zero and np.max(np.abs(resid.coefs)) > 1e-12:
                raise AssertionError("action residual does not cancel to the exploration noise")
            scaled = eps.scale(inv[j])
            for k in range(sys.d):
                sth[k][j] = sth[k][j] + feats[k][j] * scaled
            sl[j] = sl[j] + (eps * eps).scale(inv[j])
    Gth = Gl = None
    if with_products:
        Gth = [[R * sth[k][j] for j in range(m)] for k in range(sys.d)]
        Gl = [R * sl[j] for j in range(m)]
    return EstimatorPolys(return_poly=R, score_theta=sth, score_ell=sl, Ghat_theta=Gth, Ghat_ell=Gl)


def expect(p: MultiPoly, sys: PolySystem, params: PolyPolicyParams | None = None) -> float:
    """E[p(xi)] under the system's noise law (policy variance from ``params``)."""
    params = params or sys.default_params()
    return _expect(p, noise_variances(sys, params))


def poly_objective(sys: PolySystem, params: PolyPolicyParams) -> float:
    ro = propagate(sys, params)
    nv = ro.num_vars
    R = MultiPoly(nv)
    for t in range(sys.horizon_T):
        R = R + substitute(sys.reward, ro.states[t + 1] + ro.actions[t]).scale(sys.gamma**t)
    return expect(R, sys, params)


def poly_moments(sys: PolySystem, params: PolyPolicyParams):
    """Exact mean gradients and Frobenius second moments of both blocks."""
    est = estimator_polys(sys, params, with_products=False)
    v = noise_variances(sys, params)
    R = est.return_poly
    gth = np.zeros((sys.d, sys.m))
    gl = np.zeros(sys.m)
    m2th = m2l = 0.0
    # E[G^2] pairs the monomials of G = R * score directly, so squared
    # polynomials are never expanded
    for k, row in enumerate(est.score_theta):
        for j, s in enumerate(row):
            G = R * s
            gth[k, j] = _expect(G, v)
            m2th += expect_product(G, G, v)
    for j, s in enumerate(est.score_ell):
        G = R * s
        gl[j] = _expect(G, v)
        m2l += expect_product(G, G, v)
    return gth, gl, float(m2th), float(m2l), est


def poly_nsr(sys: PolySystem, params: PolyPolicyParams, grad_floor: float = 1e-12) -> NsrReport:
    gth, gl, m2th, m2l, est = poly_moments(sys, params)
    obj = _expect(est.return_poly, noise_variances(sys, params))
    return assemble_report(gth, gl, m2th, m2l, grad_floor=grad_floor, method_tag="exact",
                           objective=obj, T=sys.horizon_T)
