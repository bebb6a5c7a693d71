import math

import numpy as np
import pytest

from nsrlab.lqg import GaussianLinearPolicy, LinearSystem, nsr, objective
from nsrlab.poly import (
    MultiPoly,
    PolyPolicyParams,
    PolySystem,
    cubic_1d,
    expect_product,
    linear_as_poly,
    mul,
    poly_nsr,
    poly_objective,
    propagate,
    quadratic_1d,
    substitute,
)
from nsrlab.poly.multipoly import expect as poly_expect
from nsrlab.types import DegreeCapExceeded


def _random_poly(rng, nv, terms=6, max_exp=3):
    exps = rng.integers(0, max_exp + 1, size=(terms, nv))
    return MultiPoly(nv, exps, rng.normal(size=terms))


def test_arithmetic_matches_pointwise_evaluation():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3))
    p, q = _random_poly(rng, 3), _random_poly(rng, 3)
    assert np.allclose((p + q).evaluate(X), p.evaluate(X) + q.evaluate(X))
    assert np.allclose((p - q).evaluate(X), p.evaluate(X) - q.evaluate(X))
    assert np.allclose(mul(p, q).evaluate(X), p.evaluate(X) * q.evaluate(X))
    assert np.allclose((p**3).evaluate(X), p.evaluate(X) ** 3)
    assert np.allclose(p.scale(2.5).evaluate(X), 2.5 * p.evaluate(X))


def test_many_variables_use_general_key_path():
    rng = np.random.default_rng(1)
    p, q = _random_poly(rng, 11, terms=8, max_exp=2), _random_poly(rng, 11, terms=8, max_exp=2)
    X = rng.normal(size=(5, 11))
    assert np.allclose((p * q).evaluate(X), p.evaluate(X) * q.evaluate(X))


def test_cancellation_gives_zero():
    rng = np.random.default_rng(2)
    p = _random_poly(rng, 2)
    assert (p - p).is_zero
    assert (p + MultiPoly.zero(2)) == p


def test_substitute_is_composition():
    rng = np.random.default_rng(3)
    p = _random_poly(rng, 2)
    subs = [_random_poly(rng, 3, terms=3, max_exp=2), _random_poly(rng, 3, terms=3, max_exp=2)]
    X = rng.normal(size=(10, 3))
    inner = np.stack([s.evaluate(X) for s in subs], axis=1)
    assert np.allclose(substitute(p, subs).evaluate(X), p.evaluate(inner))


def test_expectation_of_monomials():
    x = MultiPoly.variable(2, 0)
    y = MultiPoly.variable(2, 1)
    v = [0.5, 2.0]
    assert poly_expect(x**4 * y**2, v) == pytest.approx(3 * 0.25 * 2.0)
    assert poly_expect(x**3 * y**2, v) == 0.0
    assert poly_expect(MultiPoly.constant(2, 7.0), v) == 7.0


def test_expect_product_equals_expect_of_product():
    rng = np.random.default_rng(4)
    p, q = _random_poly(rng, 3), _random_poly(rng, 3)
    v = rng.uniform(0.2, 1.5, size=3)
    assert expect_product(p, q, v) == pytest.approx(poly_expect(p * q, v), rel=1e-12)


def test_terms_round_trip():
    rng = np.random.default_rng(5)
    p = _random_poly(rng, 3)
    assert MultiPoly.from_terms(3, p.to_terms()) == p


def test_two_dimensional_linear_system_matches_lqg():
    A = np.array([[1.0, 0.1], [0.0, 0.95]])
    B = np.array([[0.0], [0.1]])
    Qs, Qa = np.diag([1.0, 0.5]), np.array([[0.1]])
    K = np.array([[-0.5, -1.0]])
    ps = linear_as_poly(A, B, Qs, Qa, 2, 0.9, [0.8, 1.2], [0.25])
    r = poly_nsr(ps, PolyPolicyParams(theta=K.T, ell=[0.5 * math.log(0.25)]))
    ls = LinearSystem(A=A, B=B, Qs=Qs, Qa=Qa, gamma=0.9, horizon_T=2, Sigma0=np.diag([0.8, 1.2]))
    lp = GaussianLinearPolicy(K=K, ell=[0.5 * math.log(0.25)])
    e = nsr(ls, lp)
    assert np.allclose(r.grad_theta.T, e.grad_K, rtol=1e-10)
    assert r.second_moment_theta == pytest.approx(e.second_moment_K, rel=1e-10)
    assert r.second_moment_ell == pytest.approx(e.second_moment_ell, rel=1e-10)
    assert r.extras["objective"] == pytest.approx(objective(ls, lp), rel=1e-12)


def test_quadratic_gradient_matches_finite_differences():
    q = quadratic_1d(T=3)
    x0 = np.array([-1.0, 0.2, math.log(0.3)])
    g = poly_nsr(q, PolyPolicyParams.from_flat(x0, 2, 1))
    ga = np.concatenate([g.grad_theta.ravel(), g.grad_ell])
    h = 1e-5
    fd = np.zeros(3)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd[k] = (poly_objective(q, PolyPolicyParams.from_flat(x0 + e, 2, 1))
                 - poly_objective(q, PolyPolicyParams.from_flat(x0 - e, 2, 1))) / (2 * h)
    assert np.linalg.norm(ga - fd) <= 1e-7 * np.linalg.norm(ga)


def test_cubic_gradient_matches_finite_differences():
    c = cubic_1d(T=2)
    x0 = np.array([0.0, -0.5, math.log(0.3)])
    g = poly_nsr(c, PolyPolicyParams.from_flat(x0, 2, 1))
    ga = np.concatenate([g.grad_theta.ravel(), g.grad_ell])
    h = 1e-5
    fd = np.array([(poly_objective(c, PolyPolicyParams.from_flat(x0 + h * e, 2, 1))
                    - poly_objective(c, PolyPolicyParams.from_flat(x0 - h * e, 2, 1))) / (2 * h) for e in np.eye(3)])
    assert np.linalg.norm(ga - fd) <= 1e-6 * np.linalg.norm(ga)


def test_degree_cap_reports_step():
    c = cubic_1d(T=4).with_(degree_cap=20)
    with pytest.raises(DegreeCapExceeded) as info:
        propagate(c, c.default_params())
    assert info.value.step is not None


def test_poly_system_json_round_trip():
    q = quadratic_1d(T=4)
    back = PolySystem.from_json(q.to_json())
    p = PolyPolicyParams(theta=[[-1.0], [0.2]], ell=[math.log(0.3)])
    assert back.horizon_T == 4
    assert poly_objective(back, p) == poly_objective(q, p)


def test_params_shape_checked():
    with pytest.raises(ValueError):
        poly_nsr(quadratic_1d(T=2), PolyPolicyParams(theta=[[1.0]], ell=[0.0]))
