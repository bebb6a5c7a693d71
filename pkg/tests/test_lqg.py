import math

import numpy as np
import pytest

from nsrlab.core_math import spectral_radius
from nsrlab.lqg import (
    GaussianLinearPolicy,
    LinearSystem,
    default_double_integrator_policy,
    double_integrator,
    joint_mean_grads,
    joint_second_moments,
    lift,
    lifted_state_map_norm_bounds,
    load_system,
    multi_step_mean_grads,
    multi_step_second_moments,
    nsr,
    objective,
    one_step_mean_grads,
    one_step_second_moments,
    rotation_family,
    state_covariances,
    variance_upper_bound,
)
from nsrlab.types import GradientTooSmall
from nsrlab.validate import random_lqg, rollout_returns


def test_one_step_double_integrator_values():
    s, p = double_integrator(T=1), default_double_integrator_policy()
    mK, ml = one_step_second_moments(s, p)
    assert mK == pytest.approx(130.0758, rel=1e-12)
    assert ml == pytest.approx(10.94995, rel=1e-12)


@pytest.mark.parametrize("T", [1, 2, 3, 5])
def test_routes_agree(T):
    rng = np.random.default_rng(T)
    for _ in range(5):
        sys, pol = random_lqg(rng, T=T)
        L = lift(sys, pol)
        a = np.array(multi_step_second_moments(L))
        b = np.array(joint_second_moments(L))
        assert np.allclose(a, b, rtol=1e-10, atol=0)
        gK, gl = multi_step_mean_grads(sys, pol)
        jK, jl = joint_mean_grads(L)
        assert np.allclose(gK, jK, rtol=1e-10, atol=1e-14)
        assert np.allclose(gl, jl, rtol=1e-10, atol=1e-14)


def test_one_step_route_matches_lifted_route():
    rng = np.random.default_rng(11)
    for _ in range(10):
        sys, pol = random_lqg(rng, T=1)
        assert np.allclose(one_step_second_moments(sys, pol), multi_step_second_moments(lift(sys, pol)), rtol=1e-10)
        gK, gl = one_step_mean_grads(sys, pol)
        hK, hl = multi_step_mean_grads(sys, pol)
        assert np.allclose(gK, hK, rtol=1e-10) and np.allclose(gl, hl, rtol=1e-10)


def test_objective_matches_rollouts():
    sys, pol = double_integrator(T=4), default_double_integrator_policy()
    rng = np.random.default_rng(0)
    B = 400_000
    R = rollout_returns(sys, pol, rng.standard_normal((B, 2)), rng.standard_normal((B, 4, 1)) * 0.5)
    assert abs(R.mean() - objective(sys, pol)) <= 4 * R.std() / math.sqrt(B)


def test_state_covariances_closed_loop():
    sys, pol = double_integrator(T=3), default_double_integrator_policy()
    covs = state_covariances(sys, pol)
    F = pol.closed_loop(sys)
    expected = F @ sys.Sigma0 @ F.T + pol.sigma2[0] * sys.B @ sys.B.T
    assert np.allclose(covs[1], expected)


def test_lifted_returns_match_rollout():
    rng = np.random.default_rng(5)
    sys, pol = random_lqg(rng, n=2, m=2, T=4)
    L = lift(sys, pol)
    S0 = rng.standard_normal((50, 2))
    E = rng.standard_normal((50, 4, 2))
    assert np.allclose(rollout_returns(sys, pol, S0, E), L.returns(S0, E.reshape(50, -1)), rtol=1e-12, atol=1e-12)


def test_variance_bound_dominates():
    rng = np.random.default_rng(9)
    for _ in range(20):
        sys, pol = random_lqg(rng)
        L = lift(sys, pol)
        r = nsr(sys, pol)
        bK, bl = variance_upper_bound(L)
        assert r.variance_theta <= bK and r.variance_ell <= bl


def test_norm_sandwich():
    F = np.array([[1.05, 0.1], [0.0, 0.9]])
    lo, ex, hi = lifted_state_map_norm_bounds(F, 12)
    assert lo <= ex <= hi


def test_nsr_report_consistency():
    r = nsr(double_integrator(T=3), default_double_integrator_policy())
    assert r.method_tag == "exact"
    assert r.variance == pytest.approx(r.second_moment_theta + r.second_moment_ell - r.grad_norm_sq)
    assert r.nsr == pytest.approx(r.variance / r.grad_norm_sq)
    assert r.nsr_theta == pytest.approx(r.variance_theta / float(np.sum(r.grad_theta**2)))


def test_zero_cost_raises_gradient_too_small():
    s = double_integrator(T=2).with_(Qs=np.zeros((2, 2)), Qa=np.zeros((1, 1)))
    with pytest.raises(GradientTooSmall):
        nsr(s, default_double_integrator_policy())


def test_rotation_family_spectral_radius():
    for rho in (0.95, 1.0, 1.05):
        s, p = rotation_family(rho, T=5)
        assert spectral_radius(s.A) == pytest.approx(rho, rel=1e-6)
        assert np.all(p.K == 0)


def test_system_json_round_trip(tmp_path):
    s = double_integrator(T=7, gamma=0.9)
    back = LinearSystem.from_json(s.to_json())
    assert np.array_equal(back.A, s.A) and back.horizon_T == 7 and back.gamma == 0.9
    p = default_double_integrator_policy()
    q = GaussianLinearPolicy.from_json(p.to_json())
    assert np.array_equal(q.K, p.K) and np.array_equal(q.ell, p.ell)
    path = tmp_path / "s.json"
    import json

    path.write_text(json.dumps(s.to_json()))
    assert load_system(str(path)).horizon_T == 7


def test_unknown_system_name():
    with pytest.raises(KeyError):
        load_system("no-such-system")


def test_invalid_systems_rejected():
    s = double_integrator()
    with pytest.raises(ValueError):
        s.with_(Qs=-np.eye(2))
    with pytest.raises(ValueError):
        s.with_(horizon_T=0)
    with pytest.raises(ValueError):
        s.with_(B=np.ones((3, 1)))
