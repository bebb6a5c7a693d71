import math

import numpy as np
import pytest

from nsrlab.lqg import default_double_integrator_policy, double_integrator, nsr, objective
from nsrlab.mc import MCConfig, estimate_nsr, estimate_return_moments
from nsrlab.nonlinear import LinearEnv, LinearPolicy, ZeroRewardEnv
from nsrlab.rng import CounterRNG, uniforms
from nsrlab.types import NsrUndetermined


def _di(T):
    s = double_integrator(T=T)
    p = default_double_integrator_policy()
    return s, p, LinearEnv(s), LinearPolicy(p)


def test_counter_rng_is_pure_function_of_key():
    r = CounterRNG(7, 3)
    a = r.normals(np.arange(100), 2, 3)
    b = r.normals(np.arange(50, 100), 2, 3)
    assert np.array_equal(a[50:], b)
    assert not np.array_equal(a, CounterRNG(8, 3).normals(np.arange(100), 2, 3))
    assert not np.array_equal(a, r.normals(np.arange(100), 3, 3))


def test_uniforms_open_interval_and_moments():
    u = uniforms(0, 0, np.arange(200_000), 0, 0)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(u))
    z = CounterRNG(1).normals(np.arange(200_000), 0, 1).ravel()
    assert abs(z.mean()) < 4 / math.sqrt(len(z))
    assert abs(z.var() - 1) < 4 * math.sqrt(2 / len(z))


def test_estimate_matches_exact_at_T1():
    s, p, env, pol = _di(1)
    mc = estimate_nsr(env, pol, MCConfig(200_000, seed=3))
    r = nsr(s, p)
    assert abs(mc.second_moment_theta - r.second_moment_theta) <= 4 * mc.second_moment_theta_se
    assert abs(mc.second_moment_ell - r.second_moment_ell) <= 4 * mc.second_moment_ell_se
    assert np.all(np.abs(mc.mean_grad_theta - r.grad_theta.ravel()) <= 4 * mc.mean_grad_theta_se)
    assert abs(mc.objective - objective(s, p)) <= 4 * mc.objective_se


def test_return_moments_first_order():
    s, p, env, pol = _di(3)
    m, se = estimate_return_moments(env, pol, MCConfig(100_000, seed=1, horizon_T=3), 1)
    assert abs(m - objective(s, p)) <= 4 * se


def test_results_independent_of_thread_count(monkeypatch):
    _, _, env, pol = _di(1)
    cfg = MCConfig(300_000, seed=5)
    monkeypatch.setenv("NSRLAB_THREADS", "1")
    a = estimate_nsr(env, pol, cfg).to_dict()
    monkeypatch.setenv("NSRLAB_THREADS", "3")
    b = estimate_nsr(env, pol, cfg).to_dict()
    assert a == b


def test_zero_reward_is_undetermined():
    _, _, env, pol = _di(2)
    with pytest.raises(NsrUndetermined) as info:
        estimate_nsr(ZeroRewardEnv(env), pol, MCConfig(10_000, horizon_T=2))
    assert math.isnan(info.value.estimate.nsr)
    assert info.value.estimate.variance == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(10, batch_count=64)
    with pytest.raises(ValueError):
        MCConfig(1000, horizon_T=0)
