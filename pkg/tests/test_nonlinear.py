import math

import numpy as np
import pytest

from nsrlab.gaussian_moments import gaussian_norm4, qscore_norm4
from nsrlab.lqg import default_double_integrator_policy, double_integrator
from nsrlab.mc import MCConfig
from nsrlab.nonlinear import (
    LinearEnv,
    LinearPolicy,
    MlpPolicy,
    PendulumEnv,
    assemble_generic_bounds,
    mlp_forward,
    mlp_param_jacobian,
    reinforce_sample,
    generic_variance_bound,
)
from nsrlab.rng import CounterRNG
from nsrlab.validate import mlp_fd_jacobian


def test_mlp_jacobian_matches_finite_differences():
    pol = MlpPolicy.init((3, 8, 5, 2), seed=1)
    s = np.array([0.3, -0.2, 0.7])
    J = mlp_param_jacobian(pol, s)
    assert J.shape == (2, pol.num_params)
    assert np.linalg.norm(J - mlp_fd_jacobian(pol, s)) <= 1e-7 * np.linalg.norm(J)


def test_vjp_matches_jacobian_transpose():
    rng = np.random.default_rng(0)
    pol = MlpPolicy.init((2, 6, 2), seed=2)
    S = rng.normal(size=(4, 2))
    V = rng.normal(size=(4, 2))
    got = pol.vjp(S, V)
    want = np.stack([pol.param_jacobian(S[i]).T @ V[i] for i in range(4)])
    assert np.allclose(got, want)


def test_jac_fro_sq():
    pol = MlpPolicy.init((2, 4, 1), seed=3)
    S = np.array([[0.1, 0.2], [-1.0, 0.5]])
    want = [np.sum(pol.param_jacobian(s) ** 2) for s in S]
    assert np.allclose(pol.jac_fro_sq(S), want)


def test_linear_mlp_reproduces_linear_policy():
    p = default_double_integrator_policy()
    mlp = MlpPolicy.from_linear(p.K, p.ell)
    S = np.random.default_rng(1).normal(size=(5, 2))
    assert np.allclose(mlp.mean(S), LinearPolicy(p).mean(S))
    assert np.allclose(mlp_forward(mlp, S[0]), p.K @ S[0])


def test_mlp_json_round_trip():
    pol = MlpPolicy.init((2, 16, 1), seed=4, ell=[math.log(0.3)])
    back = MlpPolicy.from_json(pol.to_json())
    assert back.layer_dims == pol.layer_dims
    assert np.array_equal(back.params, pol.params) and np.array_equal(back.ell, pol.ell)


def test_mlp_rejects_wrong_param_count():
    with pytest.raises(ValueError):
        MlpPolicy((2, 1), np.zeros(2))


def test_pendulum_wraps_and_clips():
    env = PendulumEnv()
    S = np.array([[math.pi - 1e-3, 7.99]])
    nxt = env.step(S, np.array([[100.0]]))
    assert -math.pi <= nxt[0, 0] <= math.pi
    assert nxt[0, 1] == env.max_speed
    assert env.reward(np.zeros((1, 2)), np.zeros((1, 1)))[0] == 0.0


def test_reinforce_sample_matches_formula():
    s = double_integrator(T=2)
    p = default_double_integrator_policy()
    rng = CounterRNG(0)
    g_th, g_l, R = reinforce_sample(LinearEnv(s), LinearPolicy(p), 0.9, 2, rng, index=3)
    s_t = rng.normals([3], 0, 2)[0]
    score_th, score_l, ret = np.zeros(2), np.zeros(1), 0.0
    for t in range(2):
        eps = rng.normals([3], t + 1, 1)[0] * 0.5
        a = p.K @ s_t + eps
        score_th += eps[0] / 0.25 * s_t
        score_l += eps**2 / 0.25 - 1.0
        s_t = s.A @ s_t + s.B @ a
        ret -= 0.9**t * (s_t @ s.Qs @ s_t + a @ s.Qa @ a)
    assert R == pytest.approx(ret, rel=1e-12)
    assert np.allclose(g_th, ret * score_th) and np.allclose(g_l, ret * score_l)


def test_generic_bound_formula():
    T, sig2, R4 = 5, np.array([0.09]), 16.0
    J4 = np.array([1.0, 4.0, 9.0, 16.0, 25.0])
    bt, bl = assemble_generic_bounds(T, sig2, R4, J4)
    inv = 1.0 / 0.09
    assert bt == pytest.approx(T * inv**2 * 4.0 * math.sqrt(gaussian_norm4(sig2)) * 15.0)
    assert bl == pytest.approx(T**2 * math.sqrt(qscore_norm4(1)) * 4.0)


def test_bound_needs_enough_rollouts():
    pol = MlpPolicy.init((2, 4, 1), seed=0, ell=[math.log(0.3)])
    with pytest.raises(ValueError):
        generic_variance_bound(PendulumEnv(), pol, 1.0, 5, MCConfig(1000, horizon_T=5))


def test_bound_dominates_on_short_horizon():
    pol = MlpPolicy.init((2, 8, 1), seed=0, ell=[math.log(0.3)])
    rep = generic_variance_bound(PendulumEnv(), pol, 1.0, 10, MCConfig(20_000, seed=1, horizon_T=10))
    assert rep.bound_theta >= rep.mc_second_moment_theta
    assert rep.bound_ell >= rep.mc_second_moment_ell
