import numpy as np
import pytest

from nsrlab.core_math import (
    DimensionError,
    check_psd,
    gelfand_estimate,
    kron,
    mat_from_json,
    mat_to_json,
    matrix_powers,
    spectral_norm,
    spectral_radius,
    sym,
)


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(0)
    for _ in range(30):
        M = rng.normal(size=(rng.integers(1, 6), rng.integers(1, 6)))
        assert spectral_norm(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0], rel=1e-9)


def test_spectral_norm_zero_matrix():
    assert spectral_norm(np.zeros((3, 2))) == 0.0


def test_spectral_radius_jordan_block():
    F = np.array([[1.05, 0.1], [0.0, 1.05]])
    assert abs(spectral_radius(F) - 1.05) <= 1e-2
    # plain power-norm estimate is visibly biased on this block
    assert gelfand_estimate(F, 256) > spectral_radius(F)


def test_spectral_radius_rotation_and_nilpotent():
    c, s = np.cos(0.3), np.sin(0.3)
    assert spectral_radius(0.9 * np.array([[c, -s], [s, c]])) == pytest.approx(0.9, rel=1e-6)
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0


def test_spectral_radius_rejects_rectangular():
    with pytest.raises(DimensionError):
        spectral_radius(np.ones((2, 3)))


def test_matrix_powers():
    F = np.array([[0.5, 1.0], [0.0, 0.3]])
    P = matrix_powers(F, 4)
    assert np.allclose(P[0], np.eye(2))
    assert np.allclose(P[3], F @ F @ F)


def test_check_psd():
    check_psd(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        check_psd(np.diag([1.0, -1e-3]))


def test_sym_and_kron():
    M = np.array([[1.0, 2.0], [0.0, 3.0]])
    assert np.allclose(sym(M), [[1.0, 1.0], [1.0, 3.0]])
    assert np.allclose(kron(np.eye(2), M), np.kron(np.eye(2), M))


def test_matrix_json_round_trip():
    M = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(mat_from_json(mat_to_json(M)), M)
