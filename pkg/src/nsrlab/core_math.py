"""Small dense linear-algebra helpers shared by the rest of the package.

Matrices are plain ``numpy`` float arrays; diagonal covariances are 1-D arrays
of variances.  Everything here is pure.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    pass


def as_mat(M) -> np.ndarray:
    A = np.atleast_2d(np.asarray(M, dtype=float))
    if A.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def as_diag_cov(variances) -> np.ndarray:
    v = np.atleast_1d(np.asarray(variances, dtype=float))
    if v.ndim != 1:
        raise DimensionError("diagonal covariance must be a vector of variances")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("variances must be finite and nonnegative")
    return v


def sym(M) -> np.ndarray:
    """Symmetric part ``(M + M^T) / 2``; works on stacks of matrices too."""
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionError(f"sym needs square input, got shape {M.shape}")
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def matrix_powers(F, count: int) -> list[np.ndarray]:
    """Ladder ``[F^0, F^1, ..., F^count]`` by repeated multiplication."""
    F = as_mat(F)
    if F.shape[0] != F.shape[1]:
        raise DimensionError("matrix powers need a square matrix")
    out = [np.eye(F.shape[0])]
    for _ in range(count):
        out.append(out[-1] @ F)
    return out


def spectral_norm(M, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    The start vector is the normalized all-ones vector.  If it happens to lie
    in the null space of ``M`` (Rayleigh quotient stuck at zero) a single
    deterministic perturbation is tried before concluding the norm is zero.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError("spectral_norm needs a matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if M.size == 0 or not np.any(M):
        return 0.0
    scale = np.max(np.abs(M))
    A = M / scale
    G = A.T @ A
    k = G.shape[0]

    starts = [np.ones(k)]
    alt = np.cos(np.arange(1, k + 1) * 1.2345)  # fixed, non-degenerate direction
    starts.append(alt)
    for v in starts:
        v = v / np.linalg.norm(v)
        lam = float(v @ G @ v)
        for _ in range(max_iter):
            w = G @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                lam = 0.0
                break
            v = w / nw
            lam_new = float(v @ G @ v)
            if abs(lam_new - lam) <= tol * abs(lam_new):
                lam = lam_new
                break
            lam = lam_new
        if lam > 0.0:
            return float(np.sqrt(lam) * scale)
    return 0.0


def spectral_radius(F, k: int = 256) -> float:
    """Spectral radius estimate from norms of matrix powers.

    Uses the refined Gelfand ratio ``(||F^{2k}|| / ||F^k||)^{1/k}``, which
    removes the polynomial prefactor of non-diagonalizable blocks to first
    order.  Powers are renormalized as they are formed so large ``k`` cannot
    overflow.  Accurate to O(1/k) in log scale; nilpotent input returns 0.
    """
    F = as_mat(F)
    if F.shape[0] != F.shape[1]:
        raise DimensionError("spectral radius needs a square matrix")
    if k < 32:
        raise ValueError("k must be at least 32")
    P = np.eye(F.shape[0])
    log_scale = 0.0
    log_norm_k = None
    for i in range(1, 2 * k + 1):
        P = P @ F
        s = np.max(np.abs(P))
        if s == 0.0:
            return 0.0
        P /= s
        log_scale += np.log(s)
        if i == k:
            log_norm_k = log_scale + np.log(spectral_norm(P))
    log_norm_2k = log_scale + np.log(spectral_norm(P))
    return float(np.exp((log_norm_2k - log_norm_k) / k))


def gelfand_estimate(F, k: int) -> float:
    """Plain ``||F^k||^{1/k}`` (kept for comparison with the refined estimate)."""
    F = as_mat(F)
    P = np.eye(F.shape[0])
    log_scale = 0.0
    for _ in range(k):
        P = P @ F
        s = np.max(np.abs(P))
        if s == 0.0:
            return 0.0
        P /= s
        log_scale += np.log(s)
    return float(np.exp((log_scale + np.log(spectral_norm(P))) / k))


def min_eigenvalue(S) -> float:
    S = sym(as_mat(S))
    return float(np.linalg.eigvalsh(S)[0])


def check_psd(S, name: str = "matrix", floor: float = -1e-10) -> np.ndarray:
    """Symmetrize ``S`` and verify its smallest eigenvalue is above ``floor``."""
    S = sym(as_mat(S))
    scale = max(1.0, float(np.max(np.abs(S))))
    if min_eigenvalue(S) < floor * scale:
        raise ValueError(f"{name} is not positive semidefinite")
    return S


def mat_to_json(M) -> dict:
    M = as_mat(M)
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": [float(x) for x in M.ravel()]}


def mat_from_json(obj) -> np.ndarray:
    if isinstance(obj, dict):
        rows, cols, data = obj["rows"], obj["cols"], obj["data"]
        if len(data) != rows * cols:
            raise DimensionError(f"data length {len(data)} != {rows}x{cols}")
        return as_mat(np.asarray(data, dtype=float).reshape(rows, cols))
    return as_mat(obj)
