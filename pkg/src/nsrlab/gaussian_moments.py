"""Exact moments of centered Gaussian vectors.

``is_moment`` evaluates E[prod_i x^T A_i x] for x ~ N(0, Omega) through joint
cumulants of the quadratic forms: the cumulant of a block of forms is
2^{j-1} times the sum of tr(Omega A_{i1} Omega A_{i2} ... ) over the cyclic
orderings of the block, and the moment sums products of block cumulants over
all set partitions.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import permutations
from math import prod

import numpy as np

from .core_math import DimensionError, as_diag_cov, sym

MAX_FACTORS = 8
MAX_PAIRING_DEGREE = 12


def set_partitions(k: int):
    """Yield the set partitions of ``range(k)`` as lists of blocks.

    Enumeration walks restricted-growth strings a_0..a_{k-1} with a_0 = 0 and
    a_i <= 1 + max(a_0..a_{i-1}).
    """
    if k == 0:
        yield []
        return
    a = [0] * k

    def rec(i, top):
        if i == k:
            blocks = [[] for _ in range(top + 1)]
            for idx, b in enumerate(a):
                blocks[b].append(idx)
            yield blocks
            return
        for b in range(top + 2):
            a[i] = b
            yield from rec(i + 1, max(top, b))

    yield from rec(1, 0)


@lru_cache(maxsize=None)
def _partition_masks(k: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for blocks in set_partitions(k):
        out.append(tuple(sum(1 << i for i in b) for b in blocks))
    return tuple(out)


def _omega_products(omega, factors):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim == 1:
        n = omega.shape[0]
        mats = [sym(np.asarray(A, dtype=float)) for A in factors]
        for A in mats:
            if A.shape != (n, n):
                raise DimensionError(f"factor shape {A.shape} does not match covariance dim {n}")
        return [omega[:, None] * A for A in mats]
    omega = sym(omega)
    n = omega.shape[0]
    out = []
    for A in factors:
        A = sym(np.asarray(A, dtype=float))
        if A.shape != (n, n):
            raise DimensionError(f"factor shape {A.shape} does not match covariance dim {n}")
        out.append(omega @ A)
    return out


def _block_cumulants(X: list[np.ndarray]) -> dict[int, float]:
    """Joint cumulants of the quadratic forms for every nonempty subset."""
    k = len(X)
    kappa: dict[int, float] = {}
    for mask in range(1, 1 << k):
        idx = [i for i in range(k) if mask >> i & 1]
        if len(idx) == 1:
            kappa[mask] = float(np.trace(X[idx[0]]))
            continue
        first, rest = idx[0], idx[1:]
        total = 0.0
        for order in permutations(rest):
            P = X[first]
            for j in order[:-1]:
                P = P @ X[j]
            # trace of P @ X[last] without forming the product
            total += float(np.sum(P * X[order[-1]].T))
        kappa[mask] = 2.0 ** (len(idx) - 1) * total
    return kappa


def is_moment(omega, factors) -> float:
    """E[prod_i (x^T A_i x)] for x ~ N(0, omega).

    ``omega`` is a covariance matrix, or a 1-D array of variances for a
    diagonal covariance.  Factors are symmetrized on entry.
    """
    factors = list(factors)
    k = len(factors)
    if k < 1:
        raise ValueError("need at least one factor")
    if k > MAX_FACTORS:
        raise ValueError(f"at most {MAX_FACTORS} factors supported, got {k}")
    X = _omega_products(omega, factors)
    kappa = _block_cumulants(X)
    total = 0.0
    for blocks in _partition_masks(k):
        total += prod(kappa[b] for b in blocks)
    return total


def _univariate_moment(a: int, v: float) -> float:
    if a % 2:
        return 0.0
    df = 1.0
    for j in range(a - 1, 0, -2):
        df *= j
    return df * v ** (a // 2)


def gaussian_monomial_moment(alpha, variances) -> float:
    """E[prod xi_i^alpha_i] for independent xi_i ~ N(0, variances[i])."""
    alpha = [int(a) for a in alpha]
    v = as_diag_cov(variances)
    if len(alpha) != len(v):
        raise DimensionError("multi-index and variance vector lengths differ")
    if any(a < 0 for a in alpha):
        raise ValueError("exponents must be nonnegative")
    return prod(_univariate_moment(a, float(s)) for a, s in zip(alpha, v))


def double_factorial_table(max_degree: int) -> np.ndarray:
    """``table[a] = E[z^a]`` for z ~ N(0, 1), a = 0..max_degree."""
    t = np.zeros(max_degree + 1)
    t[0] = 1.0
    for a in range(2, max_degree + 1, 2):
        t[a] = t[a - 2] * (a - 1)
    return t


def monomial_moments(exponents: np.ndarray, variances) -> np.ndarray:
    """Vectorized ``gaussian_monomial_moment`` over the rows of ``exponents``."""
    E = np.asarray(exponents, dtype=np.int64)
    v = as_diag_cov(variances)
    if E.ndim != 2 or E.shape[1] != len(v):
        raise DimensionError("exponent matrix must have one column per variable")
    if E.size == 0:
        return np.ones(E.shape[0])
    table = double_factorial_table(int(E.max()))
    out = np.ones(E.shape[0])
    for j in range(E.shape[1]):
        e = E[:, j]
        out *= table[e] * v[j] ** (e / 2.0)
    return out


def monomial_moment_general(alpha, cov) -> float:
    """Isserlis sum over perfect matchings for a general covariance.

    Meant as a small-degree oracle; total degree is capped at 12.
    """
    alpha = [int(a) for a in alpha]
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (len(alpha), len(alpha)):
        raise DimensionError("covariance shape does not match multi-index")
    deg = sum(alpha)
    if deg > MAX_PAIRING_DEGREE:
        raise ValueError(f"total degree {deg} exceeds pairing cap {MAX_PAIRING_DEGREE}")
    if deg % 2:
        return 0.0
    idx = [i for i, a in enumerate(alpha) for _ in range(a)]

    def pairings(items):
        if not items:
            return 1.0
        first, rest = items[0], items[1:]
        total = 0.0
        for j in range(len(rest)):
            c = cov[first, rest[j]]
            if c != 0.0:
                total += c * pairings(rest[:j] + rest[j + 1 :])
        return total

    return float(pairings(idx))


# Moments of w(xi) = sum_i (xi_i^2 - 1)^2 for xi ~ N(0, I_m).


def w_mean(m: int) -> float:
    return 2.0 * m


def w_times_linear_sq(m: int, u) -> float:
    """E[w(xi) (xi^T u)^2]."""
    u = np.asarray(u, dtype=float)
    return (2.0 * m + 8.0) * float(u @ u)


def w_times_quad(m: int, M) -> float:
    """E[w(xi) (xi^T M xi)]."""
    return (2.0 * m + 8.0) * float(np.trace(np.asarray(M, dtype=float)))


def w_times_quad_sq(m: int, M) -> float:
    """E[w(xi) (xi^T M xi)^2] for symmetric M."""
    M = sym(np.atleast_2d(np.asarray(M, dtype=float)))
    tr = float(np.trace(M))
    return (
        (4.0 * m + 32.0) * float(np.sum(M * M))
        + (2.0 * m + 16.0) * tr**2
        + 24.0 * float(np.sum(np.diag(M) ** 2))
    )


def gaussian_norm4(sigma) -> float:
    """E||eps||^4 for eps ~ N(0, diag(sigma))."""
    v = as_diag_cov(sigma)
    return float(v.sum() ** 2 + 2.0 * np.sum(v**2))


def qscore_norm4(m: int) -> float:
    """E||q||^4 for the log-std score q = xi*xi - 1, xi ~ N(0, I_m)."""
    if m < 1:
        raise ValueError("m must be positive")
    return 4.0 * m * (m + 14)
