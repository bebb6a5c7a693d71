"""Sparse multivariate polynomials with real coefficients.

Terms live in two parallel arrays: an integer exponent matrix (one row per
monomial) and a coefficient vector.  When a polynomial has at most 8
variables, monomials are packed into uint64 keys with 8 bits per variable so
that adding keys multiplies monomials; larger spaces fall back to row-wise
``np.unique``.
"""

from __future__ import annotations

import numpy as np

from ..gaussian_moments import double_factorial_table
from ..types import DegreeCapExceeded

PRUNE = 1e-30
MAX_EXPONENT = 255
PACK_VARS = 8
_CHUNK = 1 << 21


def _pack(exps: np.ndarray) -> np.ndarray:
    shifts = (8 * np.arange(exps.shape[1])).astype(np.uint64)
    return np.bitwise_or.reduce(exps.astype(np.uint64) << shifts, axis=1) if exps.shape[1] else np.zeros(len(exps), np.uint64)


def _unpack(keys: np.ndarray, nv: int) -> np.ndarray:
    shifts = (8 * np.arange(nv)).astype(np.uint64)
    return ((keys[:, None] >> shifts[None, :]) & np.uint64(0xFF)).astype(np.int64)


def _combine(nv: int, exps: np.ndarray, coefs: np.ndarray):
    """Merge duplicate monomials and prune tiny coefficients."""
    if len(coefs) == 0:
        return np.zeros((0, nv), np.int64), np.zeros(0)
    if nv == 0:
        c = np.array([coefs.sum()])
        e = np.zeros((1, 0), np.int64)
    elif nv <= PACK_VARS:
        keys, inv = np.unique(_pack(exps), return_inverse=True)
        c = np.bincount(inv.ravel(), weights=coefs, minlength=len(keys))
        e = _unpack(keys, nv)
    else:
        e, inv = np.unique(exps, axis=0, return_inverse=True)
        c = np.bincount(inv.ravel(), weights=coefs, minlength=len(e))
    keep = np.abs(c) >= PRUNE
    return e[keep].astype(np.int64), c[keep]


class MultiPoly:
    """Immutable sparse polynomial in ``num_vars`` variables."""

    __slots__ = ("num_vars", "exps", "coefs")

    def __init__(self, num_vars: int, exps=None, coefs=None, _canonical: bool = False):
        self.num_vars = int(num_vars)
        if exps is None:
            exps = np.zeros((0, self.num_vars), np.int64)
            coefs = np.zeros(0)
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, self.num_vars)
        coefs = np.asarray(coefs, dtype=float).ravel()
        if len(exps) != len(coefs):
            raise ValueError("exponent rows and coefficients differ in length")
        if len(exps) and (exps.min() < 0 or exps.max() > MAX_EXPONENT):
            raise DegreeCapExceeded(f"per-variable exponent outside [0, {MAX_EXPONENT}]")
        if not np.all(np.isfinite(coefs)):
            raise ValueError("coefficients must be finite")
        if not _canonical:
            exps, coefs = _combine(self.num_vars, exps, coefs)
        self.exps = exps
        self.coefs = coefs
        self.exps.setflags(write=False)
        self.coefs.setflags(write=False)

    # construction helpers

    @classmethod
    def zero(cls, nv: int) -> "MultiPoly":
        return cls(nv)

    @classmethod
    def constant(cls, nv: int, c: float) -> "MultiPoly":
        return cls(nv, np.zeros((1, nv), np.int64), [c])

    @classmethod
    def variable(cls, nv: int, i: int, c: float = 1.0) -> "MultiPoly":
        e = np.zeros((1, nv), np.int64)
        e[0, i] = 1
        return cls(nv, e, [c])

    @classmethod
    def from_terms(cls, nv: int, terms) -> "MultiPoly":
        """Build from ``[{"exp": [...], "coef": c}, ...]`` or ``[(exp, coef), ...]``."""
        exps, coefs = [], []
        for t in terms:
            e, c = (t["exp"], t["coef"]) if isinstance(t, dict) else t
            if len(e) != nv:
                raise ValueError(f"exponent {e} does not have {nv} entries")
            exps.append(e)
            coefs.append(c)
        return cls(nv, np.array(exps, dtype=np.int64).reshape(-1, nv), coefs)

    def to_terms(self) -> list[dict]:
        return [{"exp": [int(a) for a in e], "coef": float(c)} for e, c in zip(self.exps, self.coefs)]

    # queries

    def __len__(self) -> int:
        return len(self.coefs)

    @property
    def is_zero(self) -> bool:
        return len(self.coefs) == 0

    @property
    def degree(self) -> int:
        return int(self.exps.sum(axis=1).max()) if len(self.coefs) else 0

    def as_dict(self) -> dict[tuple, float]:
        return {tuple(int(a) for a in e): float(c) for e, c in zip(self.exps, self.coefs)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.num_vars == other.num_vars and self.as_dict() == other.as_dict()

    def __repr__(self) -> str:
        return f"MultiPoly(num_vars={self.num_vars}, terms={len(self)}, degree={self.degree})"

    # arithmetic

    def _check(self, other: "MultiPoly"):
        if self.num_vars != other.num_vars:
            raise ValueError(f"variable counts differ: {self.num_vars} vs {other.num_vars}")

    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.num_vars, float(other))
        self._check(other)
        return MultiPoly(self.num_vars, np.vstack([self.exps, other.exps]),
                         np.concatenate([self.coefs, other.coefs]))

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.num_vars, self.exps, -self.coefs, _canonical=True)

    def __sub__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.num_vars, float(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: float) -> "MultiPoly":
        if c == 0.0:
            return MultiPoly(self.num_vars)
        return MultiPoly(self.num_vars, self.exps, self.coefs * float(c))

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return self.scale(float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        out = MultiPoly.constant(self.num_vars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def evaluate(self, X) -> np.ndarray:
        """Value at each row of ``X`` (shape (batch, num_vars))."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.num_vars:
            raise ValueError("evaluation points have the wrong number of coordinates")
        out = np.zeros(X.shape[0])
        if not len(self):
            return out
        maxdeg = int(self.exps.max())
        pw = [np.ones_like(X)]
        for _ in range(maxdeg):
            pw.append(pw[-1] * X)
        pw = np.stack(pw)  # (deg+1, batch, nv)
        for e, c in zip(self.exps, self.coefs):
            term = np.full(X.shape[0], c)
            for j in np.nonzero(e)[0]:
                term = term * pw[e[j], :, j]
            out += term
        return out


def mul(p: MultiPoly, q: MultiPoly) -> MultiPoly:
    p._check(q)
    nv = p.num_vars
    if p.is_zero or q.is_zero:
        return MultiPoly(nv)
    if len(p.exps) and (p.exps.max(axis=0) + q.exps.max(axis=0)).max() > MAX_EXPONENT:
        raise DegreeCapExceeded(f"product exponent exceeds {MAX_EXPONENT}")
    if len(p) < len(q):
        p, q = q, p
    rows = max(1, _CHUNK // len(q))
    parts_e, parts_c = [], []
    packed = 0 < nv <= PACK_VARS
    if packed:
        kq = _pack(q.exps)
    for start in range(0, len(p), rows):
        pe, pc = p.exps[start : start + rows], p.coefs[start : start + rows]
        c = (pc[:, None] * q.coefs[None, :]).ravel()
        if packed:
            keys = (_pack(pe)[:, None] + kq[None, :]).ravel()
            uk, inv = np.unique(keys, return_inverse=True)
            cc = np.bincount(inv.ravel(), weights=c, minlength=len(uk))
            parts_e.append(_unpack(uk, nv))
            parts_c.append(cc)
        else:
            e = (pe[:, None, :] + q.exps[None, :, :]).reshape(-1, nv)
            e, cc = _combine(nv, e, c)
            parts_e.append(e)
            parts_c.append(cc)
    return MultiPoly(nv, np.vstack(parts_e), np.concatenate(parts_c))


def substitute(p: MultiPoly, subs: list[MultiPoly]) -> MultiPoly:
    """Replace variable ``j`` of ``p`` by ``subs[j]``; result lives in the target space."""
    if len(subs) != p.num_vars:
        raise ValueError(f"need {p.num_vars} substitutions, got {len(subs)}")
    if not subs:
        return p
    nv = subs[0].num_vars
    for s in subs:
        if s.num_vars != nv:
            raise ValueError("substituted polynomials must share one variable space")
    powers: dict[tuple[int, int], MultiPoly] = {}

    def power(j: int, a: int) -> MultiPoly:
        if a == 0:
            return MultiPoly.constant(nv, 1.0)
        key = (j, a)
        if key not in powers:
            powers[key] = subs[j] if a == 1 else power(j, a - 1) * subs[j]
        return powers[key]

    out = MultiPoly(nv)
    for e, c in zip(p.exps, p.coefs):
        term = MultiPoly.constant(nv, float(c))
        for j in np.nonzero(e)[0]:
            term = term * power(int(j), int(e[j]))
        out = out + term
    return out


def _moment_tables(variances: np.ndarray, max_deg: int) -> np.ndarray:
    """``tab[j, a] = E[x_j^a]`` for independent centered normals."""
    base = double_factorial_table(max_deg)
    a = np.arange(max_deg + 1)
    return base[None, :] * variances[:, None] ** (a[None, :] / 2.0)


def expect(p: MultiPoly, variances) -> float:
    """E[p(x)] for independent x_j ~ N(0, variances[j])."""
    v = np.asarray(variances, dtype=float)
    if v.shape != (p.num_vars,):
        raise ValueError("one variance per variable required")
    if p.is_zero:
        return 0.0
    tab = _moment_tables(v, int(p.exps.max()))
    m = np.ones(len(p))
    for j in range(p.num_vars):
        m *= tab[j, p.exps[:, j]]
    return float(np.sum(p.coefs * m))


def expect_product(p: MultiPoly, q: MultiPoly, variances) -> float:
    """E[p(x) q(x)] without forming the product polynomial."""
    p._check(q)
    v = np.asarray(variances, dtype=float)
    if v.shape != (p.num_vars,):
        raise ValueError("one variance per variable required")
    if p.is_zero or q.is_zero:
        return 0.0
    tab = _moment_tables(v, int(p.exps.max()) + int(q.exps.max()))
    # only monomial pairs with equal exponent parities have nonzero moments
    bits = 1 << np.arange(p.num_vars, dtype=np.int64)
    sig_p = (p.exps % 2) @ bits
    sig_q = (q.exps % 2) @ bits
    total = []
    for s in np.unique(sig_p):
        ip, iq = np.nonzero(sig_p == s)[0], np.nonzero(sig_q == s)[0]
        if not len(iq):
            continue
        qe, qc = q.exps[iq], q.coefs[iq]
        rows = max(1, _CHUNK // len(iq))
        for start in range(0, len(ip), rows):
            sel = ip[start : start + rows]
            pe, pc = p.exps[sel], p.coefs[sel]
            m = np.ones((len(pe), len(qe)))
            for j in range(p.num_vars):
                m *= tab[j][pe[:, j][:, None] + qe[:, j][None, :]]
            total.append(float(pc @ m @ qc))
    return float(np.sum(total)) if total else 0.0
