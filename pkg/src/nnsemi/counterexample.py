"""Truncated construction of the projection semigroup {P, Q_1, Q_2, ...} on l^2.

With ``c = 1/sqrt(2)`` and ``f = (c, c^2, c^3, ...)``, ``g_m`` keeps the
coordinates of ``f`` on alternate segments of length ``2^m`` (first segment
kept) and ``h_m = f - g_m``.  ``P = f f^T`` and
``Q_m = g_m g_m^T / |g_m|^2 + h_m h_m^T / |h_m|^2``; every product of two
distinct members equals ``P``, yet the (1, 1) entries of the ``Q_m`` are
pairwise distinct.

Each identity is checked two ways.  The dense route builds ``N x N`` float
matrices and measures Frobenius residuals (rounding-dominated, ~1e-15).  The
exact route uses that every vector here is ``f`` restricted to a support
set, so every inner product is a finite sum of powers ``2^-i`` and every
matrix is a short combination of outer products; residual norms then come
out as exact rationals that expose the ``2^-N`` truncation tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import TruncationTooShort
from .operators import is_projection, numerical_rank

C = 1.0 / math.sqrt(2.0)


def tol_for(N: int) -> float:
    """Pass threshold for a truncation length: ``max(1e-12, 2^(8 - N/2))``."""
    return max(1e-12, 2.0 ** (8 - N / 2))


def segment_mask(N: int, m: int) -> np.ndarray:
    """True at 1-based coordinate ``i`` iff ``(i - 1) // 2^m`` is even."""
    i = np.arange(1, N + 1)
    return ((i - 1) >> m) % 2 == 0


def f_coords(N: int) -> np.ndarray:
    # c^i evaluated in closed form, not by repeated multiplication
    return 2.0 ** (-np.arange(1, N + 1) / 2.0)


@dataclass(frozen=True)
class ExampleInstance:
    N: int
    m_max: int
    f: np.ndarray
    g: dict
    h: dict
    g_norm2: dict
    h_norm2: dict
    P: np.ndarray
    Q: dict
    masks: dict = field(repr=False)

    @property
    def ms(self) -> range:
        return range(1, self.m_max + 1)

    def members(self) -> list:
        """``[P, Q_1, ..., Q_m_max]``."""
        return [self.P] + [self.Q[m] for m in self.ms]


def build_instance(N: int = 256, m_max: int = 5) -> ExampleInstance:
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if N < 2 ** (m_max + 1):
        raise TruncationTooShort(f"N={N} holds fewer than two segments of length 2^{m_max} (need N >= {2 ** (m_max + 1)})")
    f = f_coords(N)
    g, h, gn, hn, Q, masks = {}, {}, {}, {}, {}, {}
    for m in range(1, m_max + 1):
        mask = segment_mask(N, m)
        masks[m] = mask
        g[m] = np.where(mask, f, 0.0)
        h[m] = f - g[m]
        gn[m] = float(g[m] @ g[m])
        hn[m] = float(h[m] @ h[m])
        Q[m] = np.outer(g[m], g[m]) / gn[m] + np.outer(h[m], h[m]) / hn[m]
    for a in [f, *g.values(), *h.values(), *Q.values()]:
        a.setflags(write=False)
    P = np.outer(f, f)
    P.setflags(write=False)
    return ExampleInstance(N, m_max, f, g, h, gn, hn, P, Q, masks)


# --- exact route -----------------------------------------------------------
#
# A "vector" is a support bitmask over 1-based coordinates 1..N, standing for
# f restricted to that support.  Bit i-1 set <=> coordinate i present.


def _support_bits(mask: np.ndarray) -> int:
    bits = 0
    for i in np.flatnonzero(mask):
        bits |= 1 << int(i)
    return bits


@lru_cache(maxsize=None)
def _dot(a: int, b: int, N: int) -> Fraction:
    """Exact ``sum_{i in a & b} 2^-i`` (1-based i)."""
    common = a & b
    num = 0
    i = 0
    while common:
        if common & 1:
            num += 1 << (N - (i + 1))
        common >>= 1
        i += 1
    return Fraction(num, 1 << N)


class _Exact:
    """Exact linear combinations of outer products ``a b^T``."""

    def __init__(self, N: int, terms):
        self.N = N
        self.terms = [(Fraction(c), a, b) for c, a, b in terms]

    def __matmul__(self, other):
        out = []
        for c1, a1, b1 in self.terms:
            for c2, a2, b2 in other.terms:
                k = c1 * c2 * _dot(b1, a2, self.N)
                if k:
                    out.append((k, a1, b2))
        return _Exact(self.N, out)

    def __sub__(self, other):
        return _Exact(self.N, self.terms + [(-c, a, b) for c, a, b in other.terms])

    def fro2(self) -> Fraction:
        total = Fraction(0)
        for c1, a1, b1 in self.terms:
            for c2, a2, b2 in self.terms:
                total += c1 * c2 * _dot(a1, a2, self.N) * _dot(b1, b2, self.N)
        return total

    def fro(self) -> float:
        return _sqrt(self.fro2())


def _sqrt(x: Fraction) -> float:
    if x <= 0:
        return 0.0
    # log-domain so tails far below float range still come out (as 0.0 only
    # when the value itself underflows)
    return math.exp(0.5 * (math.log(x.numerator) - math.log(x.denominator)))


def _to_float(x: Fraction) -> float:
    if x == 0:
        return 0.0
    sign = -1.0 if x < 0 else 1.0
    x = abs(x)
    return sign * math.exp(math.log(x.numerator) - math.log(x.denominator))


class _ExactModel:
    def __init__(self, inst: ExampleInstance):
        self.N = inst.N
        self.F = (1 << inst.N) - 1
        self.G = {m: _support_bits(inst.masks[m]) for m in inst.ms}
        self.H = {m: self.F & ~self.G[m] for m in inst.ms}

    def dot(self, a: int, b: int) -> Fraction:
        return _dot(a, b, self.N)

    def P(self) -> _Exact:
        return _Exact(self.N, [(1, self.F, self.F)])

    def Q(self, m) -> _Exact:
        g, h = self.G[m], self.H[m]
        return _Exact(self.N, [(1 / self.dot(g, g), g, g), (1 / self.dot(h, h), h, h)])


def closed_norms(m: int) -> tuple:
    """Exact infinite-dimensional ``(|g_m|^2, |h_m|^2)``."""
    t = Fraction(1, 2 ** (2**m))  # c^(2^(m+1))
    return 1 / (t + 1), t / (t + 1)


# --- verifications ---------------------------------------------------------


@dataclass(frozen=True)
class NormCheck:
    m: int
    g_norm2: float
    h_norm2: float
    g_closed: float
    h_closed: float
    g_residual: float
    h_residual: float
    g_residual_exact: float
    h_residual_exact: float
    tail_bound: float

    def ok(self, tol: float) -> bool:
        return max(self.g_residual, self.h_residual) <= tol + self.tail_bound


def verify_norms(inst: ExampleInstance) -> list:
    ex = _ExactModel(inst)
    out = []
    for m in inst.ms:
        gc, hc = closed_norms(m)
        ge, he = ex.dot(ex.G[m], ex.G[m]), ex.dot(ex.H[m], ex.H[m])
        out.append(
            NormCheck(
                m=m,
                g_norm2=inst.g_norm2[m],
                h_norm2=inst.h_norm2[m],
                g_closed=float(gc),
                h_closed=float(hc),
                g_residual=abs(inst.g_norm2[m] - float(gc)),
                h_residual=abs(inst.h_norm2[m] - float(hc)),
                g_residual_exact=_to_float(abs(ge - gc)),
                h_residual_exact=_to_float(abs(he - hc)),
                tail_bound=2.0**-inst.N,
            )
        )
    return out


INNER_PRODUCT_IDENTITIES = (
    "f.g_m = |g_m|^2",
    "f.h_m = |h_m|^2",
    "g_m.g_n = |g_m|^2 |g_n|^2",
    "g_m.h_n = |g_m|^2 |h_n|^2",
    "h_m.g_n = |h_m|^2 |g_n|^2",
    "h_m.h_n = |h_m|^2 |h_n|^2",
)


def verify_inner_products(inst: ExampleInstance, m: int, n: int) -> dict:
    """Residuals of the six inner-product identities for ``m < n``.

    Norms on the right-hand side are the truncated ones.  Each value is a
    pair ``(dense, exact)``.
    """
    if not 1 <= m < n <= inst.m_max:
        raise ValueError(f"need 1 <= m < n <= {inst.m_max}, got m={m}, n={n}")
    f, g, h, gn, hn = inst.f, inst.g, inst.h, inst.g_norm2, inst.h_norm2
    dense = [
        f @ g[m] - gn[m],
        f @ h[m] - hn[m],
        g[m] @ g[n] - gn[m] * gn[n],
        g[m] @ h[n] - gn[m] * hn[n],
        h[m] @ g[n] - hn[m] * gn[n],
        h[m] @ h[n] - hn[m] * hn[n],
    ]
    ex = _ExactModel(inst)
    d = ex.dot
    F, G, H = ex.F, ex.G, ex.H
    ngm, nhm, ngn, nhn = d(G[m], G[m]), d(H[m], H[m]), d(G[n], G[n]), d(H[n], H[n])
    exact = [
        d(F, G[m]) - ngm,
        d(F, H[m]) - nhm,
        d(G[m], G[n]) - ngm * ngn,
        d(G[m], H[n]) - ngm * nhn,
        d(H[m], G[n]) - nhm * ngn,
        d(H[m], H[n]) - nhm * nhn,
    ]
    return {
        name: (abs(float(a)), abs(_to_float(b)))
        for name, a, b in zip(INNER_PRODUCT_IDENTITIES, dense, exact)
    }


@dataclass(frozen=True)
class SemigroupCheck:
    dense: dict
    exact: dict

    @property
    def max_residual(self) -> float:
        return max(self.dense.values())

    @property
    def max_exact_residual(self) -> float:
        return max(self.exact.values())


def _fro(a) -> float:
    return float(np.linalg.norm(a, "fro"))


def verify_semigroup(inst: ExampleInstance) -> SemigroupCheck:
    """Frobenius residuals of ``P^2 = P``, ``Q_m^2 = Q_m``, ``P Q_m = Q_m P = P``
    and ``Q_m Q_n = Q_n Q_m = P`` (``m < n``)."""
    if inst.m_max < 2:
        raise ValueError("need m_max >= 2 to compare distinct Q_m")
    P, Q = inst.P, inst.Q
    ex = _ExactModel(inst)
    eP = ex.P()
    eQ = {m: ex.Q(m) for m in inst.ms}
    dense = {"P^2 - P": _fro(P @ P - P)}
    exact = {"P^2 - P": (eP @ eP - eP).fro()}
    for m in inst.ms:
        dense[f"Q{m}^2 - Q{m}"] = _fro(Q[m] @ Q[m] - Q[m])
        dense[f"P Q{m} - P"] = _fro(P @ Q[m] - P)
        dense[f"Q{m} P - P"] = _fro(Q[m] @ P - P)
        exact[f"Q{m}^2 - Q{m}"] = (eQ[m] @ eQ[m] - eQ[m]).fro()
        exact[f"P Q{m} - P"] = (eP @ eQ[m] - eP).fro()
        exact[f"Q{m} P - P"] = (eQ[m] @ eP - eP).fro()
    for m in inst.ms:
        for n in inst.ms:
            if m < n:
                for a, b in ((m, n), (n, m)):
                    key = f"Q{a} Q{b} - P"
                    dense[key] = _fro(Q[a] @ Q[b] - P)
                    exact[key] = (eQ[a] @ eQ[b] - eP).fro()
    return SemigroupCheck(dense=dense, exact=exact)


@dataclass(frozen=True)
class DiagonalFamily:
    values: list
    closed_forms: list
    max_residual: float
    pairwise_distinct: bool
    strictly_decreasing_in_m: bool
    all_exceed_c2: bool


def diagonal_family_F1(inst: ExampleInstance) -> DiagonalFamily:
    """(1, 1) entries of ``P, Q_1, ..., Q_m_max`` against ``c^2`` and
    ``c^2 (c^(2^(m+1)) + 1)``."""
    values = [float(inst.P[0, 0])] + [float(inst.Q[m][0, 0]) for m in inst.ms]
    closed = [0.5] + [0.5 * (2.0 ** -(2**m) + 1.0) for m in inst.ms]
    qs = values[1:]
    return DiagonalFamily(
        values=values,
        closed_forms=closed,
        max_residual=max(abs(a - b) for a, b in zip(values, closed)),
        pairwise_distinct=len(set(values)) == len(values),
        strictly_decreasing_in_m=all(a > b for a, b in zip(qs, qs[1:])),
        all_exceed_c2=all(q > 0.5 for q in qs),
    )


def projection_report(inst: ExampleInstance, tol: float) -> dict:
    """Per-member projection verdict and numerical rank."""
    out = {"P": (is_projection(inst.P, tol), numerical_rank(inst.P))}
    for m in inst.ms:
        out[f"Q{m}"] = (is_projection(inst.Q[m], tol), numerical_rank(inst.Q[m]))
    return out
