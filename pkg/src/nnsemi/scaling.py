"""Potentials and diagonal scaling vectors synthesized from walk suprema.

Additive side: a potential ``rho`` with ``W(x, y) <= rho(x) - rho(y)`` read
off one row or column of the walk closure, and the bump that lifts every
weight below ``-K`` to ``-K`` without pushing any walk supremum above ``K``.

Multiplicative side: the same constructions pushed through ``exp``.  For a
nonnegative ``f`` the closure ``C_f(x, y)`` is the supremum of products
``f(x, x1) f(x1, x2) ... f(xk, y)`` (``k = 0`` is the single edge), and a
vector ``d > 0`` with ``f(x, y) <= C_f(x, y) <= d(x) / d(y)`` comes from one
row or column of ``C_f``.  Everything multiplicative runs in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional

import numpy as np

from .errors import BasepointUnusable, Divergent, PreconditionViolated
from .tropical import ExtendedWeightMatrix, WalkClosure, assert_no_divergence, walk_supremum

Orientation = Literal["into", "out"]

DEFAULT_TOL = 1e-9
DEFAULT_RTOL = 1e-10


def as_nonneg_matrix(f, *, allow_inf=False) -> np.ndarray:
    """Validate ``f`` as a square, finite, entrywise nonnegative matrix.

    Returns a read-only float copy.
    """
    a = np.array(f, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if np.isnan(a).any():
        raise ValueError("matrix contains NaN")
    if not allow_inf and np.isinf(a).any():
        raise ValueError("matrix contains an infinite entry")
    if (a < 0).any():
        raise ValueError("matrix has a negative entry")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AdditivePotential:
    rho: np.ndarray
    basepoint: int
    orientation: Orientation

    def __post_init__(self):
        if not np.isfinite(self.rho).all():
            raise ValueError("potential entries must be finite")

    def max_violation(self, w) -> float:
        """Largest ``W(x, y) - rho(x) + rho(y)`` over pairs with finite ``W``."""
        w = w.entries if isinstance(w, WalkClosure) else np.asarray(w, dtype=float)
        finite = np.isfinite(w)
        if not finite.any():
            return -math.inf
        slack = w - self.rho[:, None] + self.rho[None, :]
        return float(slack[finite].max())


@dataclass(frozen=True)
class ScalingVector:
    d: np.ndarray
    bounds: Optional[tuple] = None
    basepoint: Optional[int] = None
    orientation: Optional[Orientation] = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 1 or not np.isfinite(d).all() or (d <= 0).any():
            raise ValueError("scaling vector entries must be finite and > 0")
        if self.bounds is not None:
            lo, hi = self.bounds
            if d.min() < lo - 1e-12 or d.max() > hi + 1e-12:
                raise ValueError(f"scaling vector leaves its certified range [{lo}, {hi}]")

    def __len__(self):
        return len(self.d)

    def normalized(self) -> np.ndarray:
        """``d / d[0]``: the same certificate with first entry 1."""
        return self.d / self.d[0]

    def domination_ratio(self, f) -> float:
        """``max f(x, y) d(y) / d(x)``; at most 1 when ``d`` dominates ``f``."""
        f = np.asarray(f, dtype=float)
        return float((f * self.d[None, :] / self.d[:, None]).max())


class MultClosure(NamedTuple):
    values: np.ndarray
    divergent_pairs: tuple


def potential_from_basepoint(w: WalkClosure, x0: Optional[int] = None) -> AdditivePotential:
    """Potential ``rho`` dominating ``w`` through one basepoint.

    Into the basepoint, ``rho(x) = W(x, x0)``; out of it, ``rho(x) = -W(x0, x)``.
    The first needs the column ``W(., x0)`` finite, the second the row.  With
    ``x0=None`` the first admissible index is used, into preferred over out.
    """
    assert_no_divergence(w)
    entries = w.entries
    candidates = range(w.n) if x0 is None else [x0]
    for b in candidates:
        if not 0 <= b < w.n:
            raise IndexError(f"basepoint {b} out of range for n={w.n}")
        col, row = entries[:, b], entries[b, :]
        if np.isfinite(col).all():
            return AdditivePotential(rho=col.copy(), basepoint=b, orientation="into")
        if np.isfinite(row).all():
            return AdditivePotential(rho=-row, basepoint=b, orientation="out")
    where = "any basepoint" if x0 is None else f"basepoint {x0 + 1}"
    raise BasepointUnusable(f"no finite row or column of the walk closure at {where}")


def bump(mu, K: float, tol: float = 1e-12) -> ExtendedWeightMatrix:
    """Raise every weight below ``-K`` (including absent edges) to ``-K``.

    Requires ``W_mu <= K`` everywhere; then ``mu <= lambda`` and
    ``W_mu <= W_lambda <= K``.
    """
    if not K > 0:
        raise ValueError("K must be positive")
    mu = mu if isinstance(mu, ExtendedWeightMatrix) else ExtendedWeightMatrix(mu)
    w = walk_supremum(mu)
    if w.divergent:
        raise PreconditionViolated(f"walk supremum diverges at {len(w.divergent_pairs)} pair(s)")
    top = float(w.entries.max())
    if top > K + tol:
        raise PreconditionViolated(f"walk supremum {top!r} exceeds K={K!r}")
    return ExtendedWeightMatrix(np.maximum(mu.entries, -K))


def bounded_potential(mu, K: float) -> AdditivePotential:
    """Potential with entries in ``[-K, K]``, via :func:`bump`."""
    lam = bump(mu, K)
    return potential_from_basepoint(walk_supremum(lam), 0)


def _log(f: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(f)


def mult_walk_supremum(f) -> MultClosure:
    """Supremal walk products of a nonnegative matrix, via the log domain.

    Divergent pairs (a cycle with product > 1 is reachable) hold ``inf``.
    """
    f = as_nonneg_matrix(f)
    w = walk_supremum(_log(f))
    c = np.exp(w.entries)
    c.setflags(write=False)
    return MultClosure(c, w.divergent_pairs)


def scaling_from_basepoint(c, x0: Optional[int] = None) -> ScalingVector:
    """Scaling vector from one column (``d(x) = C(x, x0)``) or row
    (``d(x) = 1 / C(x0, x)``) of a multiplicative closure.

    Then ``C(x, y) <= d(x) / d(y)`` because ``C`` is compressed.
    """
    if isinstance(c, MultClosure):
        if c.divergent_pairs:
            raise Divergent(c.divergent_pairs)
        c = c.values
    c = as_nonneg_matrix(c, allow_inf=True)
    bad = np.argwhere(np.isinf(c))
    if bad.size:
        raise Divergent([tuple(p) for p in bad])
    n = c.shape[0]
    candidates = range(n) if x0 is None else [x0]
    for b in candidates:
        if not 0 <= b < n:
            raise IndexError(f"basepoint {b} out of range for n={n}")
        if (c[:, b] > 0).all():
            return ScalingVector(d=c[:, b].copy(), basepoint=b, orientation="into")
        if (c[b, :] > 0).all():
            return ScalingVector(d=1.0 / c[b, :], basepoint=b, orientation="out")
    where = "any basepoint" if x0 is None else f"basepoint {x0 + 1}"
    raise BasepointUnusable(f"closure has a zero in every candidate row and column at {where}")


def bounded_scaling(f, M: float, rtol: float = DEFAULT_RTOL) -> ScalingVector:
    """Scaling vector with entries in ``[1/M, M]`` dominating ``f``.

    Entries of ``f`` below ``1/M`` are lifted to ``1/M`` (the multiplicative
    bump); the lifted matrix is strictly positive and still has walk
    products at most ``M``, so any basepoint works and its column lies in
    ``[1/M, M]``.
    """
    if not M >= 1:
        raise ValueError("M must be >= 1")
    f = as_nonneg_matrix(f)
    cf = mult_walk_supremum(f)
    if cf.divergent_pairs:
        raise PreconditionViolated(f"C_f diverges at {len(cf.divergent_pairs)} pair(s)")
    top = float(cf.values.max())
    if top > M * (1 + rtol):
        raise PreconditionViolated(f"max C_f = {top!r} exceeds M={M!r}")
    lifted = np.maximum(f, 1.0 / M)
    cl = mult_walk_supremum(lifted)
    if cl.divergent_pairs:
        raise PreconditionViolated("lifted matrix diverges; C_f bound not met")
    d = scaling_from_basepoint(cl, 0).d
    lo, hi = 1.0 / M, float(M)
    if (d < lo * (1 - rtol)).any() or (d > hi * (1 + rtol)).any():
        raise PreconditionViolated("scaling vector left [1/M, M]; C_f bound not met")
    # log/exp round trip can overshoot the bounds by an ulp
    return ScalingVector(d=np.clip(d, lo, hi), bounds=(lo, hi), basepoint=0, orientation="into")


def compression_excess(f, tol: float = DEFAULT_TOL, rtol: float = DEFAULT_RTOL) -> float:
    """``max f(x, y) f(y, z) - f(x, z) - tol - rtol f(x, z)`` over all triples."""
    f = np.asarray(f, dtype=float)
    if not np.isfinite(f).all():
        raise ValueError("compression is only defined for finite matrices")
    n = f.shape[0]
    best = np.zeros_like(f)
    for y in range(n):
        np.maximum(best, np.outer(f[:, y], f[y, :]), out=best)
    return float((best - f - tol - rtol * np.abs(f)).max())


def is_compressed(f, tol: float = DEFAULT_TOL, rtol: float = DEFAULT_RTOL) -> bool:
    """True iff ``f(x, y) f(y, z) <= f(x, z)`` for all triples, within tolerance."""
    return compression_excess(f, tol, rtol) <= 0.0
