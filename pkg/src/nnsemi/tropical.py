"""Max-plus arithmetic and all-pairs supremal walk weights.

Weights live in ``[-inf, inf)``; ``-inf`` marks an absent edge and is
absorbing under addition.  The closure ``W(x, y)`` is the supremum of edge
weight sums over walks ``x -> y`` with at least one edge.  Pairs whose
supremum is ``+inf`` (a strictly positive cycle lies on some walk between
them) are reported in ``WalkClosure.divergent_pairs`` and hold ``+inf`` in
``WalkClosure.entries``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np

from .errors import Divergent

NEG_INF = -math.inf

#: Closure diagonal entries above this are positive cycles; entries in
#: [-CYCLE_TOL, CYCLE_TOL] count as zero-weight cycles.
CYCLE_TOL = 1e-12


@total_ordering
@dataclass(frozen=True)
class ExtReal:
    """A real number or the bottom element ``-inf``."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("ExtReal cannot hold NaN")
        if v == math.inf:
            raise ValueError("ExtReal cannot hold +inf")
        object.__setattr__(self, "value", v)

    @classmethod
    def bottom(cls) -> ExtReal:
        return cls(NEG_INF)

    @property
    def is_bottom(self) -> bool:
        return self.value == NEG_INF

    def __add__(self, other):
        other = other if isinstance(other, ExtReal) else ExtReal(other)
        if self.is_bottom or other.is_bottom:
            return ExtReal(NEG_INF)
        return ExtReal(self.value + other.value)

    __radd__ = __add__

    def __lt__(self, other):
        other = other if isinstance(other, ExtReal) else ExtReal(other)
        return self.value < other.value

    def __float__(self):
        return self.value

    def oplus(self, other) -> ExtReal:
        """Tropical addition (max)."""
        other = other if isinstance(other, ExtReal) else ExtReal(other)
        return self if self.value >= other.value else other


def _as_weight_array(entries) -> np.ndarray:
    a = np.array(entries, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"weight matrix must be square and non-empty, got shape {a.shape}")
    if np.isnan(a).any():
        raise ValueError("weight matrix contains NaN")
    if (a == math.inf).any():
        raise ValueError("weight matrix contains +inf; only -inf marks an absent edge")
    a.setflags(write=False)
    return a


class ExtendedWeightMatrix:
    """Square matrix over ``[-inf, inf)`` holding edge weights ``mu(x, y)``."""

    __slots__ = ("_entries",)

    def __init__(self, entries):
        self._entries = _as_weight_array(entries)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n(self) -> int:
        return self._entries.shape[0]

    def __getitem__(self, xy) -> ExtReal:
        return ExtReal(self._entries[xy])

    def __repr__(self):
        return f"ExtendedWeightMatrix({self._entries.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, ExtendedWeightMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self):
        return hash(self._entries.tobytes())


@dataclass(frozen=True)
class WalkClosure:
    entries: np.ndarray
    divergent_pairs: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def divergent(self) -> bool:
        return bool(self.divergent_pairs)


def _coerce(mu) -> np.ndarray:
    if isinstance(mu, ExtendedWeightMatrix):
        return mu.entries
    return _as_weight_array(mu)


def walk_supremum(mu) -> WalkClosure:
    """All-pairs supremal walk weights (max-plus Kleene plus).

    Uses the closed-semiring Floyd-Warshall sweep
    ``A[i, j] = max(A[i, j], A[i, k] + star(A[k, k]) + A[k, j])`` where
    ``star(a)`` is 0 for a non-positive cycle and ``+inf`` otherwise.  The
    diagonal is never seeded with 0, so ``W(x, x)`` only reflects genuine
    cycles.  Divergent vertices (closure diagonal > ``CYCLE_TOL``) are then
    propagated to pairs by boolean reachability.
    """
    a = np.array(_coerce(mu), dtype=float)
    n = a.shape[0]
    for k in range(n):
        akk = a[k, k]
        through = 0.0 if akk <= CYCLE_TOL else math.inf
        col = a[:, k].copy()
        row = a[k, :].copy()
        rows = np.flatnonzero(col > NEG_INF)
        cols = np.flatnonzero(row > NEG_INF)
        if rows.size == 0 or cols.size == 0:
            continue
        cand = col[rows, None] + through + row[None, cols]
        block = a[np.ix_(rows, cols)]
        a[np.ix_(rows, cols)] = np.maximum(block, cand)

    diverging = np.flatnonzero(np.diag(a) > CYCLE_TOL)
    pairs: tuple = ()
    if diverging.size:
        reach = a > NEG_INF
        into = reach[:, diverging] | (np.arange(n)[:, None] == diverging[None, :])
        out = reach[diverging, :] | (diverging[:, None] == np.arange(n)[None, :])
        # a divergent vertex v needs x ->* v ->* y with at least one edge overall;
        # v itself lies on a cycle, so x = v = y is covered by that cycle.
        bad = (into.astype(np.int64) @ out.astype(np.int64)) > 0
        a[bad] = math.inf
        pairs = tuple((int(x), int(y)) for x, y in zip(*np.nonzero(bad)))
    a.setflags(write=False)
    return WalkClosure(entries=a, divergent_pairs=pairs)


def assert_no_divergence(w: WalkClosure) -> WalkClosure:
    """Return ``w`` unchanged, or raise :class:`Divergent` with its bad pairs."""
    if w.divergent_pairs:
        raise Divergent(w.divergent_pairs)
    return w
