"""Finitely generated semigroups of nonnegative matrices.

Closure enumeration, indecomposability, entry-wise suprema and diagonal
scaling certificates ``f(x, y) <= d(x) / d(y)`` holding across a whole
semigroup, plus the diagonal similarity that makes binary-diagonal
semigroups binary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    Divergent,
    NotBinaryDiagonal,
    NotIndecomposable,
    PreconditionViolated,
    RescaleFailed,
)
from .scaling import (
    DEFAULT_TOL,
    ScalingVector,
    as_nonneg_matrix,
    bounded_scaling,
    mult_walk_supremum,
    scaling_from_basepoint,
)

log = logging.getLogger(__name__)

DEFAULT_CAP = 10_000
DEFAULT_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class CompositionRule:
    """How two semigroup elements compose.

    ``standard``: the matrix product ``sum_z f(x, z) g(z, y)``.
    ``atom-weighted``: kernels over atoms of measure ``w(z)``, i.e.
    ``sum_z f(x, z) w(z) g(z, y)``.  Weights must be >= 1 for the result to
    dominate ``f(x, z) g(z, y)``; pass ``validate=False`` to build a rule
    that deliberately breaks this.
    """

    kind: Literal["standard", "atom-weighted"] = "standard"
    atom_weights: Optional[tuple] = None
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("standard", "atom-weighted"):
            raise ValueError(f"unknown composition kind {self.kind!r}")
        if self.kind == "atom-weighted":
            if self.atom_weights is None:
                raise ValueError("atom-weighted composition needs atom_weights")
            w = tuple(float(x) for x in self.atom_weights)
            object.__setattr__(self, "atom_weights", w)
            if self.validate and min(w) < 1:
                raise ValueError("atom weights must all be >= 1")
        elif self.atom_weights is not None:
            raise ValueError("standard composition takes no atom_weights")

    @classmethod
    def standard(cls) -> CompositionRule:
        return cls()

    @classmethod
    def atom_weighted(cls, weights, validate: bool = True) -> CompositionRule:
        return cls("atom-weighted", tuple(weights), validate)

    def compose(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        if self.kind == "standard":
            return f @ g
        return (f * np.asarray(self.atom_weights)[None, :]) @ g


STANDARD = CompositionRule()


@dataclass(frozen=True)
class SemigroupClosure:
    elements: tuple
    generators: tuple
    status: Literal["complete", "capped"]
    composition: CompositionRule = STANDARD
    cap: Optional[int] = None
    reason: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    @property
    def n(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)

    def generator_matrices(self) -> list:
        return [self.elements[i] for i in self.generators]

    def stack(self) -> np.ndarray:
        return np.stack(self.elements)


@dataclass(frozen=True)
class SupFunction:
    s: np.ndarray
    exact: bool


@dataclass(frozen=True)
class DominationCertificate:
    d: ScalingVector
    verified_against: str
    max_violation: float
    sup: Optional[SupFunction] = None
    sup_uv: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.max_violation <= 1 + 1e-9


@dataclass(frozen=True)
class BoundReport:
    s: np.ndarray
    global_max: float
    lower_bound: bool


class MatrixIndex:
    """Tolerance-aware set of matrices.

    Each matrix is keyed by the bucket of a fixed positive projection of its
    entries.  Matrices within ``tol`` in max-abs norm project to within
    ``tol * sum(weights)``, which is the bucket width, so checking the
    neighbouring buckets finds every candidate duplicate.
    """

    def __init__(self, n: int, tol: float):
        rng = np.random.default_rng(0x5EED)
        self.weights = rng.uniform(1.0, 2.0, size=n * n)
        self.tol = tol
        self.width = max(tol * float(self.weights.sum()), np.finfo(float).tiny)
        self.buckets: dict = {}
        self.flat: list = []

    def keys(self, stack: np.ndarray) -> list:
        """Bucket keys for a stack of matrices; OverflowError if any is not finite."""
        with np.errstate(over="ignore", invalid="ignore"):
            proj = stack.reshape(len(stack), -1) @ self.weights / self.width
        if not np.isfinite(proj).all():
            raise OverflowError("matrix entries overflow")
        return [int(k) for k in np.floor(proj)]

    def candidates(self, key: int):
        """Indices in the neighbouring buckets: a superset of every match."""
        for kk in (key - 1, key, key + 1):
            yield from self.buckets.get(kk, ())

    def find(self, a: np.ndarray, key: int) -> Optional[int]:
        flat = a.ravel()
        for idx in self.candidates(key):
            if np.abs(self.flat[idx] - flat).max() <= self.tol:
                return idx
        return None

    def add(self, a: np.ndarray, key: int):
        self.flat.append(a.ravel())
        self.buckets.setdefault(key, []).append(len(self.flat) - 1)


def _check_generators(generators) -> list:
    gens = [as_nonneg_matrix(g) for g in generators]
    if not gens:
        raise ValueError("need at least one generator")
    n = gens[0].shape[0]
    for i, g in enumerate(gens):
        if g.shape != (n, n):
            raise DimensionMismatch(f"generator {i} has shape {g.shape}, expected {(n, n)}")
    return gens


def generate_closure(
    generators: Sequence,
    rule: CompositionRule = STANDARD,
    cap: int = DEFAULT_CAP,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
    on_new: Optional[Callable[[int, np.ndarray], None]] = None,
) -> SemigroupClosure:
    """Breadth-first enumeration of the semigroup generated by ``generators``.

    Elements are visited in discovery order; for each element ``e`` and each
    generator ``g`` (in order) the left product ``g*e`` and then the right
    product ``e*g`` are tried.  A product within ``dedup_tol`` (max-abs) of a
    known element is dropped.  Reaching ``cap`` elements with work left, or
    a product overflowing to ``inf``, yields ``status="capped"``.

    ``on_new(index, matrix)`` is called for every new element and may raise
    to abort enumeration.
    """
    gens = _check_generators(generators)
    if rule.kind == "atom-weighted" and len(rule.atom_weights) != gens[0].shape[0]:
        raise DimensionMismatch("atom weight vector length differs from matrix size")
    if cap < len(gens):
        raise ValueError(f"cap={cap} is below the generator count {len(gens)}")
    n = gens[0].shape[0]
    index = MatrixIndex(n, dedup_tol)
    elements: list = []
    gen_idx: list = []

    def append(a, key) -> int:
        a = np.array(a)
        a.setflags(write=False)
        elements.append(a)
        index.add(a, key)
        if on_new is not None:
            on_new(len(elements) - 1, a)
        return len(elements) - 1

    for g, key in zip(gens, index.keys(np.stack(gens))):
        hit = index.find(g, key)
        gen_idx.append(append(g, key) if hit is None else hit)
    gen_idx = tuple(dict.fromkeys(gen_idx))
    G = np.stack([elements[i] for i in gen_idx])
    w = np.ones(n) if rule.kind == "standard" else np.asarray(rule.atom_weights)
    Gw = G * w[None, None, :]

    status, reason = "complete", None
    pos = 0
    while pos < len(elements) and status == "complete":
        e = elements[pos]
        # (g_j * e, e * g_j) interleaved, in generator order
        prods = np.empty((2 * len(G), n, n))
        with np.errstate(over="ignore", invalid="ignore"):
            prods[0::2] = Gw @ e
            prods[1::2] = (e * w[None, :]) @ G
        try:
            keys = index.keys(prods)
        except OverflowError:
            status, reason = "capped", "overflow"
            break
        for prod, key in zip(prods, keys):
            if index.find(prod, key) is not None:
                continue
            if len(elements) >= cap:
                status, reason = "capped", "cap"
                break
            append(prod, key)
        pos += 1
    if status == "capped":
        log.info("closure capped (%s) at %d elements", reason, len(elements))
    return SemigroupClosure(
        elements=tuple(elements),
        generators=gen_idx,
        status=status,
        composition=rule,
        cap=cap,
        reason=reason,
    )


def matrix_like_check(elements, rule: CompositionRule = STANDARD, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``(f*g)(x, z) >= f(x, y) g(y, z) - tol`` for all element pairs."""
    mats = [np.asarray(e, dtype=float) for e in elements]
    for f in mats:
        for g in mats:
            fg = rule.compose(f, g)
            # best single-intermediate term for each (x, z)
            term = (f[:, :, None] * g[None, :, :]).max(axis=1)
            if (fg < term - tol).any():
                return False
    return True


def support_closure(generators) -> np.ndarray:
    """Boolean Kleene plus of the union of generator supports.

    Position (x, y) is set iff some nonempty product of generators is
    positive there (boolean product distributes over OR).
    """
    gens = _check_generators(generators)
    r = np.zeros(gens[0].shape, dtype=bool)
    for g in gens:
        r |= g > 0
    for k in range(r.shape[0]):
        r |= r[:, k, None] & r[None, k, :]
    return r


def is_indecomposable(generators) -> bool:
    return bool(support_closure(generators).all())


def sup_function(closure: SemigroupClosure) -> SupFunction:
    s = closure.stack().max(axis=0)
    s.setflags(write=False)
    return SupFunction(s=s, exact=closure.complete)


def _verified_against(closure: SemigroupClosure) -> str:
    return "complete-closure" if closure.complete else f"enumerated-prefix({len(closure)})"


def _max_violation(closure: SemigroupClosure, d: np.ndarray) -> float:
    ratio = d[None, :] / d[:, None]
    return float(max((e * ratio).max() for e in closure.elements))


def semigroup_scaling(
    closure: SemigroupClosure, u: Optional[int] = None, v: Optional[int] = None
) -> DominationCertificate:
    """Certificate ``d`` with ``f(x, y) <= d(x) / d(y)`` for every element.

    The sup function ``s`` of an entry-wise bounded semigroup is compressed,
    so the scaling vector read off the walk-product closure of ``s`` works
    for all of ``S``.  ``u, v`` only select which sup value is reported.
    """
    if not is_indecomposable(closure.generator_matrices()):
        raise NotIndecomposable("generator supports do not reach every position")
    sup = sup_function(closure)
    cs = mult_walk_supremum(sup.s)
    if cs.divergent_pairs:
        raise Divergent(cs.divergent_pairs)
    d = scaling_from_basepoint(cs)
    sup_uv = None if u is None or v is None else float(sup.s[u, v])
    return DominationCertificate(
        d=d,
        verified_against=_verified_against(closure),
        max_violation=_max_violation(closure, d.d),
        sup=sup,
        sup_uv=sup_uv,
    )


def bounded_semigroup_scaling(
    closure: SemigroupClosure, M: float, rtol: float = 1e-10
) -> DominationCertificate:
    """Certificate with entries in ``[1/M, M]`` for a semigroup bounded by ``M``."""
    sup = sup_function(closure)
    top = float(sup.s.max())
    if top > M * (1 + rtol):
        raise PreconditionViolated(f"an element entry {top!r} exceeds M={M!r}")
    d = bounded_scaling(sup.s, M)
    return DominationCertificate(
        d=d,
        verified_against=_verified_against(closure),
        max_violation=_max_violation(closure, d.d),
        sup=sup,
    )


def rescale_by(closure: SemigroupClosure, d) -> SemigroupClosure:
    """Apply ``f -> D^-1 f D``: ``f'(x, y) = f(x, y) d(y) / d(x)``."""
    d = d.d if isinstance(d, ScalingVector) else np.asarray(d, dtype=float)
    if d.shape != (closure.n,):
        raise DimensionMismatch(f"scaling vector has length {d.shape}, matrices are {closure.n}x{closure.n}")
    if not (d > 0).all():
        raise ValueError("scaling vector must be strictly positive")
    ratio = d[None, :] / d[:, None]
    scaled = []
    for e in closure.elements:
        a = e * ratio
        a.setflags(write=False)
        scaled.append(a)
    return SemigroupClosure(
        elements=tuple(scaled),
        generators=closure.generators,
        status=closure.status,
        composition=closure.composition,
        cap=closure.cap,
        reason=closure.reason,
    )


def _binary_diagonal_guard(tol: float):
    def check(idx, a):
        diag = np.diag(a)
        off = np.minimum(np.abs(diag), np.abs(diag - 1.0))
        bad = np.flatnonzero(off > tol)
        if bad.size:
            i = int(bad[0])
            raise NotBinaryDiagonal(idx, i, diag[i])

    return check


def binary_diagonal_rescale(
    generators,
    tol: float = DEFAULT_TOL,
    cap: int = DEFAULT_CAP,
    dedup_tol: float = DEFAULT_DEDUP_TOL,
):
    """Diagonal similarity turning a binary-diagonal semigroup binary.

    Returns ``(d, rescaled)`` where every entry of every rescaled closure
    element is within ``tol`` of 0 or 1.  Raises :class:`NotBinaryDiagonal`
    on the first element with a diagonal entry away from {0, 1}, and
    :class:`RescaleFailed` if the certificate does not make the semigroup
    binary.
    """
    gens = _check_generators(generators)
    if not is_indecomposable(gens):
        raise NotIndecomposable("generator supports do not reach every position")
    closure = generate_closure(gens, cap=cap, dedup_tol=dedup_tol, on_new=_binary_diagonal_guard(tol))
    if not closure.complete:
        raise PreconditionViolated(f"closure did not terminate ({closure.reason}) within cap={cap}")
    cert = semigroup_scaling(closure)
    rescaled = rescale_by(closure, cert.d)
    for idx, a in enumerate(rescaled.elements):
        off = np.minimum(np.abs(a), np.abs(a - 1.0))
        if off.max() > tol:
            x, y = np.unravel_index(int(off.argmax()), a.shape)
            raise RescaleFailed(
                f"rescaled element {idx} has entry ({x + 1},{y + 1}) = {a[x, y]!r}, not in {{0, 1}}"
            )
    return cert.d, rescaled


def entrywise_bound_report(closure: SemigroupClosure) -> BoundReport:
    sup = sup_function(closure)
    return BoundReport(s=sup.s, global_max=float(sup.s.max()), lower_bound=not closure.complete)
