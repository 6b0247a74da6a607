"""Structural checks for self-adjoint sets of real matrices.

For a self-adjoint semigroup whose positive semidefinite members have
finitely many traces, every ``S S^T`` is a projection, nonzero members are
partial isometries of norm 1, idempotents are symmetric, projections
commute and ranks are bounded by the largest PSD trace.  For entrywise
nonnegative members, every nonzero entry is the geometric mean of matching
diagonal entries of ``S S^T`` and ``S^T S``, and nonnegative projections
split into rank-one blocks ``x x^T`` with ``x > 0``.  This module measures
all of that on concrete finite instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    BlockNotRankOne,
    DimensionMismatch,
    EmptyPositivePart,
    NotAProjection,
    PreconditionViolated,
)
from .semigroup import MatrixIndex

DEFAULT_TOL = 1e-10
DEFAULT_CLUSTER_TOL = 1e-8


def _fro(a) -> float:
    return float(np.linalg.norm(a, "fro"))


def _as_square_list(elements) -> list:
    mats = [np.array(e, dtype=float) for e in elements]
    if not mats:
        return mats
    n = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.ndim != 2 or m.shape != (n, n):
            raise DimensionMismatch(f"element {i} has shape {m.shape}, expected {(n, n)}")
    return mats


def is_projection(p, tol: float = DEFAULT_TOL) -> bool:
    p = np.asarray(p, dtype=float)
    return _fro(p @ p - p) <= tol and _fro(p - p.T) <= tol


def is_psd(a, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=float)
    scale = max(float(np.abs(a).max()), 1.0) if a.size else 1.0
    if _fro(a - a.T) > tol * scale:
        return False
    sym = 0.5 * (a + a.T)
    return float(np.linalg.eigvalsh(sym).min()) >= -tol * scale


def cluster_values(values, tol: float = DEFAULT_CLUSTER_TOL) -> list:
    """Distinct values up to ``tol``: sorted, split where consecutive gaps exceed
    ``tol``, each cluster represented by its smallest member."""
    vals = sorted(float(v) for v in values)
    out: list = []
    last = None
    for v in vals:
        if last is None or v - last > tol:
            out.append(v)
        last = v
    return out


@dataclass(frozen=True)
class OperatorSet:
    elements: tuple
    self_adjoint_closed: bool
    positive_part: tuple
    projections: tuple
    tol: float = DEFAULT_TOL

    @property
    def n(self) -> int:
        return self.elements[0].shape[0] if self.elements else 0


def _transpose_closed(mats: list, tol: float) -> bool:
    """Every ``T^T`` lies within ``tol`` (Frobenius) of some element."""
    if not mats:
        return True
    if not all(np.isfinite(m).all() for m in mats):
        return all(any(_fro(t.T - s) <= tol for s in mats) for t in mats)
    # Frobenius distance <= tol implies max-abs distance <= tol, so the
    # bucket index never misses a match; candidates are confirmed exactly.
    index = MatrixIndex(mats[0].shape[0], tol)
    for m, key in zip(mats, index.keys(np.stack(mats))):
        index.add(m, key)
    for t, key in zip(mats, index.keys(np.stack([m.T for m in mats]))):
        if not any(_fro(t.T - mats[i]) <= tol for i in index.candidates(key)):
            return False
    return True


def classify(elements, tol: float = DEFAULT_TOL) -> OperatorSet:
    mats = _as_square_list(elements)
    for m in mats:
        m.setflags(write=False)
    closed = _transpose_closed(mats, tol)
    psd = tuple(i for i, m in enumerate(mats) if is_psd(m, tol))
    proj = tuple(i for i in psd if is_projection(mats[i], tol))
    return OperatorSet(tuple(mats), closed, psd, proj, tol)


def check_ss_star_projection(s, tol: float = DEFAULT_TOL) -> float:
    """Frobenius residual ``||(S S^T)^2 - S S^T||``; zero iff ``S S^T`` is idempotent."""
    s = np.asarray(s, dtype=float)
    p = s @ s.T
    return _fro(p @ p - p)


@dataclass(frozen=True)
class PartialIsometryVerdict:
    ok: bool
    residual: float
    norm: float

    @property
    def norm_gap(self) -> Optional[float]:
        """``| ||S|| - 1 |`` for nonzero ``S``; None for the zero matrix."""
        return None if self.norm == 0 else abs(self.norm - 1.0)

    def __bool__(self):
        return self.ok


def check_partial_isometry(s, tol: float = DEFAULT_TOL) -> PartialIsometryVerdict:
    s = np.asarray(s, dtype=float)
    res = check_ss_star_projection(s, tol)
    norm = float(np.linalg.norm(s, 2)) if s.any() else 0.0
    return PartialIsometryVerdict(ok=res <= tol, residual=res, norm=norm)


def check_projections_commute(opset: OperatorSet) -> float:
    ps = [opset.elements[i] for i in opset.projections]
    worst = 0.0
    for i, p in enumerate(ps):
        for q in ps[i + 1:]:
            worst = max(worst, _fro(p @ q - q @ p))
    return worst


def numerical_rank(a, tol: float = DEFAULT_TOL) -> int:
    sv = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int((sv > tol * sv[0]).sum())


def max_positive_trace(opset: OperatorSet) -> float:
    if not opset.positive_part:
        raise EmptyPositivePart("no positive semidefinite element")
    return max(float(np.trace(opset.elements[i])) for i in opset.positive_part)


def check_rank_bound(opset: OperatorSet, tol: float = DEFAULT_TOL) -> bool:
    """Every element has numerical rank at most ``round(max PSD trace)``."""
    r = round(max_positive_trace(opset))
    return all(numerical_rank(e, tol) <= r for e in opset.elements)


def idempotent_asymmetry(opset: OperatorSet, tol: float = DEFAULT_TOL) -> float:
    """Largest ``||E - E^T||`` over elements with ``||E^2 - E|| <= tol``."""
    worst = 0.0
    for e in opset.elements:
        if _fro(e @ e - e) <= tol:
            worst = max(worst, _fro(e - e.T))
    return worst


@dataclass(frozen=True)
class Block:
    rows: tuple
    cols: tuple
    u: np.ndarray
    v: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.u


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: tuple
    zero_rows: tuple
    zero_cols: tuple = field(default=())

    @property
    def zero_indices(self) -> tuple:
        return self.zero_rows

    def reconstruct(self, n: int, m: Optional[int] = None) -> np.ndarray:
        out = np.zeros((n, n if m is None else m))
        for b in self.blocks:
            out[np.ix_(b.rows, b.cols)] += np.outer(b.u, b.v)
        return out


def _require_nonneg(a, name="matrix"):
    if (a < 0).any():
        raise PreconditionViolated(f"{name} has a negative entry")


def _bipartite_blocks(s: np.ndarray, tol: float):
    """Row/column blocks of the support of ``s``.

    A row (column) is live when its squared norm exceeds ``tol**3``; an
    entry links row ``i`` to column ``j`` when it is at least half the
    geometric mean of their squared norms, which on a rank-one block it
    equals exactly and off the blocks it is zero.  Relative linking keeps
    rapidly decaying but genuine entries while ignoring rounding noise.
    """
    n, m = s.shape
    rowmass = (s * s).sum(axis=1)
    colmass = (s * s).sum(axis=0)
    live_r = rowmass > tol**3
    live_c = colmass > tol**3
    link = (s > 0.5 * np.sqrt(np.outer(rowmass, colmass))) & live_r[:, None] & live_c[None, :]
    adj = np.zeros((n + m, n + m), dtype=bool)
    adj[:n, n:] = link
    ncomp, labels = connected_components(csr_matrix(adj), directed=False)
    out = []
    for c in range(ncomp):
        nodes = np.flatnonzero(labels == c)
        rows = nodes[nodes < n]
        cols = nodes[nodes >= n] - n
        if rows.size and cols.size:
            out.append((rows, cols))
    return out, np.flatnonzero(~live_r), np.flatnonzero(~live_c)


def _label(rows, cols=None) -> str:
    r = tuple(int(i) + 1 for i in rows)
    return f"{r}" if cols is None else f"rows {r} x cols {tuple(int(j) + 1 for j in cols)}"


def decompose_nonneg_projection(p, tol: float = DEFAULT_TOL) -> BlockDecomposition:
    """Split a nonnegative projection into blocks ``x_k x_k^T`` with ``x_k > 0``.

    Blocks are the connected components of the support graph; each is
    checked to be rank one with a unit positive generator and to satisfy
    ``P_ij^2 = P_ii P_jj`` on its support.
    """
    p = np.asarray(p, dtype=float)
    if (p < -tol).any() or not is_projection(p, tol):
        raise NotAProjection("matrix is not a nonnegative projection within tolerance")
    comps, zero, _ = _bipartite_blocks(p, tol)
    blocks = []
    for rows, cols in comps:
        if not np.array_equal(rows, cols):
            raise BlockNotRankOne(f"support block {_label(rows, cols)} is not symmetric")
        sub = p[np.ix_(rows, rows)]
        j = int(np.argmax(np.diag(sub)))
        x = sub[:, j] / np.sqrt(sub[j, j])
        if (x <= 0).any() or _fro(sub - np.outer(x, x)) > tol:
            raise BlockNotRankOne(f"block {_label(rows)} is not x x^T with x > 0")
        if abs(float(x @ x) - 1.0) > np.sqrt(tol):
            raise BlockNotRankOne(f"block {_label(rows)} generator has norm^2 {float(x @ x)!r}")
        di = np.diag(sub)
        if np.abs(sub**2 - np.outer(di, di)).max() > tol:
            raise BlockNotRankOne(f"block {_label(rows)} breaks P_ij^2 = P_ii P_jj")
        idx = tuple(int(i) for i in rows)
        blocks.append(Block(rows=idx, cols=idx, u=x, v=x))
    zero = tuple(int(i) for i in zero)
    return BlockDecomposition(blocks=tuple(blocks), zero_rows=zero, zero_cols=zero)


def decompose_partial_isometry(s, tol: float = DEFAULT_TOL) -> BlockDecomposition:
    """Rectangular rank-one blocks ``u_k v_k^T`` of a nonnegative partial isometry.

    Blocks are the connected components of the bipartite row/column support
    graph.  Each block's leading singular pair is split evenly between
    ``u`` and ``v``, so ``(u^T u)(v^T v)`` is the squared singular value and
    must be 1 for a partial isometry.
    """
    s = np.asarray(s, dtype=float)
    _require_nonneg(s, "S")
    if check_ss_star_projection(s) > tol:
        raise PreconditionViolated("S S^T is not a projection")
    comps, zero_rows, zero_cols = _bipartite_blocks(s, tol)
    blocks = []
    for rows, cols in comps:
        sub = s[np.ix_(rows, cols)]
        uu, sv, vt = np.linalg.svd(sub)
        u = np.abs(uu[:, 0]) * np.sqrt(sv[0])
        v = np.abs(vt[0]) * np.sqrt(sv[0])
        if _fro(sub - np.outer(u, v)) > tol:
            raise BlockNotRankOne(f"block {_label(rows, cols)} is not rank one")
        mass = float(u @ u) * float(v @ v)
        if min(abs(mass), abs(mass - 1.0)) > tol:
            raise BlockNotRankOne(f"block {_label(rows, cols)} has (u'u)(v'v) = {mass!r}, not in {{0, 1}}")
        blocks.append(Block(rows=tuple(int(i) for i in rows), cols=tuple(int(j) for j in cols), u=u, v=v))
    return BlockDecomposition(
        blocks=tuple(blocks),
        zero_rows=tuple(int(i) for i in zero_rows),
        zero_cols=tuple(int(j) for j in zero_cols),
    )


def check_sqrt_xi_eta(s, tol: float = DEFAULT_TOL, eps: float = 1e-300) -> float:
    """Max relative residual of ``S_ij^2 = (S S^T)_ii (S^T S)_jj`` over ``S_ij > tol``."""
    s = np.asarray(s, dtype=float)
    _require_nonneg(s, "S")
    left, right = s @ s.T, s.T @ s
    if not (is_projection(left, tol) and is_projection(right, tol)):
        raise PreconditionViolated("S S^T or S^T S is not a projection")
    mask = s > tol
    if not mask.any():
        return 0.0
    target = np.outer(np.diag(left), np.diag(right))
    sq = s**2
    rel = np.abs(sq - target) / np.maximum(sq, eps)
    return float(rel[mask].max())


@dataclass(frozen=True)
class TraceRange:
    over_all: list
    over_positive: list
    diagonal_families: list


def trace_range_report(opset: OperatorSet, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> TraceRange:
    """Clustered trace values over all elements and over the PSD part, plus
    the clustered ``{S_ii : S PSD}`` set for every ``i``."""
    traces = [float(np.trace(e)) for e in opset.elements]
    pos = [traces[i] for i in opset.positive_part]
    fams = []
    for i in range(opset.n):
        fams.append(cluster_values([opset.elements[k][i, i] for k in opset.positive_part], cluster_tol))
    return TraceRange(
        over_all=cluster_values(traces, cluster_tol),
        over_positive=cluster_values(pos, cluster_tol),
        diagonal_families=fams,
    )


@dataclass(frozen=True)
class ElementVerdict:
    index: int
    ss_star_residual: float
    is_partial_isometry: bool
    norm: float
    norm_gap: Optional[float]
    rank: int
    nonnegative: bool
    sqrt_xi_eta_residual: Optional[float]


@dataclass(frozen=True)
class OperatorReport:
    opset: OperatorSet
    elements: tuple
    trace_set: list
    positive_trace_set: list
    diagonal_family_sizes: list
    r: Optional[float]
    projection_commutativity_residual: float
    idempotent_asymmetry: float
    rank_bound_ok: Optional[bool]
    projection_blocks: dict
    tol: float

    def lemma_checks(self, norm_tol: float = 1e-10, sym_tol: float = 1e-8) -> dict:
        """Named pass/fail for the five structural claims (a)-(e)."""
        nz = [v for v in self.elements if v.norm_gap is not None]
        return {
            "a_ss_star_projection": all(v.ss_star_residual <= self.tol for v in self.elements),
            "b_partial_isometry": all(v.is_partial_isometry for v in self.elements)
            and all(v.norm_gap <= norm_tol for v in nz),
            "c_idempotents_symmetric": self.idempotent_asymmetry <= sym_tol,
            "d_projections_commute": self.projection_commutativity_residual <= self.tol,
            "e_rank_bound": bool(self.rank_bound_ok),
        }

    @property
    def ok(self) -> bool:
        return all(self.lemma_checks().values())


def analyze(elements, tol: float = DEFAULT_TOL, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> OperatorReport:
    opset = classify(elements, tol)
    if not opset.elements:
        raise ValueError("empty operator set")
    verdicts = []
    for i, e in enumerate(opset.elements):
        pi = check_partial_isometry(e, tol)
        nonneg = bool((e >= 0).all())
        law = None
        if nonneg:
            try:
                law = check_sqrt_xi_eta(e, tol)
            except PreconditionViolated:
                law = None
        verdicts.append(
            ElementVerdict(i, pi.residual, pi.ok, pi.norm, pi.norm_gap, numerical_rank(e, tol), nonneg, law)
        )
    tr = trace_range_report(opset, cluster_tol)
    try:
        r = max_positive_trace(opset)
        rank_ok = check_rank_bound(opset, tol)
    except EmptyPositivePart:
        r, rank_ok = None, None
    blocks = {}
    for i in opset.projections:
        try:
            blocks[i] = decompose_nonneg_projection(opset.elements[i], tol)
        except (NotAProjection, BlockNotRankOne):
            pass
    return OperatorReport(
        opset=opset,
        elements=tuple(verdicts),
        trace_set=tr.over_all,
        positive_trace_set=tr.over_positive,
        diagonal_family_sizes=[len(f) for f in tr.diagonal_families],
        r=r,
        projection_commutativity_residual=check_projections_commute(opset),
        idempotent_asymmetry=idempotent_asymmetry(opset, tol),
        rank_bound_ok=rank_ok,
        projection_blocks=blocks,
        tol=tol,
    )
