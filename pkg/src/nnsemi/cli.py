"""Command-line entry point.

Exit codes: 0 every assertion passed; 1 a structural property failed;
2 divergence or an incomplete closure prevented certification; 3 invalid
input.  Reports are JSON (schema 1) on stdout or ``--output``; vertex
indices in reports are 1-based.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from typing import Optional

import numpy as np

from . import counterexample as cx
from .errors import (
    BasepointUnusable,
    Divergent,
    NNSemiError,
    NotBinaryDiagonal,
    NotIndecomposable,
    PreconditionViolated,
    RescaleFailed,
    TruncationTooShort,
)
from .files import InputError, MatrixSet, load_matrix_set, render_report
from .operators import analyze
from .scaling import bump, potential_from_basepoint
from .semigroup import (
    DEFAULT_CAP,
    DEFAULT_DEDUP_TOL,
    CompositionRule,
    binary_diagonal_rescale,
    bounded_semigroup_scaling,
    entrywise_bound_report,
    generate_closure,
    is_indecomposable,
    semigroup_scaling,
)
from .tropical import walk_supremum

log = logging.getLogger("nnsemi")

PASS, PROPERTY_FAILED, NOT_CERTIFIED, INVALID_INPUT = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int, body: dict, digest: str = ""):
        self.code = code
        self.body = body
        self.digest = digest


def _pairs1(pairs) -> list:
    return [[x + 1, y + 1] for x, y in pairs]


def _setting(args, ms: Optional[MatrixSet], key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if ms is not None and key in ms.config:
        return ms.config[key]
    return default


def _scaling_body(d) -> dict:
    return {
        "d": d.d,
        "d_normalized": d.normalized(),
        "basepoint": None if d.basepoint is None else d.basepoint + 1,
        "orientation": d.orientation,
        "bounds": d.bounds,
    }


def cmd_tropical(args) -> tuple:
    ms = load_matrix_set(args.file, allow_neg_inf=True)
    try:
        mu = ms.get(args.matrix)
        w = walk_supremum(mu)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    body: dict = {
        "matrix": args.matrix or ms.names[0],
        "walk_supremum": w.entries,
        "divergent_pairs": _pairs1(w.divergent_pairs),
    }
    code = PASS
    if args.basepoint is not None:
        x0 = None if args.basepoint == "auto" else int(args.basepoint) - 1
        if x0 is not None and not 0 <= x0 < w.n:
            raise InputError(f"basepoint {args.basepoint} out of range 1..{w.n}")
        try:
            rho = potential_from_basepoint(w, x0)
        except Divergent as exc:
            body["potential_error"] = str(exc)
            raise _Exit(NOT_CERTIFIED, body, ms.digest)
        except BasepointUnusable as exc:
            body["potential_error"] = str(exc)
            raise _Exit(PROPERTY_FAILED, body, ms.digest)
        slack = rho.max_violation(w)
        body["potential"] = {
            "rho": rho.rho,
            "basepoint": rho.basepoint + 1,
            "orientation": rho.orientation,
            "max_violation": slack,
        }
        if slack > 1e-12:
            code = PROPERTY_FAILED
    if args.bump is not None:
        try:
            lam = bump(mu, args.bump)
        except PreconditionViolated as exc:
            body["bump_error"] = str(exc)
            raise _Exit(NOT_CERTIFIED if w.divergent else PROPERTY_FAILED, body, ms.digest)
        wl = walk_supremum(lam)
        body["bump"] = {
            "K": args.bump,
            "lambda": lam.entries,
            "walk_supremum": wl.entries,
            "max_walk_supremum": float(wl.entries.max()),
        }
        if wl.entries.max() > args.bump + 1e-12:
            code = PROPERTY_FAILED
    return code, body, ms.digest


def _rule(ms: MatrixSet) -> CompositionRule:
    if ms.atom_weights is None:
        return CompositionRule()
    return CompositionRule.atom_weighted(ms.atom_weights)


def _check_nonneg(ms: MatrixSet):
    for name, m in zip(ms.names, ms.matrices):
        if (m < 0).any() or not np.isfinite(m).all():
            raise InputError(f"matrix {name!r} must be finite and nonnegative")


def _closure_body(cl) -> dict:
    return {"size": len(cl), "status": cl.status, "reason": cl.reason, "cap": cl.cap}


def cmd_scale(args) -> tuple:
    ms = load_matrix_set(args.file)
    _check_nonneg(ms)
    tol = _setting(args, ms, "tol", 1e-9)
    cl = generate_closure(
        ms.matrices,
        _rule(ms),
        cap=int(_setting(args, ms, "cap", DEFAULT_CAP)),
        dedup_tol=_setting(args, ms, "dedup_tol", DEFAULT_DEDUP_TOL),
    )
    bound = entrywise_bound_report(cl)
    body: dict = {
        "closure": _closure_body(cl),
        "composition": cl.composition.kind,
        "indecomposable": is_indecomposable(ms.matrices),
        "sup_function": bound.s,
        "entrywise_max": bound.global_max,
        "entrywise_max_is_lower_bound": bound.lower_bound,
    }
    if args.strict and not cl.complete:
        body["error"] = f"closure capped ({cl.reason}); exact certificate required by --strict"
        raise _Exit(NOT_CERTIFIED, body, ms.digest)
    u = None if args.u is None else args.u - 1
    v = None if args.v is None else args.v - 1
    try:
        if args.M is not None:
            cert = bounded_semigroup_scaling(cl, args.M)
        else:
            cert = semigroup_scaling(cl, u, v)
    except Divergent as exc:
        body["error"] = str(exc)
        raise _Exit(NOT_CERTIFIED, body, ms.digest)
    except (NotIndecomposable, PreconditionViolated, BasepointUnusable) as exc:
        body["error"] = f"{type(exc).__name__}: {exc}"
        raise _Exit(PROPERTY_FAILED, body, ms.digest)
    body["certificate"] = {
        **_scaling_body(cert.d),
        "verified_against": cert.verified_against,
        "max_violation": cert.max_violation,
        "sup_uv": cert.sup_uv,
    }
    code = PASS if cert.max_violation <= 1 + tol else PROPERTY_FAILED
    return code, body, ms.digest


def cmd_binary(args) -> tuple:
    ms = load_matrix_set(args.file)
    _check_nonneg(ms)
    tol = _setting(args, ms, "tol", 1e-9)
    body: dict = {}
    try:
        d, rescaled = binary_diagonal_rescale(
            ms.matrices,
            tol=tol,
            cap=int(_setting(args, ms, "cap", DEFAULT_CAP)),
            dedup_tol=_setting(args, ms, "dedup_tol", DEFAULT_DEDUP_TOL),
        )
    except NotBinaryDiagonal as exc:
        body["error"] = f"NotBinaryDiagonal: {exc}"
        body["witness"] = {"element": exc.element, "position": [exc.index + 1, exc.index + 1], "value": exc.value}
        raise _Exit(PROPERTY_FAILED, body, ms.digest)
    except (NotIndecomposable, RescaleFailed) as exc:
        body["error"] = f"{type(exc).__name__}: {exc}"
        raise _Exit(PROPERTY_FAILED, body, ms.digest)
    except (PreconditionViolated, Divergent) as exc:
        body["error"] = f"{type(exc).__name__}: {exc}"
        raise _Exit(NOT_CERTIFIED, body, ms.digest)
    body["certificate"] = _scaling_body(d)
    body["closure"] = _closure_body(rescaled)
    ratio = d.d[None, :] / d.d[:, None]
    body["rescaled_generators"] = {name: m * ratio for name, m in zip(ms.names, ms.matrices)}
    return PASS, body, ms.digest


def cmd_operator(args) -> tuple:
    ms = load_matrix_set(args.file)
    tol = _setting(args, ms, "tol", 1e-10)
    cluster_tol = _setting(args, ms, "cluster_tol", 1e-8)
    rep = analyze(ms.matrices, tol, cluster_tol)
    checks = rep.lemma_checks()
    failed = [k for k, ok in checks.items() if not ok]
    body = {
        "self_adjoint_closed": rep.opset.self_adjoint_closed,
        "positive_part": [ms.names[i] for i in rep.opset.positive_part],
        "projections": [ms.names[i] for i in rep.opset.projections],
        "checks": checks,
        "first_failure": failed[0] if failed else None,
        "elements": {
            ms.names[v.index]: {
                "ss_star_residual": v.ss_star_residual,
                "partial_isometry": v.is_partial_isometry,
                "norm": v.norm,
                "rank": v.rank,
                "nonnegative": v.nonnegative,
                "sqrt_xi_eta_residual": v.sqrt_xi_eta_residual,
            }
            for v in rep.elements
        },
        "trace_set": rep.trace_set,
        "positive_trace_set": rep.positive_trace_set,
        "diagonal_family_sizes": rep.diagonal_family_sizes,
        "r": rep.r,
        "projection_commutativity_residual": rep.projection_commutativity_residual,
        "idempotent_asymmetry": rep.idempotent_asymmetry,
        "rank_bound_ok": rep.rank_bound_ok,
        "projection_blocks": {
            ms.names[i]: [{"indices": [j + 1 for j in b.rows], "x": b.u} for b in dec.blocks]
            for i, dec in rep.projection_blocks.items()
        },
    }
    return (PASS if not failed else PROPERTY_FAILED), body, ms.digest


def cmd_counterexample(args) -> tuple:
    digest = "sha256:" + hashlib.sha256(json.dumps({"N": args.N, "m_max": args.m_max}).encode()).hexdigest()
    try:
        inst = cx.build_instance(args.N, args.m_max)
    except (TruncationTooShort, ValueError) as exc:
        raise InputError(str(exc)) from None
    tol = args.tol if args.tol is not None else cx.tol_for(args.N)
    norms = cx.verify_norms(inst)
    inner = {
        f"{m},{n}": cx.verify_inner_products(inst, m, n) for m in inst.ms for n in inst.ms if m < n
    }
    semi = cx.verify_semigroup(inst) if inst.m_max >= 2 else None
    fam = cx.diagonal_family_F1(inst)
    proj = cx.projection_report(inst, tol)
    cl = generate_closure(inst.members(), cap=int(args.cap or DEFAULT_CAP))

    worst_inner = max((d for pairs in inner.values() for d, _ in pairs.values()), default=0.0)
    checks = {
        "norms": all(c.ok(tol) for c in norms),
        "inner_products": worst_inner <= tol,
        "semigroup": semi is None or semi.max_residual <= tol,
        "F1_closed_form": fam.max_residual <= tol,
        "F1_pairwise_distinct": fam.pairwise_distinct and fam.strictly_decreasing_in_m,
        "projections": all(ok for ok, _ in proj.values()),
        "Q_rank_two": all(rank == 2 for name, (_, rank) in proj.items() if name != "P"),
        "closure_adds_nothing": cl.complete and len(cl) == inst.m_max + 1,
    }
    body = {
        "N": args.N,
        "m_max": args.m_max,
        "tol": tol,
        "checks": checks,
        "norms": [
            {
                "m": c.m,
                "g_norm2": c.g_norm2,
                "h_norm2": c.h_norm2,
                "g_closed_form": c.g_closed,
                "h_closed_form": c.h_closed,
                "residual": max(c.g_residual, c.h_residual),
                "exact_residual": max(c.g_residual_exact, c.h_residual_exact),
            }
            for c in norms
        ],
        "inner_products": {
            k: {name: {"dense": d, "exact": e} for name, (d, e) in v.items()} for k, v in inner.items()
        },
        "semigroup": None
        if semi is None
        else {
            "max_residual": semi.max_residual,
            "max_exact_residual": semi.max_exact_residual,
            "dense": semi.dense,
            "exact": semi.exact,
        },
        "F1": {"values": fam.values, "closed_forms": fam.closed_forms, "max_residual": fam.max_residual},
        "projections": {k: {"is_projection": ok, "rank": r} for k, (ok, r) in proj.items()},
        "closure": _closure_body(cl),
    }
    return (PASS if all(checks.values()) else PROPERTY_FAILED), body, digest


COMMANDS = {
    "tropical": cmd_tropical,
    "scale": cmd_scale,
    "binary": cmd_binary,
    "operator": cmd_operator,
    "counterexample": cmd_counterexample,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are invalid input, not argparse's default exit status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(INVALID_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="override the command's tolerance")
    common.add_argument("--cap", type=int, default=None, help="closure element cap")
    common.add_argument("--dedup-tol", dest="dedup_tol", type=float, default=None)
    common.add_argument("--cluster-tol", dest="cluster_tol", type=float, default=None)
    common.add_argument("--strict", action="store_true", help="require complete closures")
    common.add_argument("--reproducible", action="store_true", help="omit the timestamp")
    common.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="nnsemi", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tropical", parents=[common], help="walk suprema, potentials, bump")
    t.add_argument("file")
    t.add_argument("--matrix", default=None, help="name of the weight matrix (default: first)")
    t.add_argument("--basepoint", default=None, help="1-based basepoint or 'auto'; requests the potential")
    t.add_argument("--bump", type=float, default=None, metavar="K")

    s = sub.add_parser("scale", parents=[common], help="domination certificate for a generated semigroup")
    s.add_argument("file")
    s.add_argument("--M", type=float, default=None, help="entry bound; certifies d in [1/M, M]")
    s.add_argument("--u", type=int, default=None)
    s.add_argument("--v", type=int, default=None)

    b = sub.add_parser("binary", parents=[common], help="rescale a binary-diagonal semigroup to 0/1")
    b.add_argument("file")

    o = sub.add_parser("operator", parents=[common], help="partial isometry / projection structure checks")
    o.add_argument("file")

    c = sub.add_parser("counterexample", parents=[common], help="verify the truncated projection semigroup")
    c.add_argument("--N", type=int, default=256)
    c.add_argument("--m-max", dest="m_max", type=int, default=5)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    digest = ""
    try:
        code, body, digest = COMMANDS[args.command](args)
    except _Exit as exc:
        code, body, digest = exc.code, exc.body, exc.digest
    except InputError as exc:
        code, body = INVALID_INPUT, {"error": str(exc)}
    except NNSemiError as exc:
        code, body = PROPERTY_FAILED, {"error": f"{type(exc).__name__}: {exc}"}
    if not digest and getattr(args, "file", None):
        try:
            with open(args.file, "rb") as fh:
                digest = "sha256-raw:" + hashlib.sha256(fh.read()).hexdigest()
        except OSError:
            pass
    text = render_report(args.command, digest, body, code, args.reproducible)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
