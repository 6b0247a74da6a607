"""Matrix-set input files and JSON reports.

Input::

    {
      "dim": 2,
      "matrices": [{"name": "A", "entries": [[0, 1], [0, 0]]}, ...],
      "atom_weights": [1, 2],            # optional, each >= 1
      "config": {"tol": 1e-9, "cap": 5000, "dedup_tol": 1e-9,
                 "cluster_tol": 1e-8}    # optional
    }

``matrices`` may also be an object mapping names to row-major entries.
Entries are JSON numbers; ``"-inf"`` (a string, to stay strict JSON) marks
an absent edge in weight matrices.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np

SCHEMA_VERSION = 1
CONFIG_KEYS = {"tol", "cap", "dedup_tol", "cluster_tol"}


class InputError(ValueError):
    """The input file is missing, malformed or violates the schema."""


@dataclass(frozen=True)
class MatrixSet:
    dim: int
    names: tuple
    matrices: tuple
    atom_weights: Optional[tuple] = None
    config: dict = field(default_factory=dict)
    digest: str = ""

    def get(self, name: Optional[str] = None) -> np.ndarray:
        if name is None:
            return self.matrices[0]
        try:
            return self.matrices[self.names.index(name)]
        except ValueError:
            raise InputError(f"no matrix named {name!r}; have {list(self.names)}") from None


def _reject_constant(token):
    raise InputError(f"non-standard JSON constant {token}; write \"-inf\" as a string")


def _entry(v, allow_neg_inf: bool) -> float:
    if isinstance(v, bool):
        raise InputError(f"boolean matrix entry {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str) and v.strip().lower() == "-inf":
        if not allow_neg_inf:
            raise InputError('"-inf" entries are only allowed in weight matrices')
        return -math.inf
    raise InputError(f"bad matrix entry {v!r}")


def parse_matrix_set(text: str, allow_neg_inf: bool = False) -> MatrixSet:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("top level must be a JSON object")
    raw = doc.get("matrices")
    if isinstance(raw, dict):
        items = list(raw.items())
    elif isinstance(raw, list):
        items = []
        for i, m in enumerate(raw):
            if not isinstance(m, dict) or "entries" not in m:
                raise InputError(f"matrices[{i}] must be an object with 'entries'")
            items.append((str(m.get("name", f"M{i + 1}")), m["entries"]))
    else:
        raise InputError("'matrices' must be a list or an object")
    if not items:
        raise InputError("no matrices given")
    names = [n for n, _ in items]
    if len(set(names)) != len(names):
        raise InputError("matrix names must be unique")

    dim = doc.get("dim", None)
    mats = []
    for name, rows in items:
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise InputError(f"matrix {name!r} must be a non-empty list of rows")
        if any(len(r) != len(rows) for r in rows):
            raise InputError(f"matrix {name!r} is not square")
        a = np.array([[_entry(v, allow_neg_inf) for v in r] for r in rows])
        if dim is None:
            dim = a.shape[0]
        if a.shape != (dim, dim):
            raise InputError(f"matrix {name!r} has shape {a.shape}, expected {(dim, dim)}")
        a.setflags(write=False)
        mats.append(a)
    if not isinstance(dim, int) or dim < 1:
        raise InputError("'dim' must be a positive integer")

    weights = doc.get("atom_weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != dim:
            raise InputError(f"atom_weights must be a list of {dim} numbers")
        weights = tuple(_entry(w, False) for w in weights)
        if min(weights) < 1:
            raise InputError("atom_weights must all be >= 1")

    config = doc.get("config", {}) or {}
    if not isinstance(config, dict) or set(config) - CONFIG_KEYS:
        raise InputError(f"config may only set {sorted(CONFIG_KEYS)}")

    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return MatrixSet(
        dim=dim,
        names=tuple(names),
        matrices=tuple(mats),
        atom_weights=weights,
        config=dict(config),
        digest="sha256:" + hashlib.sha256(canon.encode()).hexdigest(),
    )


def load_matrix_set(path, allow_neg_inf: bool = False) -> MatrixSet:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_matrix_set(text, allow_neg_inf)


def to_jsonable(obj: Any) -> Any:
    """Numpy arrays to nested lists, non-finite floats to ``"inf"``/``"-inf"``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            raise ValueError("refusing to serialize NaN")
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def render_report(command: str, digest: str, body: dict, exit_code: int, reproducible: bool) -> str:
    report = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "inputs_digest": digest,
        "exit_code": exit_code,
        "status": {0: "pass", 1: "property-failed", 2: "not-certified", 3: "invalid-input"}[exit_code],
    }
    report.update(body)
    if not reproducible:
        report["generated_at"] = datetime.now(timezone.utc).isoformat()
    # repr-based float output round-trips exactly
    return json.dumps(to_jsonable(report), indent=2, sort_keys=False, allow_nan=False) + "\n"
