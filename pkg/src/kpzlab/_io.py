"""Deterministic CSV/JSON writers and edge exports.

Floats are written with repr (shortest round-trip form), so identical runs
produce identical bytes; no timestamps appear in any data artifact.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True)
        f.write("\n")


def config_hash(config: dict) -> str:
    """Provenance hash over the scientific parameters of a run."""
    scrubbed = {k: v for k, v in sorted(config.items())
                if k not in ("out", "threads", "skip_checks")}
    blob = json.dumps(_jsonable(scrubbed), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def tree_edge_rows(tree, kind):
    """One edge per window vertex: (x1, y1, x2, y2, kind)."""
    rows = []
    off = {"R": (1, 0), "U": (0, 1), "L": (-1, 0), "D": (0, -1)}
    for p in tree.window.points():
        di, dj = off[tree.step(p)]
        rows.append((p.i, p.j, p.i + di, p.j + dj, kind))
    return rows


def portrait_edge_rows(portrait, kind):
    """Dual edges in primal units: vertices at half-integer coordinates."""
    rows = []
    off = {"R": (1, 0), "U": (0, 1), "L": (-1, 0), "D": (0, -1)}
    from .lattice import DualPoint
    for base in portrait.window.points():
        d = DualPoint(base)
        s = portrait.step(d)
        di, dj = off[s]
        x1, y1 = base.i + 0.5, base.j + 0.5
        rows.append((x1, y1, x1 + di, y1 + dj, kind))
    return rows
