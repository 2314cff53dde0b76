"""Passage times, finite geodesics, and restriction-uniqueness checks.

The passage time T(p, q) is the maximal weight of an up-right lattice path
from p to q, where a path's weight sums the weights of its vertices except
the first one.  Dropping the first vertex makes passage times compose
exactly: for p <= q <= r, T(p, r) >= T(p, q) + T(q, r) with equality iff q
lies on a geodesic, and T(p, r) equals the maximum of T(p, q) + T(q, r) over
any separating anti-diagonal layer.  Both identities hold bit-exactly here
because all weight sums are exact (see the lattice module).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import _sweeps
from .errors import ConfigurationError, ConsistencyError, OrderingError
from .lattice import LatticePoint, Window


@dataclass
class PassageTable:
    """Dense table of passage times anchored at a source or a sink."""

    anchor: LatticePoint
    orientation: str            # "from_source" | "to_sink"
    window: Window              # rectangle the table covers
    values: np.ndarray          # [j - lo.j, i - lo.i]

    def value(self, p: LatticePoint) -> float:
        lo, hi = self.window.lo, self.window.hi
        if not (lo <= p and p <= hi):
            raise ConfigurationError(f"{p} outside table window [{lo}, {hi}]")
        return float(self.values[p.j - lo.j, p.i - lo.i])


@dataclass
class LatticePath:
    """Monotone lattice path: a start vertex plus unit steps.

    Steps are 'R'/'U' for up-right paths and 'L'/'D' for down-left ones.
    The rotated view m -> x(m) moves by |dx| = 1/2 per half-step of m.
    """

    start: LatticePoint
    steps: str
    tie_count: int = 0
    dual: bool = False          # dual-lattice path: vertices sit at +(1/2, 1/2)

    _OFFSETS = {"R": (1, 0), "U": (0, 1), "L": (-1, 0), "D": (0, -1)}

    def points(self):
        pts = [self.start]
        for s in self.steps:
            di, dj = self._OFFSETS[s]
            pts.append(pts[-1] + (di, dj))
        return pts

    @property
    def end(self) -> LatticePoint:
        di = self.steps.count("R") - self.steps.count("L")
        dj = self.steps.count("U") - self.steps.count("D")
        return self.start + (di, dj)

    def rotated(self):
        """Arrays (m, x) of the path's vertices, in path order, exact."""
        pts = self.points()
        off = 0.5 if self.dual else 0.0
        m = np.array([(p.i + p.j) / 2.0 + off for p in pts])
        x = np.array([(p.i - p.j) / 2.0 for p in pts])
        return m, x

    def weight_under(self, field) -> float:
        """Path weight: sum of vertex weights excluding the first vertex."""
        total = 0.0
        for p in self.points()[1:]:
            total += field.weight(p)
        return total


def passage_table(X, anchor: LatticePoint, orientation: str, window: Window) -> PassageTable:
    """All passage times between the anchor and the window, by max-plus DP."""
    if not window.contains(anchor, enlarged=True):
        raise ConfigurationError(f"anchor {anchor} outside window+margin")
    if orientation == "from_source":
        hi = window.enlarged_hi
        res = _sweeps.sweep_from_source(X, anchor, hi, values_lo=anchor, values_hi=hi)
        return PassageTable(anchor, orientation, Window(anchor, hi), res.values)
    if orientation == "to_sink":
        lo = window.enlarged_lo
        res = _sweeps.sweep_to_sink(X, lo, anchor, values_lo=lo, values_hi=anchor)
        return PassageTable(anchor, orientation, Window(lo, anchor), res.values)
    raise ConfigurationError(f"unknown orientation {orientation!r}")


def geodesic(X, p: LatticePoint, q: LatticePoint) -> LatticePath:
    """The maximal-weight up-right path from p to q.

    Backtracks through the source-anchored table; exact float ties between
    the two predecessors break toward Up and are counted.
    """
    if not (p <= q):
        raise OrderingError(f"geodesic endpoints not ordered: {p} !<= {q}")
    if p == q:
        return LatticePath(p, "", 0)
    res = _sweeps.sweep_from_source(X, p, q, want_steps=True)
    _, chars, ties = _sweeps.backtrack(res, q)
    return LatticePath(p, chars, ties)


def path_weight_matches_table(X, path: LatticePath, table: PassageTable) -> bool:
    """Geodesic weight consistency: path weight equals the DP value, bit-exact."""
    return path.weight_under(X) == table.value(path.end)


def _count_optimal_paths(X, p: LatticePoint, q: LatticePoint, cap: int = 1 << 30):
    """Number of maximal-weight paths from p to q (saturating at cap).

    Exact because weight comparisons are exact; only used on small blocks.
    """
    res = _sweeps.sweep_from_source(X, p, q, values_lo=p, values_hi=q)
    V = res.values
    nj, ni = V.shape
    Xb = X.block(p, q)
    cnt = np.zeros((nj, ni), dtype=np.int64)
    cnt[0, :] = 1
    cnt[:, 0] = 1
    for rj in range(1, nj):
        for ri in range(1, ni):
            base = V[rj, ri] - Xb[rj, ri]
            c = 0
            if V[rj, ri - 1] == base:
                c += cnt[rj, ri - 1]
            if V[rj - 1, ri] == base:
                c += cnt[rj - 1, ri]
            cnt[rj, ri] = min(c, cap)
    return int(cnt[-1, -1])


def restriction_uniqueness_check(X, path: LatticePath) -> dict:
    """Check that every interior restriction of a geodesic is the unique
    maximizer between its endpoints.

    Counts sub-segments (a, b), a < b interior vertices of the path, whose
    endpoints admit a second maximal-weight path.  Zero is expected for
    continuous weights; an exact tie in the weights produces a violation.
    """
    pts = path.points()
    if len(pts) < 2:
        return {"violations": 0, "segments": 0}
    end_table = _sweeps.sweep_from_source(X, pts[0], pts[-1], probes=[pts[-1]])
    if path.weight_under(X) != end_table.probes[pts[-1]]:
        raise ConsistencyError("path is not a geodesic under this field")
    violations = 0
    segments = 0
    interior = pts[1:-1] if len(pts) > 2 else pts
    for a in range(len(interior)):
        for b in range(a + 1, len(interior)):
            segments += 1
            if _count_optimal_paths(X, interior[a], interior[b]) > 1:
                violations += 1
    return {"violations": violations, "segments": segments}


def composition_layer_max(X, p: LatticePoint, r: LatticePoint, level: int) -> float:
    """max_q { T(p, q) + T(q, r) } over the anti-diagonal i + j = level.

    Exact: equals T(p, r) bit-for-bit whenever p <= r and the layer
    separates them.
    """
    if not (p <= r):
        raise OrderingError(f"{p} !<= {r}")
    if not (p.i + p.j <= level <= r.i + r.j):
        raise ConfigurationError("layer does not separate the endpoints")
    lo_i = max(p.i, level - r.j)
    hi_i = min(r.i, level - p.j)
    layer = [LatticePoint(i, level - i) for i in range(lo_i, hi_i + 1)]
    src = _sweeps.sweep_from_source(X, p, r, probes=layer)
    snk = _sweeps.sweep_to_sink(X, p, r, probes=layer)
    return max(src.probes[q] + snk.probes[q] for q in layer)
