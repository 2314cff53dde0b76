"""Max-plus dynamic-programming sweeps over lattice rectangles.

The recursion V(p) = max(V(p - e1), V(p - e2)) + X_p is filled one lattice
row at a time.  Within a row the dependence on the previous cell unrolls into
a prefix scan: with P the previous row, C the running sum of the current
row's weights and D[k] = P[k] - C[k-1],

    V[i] = C[i] + max_{k <= i} D[k],

so a row costs one cumsum, one maximum.accumulate and two adds -- contiguous
vectorized passes, no Python-level cell loop.  The sink-anchored recursion is
the mirror image with a reversed running max.

Weights are multiples of 2^-32 (see lattice module) and every partial sum in
the size regime handled here stays far below 2^53 grid units, so the scan is
exact: it returns the same float64 values as the textbook cell-by-cell
recursion, and equality comparisons between path weights are exact, not
approximate.

Step fields are packed into uint8: bit 0 set means the argmax neighbour in
the anchor direction is the vertical one (predecessor (i, j-1) for
source-anchored tables, successor (i, j+1) for sink-anchored ones); bit 1
records an exact float tie between the two candidates.  Ties resolve to the
vertical choice, i.e. toward Up when backtracking a geodesic and toward Up
for up-tree steps; the mirrored down-tree convention (toward Down) is the
same bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .lattice import LatticePoint, Window

STEP_VERTICAL = np.uint8(1)
STEP_TIE = np.uint8(2)


@dataclass
class SweepResult:
    lo: LatticePoint
    hi: LatticePoint
    orientation: str                      # "from_source" | "to_sink"
    values: Optional[np.ndarray] = None   # over [values_lo, values_hi]
    values_lo: Optional[LatticePoint] = None
    values_hi: Optional[LatticePoint] = None
    steps: Optional[np.ndarray] = None    # uint8 over [lo, hi]
    tie_count: int = 0
    probes: Optional[dict] = None

    @property
    def anchor(self):
        return self.lo if self.orientation == "from_source" else self.hi

    def value_at(self, p: LatticePoint) -> float:
        return float(self.values[p.j - self.values_lo.j, p.i - self.values_lo.i])

    def step_bits(self, p: LatticePoint) -> int:
        return int(self.steps[p.j - self.lo.j, p.i - self.lo.i])


def _value_slab(lo, hi, values_lo, values_hi):
    if values_lo is None:
        return None
    if not (lo <= values_lo and values_hi <= hi):
        raise ConfigurationError("values region must lie inside the sweep domain")
    return np.empty((values_hi.j - values_lo.j + 1, values_hi.i - values_lo.i + 1))


def sweep_from_source(field, lo: LatticePoint, hi: LatticePoint, *,
                      values_lo=None, values_hi=None,
                      want_steps=False, probes=()) -> SweepResult:
    """Fill T(lo, p) for p in [lo, hi]; the anchor weight is never added."""
    if not (lo <= hi):
        raise ConfigurationError(f"empty sweep domain [{lo}, {hi}]")
    ni = hi.i - lo.i + 1
    out = _value_slab(lo, hi, values_lo, values_hi)
    steps = np.zeros((hi.j - lo.j + 1, ni), dtype=np.uint8) if want_steps else None
    probe_rows = {}
    for p in probes:
        probe_rows.setdefault(p.j, []).append(p)
    got = {}
    tie_count = 0
    P = None
    for j in range(lo.j, hi.j + 1):
        X = field.row(j, lo.i, hi.i)
        C = np.cumsum(X)
        if P is None:
            V = C - C[0]
        else:
            D = P.copy()
            D[1:] -= C[:-1]
            np.maximum.accumulate(D, out=D)
            V = C + D
            if want_steps:
                row = steps[j - lo.j]
                row[0] = STEP_VERTICAL
                vert = P[1:] >= V[:-1]
                tie = P[1:] == V[:-1]
                row[1:] = vert.astype(np.uint8) | (tie.astype(np.uint8) << 1)
                tie_count += int(tie.sum())
        if out is not None and values_lo.j <= j <= values_hi.j:
            out[j - values_lo.j] = V[values_lo.i - lo.i:values_hi.i - lo.i + 1]
        for p in probe_rows.get(j, ()):
            got[p] = float(V[p.i - lo.i])
        P = V
    return SweepResult(lo, hi, "from_source", out, values_lo, values_hi,
                       steps, tie_count, got)


def sweep_to_sink(field, lo: LatticePoint, hi: LatticePoint, *,
                  values_lo=None, values_hi=None,
                  want_steps=False, probes=()) -> SweepResult:
    """Fill T(p, hi) for p in [lo, hi]; the weight of p itself is never added."""
    if not (lo <= hi):
        raise ConfigurationError(f"empty sweep domain [{lo}, {hi}]")
    ni = hi.i - lo.i + 1
    out = _value_slab(lo, hi, values_lo, values_hi)
    steps = np.zeros((hi.j - lo.j + 1, ni), dtype=np.uint8) if want_steps else None
    probe_rows = {}
    for p in probes:
        probe_rows.setdefault(p.j, []).append(p)
    got = {}
    tie_count = 0
    W_up = None
    X_up = None
    for j in range(hi.j, lo.j - 1, -1):
        X = field.row(j, lo.i, hi.i)
        C = np.cumsum(X)
        if W_up is None:
            W = C[-1] - C
        else:
            Q = X_up + W_up
            T = C + Q
            M = np.maximum.accumulate(T[::-1])[::-1]
            W = M - C
            if want_steps:
                row = steps[j - lo.j]
                row[-1] = STEP_VERTICAL
                right = X[1:] + W[1:]          # successor (i+1, j)
                vert = Q[:-1] >= right
                tie = Q[:-1] == right
                row[:-1] = vert.astype(np.uint8) | (tie.astype(np.uint8) << 1)
                tie_count += int(tie.sum())
        if out is not None and values_lo.j <= j <= values_hi.j:
            out[j - values_lo.j] = W[values_lo.i - lo.i:values_hi.i - lo.i + 1]
        for p in probe_rows.get(j, ()):
            got[p] = float(W[p.i - lo.i])
        W_up, X_up = W, X
    return SweepResult(lo, hi, "to_sink", out, values_lo, values_hi,
                       steps, tie_count, got)


def backtrack(result: SweepResult, q: LatticePoint):
    """Walk a source-anchored step field from q down to the anchor.

    Returns (vertices anchor..q in path order, step chars, ties seen).
    """
    lo = result.lo
    steps = result.steps
    cur = q
    rev = [cur]
    chars = []
    ties = 0
    while cur != lo:
        bits = steps[cur.j - lo.j, cur.i - lo.i]
        ties += int(bool(bits & STEP_TIE))
        if bits & STEP_VERTICAL:
            chars.append("U")
            cur = LatticePoint(cur.i, cur.j - 1)
        else:
            chars.append("R")
            cur = LatticePoint(cur.i - 1, cur.j)
        rev.append(cur)
    rev.reverse()
    chars.reverse()
    return rev, "".join(chars), ties


def walk_to_root(steps: np.ndarray, lo: LatticePoint, hi: LatticePoint,
                 root: LatticePoint, p: LatticePoint, direction: str):
    """Follow a tree step field from p until the root; yields the vertices.

    direction "down": bit 0 set steps to (i, j-1), clear to (i-1, j).
    direction "up":   bit 0 set steps to (i, j+1), clear to (i+1, j).
    """
    cur = p
    out = [cur]
    dj = -1 if direction == "down" else 1
    while cur != root:
        bits = steps[cur.j - lo.j, cur.i - lo.i]
        if bits & STEP_VERTICAL:
            cur = LatticePoint(cur.i, cur.j + dj)
        else:
            cur = LatticePoint(cur.i + (1 if direction == "up" else -1), cur.j)
        out.append(cur)
    return out
