"""Finite-volume geodesic trees, Busemann fields, and stabilization.

Semi-infinite geodesics in the +/-(1,1) direction are approximated by
geodesics to a far root placed K diagonal steps beyond the window.  Whether
the approximation has converged is never assumed: a stabilization
certificate recomputes steps and Busemann increments with the root at
distance 2K and reports the largest centered rectangle on which both agree
exactly.  Claims about infinite-volume objects are only ever made on
certified regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _sweeps
from .errors import ConfigurationError
from .lattice import LatticePoint, Window

_DOWN_CHARS = {0: "L", 1: "D"}
_UP_CHARS = {0: "R", 1: "U"}


@dataclass
class GeodesicTree:
    """Per-vertex step field pointing each vertex toward a far root.

    Down trees step with {Left, Down}, up trees with {Right, Up}.  The step
    field is total on the domain, so any two root-paths merge at their first
    shared vertex and never separate again.
    """

    direction: str              # "up" | "down"
    window: Window
    root: LatticePoint
    domain_lo: LatticePoint
    domain_hi: LatticePoint
    steps: np.ndarray           # uint8, bit 0 = vertical step, bit 1 = tie
    tie_count: int
    K: int

    def step(self, p: LatticePoint) -> str:
        bits = self.steps[p.j - self.domain_lo.j, p.i - self.domain_lo.i]
        chars = _DOWN_CHARS if self.direction == "down" else _UP_CHARS
        return chars[int(bits) & 1]

    def step_vertical(self, p: LatticePoint) -> bool:
        return bool(self.steps[p.j - self.domain_lo.j, p.i - self.domain_lo.i] & 1)

    def root_path(self, p: LatticePoint):
        """Vertices from p to the root, following the step field."""
        if not (self.domain_lo <= p and p <= self.domain_hi):
            raise ConfigurationError(f"{p} outside tree domain")
        return _sweeps.walk_to_root(self.steps, self.domain_lo, self.domain_hi,
                                    self.root, p, self.direction)

    def window_steps(self) -> np.ndarray:
        """Step bits restricted to the requested window."""
        lo, hi = self.window.lo, self.window.hi
        return self.steps[lo.j - self.domain_lo.j:hi.j - self.domain_lo.j + 1,
                          lo.i - self.domain_lo.i:hi.i - self.domain_lo.i + 1]


@dataclass
class BusemannField:
    """Passage-time differences to a far source (down) or sink (up),
    normalized to 0 at the origin."""

    window: Window
    source_distance: int
    direction: str
    source: LatticePoint
    values: np.ndarray          # over the window

    def value(self, p: LatticePoint) -> float:
        lo = self.window.lo
        return float(self.values[p.j - lo.j, p.i - lo.i])


@dataclass
class StabilizationCertificate:
    requested: Window
    certified: Optional[Window]         # None when nothing stabilized
    distances: tuple

    @property
    def empty(self) -> bool:
        return self.certified is None

    def to_dict(self):
        return {
            "certified_lo": None if self.empty else list(self.certified.lo),
            "certified_hi": None if self.empty else list(self.certified.hi),
            "K": self.distances[0],
            "K_reference": self.distances[1],
        }


def _tree_root(X, window: Window, direction: str, K: int):
    c = window.center
    sign = 1 if direction == "up" else -1
    root = LatticePoint(c.i + sign * K, c.j + sign * K)
    flo, fhi = X.window.enlarged_lo, X.window.enlarged_hi
    root = LatticePoint(min(max(root.i, flo.i), fhi.i),
                        min(max(root.j, flo.j), fhi.j))
    if direction == "up" and not (window.hi <= root):
        raise ConfigurationError(f"up root {root} does not dominate window {window.hi}")
    if direction == "down" and not (root <= window.lo):
        raise ConfigurationError(f"down root {root} does not precede window {window.lo}")
    return root


def build_tree(X, window: Window, direction: str, K: int) -> GeodesicTree:
    """Geodesic tree toward a far root at distance K along +/-(1,1).

    Up trees: step(p) maximizes X_u + T(u, root) over u in {p+e1, p+e2}.
    Down trees: step(p) maximizes T(root, u) over u in {p-e1, p-e2}.
    Ties break toward Up (resp. Down) and are counted.
    """
    side = max(window.shape)
    if K < side:
        raise ConfigurationError(f"root distance K={K} below window side {side}")
    root = _tree_root(X, window, direction, K)
    if direction == "down":
        res = _sweeps.sweep_from_source(X, root, window.hi, want_steps=True)
        return GeodesicTree("down", window, root, root, window.hi,
                            res.steps, res.tie_count, K)
    if direction == "up":
        res = _sweeps.sweep_to_sink(X, window.lo, root, want_steps=True)
        return GeodesicTree("up", window, root, window.lo, root,
                            res.steps, res.tie_count, K)
    raise ConfigurationError(f"unknown direction {direction!r}")


def busemann_field(X, window: Window, K: int, direction: str = "down") -> BusemannField:
    """B(p) = T(S, p) - T(S, origin) with S = origin -/+ K*(1,1).

    Equals the coalescence-based Busemann difference whenever the relevant
    geodesics coalesce before reaching S; certified separately.
    """
    origin = LatticePoint(0, 0)
    if not window.contains(origin):
        raise ConfigurationError("window must contain the origin")
    if direction == "down":
        S = LatticePoint(-K, -K)
        res = _sweeps.sweep_from_source(X, S, window.hi,
                                        values_lo=window.lo, values_hi=window.hi)
    elif direction == "up":
        S = LatticePoint(K, K)
        res = _sweeps.sweep_to_sink(X, window.lo, S,
                                    values_lo=window.lo, values_hi=window.hi)
    else:
        raise ConfigurationError(f"unknown direction {direction!r}")
    values = res.values - res.values[-window.lo.j, -window.lo.i]
    return BusemannField(window, K, direction, S, values)


def _largest_centered_rect(ok: np.ndarray, cj: int, ci: int) -> Optional[tuple]:
    """Largest all-True rectangle centered at (cj, ci), clipped to the grid.

    Radii grow symmetrically; clipping at the grid edge keeps the rectangle
    maximal there.  Returns (j0, j1, i0, i1) inclusive, or None.
    """
    nj, ni = ok.shape
    if not ok[cj, ci]:
        return None
    pref = np.zeros((nj + 1, ni + 1), dtype=np.int64)
    pref[1:, 1:] = np.cumsum(np.cumsum(ok.astype(np.int64), axis=0), axis=1)

    def full(j0, j1, i0, i1):
        want = (j1 - j0 + 1) * (i1 - i0 + 1)
        have = (pref[j1 + 1, i1 + 1] - pref[j0, i1 + 1]
                - pref[j1 + 1, i0] + pref[j0, i0])
        return have == want

    def rect(rx, ry):
        return (max(0, cj - ry), min(nj - 1, cj + ry),
                max(0, ci - rx), min(ni - 1, ci + rx))

    max_rx = max(ci, ni - 1 - ci)
    max_ry = max(cj, nj - 1 - cj)
    best, best_area = rect(0, 0), 1
    for rx in range(max_rx + 1):
        if not full(*rect(rx, 0)):
            break
        lo_ry, hi_ry = 0, max_ry
        while lo_ry < hi_ry:           # largest ry with a full rectangle
            mid = (lo_ry + hi_ry + 1) // 2
            if full(*rect(rx, mid)):
                lo_ry = mid
            else:
                hi_ry = mid - 1
        r = rect(rx, lo_ry)
        area = (r[1] - r[0] + 1) * (r[3] - r[2] + 1)
        if area > best_area:
            best, best_area = r, area
    return best


def certify_stabilization(X, window: Window, K: int, direction: str = "down",
                          K_reference: Optional[int] = None) -> StabilizationCertificate:
    """Compare tree steps and Busemann increments at root distances K and
    K_reference (default 2K); certify the largest centered rectangle of
    exact agreement.

    Increment agreement is tested as constancy of the difference field
    T_K - T_ref relative to the window center, which is equivalent to all
    pairwise Busemann differences agreeing; both tests are exact.
    """
    K2 = 2 * K if K_reference is None else K_reference
    if K2 <= K:
        raise ConfigurationError("reference distance must exceed K")
    masks = []
    diffs = []
    for dist in (K, K2):
        c = window.center
        if direction == "down":
            S = LatticePoint(c.i - dist, c.j - dist)
            res = _sweeps.sweep_from_source(X, S, window.hi, want_steps=True,
                                            values_lo=window.lo, values_hi=window.hi)
            lo = S
        else:
            S = LatticePoint(c.i + dist, c.j + dist)
            res = _sweeps.sweep_to_sink(X, window.lo, S, want_steps=True,
                                        values_lo=window.lo, values_hi=window.hi)
            lo = window.lo
        step_win = res.steps[window.lo.j - lo.j:window.hi.j - lo.j + 1,
                             window.lo.i - lo.i:window.hi.i - lo.i + 1] & 1
        masks.append(step_win)
        diffs.append(res.values)
    G = diffs[0] - diffs[1]
    cj = window.center.j - window.lo.j
    ci = window.center.i - window.lo.i
    ok = (masks[0] == masks[1]) & (G == G[cj, ci])
    r = _largest_centered_rect(ok, cj, ci)
    certified = None
    if r is not None:
        j0, j1, i0, i1 = r
        certified = Window(LatticePoint(window.lo.i + i0, window.lo.j + j0),
                           LatticePoint(window.lo.i + i1, window.lo.j + j1))
    return StabilizationCertificate(window, certified, (K, K2))


def coalescence_point(tree: GeodesicTree, p: LatticePoint, q: LatticePoint) -> LatticePoint:
    """First common vertex of the two root-paths (exists: both reach root)."""
    seen = set(tree.root_path(p))
    for v in tree.root_path(q):
        if v in seen:
            return v
    raise ConfigurationError("root-paths never met; tree is inconsistent")


def trifurcation_census(tree: GeodesicTree, sources) -> dict:
    """All vertices where a source's root-path first meets an earlier one.

    The census size is at most len(sources) - 1: each added source
    contributes at most one new merge vertex.
    """
    visited = set()
    points = []
    distinct = set()
    for s in sources:
        path = tree.root_path(s)
        if not visited:
            visited.update(path)
            continue
        for v in path:
            if v in visited:
                if v not in distinct:
                    distinct.add(v)
                    points.append(v)
                break
            visited.add(v)
    return {"points": points, "count": len(points)}
