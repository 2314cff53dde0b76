"""Dual weights, interface portraits, and the exact tree/portrait duality.

The dual weight at the dual vertex (i, j) + (1/2, 1/2) is

    min(B(i, j+1), B(i+1, j)) - B(i, j)

with B the down Busemann field.  These weights define a second LPP model on
the dual lattice whose up geodesic tree coincides, vertex for vertex, with
the up interface portrait of the primal model, and whose down interface
portrait coincides with the primal down tree.  The coincidence is exact, not
asymptotic, so any mismatch on a certified cell is a defect.

Geometry of the portrait rule: at the dual vertex with base (i, j), the
left dual step crosses the primal edge (i,j)-(i,j+1) and the down dual step
crosses (i,j)-(i+1,j).  Each primal vertex of an up tree uses exactly one of
those two edges, so exactly one dual step survives at every dual vertex:
tree step Up blocks Left (emit Down), tree step Right blocks Down (emit
Left).  The up portrait of a down tree mirrors this around the dual vertex's
upper-right base (i+1, j+1): tree step Down emits Up, Left emits Right.  In
step-bit terms every one of these emissions is the identity on bit 0, which
is why portraits below are index-shifted views of tree step fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _sweeps
from .errors import (ConfigurationError, ConsistencyError,
                     InsufficientCertificationError, InsufficientDataError)
from .lattice import ArrayField, DualPoint, LatticePoint, WeightField, Window
from .lpp import LatticePath
from .trees import (BusemannField, GeodesicTree, StabilizationCertificate,
                    _largest_centered_rect)


@dataclass
class DualWeightField:
    """Weights of the dual LPP model, indexed by the dual vertex's base."""

    window: Window              # base rectangle
    values: np.ndarray

    def value(self, d: DualPoint) -> float:
        lo = self.window.lo
        return float(self.values[d.base.j - lo.j, d.base.i - lo.i])

    def as_field(self) -> ArrayField:
        return ArrayField(self.values, self.window.lo)


@dataclass
class InterfaceForest:
    """Dual-lattice step field interlacing a geodesic tree.

    Down portraits step with {Left, Down}; up portraits with {Right, Up}.
    dual_step bit 0 set means the vertical step (Down resp. Up).
    """

    direction: str              # "down" | "up"
    window: Window              # base rectangle where steps are defined
    dual_step: np.ndarray       # uint8 view, bit 0 as above

    def step(self, d: DualPoint) -> str:
        lo = self.window.lo
        bits = self.dual_step[d.base.j - lo.j, d.base.i - lo.i]
        if self.direction == "down":
            return "D" if bits & 1 else "L"
        return "U" if bits & 1 else "R"


@dataclass
class DualityReport:
    seed: int
    n: int
    window: Window
    K: int
    certificate_primal: StabilizationCertificate
    certificate_dual: StabilizationCertificate
    match_down: float
    match_up: float
    mismatch_down: int
    mismatch_up: int
    compared_down: int
    compared_up: int
    dual_mean: float
    dual_ks: float
    dual_count: int
    ties: int

    def to_dict(self):
        return {
            "seed": self.seed,
            "n": self.n,
            "window": [list(self.window.lo), list(self.window.hi)],
            "K": self.K,
            "certified": {
                "down": self.certificate_primal.to_dict(),
                "up": self.certificate_dual.to_dict(),
            },
            "match_down": self.match_down,
            "match_up": self.match_up,
            "mismatch_down": self.mismatch_down,
            "mismatch_up": self.mismatch_up,
            "compared_down": self.compared_down,
            "compared_up": self.compared_up,
            "dual_mean": self.dual_mean,
            "dual_ks": self.dual_ks,
            "dual_count": self.dual_count,
            "ties": self.ties,
        }


def dual_weights(B: BusemannField, window: Window) -> DualWeightField:
    """Evaluate the dual weight field on the given base rectangle.

    B must be a down field covering the rectangle grown by one step in +e1
    and +e2.  Nonpositive output aborts: positivity is an invariant of any
    correct down Busemann field, so a violation means a bug upstream.
    """
    if B.direction != "down":
        raise ConfigurationError("dual weights require a down Busemann field")
    if not (B.window.lo <= window.lo
            and window.hi + (1, 1) <= B.window.hi):
        raise ConfigurationError("Busemann field does not cover window + 1")
    lo = B.window.lo
    j0, i0 = window.lo.j - lo.j, window.lo.i - lo.i
    j1, i1 = window.hi.j - lo.j, window.hi.i - lo.i
    V = B.values
    base = V[j0:j1 + 1, i0:i1 + 1]
    up = V[j0 + 1:j1 + 2, i0:i1 + 1]
    right = V[j0:j1 + 1, i0 + 1:i1 + 2]
    vals = np.minimum(up, right) - base
    if not np.all(vals > 0.0):
        raise ConsistencyError("nonpositive dual weight: Busemann field is inconsistent")
    return DualWeightField(window, vals)


def interface_portrait(tree: GeodesicTree) -> InterfaceForest:
    """Interface portrait of a geodesic tree, on the dual lattice.

    An up tree yields a down portrait on the same base rectangle; a down
    tree yields an up portrait whose base rectangle shifts by (-1, -1).
    Portrait edges never cross tree edges, by the blocking rule above.
    """
    bits = tree.window_steps()
    if tree.direction == "up":
        return InterfaceForest("down", tree.window, bits)
    lo, hi = tree.window.lo, tree.window.hi
    shifted = Window(LatticePoint(lo.i - 1, lo.j - 1), LatticePoint(hi.i - 1, hi.j - 1))
    return InterfaceForest("up", shifted, bits)


def trace_interface(portrait: InterfaceForest, p: DualPoint) -> LatticePath:
    """Follow the portrait's steps from p until the trace leaves the window."""
    win = portrait.window
    if not win.contains(p.base):
        raise ConfigurationError(f"{p} outside portrait window")
    lo = win.lo
    down = portrait.direction == "down"
    cur = p.base
    chars = []
    while win.contains(cur):
        bits = portrait.dual_step[cur.j - lo.j, cur.i - lo.i]
        if bits & 1:
            chars.append("D" if down else "U")
            cur = LatticePoint(cur.i, cur.j + (-1 if down else 1))
        else:
            chars.append("L" if down else "R")
            cur = LatticePoint(cur.i + (-1 if down else 1), cur.j)
    return LatticePath(p.base, "".join(chars), 0, dual=True)


def _down_step_bits(B_values: np.ndarray):
    """Primal down-tree step bits from a Busemann/passage slab.

    Bit for the cell at slab index [j, i] (j, i >= 1): 1 iff the Down
    predecessor wins, i.e. V[j-1, i] >= V[j, i-1]; ties also count as Down.
    Returns (bits, tie_mask) for the interior cells.
    """
    down = B_values[:-1, 1:] >= B_values[1:, :-1]
    tie = B_values[:-1, 1:] == B_values[1:, :-1]
    return down, tie


def _up_step_bits_window(res: _sweeps.SweepResult, window: Window):
    lo = res.lo
    sl = res.steps[window.lo.j - lo.j:window.hi.j - lo.j + 1,
                   window.lo.i - lo.i:window.hi.i - lo.i + 1]
    return (sl & 1).astype(bool), (sl & 2).astype(bool)


def verify_duality(seed: int, window: Window, K: int) -> DualityReport:
    """Build both models and compare their trees and portraits edge by edge.

    Pipeline: down Busemann fields at distances K and 2K certify a primal
    region; dual weights come from the 2K field; the dual model's up tree is
    built and certified with its own far sinks at K and 2K; finally the
    primal down tree is compared against the dual model's down portrait on
    Z^2, and the primal up portrait against the dual up tree on the dual
    lattice, over the intersection of both certified regions (minus a
    one-cell rim of the window).  On that intersection both match fractions
    must equal exactly 1.0.
    """
    origin = LatticePoint(0, 0)
    if not window.contains(origin):
        raise ConfigurationError("duality window must contain the origin")
    W = window
    rim = 1
    # Geometry: dual weights on D_XT, Busemann slab on D_B = D_XT + 1.
    dual_base_win = Window(W.lo - (1, 1), W.hi)
    dual_center = dual_base_win.center
    sink_far = LatticePoint(dual_center.i + 2 * K, dual_center.j + 2 * K)
    d_xt = Window(LatticePoint(W.lo.i - 1, W.lo.j - 1), sink_far)
    d_b = Window(LatticePoint(W.lo.i - 2, W.lo.j - 2), sink_far + (1, 1))
    source_far = LatticePoint(-2 * K, -2 * K)
    field_win = Window(LatticePoint(min(source_far.i, d_b.lo.i), min(source_far.j, d_b.lo.j)),
                       d_b.hi)
    X = WeightField(seed, field_win)

    # Primal side: two down Busemann slabs and their agreement certificate.
    slabs = {}
    for dist in (K, 2 * K):
        S = LatticePoint(-dist, -dist)
        res = _sweeps.sweep_from_source(X, S, d_b.hi, values_lo=d_b.lo, values_hi=d_b.hi)
        slabs[dist] = res.values - res.value_at(origin)
    B2 = BusemannField(d_b, 2 * K, "down", LatticePoint(-2 * K, -2 * K), slabs[2 * K])

    cert_win = W.grow(1, 1, 1, 1)
    bits_k, tie_k = _down_step_bits(slabs[K])
    bits_2k, tie_2k = _down_step_bits(slabs[2 * K])
    # _down_step_bits drops the first row/column of the slab; the slab starts
    # at W.lo - 2, so interior cells start at W.lo - 1 = cert_win.lo.
    G = slabs[K] - slabs[2 * K]
    cj = W.center.j - d_b.lo.j
    ci = W.center.i - d_b.lo.i
    ok = (bits_k == bits_2k) & (G[1:, 1:] == G[cj, ci])

    def rect_of(winr):
        return (winr.lo.j - cert_win.lo.j, winr.hi.j - cert_win.lo.j,
                winr.lo.i - cert_win.lo.i, winr.hi.i - cert_win.lo.i)

    nj = cert_win.hi.j - cert_win.lo.j + 1
    ni = cert_win.hi.i - cert_win.lo.i + 1
    ok_cert = ok[:nj, :ni]
    r = _largest_centered_rect(ok_cert, W.center.j - cert_win.lo.j,
                               W.center.i - cert_win.lo.i)
    cert_primal = StabilizationCertificate(
        cert_win,
        None if r is None else Window(
            LatticePoint(cert_win.lo.i + r[2], cert_win.lo.j + r[0]),
            LatticePoint(cert_win.lo.i + r[3], cert_win.lo.j + r[1])),
        (K, 2 * K))

    # Dual side: weights from the deeper field, up tree with its own roots.
    xt = dual_weights(B2, d_xt)
    xt_field = xt.as_field()
    dual_slabs = {}
    dual_bits = {}
    dual_ties = 0
    for dist in (K, 2 * K):
        sink = LatticePoint(dual_center.i + dist, dual_center.j + dist)
        res = _sweeps.sweep_to_sink(xt_field, d_xt.lo, sink, want_steps=True,
                                    values_lo=dual_base_win.lo, values_hi=dual_base_win.hi)
        dual_slabs[dist] = res.values
        bits, ties = _up_step_bits_window(res, dual_base_win)
        dual_bits[dist] = bits
        dual_ties += int(ties.sum())
    Gd = dual_slabs[K] - dual_slabs[2 * K]
    dj = dual_base_win.center.j - dual_base_win.lo.j
    di = dual_base_win.center.i - dual_base_win.lo.i
    ok_d = (dual_bits[K] == dual_bits[2 * K]) & (Gd == Gd[dj, di])
    rd = _largest_centered_rect(ok_d, dj, di)
    cert_dual = StabilizationCertificate(
        dual_base_win,
        None if rd is None else Window(
            LatticePoint(dual_base_win.lo.i + rd[2], dual_base_win.lo.j + rd[0]),
            LatticePoint(dual_base_win.lo.i + rd[3], dual_base_win.lo.j + rd[1])),
        (K, 2 * K))

    if cert_primal.empty or cert_dual.empty:
        raise InsufficientCertificationError(
            f"insufficient K/window: primal certificate "
            f"{'empty' if cert_primal.empty else 'ok'}, dual certificate "
            f"{'empty' if cert_dual.empty else 'ok'}",
            cert_primal, cert_dual)

    def intersect(a: Window, b: Window) -> Optional[Window]:
        lo = LatticePoint(max(a.lo.i, b.lo.i), max(a.lo.j, b.lo.j))
        hi = LatticePoint(min(a.hi.i, b.hi.i), min(a.hi.j, b.hi.j))
        return Window(lo, hi) if lo <= hi else None

    inner = Window(W.lo + (rim, rim), W.hi - (rim, rim))

    # match_down: primal down tree on Z^2 vs the dual model's down portrait,
    # whose step at v equals the dual up step at base v - (1, 1).
    reg_down = intersect(inner, cert_primal.certified)
    if reg_down is not None:
        reg_down = intersect(reg_down,
                             Window(cert_dual.certified.lo + (1, 1),
                                    cert_dual.certified.hi + (1, 1)))
    if reg_down is None:
        raise InsufficientCertificationError(
            "insufficient K/window: certified regions do not intersect",
            cert_primal, cert_dual)

    def primal_bits_at(winr):
        # bits_2k index [j, i] corresponds to the cell cert-slab lo + (1,1) + (i, j)
        o = d_b.lo + (1, 1)
        return bits_2k[winr.lo.j - o.j:winr.hi.j - o.j + 1,
                       winr.lo.i - o.i:winr.hi.i - o.i + 1]

    def dual_bits_at(winr, dist=2 * K):
        o = dual_base_win.lo
        return dual_bits[dist][winr.lo.j - o.j:winr.hi.j - o.j + 1,
                               winr.lo.i - o.i:winr.hi.i - o.i + 1]

    pd = primal_bits_at(reg_down)
    dd = dual_bits_at(Window(reg_down.lo - (1, 1), reg_down.hi - (1, 1)))
    eq_down = pd == dd
    compared_down = eq_down.size
    mismatch_down = int((~eq_down).sum())

    # match_up: primal up portrait (step at base b = primal down step at
    # b + (1, 1)) vs the dual model's up tree at base b; the shifted
    # region is inside the dual certificate by construction of reg_down.
    reg_up_base = Window(reg_down.lo - (1, 1), reg_down.hi - (1, 1))
    pu = primal_bits_at(reg_down)
    du = dual_bits_at(reg_up_base)
    eq_up = pu == du
    compared_up = eq_up.size
    mismatch_up = int((~eq_up).sum())

    # Certified dual weights: base cells whose three Busemann values are all
    # inside the certified primal rectangle.
    cw = cert_primal.certified
    dw_hi = LatticePoint(min(cw.hi.i - 1, d_xt.hi.i), min(cw.hi.j - 1, d_xt.hi.j))
    dw_lo = LatticePoint(max(cw.lo.i, d_xt.lo.i), max(cw.lo.j, d_xt.lo.j))
    if dw_lo <= dw_hi:
        o = d_xt.lo
        dw = xt.values[dw_lo.j - o.j:dw_hi.j - o.j + 1,
                       dw_lo.i - o.i:dw_hi.i - o.i + 1].ravel()
    else:
        dw = np.empty(0)
    from .stats import exp1_cdf, ks_statistic
    dual_mean = float(dw.mean()) if dw.size else float("nan")
    dual_ks = ks_statistic(dw, exp1_cdf) if dw.size >= 2 else float("nan")

    ties = int(tie_k.sum()) + int(tie_2k.sum()) + dual_ties
    return DualityReport(
        seed=seed, n=max(W.shape), window=W, K=K,
        certificate_primal=cert_primal, certificate_dual=cert_dual,
        match_down=1.0 - mismatch_down / compared_down,
        match_up=1.0 - mismatch_up / compared_up,
        mismatch_down=mismatch_down, mismatch_up=mismatch_up,
        compared_down=compared_down, compared_up=compared_up,
        dual_mean=dual_mean, dual_ks=dual_ks, dual_count=int(dw.size),
        ties=ties)


def dual_weight_distribution(xt: DualWeightField, certified: Optional[Window] = None) -> dict:
    """Summary statistics of dual weights against the exp(1) law.

    Restrict to a certified region when one is supplied; lag-1 spatial
    autocorrelations along e1 and e2 are expected to vanish.
    """
    vals = xt.values
    if certified is not None:
        o = xt.window.lo
        vals = vals[certified.lo.j - o.j:certified.hi.j - o.j + 1,
                    certified.lo.i - o.i:certified.hi.i - o.i + 1]
    flat = vals.ravel()
    if flat.size < 1000:
        raise InsufficientDataError(f"only {flat.size} dual weights; need >= 1000")
    from .stats import exp1_cdf, ks_statistic

    def lag1(a, b):
        a = a.ravel()
        b = b.ravel()
        return float(np.corrcoef(a, b)[0, 1])

    return {
        "count": int(flat.size),
        "mean": float(flat.mean()),
        "variance": float(flat.var(ddof=1)),
        "ks_distance": ks_statistic(flat, exp1_cdf),
        "lag1_e1": lag1(vals[:, :-1], vals[:, 1:]),
        "lag1_e2": lag1(vals[:-1, :], vals[1:, :]),
    }
