"""Estimators and hypothesis tests for the quantitative claims.

Box dimension stands in for Hausdorff dimension, log-log regressions for
exact exponents; every estimator is deterministic given (seed, config), and
every replica draws its weights from an independently derived seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _sweeps
from .duality import interface_portrait, trace_interface
from .errors import (ConfigurationError, EstimatorError,
                     InsufficientDataError)
from .lattice import (DualPoint, LatticePoint, WeightField, Window,
                      derive_seed)
from .scaling import RescaledPath, ScalingParams, rescale_path
from .trees import BusemannField, build_tree


# ---------------------------------------------------------------------------
# reference laws and KS machinery

def exp1_cdf(x):
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0, 0.0, 1.0 - np.exp(-np.minimum(x, 700.0)))


def exp_diff_cdf(z):
    """CDF of the difference of two independent rate-1/2 exponentials.

    The density is (1/4) e^(-|z|/2); mean 0, variance 8.
    """
    z = np.asarray(z, dtype=float)
    return np.where(z <= 0.0, 0.5 * np.exp(z / 2.0), 1.0 - 0.5 * np.exp(-z / 2.0))


def ks_statistic(samples, cdf) -> float:
    """Exact sup distance between the empirical CDF and a reference CDF."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise InsufficientDataError("empty sample")
    n = s.size
    F = np.asarray(cdf(s), dtype=float)
    hi = np.arange(1, n + 1) / n - F
    lo = F - np.arange(0, n) / n
    return float(max(hi.max(), lo.max(), 0.0))


def two_sample_ks(a, b) -> float:
    """Sup distance between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise InsufficientDataError("empty sample")
    allv = np.concatenate([a, b])
    ca = np.searchsorted(a, allv, side="right") / a.size
    cb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.abs(ca - cb).max())


# ---------------------------------------------------------------------------
# box counting

@dataclass
class BoxCountResult:
    scales: list
    counts: list
    fitted_dimension: float
    fit_stderr: float
    scale_range_used: tuple


@dataclass
class ExponentFit:
    sizes: list
    statistics: list
    fitted_exponent: float
    stderr: float


def _loglog_fit(x, y):
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise EstimatorError("degenerate regression: need at least two points")
    coeffs, cov = np.polyfit(lx, ly, 1, cov=True)
    return float(coeffs[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


def box_dimension(points, scales: Sequence[float]) -> BoxCountResult:
    """Box-counting dimension of a planar point set over dyadic scales.

    Boxes live on a fixed grid anchored at the set's lower-left corner.  The
    two smallest scales (sampling-resolution floor) and the largest one
    (window floor) are dropped from the regression.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise EstimatorError("points must be an (N, 2) array")
    if pts.shape[0] < 1000:
        raise EstimatorError(f"need >= 1000 points, got {pts.shape[0]}")
    scales = sorted(float(s) for s in scales)
    if len(scales) < 4:
        raise EstimatorError("need at least 4 scales")
    lo = pts.min(axis=0)
    if np.all(pts.max(axis=0) - lo == 0.0):
        raise EstimatorError("degenerate point set: all points equal")
    counts = []
    for eps in scales:
        idx = np.floor((pts - lo) / eps).astype(np.int64)
        key = (idx[:, 0] << np.int64(32)) ^ (idx[:, 1] & np.int64(0xFFFFFFFF))
        counts.append(int(np.unique(key).size))
    kept_scales = scales[2:-1]
    kept_counts = counts[2:-1]
    if len(kept_scales) < 2:
        raise EstimatorError("not enough scales left after trimming")
    slope, err = _loglog_fit([1.0 / e for e in kept_scales], kept_counts)
    return BoxCountResult(scales, counts, slope, err,
                          (kept_scales[0], kept_scales[-1]))


# ---------------------------------------------------------------------------
# path statistics

def geodesic_to_origin_displacement(seed: int, L: int) -> float:
    """|x| in rotated units, at diagonal depth L/2, of the down root-path
    from the origin toward a root L diagonal steps away."""
    S = LatticePoint(-L, -L)
    origin = LatticePoint(0, 0)
    field = WeightField(seed, Window(S, origin))
    res = _sweeps.sweep_from_source(field, S, origin, want_steps=True)
    verts, _, _ = _sweeps.backtrack(res, origin)
    v = verts[L]                      # L unit steps before the origin
    return abs(v.i - v.j) / 2.0


def fluctuation_exponent(seed: int, sizes: Sequence[int], replicas: int,
                         parallel_map=map) -> ExponentFit:
    """Transversal-wandering exponent from an RMS displacement fit.

    RMS is preferred over the max for its lighter tails; the scaling
    exponent is the same.
    """
    sizes = sorted(int(s) for s in sizes)
    if len(sizes) < 4 or sizes[-1] < 4 * sizes[0]:
        raise EstimatorError("need >= 4 sizes spanning >= 2 octaves")
    if replicas < 32:
        raise InsufficientDataError(f"need >= 32 replicas, got {replicas}")
    rms = []
    for L in sizes:
        seeds = [derive_seed(derive_seed(seed, L), r) for r in range(replicas)]
        disp = np.fromiter(
            parallel_map(lambda s, L=L: geodesic_to_origin_displacement(s, L), seeds),
            dtype=float, count=replicas)
        rms.append(float(np.sqrt(np.mean(disp ** 2))))
    slope, err = _loglog_fit(sizes, rms)
    return ExponentFit(list(sizes), rms, slope, err)


def holder_exponent(path: RescaledPath, gaps: Sequence[float]) -> ExponentFit:
    """Fit of the maximal increment over a gap h against h."""
    gaps = sorted(float(g) for g in gaps)
    t0, t1 = path.domain
    span = t1 - t0
    if gaps[-1] > span:
        raise EstimatorError(f"gap {gaps[-1]} exceeds path domain {span}")
    if span < 64 * gaps[0]:
        raise EstimatorError("path must span >= 2^6 x the smallest gap")
    dt = float(path.times[1] - path.times[0])
    stats = []
    for h in gaps:
        k = int(round(h / dt))
        if k < 1:
            raise EstimatorError(f"gap {h} below sample spacing {dt}")
        stats.append(float(np.abs(path.xs[k:] - path.xs[:-k]).max()))
    slope, err = _loglog_fit(gaps, stats)
    return ExponentFit(list(gaps), stats, slope, err)


def _time_in_interval(path: RescaledPath, I, J) -> float:
    """Leb({t in J : x(t) in I}) for a piecewise-linear path, exactly."""
    ilo, ihi = float(I[0]), float(I[1])
    jlo, jhi = float(J[0]), float(J[1])
    t = path.times
    x = path.xs
    t0, t1 = t[:-1], t[1:]
    a, b = x[:-1], x[1:]
    # clip segments to J in time
    cl = np.maximum(t0, jlo)
    ch = np.minimum(t1, jhi)
    frac_lo = np.where(t1 > t0, (cl - t0) / (t1 - t0), 0.0)
    frac_hi = np.where(t1 > t0, (ch - t0) / (t1 - t0), 0.0)
    keep = ch > cl
    a2 = a + (b - a) * frac_lo
    b2 = a + (b - a) * frac_hi
    dt = ch - cl
    mn = np.minimum(a2, b2)
    mx = np.maximum(a2, b2)
    flat = mx == mn
    inside = (mn >= ilo) & (mn <= ihi)
    overlap = np.clip(np.minimum(mx, ihi) - np.maximum(mn, ilo), 0.0, None)
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(flat, inside.astype(float), overlap / np.where(flat, 1.0, mx - mn))
    return float(np.sum(np.where(keep, frac * dt, 0.0)))


def occupation_exceedance(paths, I, J, M_values: Sequence[float]) -> dict:
    """Frequency, per threshold M, of the occupation of I x J exceeding
    M * Leb(I) * Leb(J)^(1/3)."""
    if len(paths) < 100:
        raise InsufficientDataError(f"need >= 100 paths, got {len(paths)}")
    leb_i = float(I[1]) - float(I[0])
    leb_j = float(J[1]) - float(J[0])
    if leb_i <= 0 or leb_j <= 0:
        raise ConfigurationError("I and J must be nondegenerate intervals")
    for p in paths:
        d0, d1 = p.domain
        if not (d0 <= J[0] and J[1] <= d1):
            raise ConfigurationError("J must lie inside every path domain")
    occ = np.array([_time_in_interval(p, I, J) for p in paths])
    freqs = [float(np.mean(occ > M * leb_i * leb_j ** (1.0 / 3.0))) for M in M_values]
    return {"M_values": list(M_values), "frequencies": freqs,
            "occupations": occ}


# ---------------------------------------------------------------------------
# Busemann increments

def busemann_increments(B: BusemannField, antidiagonal: int) -> np.ndarray:
    """Successive increments of B along one w-step on {i + j = const}."""
    lo, hi = B.window.lo, B.window.hi
    c = antidiagonal
    i0 = max(lo.i, c - hi.j)
    i1 = min(hi.i, c - lo.j)
    if i1 <= i0:
        return np.empty(0)
    ii = np.arange(i0, i1 + 1)
    vals = B.values[c - ii - lo.j, ii - lo.i]
    return np.diff(vals)


def increment_law_summary(z: np.ndarray) -> dict:
    return {
        "count": int(z.size),
        "mean": float(z.mean()),
        "variance": float(z.var(ddof=1)),
        "ks_distance": ks_statistic(z, exp_diff_cdf),
    }


def busemann_increment_test(B: BusemannField, antidiagonal: int, count: int) -> dict:
    """Test anti-diagonal increments against the two-sided exponential law."""
    z = busemann_increments(B, antidiagonal)
    if z.size < count:
        raise InsufficientDataError(
            f"only {z.size} increments available on the field, need {count}")
    start = (z.size - count) // 2
    return increment_law_summary(z[start:start + count])


def busemann_increment_ensemble(seed: int, size: int, K: int, n_seeds: int,
                                diag_stride: int, parallel_map=map) -> np.ndarray:
    """Pool certified anti-diagonal increments over independent fields.

    Each field contributes the increments of its down Busemann field along
    every diag_stride-th anti-diagonal, restricted to the region certified
    by a K-vs-2K comparison; uncertified fields contribute nothing.
    """
    from .trees import busemann_field, certify_stabilization

    def one(sd):
        win = Window.centered(size)
        field_win = Window(LatticePoint(-2 * K - 1, -2 * K - 1), win.hi)
        X = WeightField(sd, field_win)
        cert = certify_stabilization(X, win, K)
        if cert.empty:
            return np.empty(0)
        B = busemann_field(X, win, 2 * K)
        cw = cert.certified
        sliced = BusemannField(cw, B.source_distance, "down", B.source,
                               B.values[cw.lo.j - win.lo.j:cw.hi.j - win.lo.j + 1,
                                        cw.lo.i - win.lo.i:cw.hi.i - win.lo.i + 1])
        zs = []
        for c in range(cw.lo.i + cw.lo.j, cw.hi.i + cw.hi.j + 1, diag_stride):
            z = busemann_increments(sliced, c)
            if z.size:
                zs.append(z)
        return np.concatenate(zs) if zs else np.empty(0)

    seeds = [derive_seed(seed, t) for t in range(n_seeds)]
    parts = list(parallel_map(one, seeds))
    return np.concatenate([p for p in parts if p.size]) if parts else np.empty(0)


# ---------------------------------------------------------------------------
# highways, frame, one-endedness

def _diag_point(m: int, x: int) -> LatticePoint:
    return LatticePoint(m + x, m - x)


def highway_census(X, strip, start_level: int, end_level: int,
                   offsets: Sequence[int]) -> dict:
    """Distinct strip restrictions of all endpoint-pair geodesics.

    Endpoints sit on the anti-diagonal levels m = start_level and
    m = end_level at the given transversal offsets; the restriction keeps
    the vertices with strip[0] <= m <= strip[1].
    """
    s_, t_ = strip
    if not (start_level < s_ < t_ < end_level):
        raise ConfigurationError("need start < strip[0] < strip[1] < end")
    offsets = sorted(int(x) for x in offsets)
    restrictions = set()
    pairs = 0
    for xs in offsets:
        p = _diag_point(start_level, xs)
        ends = [_diag_point(end_level, xe) for xe in offsets
                if abs(xe - xs) <= end_level - start_level]
        if not ends:
            continue
        hi = LatticePoint(max(q.i for q in ends), max(q.j for q in ends))
        res = _sweeps.sweep_from_source(X, p, hi, want_steps=True)
        for q in ends:
            pairs += 1
            verts, _, _ = _sweeps.backtrack(res, q)
            key = tuple((v.i, v.j) for v in verts if 2 * s_ <= v.i + v.j <= 2 * t_)
            restrictions.add(key)
    return {"distinct": len(restrictions), "pairs": pairs}


def frame_coverage(X, window: Window, starts, ends) -> dict:
    """Fraction of window vertices interior to at least one grid geodesic."""
    covered = np.zeros(window.shape, dtype=bool)
    lo = window.lo
    for p in starts:
        valid = [q for q in ends if p <= q]
        if not valid:
            continue
        hi = LatticePoint(max(q.i for q in valid), max(q.j for q in valid))
        res = _sweeps.sweep_from_source(X, p, hi, want_steps=True)
        for q in valid:
            verts, _, _ = _sweeps.backtrack(res, q)
            for v in verts[1:-1]:
                if window.contains(v):
                    covered[v.j - lo.j, v.i - lo.i] = True
    total = covered.size
    return {"fraction": float(covered.sum() / total), "covered": int(covered.sum()),
            "total": int(total)}


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        self.parent[self.find(a)] = self.find(b)


def _trace_and_merge(portrait, sources, stop):
    """Walk portrait traces from each source; union traces that share a
    vertex; return (union-find, visit owner map)."""
    uf = _UnionFind(len(sources))
    owner = {}
    lo = portrait.window.lo
    down = portrait.direction == "down"
    for idx, d in enumerate(sources):
        cur = d.base
        while not stop(cur):
            key = (cur.i, cur.j)
            if key in owner:
                uf.union(idx, owner[key])
                break
            owner[key] = idx
            bits = portrait.dual_step[cur.j - lo.j, cur.i - lo.i]
            if bits & 1:
                cur = LatticePoint(cur.i, cur.j + (-1 if down else 1))
            else:
                cur = LatticePoint(cur.i + (-1 if down else 1), cur.j)
    return uf


def portrait_one_endedness(seed: int, heights: Sequence[int], k: int,
                           spacing: int = 2) -> dict:
    """Coalescence fractions of k interface traces started on the top edge.

    The window's top edge and the tree root are held fixed while the bottom
    is swept through the given heights, so the trace set at a smaller height
    is a prefix of the trace set at a larger one and the coalesced fraction
    is nondecreasing by construction.
    """
    if k < 1:
        raise ConfigurationError("need k >= 1 sources")
    heights = sorted(int(h) for h in heights)
    h_max = heights[-1]
    span = spacing * (k - 1)
    margin_x = int(8 + 2.0 * h_max ** (2.0 / 3.0))
    half_w = span // 2 + margin_x
    window = Window(LatticePoint(-half_w, -h_max), LatticePoint(half_w, 0))
    side = max(window.shape)
    K = 4 * side
    top_center = LatticePoint(0, 0)
    root = LatticePoint(top_center.i + K, top_center.j + K)
    field = WeightField(seed, Window(window.lo, root))
    res = _sweeps.sweep_to_sink(field, window.lo, root, want_steps=True)
    from .trees import GeodesicTree
    tree = GeodesicTree("up", window, root, window.lo, root, res.steps,
                        res.tie_count, K)
    portrait = interface_portrait(tree)
    xs = [-(span // 2) + spacing * l for l in range(k)]
    sources = [DualPoint(LatticePoint(x, -1)) for x in xs]
    pairs = k * (k - 1) // 2
    fractions = []
    for H in heights:
        def stop(p, H=H):
            return p.j < -H or p.i < window.lo.i
        if pairs == 0:
            fractions.append(1.0)
            continue
        uf = _trace_and_merge(portrait, sources, stop)
        comp = {}
        for idx in range(k):
            comp.setdefault(uf.find(idx), []).append(idx)
        coalesced = sum(len(c) * (len(c) - 1) // 2 for c in comp.values())
        fractions.append(coalesced / pairs)
    return {"heights": list(heights), "fractions": fractions, "pairs": pairs,
            "spacing": spacing, "span": span}


def nu_set_points(portrait, sources, params: ScalingParams) -> dict:
    """Rescaled union of interface traces plus their trifurcation census."""
    traces = [trace_interface(portrait, d) for d in sources]
    pts = [rescale_path(tr, params).graph_points() for tr in traces]
    visited = set()
    merge_points = []
    seen_merge = set()
    for idx, tr in enumerate(traces):
        for v in tr.points():
            key = (v.i, v.j)
            if key in visited:
                if idx > 0 and key not in seen_merge:
                    seen_merge.add(key)
                    merge_points.append(DualPoint(v))
                break
            visited.add(key)
    return {
        "points": np.vstack(pts) if pts else np.empty((0, 2)),
        "trifurcation_points": merge_points,
        "trifurcation_count": len(merge_points),
    }


# ---------------------------------------------------------------------------
# calibration helpers

def random_walk_graph(seed: int, steps: int) -> np.ndarray:
    """Graph of a diffusively rescaled simple random walk, as (x, t) points.

    Calibration control for the box-dimension estimator: the limit graph has
    dimension 3/2.
    """
    field = WeightField(seed, Window(LatticePoint(0, 0), LatticePoint(steps - 1, 0)))
    u = field.row(0, 0, steps - 1)
    signs = np.where(u > math.log(2.0), 1.0, -1.0)   # P(exp(1) > ln 2) = 1/2
    s = np.concatenate([[0.0], np.cumsum(signs)])
    t = np.arange(steps + 1) / steps
    x = s / math.sqrt(steps)
    return np.column_stack([x, t])
