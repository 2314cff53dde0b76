"""Lattice geometry and deterministic weight generation.

The primal lattice is Z^2 with the coordinate-wise partial order.  The dual
lattice is Z^2 + (1/2, 1/2), stored by the lower-left primal neighbour so all
bookkeeping stays in integer arithmetic.  Rotated coordinates decompose a
point as m*v + x*w with v = (1, 1) and w = (1, -1); m plays the role of time
and x of transversal position.

Weights are i.i.d. exp(1), produced by a counter-based hash of
(seed, i, j): any sub-window regenerates bitwise-identically, and replicas
parallelize without stream bookkeeping.  Weights are additionally snapped to
the grid 2^-32 * Z.  All passage times in the relevant size regime are then
sums of a few hundred thousand such values, i.e. dyadic rationals below 2^53
times the grid unit, so every addition, subtraction, and comparison performed
downstream is exact in float64.  This is what makes "bit-exact" checks
(composition law, duality, tie detection) meaningful rather than approximate.
The perturbation to the exp(1) law is of order 2^-32 and invisible at every
statistical tolerance used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

# Weight quantization grid: values are multiples of 2^-32.
WEIGHT_GRID = 2.0 ** -32

_M_SEED = np.uint64(0x9E3779B97F4A7C15)
_M_I = np.uint64(0xD2B74407B1CE6E93)
_M_J = np.uint64(0xC2B2AE3D27D4EB4F)
_M_STREAM = np.uint64(0xCA5A826395121157)


def _mix64(z):
    """SplitMix64 finalizer; operates on uint64 scalars or arrays."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def derive_seed(seed: int, index: int) -> int:
    """Derive an independent stream seed, e.g. for replica number `index`.

    Never plain seed+index arithmetic: a full mix keeps streams disjoint.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(seed) ^ (np.uint64(np.int64(index)) * _M_STREAM)
        z = _mix64(z + _M_SEED)
    return int(z)


def _word(seed, i_arr, j):
    """Hash words for row j at columns i_arr (uint64 arrays)."""
    with np.errstate(over="ignore"):
        a = _mix64(np.uint64(seed) ^ (i_arr * _M_I) ^ _M_SEED)
        return _mix64(a ^ (np.uint64(np.int64(j)) * _M_J))


def _words_to_weights(words):
    u53 = words >> np.uint64(11)
    u53 = np.where(u53 == np.uint64(0), np.uint64(1), u53)
    u = u53.astype(np.float64) * 2.0 ** -53  # in (0, 1), never exactly 1
    w = np.round(-np.log(u) / WEIGHT_GRID) * WEIGHT_GRID
    return np.where(w <= 0.0, WEIGHT_GRID, w)


def derive_weight(seed: int, p: "LatticePoint") -> float:
    """One exp(1) weight, pure in (seed, p); always strictly positive."""
    i = np.array([np.int64(p.i)], dtype=np.int64).astype(np.uint64)
    return float(_words_to_weights(_word(seed, i, p.j))[0])


@dataclass(frozen=True, order=False)
class LatticePoint:
    i: int
    j: int

    def __le__(self, other):
        return self.i <= other.i and self.j <= other.j

    def __add__(self, other):
        return LatticePoint(self.i + other[0], self.j + other[1])

    def __sub__(self, other):
        return LatticePoint(self.i - other[0], self.j - other[1])

    def __getitem__(self, k):
        return (self.i, self.j)[k]

    def __iter__(self):
        return iter((self.i, self.j))


E1 = (1, 0)
E2 = (0, 1)


@dataclass(frozen=True)
class DualPoint:
    """Dual-lattice vertex base + (1/2, 1/2), stored by its base point."""

    base: LatticePoint

    @property
    def xy(self):
        return (self.base.i + 0.5, self.base.j + 0.5)


@dataclass(frozen=True)
class RotatedCoord:
    """Coordinates along v = (1,1) and w = (1,-1): point = m*v + x*w."""

    m: float
    x: float


def to_rotated(p) -> RotatedCoord:
    """Exact rotated coordinates of a primal or dual point."""
    if isinstance(p, DualPoint):
        a, b = p.base.i + 0.5, p.base.j + 0.5
    else:
        a, b = p.i, p.j
    return RotatedCoord((a + b) / 2.0, (a - b) / 2.0)


def from_rotated(c: RotatedCoord):
    """Invert to_rotated; returns a LatticePoint or DualPoint exactly."""
    a, b = c.m + c.x, c.m - c.x
    ia, ib = round(a), round(b)
    if a == ia and b == ib:
        return LatticePoint(int(ia), int(ib))
    base = LatticePoint(int(math.floor(a)), int(math.floor(b)))
    if (a - base.i) == 0.5 and (b - base.j) == 0.5:
        return DualPoint(base)
    raise ConfigurationError(f"{c} is neither a primal nor a dual point")


def box_of(q) -> LatticePoint:
    """Tile of the plane containing q.

    The plane is partitioned into boxes p + {s*v + x*w: s in (-1/4, 1/4],
    x in (-1/2, 1/2]}, one per primal vertex p; upper boundaries are closed.
    """
    a, b = float(q[0]), float(q[1])
    mq, xq = (a + b) / 2.0, (a - b) / 2.0
    k = math.ceil(2.0 * mq - 0.5)          # strip index: m_p = k / 2
    if k % 2 == 0:
        xp = float(math.ceil(xq - 0.5))    # centers at integer x
    else:
        xp = math.ceil(xq) - 0.5           # centers at half-integer x
    mp = k / 2.0
    i, j = mp + xp, mp - xp
    return LatticePoint(int(round(i)), int(round(j)))


def box_contains(p: LatticePoint, q) -> bool:
    """Membership test for the tiling; used as an independent oracle."""
    s = ((q[0] - p.i) + (q[1] - p.j)) / 2.0
    x = ((q[0] - p.i) - (q[1] - p.j)) / 2.0
    return -0.25 < s <= 0.25 and -0.5 < x <= 0.5


@dataclass(frozen=True)
class Window:
    """Inclusive lattice rectangle plus a margin for far roots/sources."""

    lo: LatticePoint
    hi: LatticePoint
    margin: int = 0

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ConfigurationError(f"window lo {self.lo} > hi {self.hi}")
        if self.margin < 0:
            raise ConfigurationError("margin must be >= 0")

    @staticmethod
    def centered(side: int, margin: int = 0) -> "Window":
        """Square window of the given side centered on the origin."""
        h = side // 2
        return Window(LatticePoint(-h, -h), LatticePoint(side - h - 1, side - h - 1), margin)

    @property
    def enlarged_lo(self):
        return LatticePoint(self.lo.i - self.margin, self.lo.j - self.margin)

    @property
    def enlarged_hi(self):
        return LatticePoint(self.hi.i + self.margin, self.hi.j + self.margin)

    @property
    def center(self):
        return LatticePoint((self.lo.i + self.hi.i) // 2, (self.lo.j + self.hi.j) // 2)

    @property
    def shape(self):
        """(nj, ni) array shape of the inclusive rectangle."""
        return (self.hi.j - self.lo.j + 1, self.hi.i - self.lo.i + 1)

    def contains(self, p, enlarged: bool = False) -> bool:
        lo = self.enlarged_lo if enlarged else self.lo
        hi = self.enlarged_hi if enlarged else self.hi
        return lo <= p and p <= hi

    def grow(self, left=0, right=0, down=0, up=0) -> "Window":
        return Window(LatticePoint(self.lo.i - left, self.lo.j - down),
                      LatticePoint(self.hi.i + right, self.hi.j + up), self.margin)

    def points(self):
        for j in range(self.lo.j, self.hi.j + 1):
            for i in range(self.lo.i, self.hi.i + 1):
                yield LatticePoint(i, j)


class WeightField:
    """Seeded i.i.d. exp(1) weights on a window (plus margin).

    Values are immutable and fully determined by (seed, i, j); any sub-region
    regenerates bitwise-identically.  Requests outside window + margin raise,
    there is no lazy infinite field.
    """

    def __init__(self, seed: int, window: Window):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.window = window

    def _check(self, lo, hi):
        if not (self.window.enlarged_lo <= lo and hi <= self.window.enlarged_hi):
            raise ConfigurationError(
                f"region [{lo}, {hi}] outside field window+margin "
                f"[{self.window.enlarged_lo}, {self.window.enlarged_hi}]")

    def row(self, j: int, i0: int, i1: int) -> np.ndarray:
        """Weights on the row j for i in [i0, i1] inclusive."""
        self._check(LatticePoint(i0, j), LatticePoint(i1, j))
        i = np.arange(i0, i1 + 1, dtype=np.int64).astype(np.uint64)
        return _words_to_weights(_word(self.seed, i, j))

    def block(self, lo: LatticePoint, hi: LatticePoint) -> np.ndarray:
        """Weights on [lo, hi] inclusive as an array indexed [j - lo.j, i - lo.i]."""
        self._check(lo, hi)
        i = np.arange(lo.i, hi.i + 1, dtype=np.int64).astype(np.uint64)
        j = np.arange(lo.j, hi.j + 1, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            a = _mix64(np.uint64(self.seed) ^ (i * _M_I) ^ _M_SEED)
            words = _mix64(a[None, :] ^ (j[:, None] * _M_J))
        return _words_to_weights(words)

    def weight(self, p: LatticePoint) -> float:
        self._check(p, p)
        return derive_weight(self.seed, p)


class ArrayField:
    """Adapter giving a plain array the WeightField access interface.

    Used for the dual LPP model, whose weights are computed, not seeded.
    """

    def __init__(self, values: np.ndarray, lo: LatticePoint):
        self.values = values
        self.lo = lo
        self.window = Window(lo, LatticePoint(lo.i + values.shape[1] - 1,
                                              lo.j + values.shape[0] - 1))

    def row(self, j, i0, i1):
        return self.values[j - self.lo.j, i0 - self.lo.i:i1 - self.lo.i + 1]

    def block(self, lo, hi):
        return self.values[lo.j - self.lo.j:hi.j - self.lo.j + 1,
                           lo.i - self.lo.i:hi.i - self.lo.i + 1]

    def weight(self, p):
        return float(self.values[p.j - self.lo.j, p.i - self.lo.i])
