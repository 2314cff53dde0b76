"""Exact maps between lattice and rescaled (landscape) coordinates.

At scale parameter n, time rescales by n along v = (1, 1), transversal
position by 2^(2/3) n^(2/3) along w = (1, -1), and centered passage values by
2^(-4/3) n^(-1/3).  The triple is exactly covariant under
(x, t, n, value) -> (q^2 x, q^3 t, q^3 n, value / q) for any q > 0: the
lattice point hit by a rescaled coordinate and the rescaled value are
literally invariant, which is the discrete shadow of the 1:2:3 scaling
symmetry of the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, OrderingError
from .lattice import LatticePoint, box_of

VALUE_PREFACTOR = 2.0 ** (-4.0 / 3.0)
SPACE_FACTOR = 2.0 ** (2.0 / 3.0)
PATH_PREFACTOR = 2.0 ** (-2.0 / 3.0)


@dataclass(frozen=True)
class ScalingParams:
    """Scale parameter n > 0 and the constants it fixes."""

    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ConfigurationError("scale parameter n must be positive")

    @property
    def space_unit(self) -> float:
        """Lattice w-units per unit of rescaled transversal distance."""
        return SPACE_FACTOR * float(self.n) ** (2.0 / 3.0)

    @property
    def value_unit(self) -> float:
        return VALUE_PREFACTOR * float(self.n) ** (-1.0 / 3.0)

    @property
    def path_unit(self) -> float:
        """Rescaled transversal distance per lattice w-unit of a path."""
        return PATH_PREFACTOR * float(self.n) ** (-2.0 / 3.0)


@dataclass
class RescaledPath:
    """Piecewise-linear path t -> x(t); samples at strictly increasing times."""

    times: np.ndarray
    xs: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.xs = np.asarray(self.xs, dtype=float)
        if self.times.size != self.xs.size or self.times.size == 0:
            raise ConfigurationError("path needs matching, nonempty samples")
        if np.any(np.diff(self.times) <= 0):
            raise ConfigurationError("sample times must be strictly increasing")

    @property
    def domain(self):
        return (float(self.times[0]), float(self.times[-1]))

    def __call__(self, t):
        return np.interp(t, self.times, self.xs)

    def graph_points(self) -> np.ndarray:
        """(x, t) sample points of the graph, one row per sample."""
        return np.column_stack([self.xs, self.times])


def rescale_value(T_value: float, s: float, t: float, params: ScalingParams) -> float:
    """Centered, rescaled passage value over the time horizon [s, t]."""
    if not s < t:
        raise OrderingError(f"need s < t, got s={s}, t={t}")
    n = params.n
    return VALUE_PREFACTOR * float(n) ** (-1.0 / 3.0) * (T_value - 4.0 * (t - s) * n)


def landscape_point_to_lattice(x: float, t: float, params: ScalingParams) -> LatticePoint:
    """Lattice tile holding the rescaled coordinate (x, t)."""
    n = params.n
    u = t * n + params.space_unit * x      # component along (1, 0) ... v + w
    v_ = t * n - params.space_unit * x     # component along (0, 1) ... v - w
    return box_of((u, v_))


def rescale_path(path, params: ScalingParams) -> RescaledPath:
    """Rescale a lattice path's rotated view, sample at every vertex.

    Vertex k at rotated time m_k becomes the sample (m_k / n, x_k / space);
    evaluation between samples interpolates linearly.  Dual-lattice paths
    (interfaces) carry their half-offset vertex times exactly.
    """
    m, x = path.rotated()
    if m.size == 0:
        raise ConfigurationError("cannot rescale an empty path")
    n = params.n
    order = np.argsort(m, kind="stable")
    return RescaledPath(m[order] / n, x[order] * params.path_unit)


def skew_transform(path: RescaledPath, theta: float) -> RescaledPath:
    """Shear x(t) -> x(t) + theta * t; an exact bijection on paths."""
    return RescaledPath(path.times.copy(), path.xs + theta * path.times)
