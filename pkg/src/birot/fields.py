"""Quadrant geometry, gridded scalar fields and the R^4 measure.

A bi-rotational orbit in R^4 is the product of two circles of radii ``r`` and
``s``; its volume element is ``4 pi^2 r s dr ds``. Every norm in this package
is an R^4 norm: a quadrant integral ``\\iint f dr ds`` differs from the R^4
integral by the weight ``4 pi^2 r s``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

FOUR_PI_SQ = 4.0 * np.pi ** 2

CELL_CENTERED = "cell_centered"
NODE_CENTERED = "node_centered"
_STAGGERS = (CELL_CENTERED, NODE_CENTERED)

AXIS_TOL = 1e-12
TRUNCATION_TOL = 1e-6


class AxisValueError(ValueError):
    """A vorticity sample on r = 0 or s = 0 is not zero."""


class TruncationError(ValueError):
    """Too much of the field sits in the outer rings of the grid."""


class QuadrantPoint(NamedTuple):
    r: float
    s: float

    def check(self) -> "QuadrantPoint":
        if not (self.r >= 0.0 and self.s >= 0.0):
            raise ValueError(f"point {tuple(self)} lies outside the quadrant")
        return self


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, r_max] x [0, s_max]``.

    ``cell_centered`` samples sit at ``(i + 1/2) h``; ``node_centered`` samples
    sit at ``i h`` for ``i = 0 .. n - 1`` so the axes are stored and the outer
    edge ``r_max`` is an implicit boundary node.
    """

    r_max: float
    s_max: float
    n_r: int
    n_s: int
    stagger: str = CELL_CENTERED

    def __post_init__(self):
        if not (self.r_max > 0 and self.s_max > 0):
            raise ValueError("grid extents must be positive")
        if self.n_r < 1 or self.n_s < 1:
            raise ValueError("grid sizes must be positive")
        if self.stagger not in _STAGGERS:
            raise ValueError(f"unknown stagger {self.stagger!r}")

    @property
    def h_r(self) -> float:
        return self.r_max / self.n_r

    @property
    def h_s(self) -> float:
        return self.s_max / self.n_s

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_s)

    @property
    def r(self) -> np.ndarray:
        off = 0.5 if self.stagger == CELL_CENTERED else 0.0
        return (np.arange(self.n_r) + off) * self.h_r

    @property
    def s(self) -> np.ndarray:
        off = 0.5 if self.stagger == CELL_CENTERED else 0.0
        return (np.arange(self.n_s) + off) * self.h_s

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.s, indexing="ij")

    def measure(self) -> np.ndarray:
        """R^4 measure carried by each sample (midpoint rule)."""
        R, S = self.mesh()
        return measure_weight(QuadrantPoint(R, S), self.h_r, self.h_s)

    def scaled(self, factor: float) -> "GridSpec":
        return GridSpec(self.r_max * factor, self.s_max * factor, self.n_r, self.n_s, self.stagger)


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(f"values have shape {values.shape}, grid is {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return ScalarField(self.grid, self.values + other.values)

    @classmethod
    def from_function(cls, grid: GridSpec, func) -> "ScalarField":
        R, S = grid.mesh()
        return cls(grid, np.broadcast_to(func(R, S), grid.shape).astype(float))


def measure_weight(p: QuadrantPoint, h_r: float, h_s: float):
    """R^4 volume of the orbit cell of size ``h_r x h_s`` around ``p``.

    Works elementwise when ``p.r`` and ``p.s`` are arrays.
    """
    return FOUR_PI_SQ * p.r * p.s * h_r * h_s


def w_from_zeta(zeta: ScalarField) -> ScalarField:
    R, S = zeta.grid.mesh()
    return ScalarField(zeta.grid, R * S * zeta.values)


def check_axis_values(w: ScalarField, tol: float = AXIS_TOL) -> None:
    """Raise :class:`AxisValueError` if ``w`` does not vanish on stored axis samples."""
    if w.grid.stagger != NODE_CENTERED:
        return
    scale = float(np.max(np.abs(w.values))) if w.values.size else 0.0
    limit = tol * scale
    edge = np.concatenate([w.values[0, :], w.values[:, 0]])
    worst = float(np.max(np.abs(edge)))
    if worst > limit:
        raise AxisValueError(
            f"w has axis sample of size {worst:.3e} > {limit:.3e}; w = rs*zeta must vanish there"
        )


def _extrapolate_axis(values: np.ndarray, axis: int) -> None:
    # quadratic through the three nearest interior samples
    v = np.moveaxis(values, axis, 0)
    if v.shape[0] < 4:
        v[0] = v[1] if v.shape[0] > 1 else 0.0
        return
    v[0] = 3.0 * v[1] - 3.0 * v[2] + v[3]


def zeta_from_w(w: ScalarField, tol: float = AXIS_TOL) -> ScalarField:
    """Relative vorticity ``w / (r s)``, with axis samples extrapolated."""
    check_axis_values(w, tol)
    R, S = w.grid.mesh()
    RS = R * S
    zeta = np.zeros_like(w.values)
    np.divide(w.values, RS, out=zeta, where=RS > 0)
    if w.grid.stagger == NODE_CENTERED:
        _extrapolate_axis(zeta[:, 1:], axis=0)
        _extrapolate_axis(zeta, axis=1)
    return ScalarField(w.grid, zeta)


def lp_norm(f: ScalarField, p: float) -> float:
    """``L^p(R^4)`` norm of a gridded field; ``p = inf`` gives the max."""
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p < 1:
        raise ValueError("p must be >= 1")
    return float(np.sum(a ** p * f.grid.measure()) ** (1.0 / p))


def outer_ring_fraction(zeta: ScalarField, rings: int = 2) -> float:
    """Fraction of ``||zeta||_{L^1}`` sitting in the outermost ``rings`` cell rings."""
    mass = np.abs(zeta.values) * zeta.grid.measure()
    total = float(mass.sum())
    if total == 0.0:
        return 0.0
    inner = float(mass[: -rings, : -rings].sum())
    return (total - inner) / total


def check_truncation(zeta: ScalarField, tol: float = TRUNCATION_TOL) -> float:
    frac = outer_ring_fraction(zeta)
    if frac > tol:
        raise TruncationError(
            f"{frac:.3e} of the L1 mass of zeta lies in the outer two rings (limit {tol:.1e}); "
            "enlarge r_max/s_max"
        )
    return frac


def write_field(path, field: ScalarField) -> None:
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"{g.n_r} {g.n_s} {g.r_max!r} {g.s_max!r} {g.stagger}\n")
        flat = field.values.ravel(order="F")  # i fastest
        for start in range(0, flat.size, 8):
            fh.write(" ".join(f"{v:.17g}" for v in flat[start:start + 8]))
            fh.write("\n")


def read_field(path) -> ScalarField:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError(f"{path}: malformed field header {header!r}")
        n_r, n_s = int(header[0]), int(header[1])
        grid = GridSpec(float(header[2]), float(header[3]), n_r, n_s, header[4])
        data = np.array(fh.read().split(), dtype=float)
    if data.size != n_r * n_s:
        raise ValueError(f"{path}: expected {n_r * n_s} values, found {data.size}")
    return ScalarField(grid, data.reshape((n_r, n_s), order="F"))
