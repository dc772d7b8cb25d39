"""Built-in initial data for ``zeta``, each with its member of the scaling family.

Under ``zeta_lam(x) = lam^3 zeta(lam x)`` the velocity transforms as
``u_lam(x) = u(lam x)`` and time runs ``lam`` times faster, so ``scaled(lam)``
shrinks lengths and times by ``lam`` and multiplies amplitudes by ``lam^3``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import GridSpec, QuadrantPoint, ScalarField, read_field


def _gaussian(R, S, center, width):
    return np.exp(-((R - center[0]) ** 2 + (S - center[1]) ** 2) / width ** 2)


@dataclass(frozen=True)
class GaussianBlob:
    center: QuadrantPoint = QuadrantPoint(1.0, 1.0)
    width: float = 0.25
    amplitude: float = 1.0
    kind = "gaussian_blob"

    def zeta(self, grid: GridSpec) -> ScalarField:
        R, S = grid.mesh()
        return ScalarField(grid, self.amplitude * _gaussian(R, S, self.center, self.width))

    def scaled(self, lam: float) -> "GaussianBlob":
        return GaussianBlob(QuadrantPoint(self.center.r / lam, self.center.s / lam),
                            self.width / lam, self.amplitude * lam ** 3)


@dataclass(frozen=True)
class DiagonalAntisymmetricPair:
    """A blob at ``center`` and its negative mirror image across ``r = s``."""

    center: QuadrantPoint = QuadrantPoint(1.2, 0.6)
    width: float = 0.25
    amplitude: float = 1.0
    kind = "diagonal_antisymmetric_pair"

    def zeta(self, grid: GridSpec) -> ScalarField:
        R, S = grid.mesh()
        mirror = QuadrantPoint(self.center.s, self.center.r)
        # the difference is exactly antisymmetric under the swap on a square grid
        vals = _gaussian(R, S, self.center, self.width) - _gaussian(R, S, mirror, self.width)
        return ScalarField(grid, self.amplitude * vals)

    def scaled(self, lam: float) -> "DiagonalAntisymmetricPair":
        return DiagonalAntisymmetricPair(QuadrantPoint(self.center.r / lam, self.center.s / lam),
                                         self.width / lam, self.amplitude * lam ** 3)


@dataclass(frozen=True)
class RingProduct:
    """Product of compact bumps ``(1 - x^2)^3`` in ``r`` and ``s``: a torus-like ring in R^4."""

    r0: float = 1.0
    s0: float = 1.0
    thickness: float = 0.4
    amplitude: float = 1.0
    kind = "ring_product"

    def zeta(self, grid: GridSpec) -> ScalarField:
        R, S = grid.mesh()

        def bump(x):
            return np.clip(1.0 - x * x, 0.0, None) ** 3

        vals = bump((R - self.r0) / self.thickness) * bump((S - self.s0) / self.thickness)
        return ScalarField(grid, self.amplitude * vals)

    def scaled(self, lam: float) -> "RingProduct":
        return RingProduct(self.r0 / lam, self.s0 / lam, self.thickness / lam,
                           self.amplitude * lam ** 3)


@dataclass(frozen=True)
class FromFile:
    """``zeta`` read from a field snapshot on exactly the run grid."""

    path: str = ""
    kind = "from_file"

    def zeta(self, grid: GridSpec) -> ScalarField:
        f = read_field(self.path)
        if f.grid != grid:
            raise ValueError(f"{self.path}: snapshot grid {f.grid} differs from the run grid {grid}")
        return f

    def scaled(self, lam: float):
        raise ValueError("file-based initial data has no scaling family")


INITIAL_DATA = {cls.kind: cls for cls in (GaussianBlob, DiagonalAntisymmetricPair, RingProduct, FromFile)}
