"""Full R^4 vorticity tensor of a swirl-free bi-rotational flow.

Without swirl the only nonzero entries are the mixed ones,

    omega^{1,3} = -cos(t) cos(p) w,   omega^{1,4} = -cos(t) sin(p) w,
    omega^{2,3} = -sin(t) cos(p) w,   omega^{2,4} = -sin(t) sin(p) w,

plus their antisymmetric partners, with ``omega^{i,j} = d_j u^i - d_i u^j``.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .fields import NODE_CENTERED, ScalarField

MIXED = ((0, 2), (0, 3), (1, 2), (1, 3))


@dataclass(frozen=True)
class VorticityTensorSample:
    omega: np.ndarray

    @property
    def frobenius(self) -> float:
        return float(np.sqrt(np.sum(self.omega ** 2)))


def mixed_components(w, theta, phi):
    """``(omega13, omega14, omega23, omega24)``; broadcasts over array inputs."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    return -ct * cp * w, -ct * sp * w, -st * cp * w, -st * sp * w


def assemble_tensor(w_val: float, theta: float, phi: float) -> VorticityTensorSample:
    omega = np.zeros((4, 4))
    for (i, j), val in zip(MIXED, mixed_components(w_val, theta, phi)):
        omega[i, j] = val
        omega[j, i] = -val
    return VorticityTensorSample(omega)


def tensor_field(w, theta, phi) -> np.ndarray:
    """Tensor entries on arrays of samples; result has shape ``(4, 4) + broadcast shape``."""
    comps = mixed_components(w, theta, phi)
    shape = np.broadcast(*comps).shape
    omega = np.zeros((4, 4) + shape)
    for (i, j), val in zip(MIXED, comps):
        omega[i, j] = val
        omega[j, i] = -val
    return omega


def tensor_lp_norm(w: ScalarField, p: float, n_angle: int = 16) -> float:
    """``L^p(R^4)`` norm of the pointwise Frobenius norm of the tensor.

    The angles are integrated with the periodic midpoint rule.
    """
    theta = (np.arange(n_angle) + 0.5) * 2 * np.pi / n_angle
    T, P = np.meshgrid(theta, theta, indexing="ij")
    omega = tensor_field(w.values[..., None, None], T, P)
    frob = np.sqrt(np.sum(omega ** 2, axis=(0, 1)))
    # the R^4 measure of a grid cell is shared evenly among its angular samples
    meas = w.grid.measure()[..., None, None] / n_angle ** 2
    if np.isinf(p):
        return float(frob.max())
    return float(np.sum(frob ** p * meas) ** (1.0 / p))


# ---------------------------------------------------------------------------
# consistency relations d_k omega^{ij} + d_i omega^{jk} + d_j omega^{ki} = 0

def _omega_entry(i, j, x, wfun):
    """``omega^{ij}`` at Cartesian points ``x`` (shape (..., 4))."""
    if i == j:
        return np.zeros(x.shape[:-1])
    sign = 1.0
    if i > j:
        i, j = j, i
        sign = -1.0
    if (i, j) not in MIXED:
        return np.zeros(x.shape[:-1])
    r = np.hypot(x[..., 0], x[..., 1])
    s = np.hypot(x[..., 2], x[..., 3])
    # cos/sin of the two plane angles are x_a / r and x_b / s
    return -sign * x[..., i] / r * x[..., j] / s * wfun(r, s)


def _fd_partial(i, j, k, x, wfun, step):
    e = np.zeros(4)
    e[k] = step
    return (_omega_entry(i, j, x + e, wfun) - _omega_entry(i, j, x - e, wfun)) / (2 * step)


def _exact_partial(i, j, k, x, w_and_grad):
    """Chain-rule derivative of ``omega^{ij}`` along ``x_k``."""
    if i == j:
        return np.zeros(x.shape[:-1])
    sign = 1.0
    if i > j:
        i, j = j, i
        sign = -1.0
    if (i, j) not in MIXED:
        return np.zeros(x.shape[:-1])
    r = np.hypot(x[..., 0], x[..., 1])
    s = np.hypot(x[..., 2], x[..., 3])
    w, w_r, w_s = w_and_grad(r, s)
    q = w / (r * s)
    q_r = w_r / (r * s) - w / (r * r * s)
    q_s = w_s / (r * s) - w / (r * s * s)
    # omega^{ij} = -x_i x_j q(r, s) for i in {0,1}, j in {2,3}
    if k < 2:
        d = (k == i) * x[..., j] * q + x[..., i] * x[..., j] * q_r * x[..., k] / r
    else:
        d = (k == j) * x[..., i] * q + x[..., i] * x[..., j] * q_s * x[..., k] / s
    return -sign * d


def field_interpolant(w: ScalarField) -> Callable:
    """Bicubic spline of a gridded field, evaluated pointwise."""
    spline = RectBivariateSpline(w.grid.r, w.grid.s, w.values, kx=3, ky=3)
    return lambda r, s: spline.ev(r, s)


def consistency_residual(w, sample_points, step: float | None = None, gradient=None) -> float:
    """Largest violation of the cyclic consistency relations at ``sample_points``.

    ``w`` is a :class:`ScalarField` (interpolated with a bicubic spline, and
    differenced on a Cartesian stencil of width ``step``, the grid spacing by
    default) or a callable ``w(r, s)``. Passing ``gradient`` as a callable
    returning ``(w, w_r, w_s)`` switches to exact chain-rule derivatives.
    """
    x = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if gradient is not None:
        partial = lambda i, j, k: _exact_partial(i, j, k, x, gradient)
    else:
        if isinstance(w, ScalarField):
            if step is None:
                step = min(w.grid.h_r, w.grid.h_s)
            wfun = field_interpolant(w)
        else:
            wfun = w
            if step is None:
                raise ValueError("a finite-difference step is needed for callable w")
        partial = lambda i, j, k: _fd_partial(i, j, k, x, wfun, step)
    worst = 0.0
    for i, j, k in itertools.combinations(range(4), 3):
        cyc = partial(i, j, k) + partial(j, k, i) + partial(k, i, j)
        worst = max(worst, float(np.max(np.abs(cyc))))
    return worst


# ---------------------------------------------------------------------------

class AxisRegularity(NamedTuple):
    value: float
    reliable: bool


MIN_INTERIOR_POINTS = 3


def axis_regularity_estimate(w: ScalarField) -> AxisRegularity:
    """Bound on ``|w/(rs)|`` next to the axes from double difference quotients.

    On the slice ``theta = phi = 0`` the tensor entry ``omega^{1,3}`` equals
    ``-w(x_1, x_3)``. For every sample adjacent to an axis the quotient

        [omega(h, k) - omega(h, 0) - omega(0, k) + omega(0, 0)] / (h k)

    is formed with ``h, k`` its coordinates; the largest magnitude is returned.
    """
    g = w.grid
    node = g.stagger == NODE_CENTERED
    vals = -w.values
    r, s = g.r, g.s
    first = 1 if node else 0
    interior = min(g.n_r, g.n_s) - first
    reliable = interior >= MIN_INTERIOR_POINTS
    if interior < 1:
        return AxisRegularity(0.0, False)
    if node:
        axis_r = vals[:, 0]
        axis_s = vals[0, :]
        origin = vals[0, 0]
    else:
        axis_r = np.zeros(g.n_r)
        axis_s = np.zeros(g.n_s)
        origin = 0.0
    best = 0.0
    # row next to the s = 0 axis and column next to the r = 0 axis
    for i in range(first, g.n_r):
        j = first
        q = (vals[i, j] - axis_r[i] - axis_s[j] + origin) / (r[i] * s[j])
        best = max(best, abs(q))
    for j in range(first, g.n_s):
        i = first
        q = (vals[i, j] - axis_r[i] - axis_s[j] + origin) / (r[i] * s[j])
        best = max(best, abs(q))
    if not reliable:
        warnings.warn("axis regularity estimate from fewer than "
                      f"{MIN_INTERIOR_POINTS} interior points is unreliable")
    return AxisRegularity(best, reliable)
