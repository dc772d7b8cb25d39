"""Velocity from vorticity by three independent routes.

* ``biot_savart``: reduced kernel sums over the quadrant (the production route),
* ``brute_force_velocity_4d``: the full R^4 convolution of the vorticity tensor
  with the gradient of the Laplace Green's function (an oracle),
* ``solve_stream`` followed by ``velocity_from_stream``: the elliptic route.

Kernel sums use ``u^r = +sum F^r w dr ds`` and ``u^s = -sum F^s w dr ds``; this
sign follows from the R^4 convolution and is checked against both other routes.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RectBivariateSpline
from scipy.sparse.linalg import spsolve

from . import _fastkernel as fk
from .fields import NODE_CENTERED, GridSpec, QuadrantPoint, ScalarField, check_axis_values, read_field, write_field
from .kernel import DEFAULT_QUAD, QuadratureSpec, rule_nodes
from .tensor import tensor_field


class VelocitySample(NamedTuple):
    at: QuadrantPoint
    u_r: float
    u_s: float


class StreamSolveError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class StreamField:
    grid: GridSpec
    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != self.grid.shape:
            raise ValueError("psi does not match its grid")
        if self.grid.stagger == NODE_CENTERED and (np.any(psi[0, :] != 0) or np.any(psi[:, 0] != 0)):
            raise ValueError("psi must vanish on both axes")
        object.__setattr__(self, "psi", psi)


# ---------------------------------------------------------------------------
# kernel route

def panel_order(quad: QuadratureSpec) -> int:
    """Nodes per panel of the fast kernel; the 2D rule's ``n_theta`` spread over panels."""
    return max(4, quad.n_theta // 8)


@functools.lru_cache(maxsize=16)
def _tables(rule: str, m: int, max_levels: int):
    x, w = rule_nodes(rule, m)
    return fk.panel_tables(x, w, max_levels)


def _fast_args(quad: QuadratureSpec):
    sin2, cos_, wts = _tables(quad.rule, panel_order(quad), quad.max_refine_levels)
    return sin2, cos_, wts, quad.max_refine_levels, quad.near_singular_split


def point_source_velocity(tr, ts, sr, ss, strength, excise_radius: float,
                          quad: QuadratureSpec = DEFAULT_QUAD):
    """Velocity at targets induced by point sources of flat strength ``w dr ds``.

    Sources closer than ``excise_radius`` to a target are skipped. Targets on an
    axis get the exact zero for the normal component.
    """
    tr, ts, sr, ss, strength = (np.ascontiguousarray(a, dtype=float) for a in (tr, ts, sr, ss, strength))
    sum_r, sum_s = fk.velocity_sum(tr, ts, sr, ss, strength, excise_radius ** 2, *_fast_args(quad))
    u_r = np.where(tr == 0.0, 0.0, sum_r)
    u_s = np.where(ts == 0.0, 0.0, -sum_s)
    return u_r, u_s


def biot_savart_arrays(w: ScalarField, tr, ts, quad: QuadratureSpec = DEFAULT_QUAD):
    """Kernel-route velocity at target arrays; the grid cell holding a target is excised."""
    g = w.grid
    R, S = g.mesh()
    mask = w.values != 0.0
    sr, ss = R[mask], S[mask]
    strength = w.values[mask] * g.h_r * g.h_s
    tr = np.ascontiguousarray(np.ravel(tr), dtype=float)
    ts = np.ascontiguousarray(np.ravel(ts), dtype=float)
    if strength.size == 0:
        return np.zeros_like(tr), np.zeros_like(ts)
    sum_r, sum_s = fk.velocity_sum_cells(tr, ts, sr, ss, strength, 0.5 * g.h_r, 0.5 * g.h_s,
                                         *_fast_args(quad))
    u_r = np.where(tr == 0.0, 0.0, sum_r)
    u_s = np.where(ts == 0.0, 0.0, -sum_s)
    return u_r, u_s


def biot_savart(w: ScalarField, targets, quad: QuadratureSpec = DEFAULT_QUAD) -> list[VelocitySample]:
    check_axis_values(w)
    pts = [QuadrantPoint(float(t[0]), float(t[1])).check() for t in targets]
    if not pts:
        return []
    u_r, u_s = biot_savart_arrays(w, [p.r for p in pts], [p.s for p in pts], quad)
    return [VelocitySample(p, float(a), float(b)) for p, a, b in zip(pts, u_r, u_s)]


def biot_savart_on_grid(w: ScalarField, quad: QuadratureSpec = DEFAULT_QUAD):
    """Kernel-route velocity at every grid sample, as two fields."""
    R, S = w.grid.mesh()
    u_r, u_s = biot_savart_arrays(w, R, S, quad)
    return ScalarField(w.grid, u_r.reshape(R.shape)), ScalarField(w.grid, u_s.reshape(R.shape))


# ---------------------------------------------------------------------------
# R^4 oracle

class Velocity4D(NamedTuple):
    u: np.ndarray
    u_r: float
    u_s: float
    u_theta: float
    u_phi: float


class OracleRefusal(ValueError):
    """The probe sits too close to the vorticity support for the oracle."""


def brute_force_velocity_4d(w: ScalarField, target4, n_angle: int = 48, n_radial: int = 48,
                            support_tol: float = 1e-6) -> Velocity4D:
    """``u^i(x) = sum_j (K_j * omega^{ij})(x)`` with ``K_j(x) = x_j / (2 pi^2 |x|^4)``.

    ``w`` is resampled by a bicubic spline onto an ``n_radial x n_radial``
    midpoint grid covering its support (``|w| > support_tol * max|w|``); both
    angles use ``n_angle`` midpoints on ``[0, 2 pi)``.
    """
    x = np.asarray(target4, dtype=float)
    r = math.hypot(x[0], x[1])
    s = math.hypot(x[2], x[3])
    theta = math.atan2(x[1], x[0])
    phi = math.atan2(x[3], x[2])
    wmax = float(np.max(np.abs(w.values))) if w.values.size else 0.0
    if wmax == 0.0:
        return Velocity4D(np.zeros(4), 0.0, 0.0, 0.0, 0.0)

    g = w.grid
    R, S = g.mesh()
    supp = np.abs(w.values) > support_tol * wmax
    lo_r = max(0.0, R[supp].min() - g.h_r)
    hi_r = min(g.r_max, R[supp].max() + g.h_r)
    lo_s = max(0.0, S[supp].min() - g.h_s)
    hi_s = min(g.s_max, S[supp].max() + g.h_s)
    dr = (hi_r - lo_r) / n_radial
    ds = (hi_s - lo_s) / n_radial
    rb = lo_r + (np.arange(n_radial) + 0.5) * dr
    sb = lo_s + (np.arange(n_radial) + 0.5) * ds
    spline = RectBivariateSpline(g.r, g.s, w.values, kx=3, ky=3)
    wb = spline(rb, sb)
    wb[np.abs(wb) <= support_tol * wmax] = 0.0

    near = np.abs(wb) > 0
    RB, SB = np.meshgrid(rb, sb, indexing="ij")
    if near.any():
        dist = np.sqrt((RB[near] - r) ** 2 + (SB[near] - s) ** 2).min()
        if dist < 2.0 * math.hypot(dr, ds):
            raise OracleRefusal(f"probe ({r:.3g}, {s:.3g}) is {dist:.3g} from the support; "
                                "choose an off-support probe")

    ang = (np.arange(n_angle) + 0.5) * 2.0 * math.pi / n_angle
    dA = (2.0 * math.pi / n_angle) ** 2
    ct, st = np.cos(ang)[:, None], np.sin(ang)[:, None]
    cp, sp_ = np.cos(ang)[None, :], np.sin(ang)[None, :]
    u = np.zeros(4)
    for i in range(n_radial):
        for j in np.nonzero(wb[i])[0]:
            xb = np.stack(np.broadcast_arrays(rb[i] * ct, rb[i] * st, sb[j] * cp, sb[j] * sp_))
            diff = x[:, None, None] - xb
            d4 = np.sum(diff ** 2, axis=0) ** 2
            K = diff / (2.0 * math.pi ** 2 * d4)
            omega = tensor_field(wb[i, j], ang[:, None], ang[None, :])
            vol = rb[i] * sb[j] * dr * ds * dA
            u += vol * np.einsum("jab,ijab->i", K, omega)
    c_t, s_t, c_p, s_p = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    return Velocity4D(u, c_t * u[0] + s_t * u[1], c_p * u[2] + s_p * u[3],
                      -s_t * u[0] + c_t * u[1], -s_p * u[2] + c_p * u[3])


# ---------------------------------------------------------------------------
# stream-function route

STREAM_RESIDUAL_TOL = 1e-10


def _radial_operator(n: int, h: float) -> sp.csr_matrix:
    """``d_r(r^-1 d_r(r psi))`` at nodes ``1 .. n-1`` with psi = 0 at node 0 and node n.

    Conservative in ``r psi``, hence exact for ``psi = a r + b r^3``.
    """
    i = np.arange(1, n, dtype=float)
    rp = (i + 0.5) * h
    rm = (i - 0.5) * h
    diag = -(i * h) * (1.0 / rp + 1.0 / rm) / h ** 2
    upper = ((i[:-1] + 1) * h) / rp[:-1] / h ** 2
    lower = ((i[1:] - 1) * h) / rm[1:] / h ** 2
    return sp.diags([lower, diag, upper], [-1, 0, 1], format="csr")


def stream_operator(grid: GridSpec) -> sp.csr_matrix:
    """Discrete stream operator on the interior nodes, ordered ``(i, j)`` row-major."""
    Lr = _radial_operator(grid.n_r, grid.h_r)
    Ls = _radial_operator(grid.n_s, grid.h_s)
    return (sp.kron(Lr, sp.identity(grid.n_s - 1)) + sp.kron(sp.identity(grid.n_r - 1), Ls)).tocsr()


def solve_stream(w: ScalarField) -> StreamField:
    """Solve for psi with psi = 0 on the axes and on the outer edges ``r_max``, ``s_max``."""
    g = w.grid
    if g.stagger != NODE_CENTERED:
        raise ValueError("solve_stream needs a node_centered grid")
    check_axis_values(w)
    if g.n_r < 2 or g.n_s < 2:
        raise ValueError("grid too small for the stream solve")
    A = stream_operator(g)
    rhs = w.values[1:, 1:].ravel()
    psi_int = spsolve(A.tocsc(), rhs)
    residual = float(np.max(np.abs(A @ psi_int - rhs))) if rhs.size else 0.0
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    if not np.all(np.isfinite(psi_int)) or residual > STREAM_RESIDUAL_TOL * scale:
        raise StreamSolveError(f"stream solve residual {residual:.3e} exceeds tolerance", residual)
    psi = np.zeros(g.shape)
    psi[1:, 1:] = psi_int.reshape(g.n_r - 1, g.n_s - 1)
    return StreamField(g, psi)


def _over_coordinate(psi: np.ndarray, coord: np.ndarray, axis: int) -> np.ndarray:
    """``psi / coord`` along ``axis`` with the axis sample filled by quadratic extrapolation."""
    out = np.zeros_like(psi)
    shape = [1, 1]
    shape[axis] = -1
    c = coord.reshape(shape)
    np.divide(psi, c, out=out, where=c > 0)
    if coord[0] == 0.0:
        v = np.moveaxis(out, axis, 0)
        if v.shape[0] >= 4:
            v[0] = 3.0 * v[1] - 3.0 * v[2] + v[3]
        elif v.shape[0] > 1:
            v[0] = v[1]
    return out


def velocity_from_stream(psi: StreamField):
    """``u^r = -psi/s - d_s psi`` and ``u^s = psi/r + d_r psi`` on the stream grid."""
    g = psi.grid
    # append the outer Dirichlet row/column so the last stored node gets a centered difference
    padded = np.pad(psi.psi, ((0, 1), (0, 1)))
    d_r, d_s = np.gradient(padded, g.h_r, g.h_s, edge_order=2)
    d_r, d_s = d_r[:-1, :-1], d_s[:-1, :-1]
    u_r = -_over_coordinate(psi.psi, g.s, axis=1) - d_s
    u_s = _over_coordinate(psi.psi, g.r, axis=0) + d_r
    return ScalarField(g, u_r), ScalarField(g, u_s)


def stream_route_velocity(w: ScalarField, pad_factor: int = 2):
    """Stream-function velocity with the outer Dirichlet edge moved out by ``pad_factor``.

    ``w`` is extended by zeros onto a grid with the same spacing and
    ``pad_factor`` times the extent; the velocity is returned on the original grid.
    """
    g = w.grid
    big = GridSpec(g.r_max * pad_factor, g.s_max * pad_factor, g.n_r * pad_factor,
                   g.n_s * pad_factor, g.stagger)
    values = np.zeros(big.shape)
    values[: g.n_r, : g.n_s] = w.values
    u_r, u_s = velocity_from_stream(solve_stream(ScalarField(big, values)))
    cut = (slice(0, g.n_r), slice(0, g.n_s))
    return ScalarField(g, u_r.values[cut]), ScalarField(g, u_s.values[cut])


def _d4(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order centered first derivative on samples ``2 .. n-3`` of ``axis``."""
    f = np.moveaxis(f, axis, 0)
    d = (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)
    return np.moveaxis(d, 0, axis)


def divergence_residual(u_r: ScalarField, u_s: ScalarField) -> float:
    """Normalized max of ``d_r u^r + u^r/r + d_s u^s + u^s/s`` over interior samples.

    Derivatives use a fourth-order centered stencil, so for velocities built
    with second-order differences the residual measures their truncation error
    rather than a discrete identity. Normalized by the largest partial derivative.
    """
    g = u_r.grid
    if u_s.grid != g:
        raise ValueError("velocity components live on different grids")
    if g.n_r < 5 or g.n_s < 5:
        raise ValueError("need at least 5 samples per direction")
    R, S = g.mesh()
    inner = (slice(2, -2), slice(2, -2))
    dr_ur = _d4(u_r.values, g.h_r, 0)[:, 2:-2]
    ds_ur = _d4(u_r.values, g.h_s, 1)[2:-2, :]
    dr_us = _d4(u_s.values, g.h_r, 0)[:, 2:-2]
    ds_us = _d4(u_s.values, g.h_s, 1)[2:-2, :]
    div = dr_ur + u_r.values[inner] / R[inner] + ds_us + u_s.values[inner] / S[inner]
    scale = max(float(np.max(np.abs(a))) for a in (dr_ur, ds_ur, dr_us, ds_us))
    return float(np.max(np.abs(div))) / max(scale, np.finfo(float).eps)


# ---------------------------------------------------------------------------

def write_velocity(prefix, u_r: ScalarField, u_s: ScalarField) -> tuple[str, str]:
    """One snapshot file per component: ``<prefix>_ur.txt`` and ``<prefix>_us.txt``."""
    paths = (f"{prefix}_ur.txt", f"{prefix}_us.txt")
    write_field(paths[0], u_r)
    write_field(paths[1], u_s)
    return paths


def read_velocity(prefix) -> tuple[ScalarField, ScalarField]:
    return read_field(f"{prefix}_ur.txt"), read_field(f"{prefix}_us.txt")
