"""Reduced Biot-Savart kernels on the quadrant and the angular envelope ``f_a``.

``eval_Fr`` integrates the double angular integral

    F^r(r, s, rb, sb) = (2/pi^2) \\int_0^pi \\int_0^pi
        rb sb cos(tb) (sb - s cos(pb)) / X(tb, pb)^2  dpb dtb,

    X = (r - rb)^2 + (s - sb)^2 + 2 r rb (1 - cos tb) + 2 s sb (1 - cos pb),

with a tensor product rule. When target and source are close the integrand
concentrates near ``(tb, pb) = (0, 0)``; the corner square is then split
dyadically until two successive refinements agree.

The bulk velocity sums do not go through this routine; see
:mod:`birot._fastkernel`, which integrates ``pb`` in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .fields import QuadrantPoint

GAUSS_LEGENDRE = "gauss_legendre"
CLENSHAW_CURTIS = "clenshaw_curtis"

TWO_OVER_PI_SQ = 2.0 / math.pi ** 2


class KernelConvergenceError(RuntimeError):
    def __init__(self, message, last_values=(math.nan, math.nan)):
        super().__init__(message)
        self.last_values = tuple(last_values)


@dataclass(frozen=True)
class QuadratureSpec:
    rule: str = GAUSS_LEGENDRE
    n_theta: int = 64
    n_phi: int = 64
    near_singular_split: bool = True
    split_threshold: float = 1.0
    max_refine_levels: int = 20

    def __post_init__(self):
        if self.rule not in (GAUSS_LEGENDRE, CLENSHAW_CURTIS):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("n_theta and n_phi must be >= 2")
        if not 1 <= self.max_refine_levels <= 20:
            raise ValueError("max_refine_levels must lie in [1, 20]")
        if self.split_threshold <= 0:
            raise ValueError("split_threshold must be positive")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(self.rule, 2 * self.n_theta, 2 * self.n_phi,
                              self.near_singular_split, self.split_threshold,
                              self.max_refine_levels)


DEFAULT_QUAD = QuadratureSpec()


class KernelArgs(NamedTuple):
    target: QuadrantPoint
    source: QuadrantPoint


def _clenshaw_curtis(n: int) -> tuple[np.ndarray, np.ndarray]:
    N = n - 1
    theta = np.pi * np.arange(n) / N
    x = -np.cos(theta)
    w = np.zeros(n)
    v = np.ones(N - 1)
    interior = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[-1] = 1.0 / (N ** 2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k * k - 1)
        v -= np.cos(N * interior) / (N ** 2 - 1)
    else:
        w[0] = w[-1] = 1.0 / N ** 2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k * k - 1)
    w[1:-1] = 2.0 * v / N
    return x, w


_RULE_CACHE: dict = {}


def rule_nodes(rule: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    key = (rule, n)
    if key not in _RULE_CACHE:
        if rule == GAUSS_LEGENDRE:
            x, w = np.polynomial.legendre.leggauss(n)
        else:
            x, w = _clenshaw_curtis(n)
        _RULE_CACHE[key] = (0.5 * (x + 1.0), 0.5 * w)
    return _RULE_CACHE[key]


def x_minus_minus(args: KernelArgs, theta_bar, phi_bar):
    """Squared R^4 distance between the target and a rotated copy of the source.

    Returns NaN when the distance is exactly zero.
    """
    (r, s), (rb, sb) = args
    X = ((r - rb) ** 2 + (s - sb) ** 2
         + 4.0 * r * rb * np.sin(0.5 * np.asarray(theta_bar)) ** 2
         + 4.0 * s * sb * np.sin(0.5 * np.asarray(phi_bar)) ** 2)
    if np.ndim(X) == 0:
        return float(X) if X > 0 else math.nan
    return np.where(X > 0, X, np.nan)


# ---------------------------------------------------------------------------
# f_a envelope

def _dyadic_panels(levels: int, upper: float = math.pi) -> list[tuple[float, float]]:
    edges = [0.0] + [upper * 2.0 ** (-k) for k in range(levels, -1, -1)]
    return list(zip(edges[:-1], edges[1:]))


def _panel_integral(func, panels, rule, n):
    x, w = rule_nodes(rule, n)
    total = 0.0
    for a, b in panels:
        t = a + (b - a) * x
        total += (b - a) * float(np.dot(w, func(t)))
    return total


def f_a(tau: float, a: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``\\int_0^pi [2(1 - cos t) + tau]^{-a} dt`` by panel quadrature graded towards 0."""
    if tau <= 0 or a <= 0.5:
        raise ValueError("f_a needs tau > 0 and a > 1/2")
    levels = 0
    if quad.near_singular_split:
        levels = int(np.clip(math.ceil(math.log2(math.pi / math.sqrt(tau))) + 2, 0,
                             quad.max_refine_levels))
    return _panel_integral(lambda t: (4.0 * np.sin(0.5 * t) ** 2 + tau) ** (-a),
                           _dyadic_panels(levels), quad.rule, quad.n_theta)


def f_a_envelope(tau, a):
    """The bounding shape ``min(tau^(1/2 - a), tau^(-a))``."""
    tau = np.asarray(tau, dtype=float)
    return np.minimum(tau ** (0.5 - a), tau ** (-a))


def f_a_ratios(a: float, tau_grid, quad: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    return np.array([f_a(t, a, quad) for t in tau_grid]) / f_a_envelope(tau_grid, a)


def f_a_bound_check(a: float, tau_grid, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Largest ratio ``f_a(tau) / min(tau^(1/2-a), tau^(-a))`` over ``tau_grid``."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    if tau_grid.min() > 1e-4 or tau_grid.max() < 1e4:
        raise ValueError("tau grid must span at least [1e-4, 1e4]")
    return float(np.max(f_a_ratios(a, tau_grid, quad)))


# ---------------------------------------------------------------------------
# F^r, F^s

def _square(func, t0, t1, p0, p1, rule, nt, np_):
    xt, wt = rule_nodes(rule, nt)
    xp, wp = rule_nodes(rule, np_)
    tb = t0 + (t1 - t0) * xt
    pb = p0 + (p1 - p0) * xp
    vals = func(tb[:, None], pb[None, :])
    weighted = (wt[:, None] * wp[None, :]) * vals
    area = (t1 - t0) * (p1 - p0)
    return area * float(weighted.sum()), area * float(np.abs(weighted).sum())


def _fr_integrand(r, s, rb, sb):
    rr = 4.0 * r * rb
    ss = 4.0 * s * sb
    d2 = (r - rb) ** 2 + (s - sb) ** 2

    def func(tb, pb):
        X = d2 + rr * np.sin(0.5 * tb) ** 2 + ss * np.sin(0.5 * pb) ** 2
        return rb * sb * np.cos(tb) * (sb - s * np.cos(pb)) / (X * X)

    return func


def _fr_quadrature(r, s, rb, sb, quad: QuadratureSpec) -> float:
    if rb == 0.0 or sb == 0.0:
        return 0.0
    func = _fr_integrand(r, s, rb, sb)
    rule, nt, nph = quad.rule, quad.n_theta, quad.n_phi
    d2 = (r - rb) ** 2 + (s - sb) ** 2
    scale = r * rb + s * sb
    if d2 == 0.0 and scale > 0:
        raise KernelConvergenceError("kernel evaluated at coincident target and source")
    if not quad.near_singular_split or d2 >= quad.split_threshold * scale:
        val, _ = _square(func, 0.0, math.pi, 0.0, math.pi, rule, nt, nph)
        return TWO_OVER_PI_SQ * val

    width = math.sqrt(d2 / max(r * rb, s * sb))
    levels = int(np.clip(math.ceil(math.log2(math.pi / width)), 1, quad.max_refine_levels))

    # L-shaped rings down to the current corner, then the corner itself
    ring = 0.0
    mag = 0.0
    c = math.pi
    for _ in range(levels):
        h = 0.5 * c
        for (t0, t1, p0, p1) in ((h, c, 0.0, h), (0.0, h, h, c), (h, c, h, c)):
            v, m = _square(func, t0, t1, p0, p1, rule, nt, nph)
            ring += v
            mag += m
        c = h
    corner, m = _square(func, 0.0, c, 0.0, c, rule, nt, nph)
    previous = ring + corner
    mag += m
    while True:
        h = 0.5 * c
        for (t0, t1, p0, p1) in ((h, c, 0.0, h), (0.0, h, h, c), (h, c, h, c)):
            v, m = _square(func, t0, t1, p0, p1, rule, nt, nph)
            ring += v
            mag += m
        c = h
        corner, _ = _square(func, 0.0, c, 0.0, c, rule, nt, nph)
        current = ring + corner
        if abs(current - previous) <= 1e-13 * mag:
            return TWO_OVER_PI_SQ * current
        levels += 1
        if levels >= quad.max_refine_levels:
            raise KernelConvergenceError(
                f"F^r({r}, {s}, {rb}, {sb}) did not settle after {levels} dyadic levels",
                (TWO_OVER_PI_SQ * previous, TWO_OVER_PI_SQ * current),
            )
        previous = current


def eval_Fr(args: KernelArgs, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    (r, s), (rb, sb) = args
    if min(r, s, rb, sb) < 0:
        raise ValueError("kernel arguments must lie in the closed quadrant")
    return _fr_quadrature(float(r), float(s), float(rb), float(sb), quad)


def eval_Fs(args: KernelArgs, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``F^s(r, s, rb, sb) = F^r(s, r, sb, rb)``."""
    (r, s), (rb, sb) = args
    return eval_Fr(KernelArgs(QuadrantPoint(s, r), QuadrantPoint(sb, rb)), quad)


def Fr(r, s, rb, sb, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return eval_Fr(KernelArgs(QuadrantPoint(r, s), QuadrantPoint(rb, sb)), quad)


def Fs(r, s, rb, sb, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return eval_Fs(KernelArgs(QuadrantPoint(r, s), QuadrantPoint(rb, sb)), quad)
