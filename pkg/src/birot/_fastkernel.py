"""Compiled kernel sums for the velocity routes and the particle push.

The ``pb`` integral of ``F^r`` is done in closed form,

    \\int_0^pi (sb - s cos p) / (A - B cos p)^2 dp = pi sb (A - 2 s^2) / (A^2 - B^2)^{3/2},

with ``A = r^2 + rb^2 - 2 r rb cos tb + s^2 + sb^2`` and ``B = 2 s sb``. The remaining
``tb`` integral is taken with Gauss-Legendre panels graded dyadically towards
``tb = 0``, fine enough to resolve the peak of width ``|x - xb| / sqrt(r rb)``.
"""
from __future__ import annotations

import math
import os

import numpy as np
from numba import njit, prange, set_num_threads, config

config.THREADING_LAYER = "workqueue"

_threads = os.environ.get("BIROT_NUM_THREADS")
if _threads:
    set_num_threads(min(int(_threads), config.NUMBA_NUM_THREADS))

TWO_OVER_PI = 2.0 / math.pi


def panel_tables(nodes, weights, max_levels):
    """Precomputed ``sin^2(tb/2)``, ``cos(tb)`` and scaled weights for every panel.

    Row ``k`` (1 <= k <= max_levels) holds the dyadic panel ``[pi 2^-k, pi 2^(1-k)]``;
    row ``max_levels + 1 + L`` holds the innermost panel ``[0, pi 2^-L]``.
    """
    m = nodes.shape[0]
    rows = 2 * max_levels + 2
    sin2 = np.zeros((rows, m))
    cos_ = np.zeros((rows, m))
    wts = np.zeros((rows, m))
    for k in range(1, max_levels + 1):
        lo, hi = math.pi * 2.0 ** (-k), math.pi * 2.0 ** (1 - k)
        tb = lo + (hi - lo) * nodes
        sin2[k] = np.sin(0.5 * tb) ** 2
        cos_[k] = np.cos(tb)
        wts[k] = (hi - lo) * weights
    for L in range(max_levels + 1):
        hi = math.pi * 2.0 ** (-L)
        tb = hi * nodes
        row = max_levels + 1 + L
        sin2[row] = np.sin(0.5 * tb) ** 2
        cos_[row] = np.cos(tb)
        wts[row] = hi * weights
    return sin2, cos_, wts


@njit(cache=True)
def fr_semi_analytic(r, s, rb, sb, sin2, cos_, wts, max_levels, split):
    """F^r with the phi-bar integral in closed form; tables from :func:`panel_tables`."""
    if rb == 0.0 or sb == 0.0 or r == 0.0:
        return 0.0
    d2 = (r - rb) * (r - rb) + (s - sb) * (s - sb)
    rr4 = 4.0 * r * rb
    ss4 = 4.0 * s * sb
    shift = 2.0 * s * (sb - s)
    levels = 0
    if split:
        levels = 1
        width = math.sqrt(d2 / (r * rb))
        if width == 0.0:
            levels = max_levels
        elif width < 0.5 * math.pi:
            levels = int(math.ceil(math.log2(2.0 * math.pi / width)))
        if levels > max_levels:
            levels = max_levels
    m = sin2.shape[1]
    total = 0.0
    row = max_levels + 1 + levels
    for _ in range(levels + 1):
        acc = 0.0
        for k in range(m):
            amb = d2 + rr4 * sin2[row, k]
            den = amb * (amb + ss4)
            acc += wts[row, k] * cos_[row, k] * (amb + shift) / (den * math.sqrt(den))
        total += acc
        row = levels if row > max_levels else row - 1
    return TWO_OVER_PI * rb * sb * sb * total


@njit(cache=True)
def pairwise_sum(buf, n):
    """Fixed-order pairwise sum of ``buf[:n]``."""
    if n <= 8:
        acc = 0.0
        for k in range(n):
            acc += buf[k]
        return acc
    # iterative bottom-up halving keeps the order independent of threading
    width = 1
    while width < n:
        k = 0
        while k + width < n:
            buf[k] = buf[k] + buf[k + width]
            k += 2 * width
        width *= 2
    return buf[0]


@njit(cache=True, parallel=True)
def velocity_sum(tr, ts, sr, ss, strength, excise2, sin2, cos_, wts, max_levels, split):
    """Sum kernel contributions of point sources at every target.

    Returns ``(sum_j F^r * strength_j, sum_j F^s * strength_j)`` per target,
    skipping sources within ``sqrt(excise2)`` of the target. Signs of the
    velocity law are applied by the caller.
    """
    nt = tr.shape[0]
    ns = sr.shape[0]
    out_r = np.zeros(nt)
    out_s = np.zeros(nt)
    for i in prange(nt):
        buf_r = np.empty(ns)
        buf_s = np.empty(ns)
        x = tr[i]
        y = ts[i]
        for j in range(ns):
            dr = x - sr[j]
            ds = y - ss[j]
            if dr * dr + ds * ds < excise2 or strength[j] == 0.0:
                buf_r[j] = 0.0
                buf_s[j] = 0.0
                continue
            buf_r[j] = fr_semi_analytic(x, y, sr[j], ss[j], sin2, cos_, wts, max_levels, split) * strength[j]
            buf_s[j] = fr_semi_analytic(y, x, ss[j], sr[j], sin2, cos_, wts, max_levels, split) * strength[j]
        out_r[i] = pairwise_sum(buf_r, ns)
        out_s[i] = pairwise_sum(buf_s, ns)
    return out_r, out_s


@njit(cache=True, parallel=True)
def velocity_sum_cells(tr, ts, sr, ss, strength, half_r, half_s, sin2, cos_, wts, max_levels, split):
    """As :func:`velocity_sum`, excising the grid cell that contains each target."""
    nt = tr.shape[0]
    ns = sr.shape[0]
    out_r = np.zeros(nt)
    out_s = np.zeros(nt)
    for i in prange(nt):
        buf_r = np.empty(ns)
        buf_s = np.empty(ns)
        x = tr[i]
        y = ts[i]
        for j in range(ns):
            if (abs(x - sr[j]) < half_r and abs(y - ss[j]) < half_s) or strength[j] == 0.0:
                buf_r[j] = 0.0
                buf_s[j] = 0.0
                continue
            buf_r[j] = fr_semi_analytic(x, y, sr[j], ss[j], sin2, cos_, wts, max_levels, split) * strength[j]
            buf_s[j] = fr_semi_analytic(y, x, ss[j], sr[j], sin2, cos_, wts, max_levels, split) * strength[j]
        out_r[i] = pairwise_sum(buf_r, ns)
        out_s[i] = pairwise_sum(buf_s, ns)
    return out_r, out_s
