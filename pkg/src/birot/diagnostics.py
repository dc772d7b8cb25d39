"""Per-step diagnostics: conserved quantities, critical norms and estimate ratios.

Every "up to a constant" inequality becomes a reported ratio. Constants are
never asserted absolutely; the monitors compare against values fitted on the
run itself.
"""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .fields import GridSpec, ScalarField, lp_norm
from .kernel import DEFAULT_QUAD, QuadratureSpec
from .lorentz import field_lorentz_norm
from .transport import (SimState, particle_moments, particle_w_sup, particle_zeta_lp,
                        particle_zeta_sup, reconstruct_fields, with_velocity)

GRONWALL_FLAG_FACTOR = 5.0


class HypothesisError(ValueError):
    """Initial data outside the class covered by the global regularity statement."""


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    w_sup: float
    zeta_sup: float
    zeta_l1: float
    mom_r: float
    mom_s: float
    lor_w: float
    lor_wr: float
    lor_ws: float
    ur_sup: float
    us_sup: float
    length_L: float
    bkm_integral: float
    ratio_prop_vel: float
    ratio_growth: float
    clip_count: int


FIELD_NAMES = tuple(f.name for f in fields(DiagnosticsRecord))


def gridded_norms(w: ScalarField) -> tuple[float, float, float]:
    """``(||w||_{4,1}, ||w/r||_{4,1}, ||w/s||_{4,1})`` on a reconstructed grid."""
    R, S = w.grid.mesh()
    w_over_r = np.zeros_like(w.values)
    w_over_s = np.zeros_like(w.values)
    np.divide(w.values, R, out=w_over_r, where=R > 0)
    np.divide(w.values, S, out=w_over_s, where=S > 0)
    g = w.grid
    return (field_lorentz_norm(w, 4, 1),
            field_lorentz_norm(ScalarField(g, w_over_r), 4, 1),
            field_lorentz_norm(ScalarField(g, w_over_s), 4, 1))


def record(state: SimState, grid: GridSpec, quad: QuadratureSpec = DEFAULT_QUAD,
           prev: DiagnosticsRecord | None = None, dt: float | None = None) -> DiagnosticsRecord:
    """Diagnostics of ``state``; ``prev`` carries the running time integral.

    ``dt`` sets the floor of the time used in ``ratio_growth``.
    """
    state = with_velocity(state, quad)
    p = state.particles
    _, w = reconstruct_fields(p, grid)
    lor_w, lor_wr, lor_ws = gridded_norms(w)
    zeta_sup = particle_zeta_sup(p)
    mom_r, mom_s = particle_moments(p)
    ur_sup, us_sup = state.cache.ur_sup, state.cache.us_sup
    w_sup = particle_w_sup(p)

    if prev is None:
        bkm = 0.0
    else:
        bkm = prev.bkm_integral + 0.5 * (state.time - prev.time) * (
            prev.lor_wr + prev.lor_ws + lor_wr + lor_ws)
    denom = math.sqrt((mom_r + mom_s) * zeta_sup)
    ratio_prop = max(ur_sup, us_sup) / denom if denom > 0 else 0.0
    floor = dt if dt is not None else 0.0
    t_eff = max(state.time, floor)
    ratio_growth = math.log(max(w_sup, 1.0)) / t_eff if t_eff > 0 else 0.0
    return DiagnosticsRecord(state.time, w_sup, zeta_sup, particle_zeta_lp(p, 1.0), mom_r, mom_s,
                             lor_w, lor_wr, lor_ws, ur_sup, us_sup, state.length_L, bkm,
                             ratio_prop, ratio_growth, state.clip_count)


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallReport:
    """Implied constants of the four differential inequalities, per record."""

    constants: dict
    medians: dict
    flagged: dict
    suspect_records: list


def _implied(deriv, rhs):
    out = np.zeros_like(deriv)
    np.divide(np.abs(deriv), rhs, out=out, where=rhs > 0)
    return out


def gronwall_monitor(series) -> GronwallReport:
    """Discrete ``d/dt`` of each monitored norm against its differential bound.

    A step is flagged when its implied constant exceeds five times the median of
    the positive constants of the run. A central difference at step ``k`` skips
    record ``k``, so a single corrupted record shows up as flags on both
    neighbours; such records are listed in ``suspect_records``.
    """
    if len(series) < 3:
        raise ValueError("the monitor needs at least 3 records")
    t = np.array([rec.time for rec in series])
    col = {name: np.array([getattr(rec, name) for rec in series], dtype=float)
           for name in ("w_sup", "lor_w", "lor_wr", "lor_ws")}
    crit = col["lor_wr"] + col["lor_ws"]
    d = {name: np.gradient(v, t) for name, v in col.items()}
    constants = {
        "w_sup": _implied(d["w_sup"], crit * col["w_sup"]),
        "lor_w": _implied(d["lor_w"], crit * col["lor_w"]),
        "lor_wr": _implied(d["lor_wr"], col["lor_ws"] * col["lor_wr"]),
        "lor_ws": _implied(d["lor_ws"], col["lor_wr"] * col["lor_ws"]),
    }
    medians, flagged = {}, {}
    n = len(series)
    hits = np.zeros(n, dtype=bool)
    for name, c in constants.items():
        pos = c[c > 0]
        med = float(np.median(pos)) if pos.size else 0.0
        medians[name] = med
        idx = np.nonzero(c > GRONWALL_FLAG_FACTOR * med)[0] if med > 0 else np.zeros(0, int)
        flagged[name] = idx.tolist()
        hits[idx] = True
    suspects = [k for k in range(1, n - 1) if hits[k - 1] and hits[k + 1]]
    return GronwallReport(constants, medians, flagged, suspects)


# ---------------------------------------------------------------------------

def initial_data_check(zeta0: ScalarField, override: bool = False) -> dict:
    """Weighted norms of the initial data that must be finite.

    Returns ``||(1 + r + s) zeta0||_inf`` and ``||(1 + r^2 + s^2) zeta0||_{L^1}``.
    Raises :class:`HypothesisError` when either is not finite, unless ``override``.
    """
    R, S = zeta0.grid.mesh()
    vals = zeta0.values
    out = {
        "weighted_sup": float(np.max(np.abs((1 + R + S) * vals), initial=0.0)),
        "weighted_l1": lp_norm(ScalarField(zeta0.grid, (1 + R ** 2 + S ** 2) * vals), 1),
    }
    bad = [k for k, v in out.items() if not math.isfinite(v)]
    if bad and not override:
        raise HypothesisError(f"initial data has non-finite {', '.join(bad)}")
    return out


def growth_monitor(series, headroom: float = 2.0) -> dict:
    """Check ``||w(t)||_inf <= headroom * C0 * L(t)^2`` with ``C0`` fitted at ``t = 0``.

    Since ``L(0) = 1`` the fit is ``C0 = ||w_0||_inf``. The same policy is applied
    to the two moments. Also reports the slopes of ``bkm_integral`` over the
    first and second halves of the run.
    """
    L = np.array([rec.length_L for rec in series])
    out = {}
    for name in ("w_sup", "mom_r", "mom_s"):
        v = np.array([getattr(rec, name) for rec in series])
        c0 = v[0] / L[0] ** 2
        ratio = np.zeros_like(v)
        np.divide(v, c0 * L ** 2, out=ratio, where=c0 * L ** 2 > 0)
        out[name] = {"C0": float(c0), "max_ratio": float(ratio.max()),
                     "ok": bool(np.all(v <= headroom * c0 * L ** 2))}
    t = np.array([rec.time for rec in series])
    bkm = np.array([rec.bkm_integral for rec in series])
    half = len(series) // 2
    slopes = []
    for a, b in ((0, half), (half, len(series) - 1)):
        slopes.append(float((bkm[b] - bkm[a]) / (t[b] - t[a])) if t[b] > t[a] else 0.0)
    out["bkm"] = {"finite": bool(np.all(np.isfinite(bkm))),
                  "nondecreasing": bool(np.all(np.diff(bkm) >= 0)),
                  "slope_first_half": slopes[0], "slope_second_half": slopes[1]}
    return out


# ---------------------------------------------------------------------------

def write_csv(path, series) -> None:
    """Header naming every record field, one row per record, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELD_NAMES)
        for rec in series:
            writer.writerow([v if isinstance(v, int) else f"{v:.17g}" for v in astuple(rec)])


def read_csv(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FIELD_NAMES:
            raise ValueError(f"{path}: unexpected diagnostics header")
        return [DiagnosticsRecord(*[int(v) if name == "clip_count" else float(v)
                                    for name, v in zip(FIELD_NAMES, row)]) for row in reader]
