"""Lorentz ``L^{p,q}`` norms of gridded fields through the decreasing rearrangement.

The rearrangement of a sampled field is a step function: value ``v_k`` on
``(T_{k-1}, T_k]`` with ``T_k`` the cumulative R^4 measure. The defining
integral is then summed exactly,

    ||f||_{p,q}^q = sum_k v_k^q (p/q) (T_k^{q/p} - T_{k-1}^{q/p}).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ScalarField

MERGE_DIGITS = 12


@dataclass(frozen=True)
class RearrangementProfile:
    """Plateaus of the rearrangement; ``values`` strictly decreasing, ``measures`` positive."""

    values: np.ndarray
    measures: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = np.asarray(self.measures, dtype=float)
        if v.shape != m.shape or v.ndim != 1:
            raise ValueError("values and measures must be 1D arrays of equal length")
        if np.any(np.diff(v) >= 0):
            raise ValueError("plateau values must be strictly decreasing")
        if np.any(m <= 0):
            raise ValueError("plateau measures must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)

    @property
    def plateaus(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.measures.tolist()))

    @property
    def total_measure(self) -> float:
        return float(self.measures.sum())


def _round_sig(x: np.ndarray, digits: int) -> np.ndarray:
    out = np.zeros_like(x)
    nz = x != 0
    mag = np.floor(np.log10(x[nz]))
    scale = 10.0 ** (digits - 1 - mag)
    out[nz] = np.round(x[nz] * scale) / scale
    return out


def rearrange_samples(values, weights) -> RearrangementProfile:
    """Rearrangement of samples ``|values|`` carrying measure ``weights``."""
    a = np.abs(np.ravel(np.asarray(values, dtype=float)))
    wts = np.ravel(np.asarray(weights, dtype=float))
    keep = (a > 0) & (wts > 0)
    a, wts = a[keep], wts[keep]
    if a.size == 0:
        return RearrangementProfile(np.zeros(0), np.zeros(0))
    order = np.argsort(-a, kind="stable")
    a, wts = a[order], wts[order]
    # rounding is monotone, so the merge keys are sorted too; each plateau keeps its exact maximum
    key = _round_sig(a, MERGE_DIGITS)
    starts = np.concatenate([[0], np.nonzero(np.diff(key))[0] + 1])
    return RearrangementProfile(a[starts], np.add.reduceat(wts, starts))


def rearrange(f: ScalarField) -> RearrangementProfile:
    """Discrete decreasing rearrangement of ``|f|`` under the R^4 measure.

    Values agreeing to 12 significant digits share a plateau, whose value is
    the largest of them.
    """
    return rearrange_samples(f.values, f.grid.measure())


def lorentz_norm(prof: RearrangementProfile, p: float, q: float) -> float:
    if not p > 1:
        raise ValueError("p must exceed 1")
    if not (q >= 1):
        raise ValueError("q must be >= 1")
    if prof.values.size == 0:
        return 0.0
    T = np.cumsum(prof.measures)
    if np.isinf(q):
        return float(np.max(prof.values * T ** (1.0 / p)))
    T0 = np.concatenate([[0.0], T[:-1]])
    terms = prof.values ** q * (p / q) * (T ** (q / p) - T0 ** (q / p))
    return float(np.sum(terms) ** (1.0 / q))


def field_lorentz_norm(f: ScalarField, p: float, q: float) -> float:
    return lorentz_norm(rearrange(f), p, q)


def quasi_triangle_constant(fields_a, fields_b, p: float, q: float) -> float:
    """Largest observed ``||f+g|| / (||f|| + ||g||)`` over paired fields.

    This is a reported quantity; a value above 1 reflects that ``L^{p,q}`` is only a
    quasi-norm for some exponents.
    """
    worst = 0.0
    for f, g in zip(fields_a, fields_b):
        denom = field_lorentz_norm(f, p, q) + field_lorentz_norm(g, p, q)
        if denom > 0:
            worst = max(worst, field_lorentz_norm(f + g, p, q) / denom)
    return worst


def holder_ratio(f: ScalarField, g: ScalarField, p1: float, q1: float, p2: float, q2: float) -> float:
    """``||f g||_{p,q} / (||f||_{p1,q1} ||g||_{p2,q2})`` with ``1/p = 1/p1 + 1/p2``, ``1/q = 1/q1 + 1/q2``."""
    p = 1.0 / (1.0 / p1 + 1.0 / p2)
    q = 1.0 / (1.0 / q1 + 1.0 / q2)
    denom = field_lorentz_norm(f, p1, q1) * field_lorentz_norm(g, p2, q2)
    if denom == 0:
        return 0.0
    return field_lorentz_norm(ScalarField(f.grid, f.values * g.values), p, q) / denom


def write_profile(path, prof: RearrangementProfile) -> None:
    """Text format mirroring field snapshots: a header ``n_plateaus``, then ``value measure`` lines."""
    with open(path, "w") as fh:
        fh.write(f"{prof.values.size}\n")
        for v, m in zip(prof.values, prof.measures):
            fh.write(f"{v:.17g} {m:.17g}\n")


def read_profile(path) -> RearrangementProfile:
    with open(path) as fh:
        n = int(fh.readline())
        data = np.array(fh.read().split(), dtype=float).reshape(-1, 2)
    if data.shape[0] != n:
        raise ValueError(f"{path}: expected {n} plateaus, found {data.shape[0]}")
    return RearrangementProfile(data[:, 0], data[:, 1])
