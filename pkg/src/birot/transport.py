"""Lagrangian transport of the relative vorticity ``zeta = w / (r s)``.

Each particle carries a fixed ``zeta`` and a fixed R^4 measure ``weight``; only
positions move. Its flat source strength is ``w dr ds = zeta weight / (4 pi^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fields import FOUR_PI_SQ, GridSpec, ScalarField
from .kernel import DEFAULT_QUAD, QuadratureSpec
from .velocity import point_source_velocity

CFL_LIMIT = 0.5
EXCISION_FACTOR = 0.5
CLIP_UNRELIABLE_FRACTION = 1e-3
PROBE_LATTICE = 16


class EmptyEnsembleError(ValueError):
    pass


class CFLError(RuntimeError):
    def __init__(self, message, speed, limit):
        super().__init__(message)
        self.speed = speed
        self.limit = limit


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ParticleEnsemble:
    r: np.ndarray
    s: np.ndarray
    zeta: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        for name in ("r", "s", "zeta", "weight"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.r.size
        if not (self.s.size == self.zeta.size == self.weight.size == n):
            raise ValueError("particle arrays differ in length")

    def __len__(self) -> int:
        return self.r.size

    @property
    def strength(self) -> np.ndarray:
        return self.zeta * self.weight / FOUR_PI_SQ

    def moved(self, r, s) -> "ParticleEnsemble":
        # zeta and weight arrays are shared, never copied, so they stay bit-identical
        out = object.__new__(ParticleEnsemble)
        object.__setattr__(out, "r", _frozen(r))
        object.__setattr__(out, "s", _frozen(s))
        object.__setattr__(out, "zeta", self.zeta)
        object.__setattr__(out, "weight", self.weight)
        return out


def seed_particles(zeta0: ScalarField, threshold: float = 0.0) -> ParticleEnsemble:
    """One particle per cell with ``|zeta0| > threshold * max|zeta0|`` and positive measure."""
    a = np.abs(zeta0.values)
    peak = float(a.max()) if a.size else 0.0
    W = zeta0.grid.measure()
    keep = (a > threshold * peak) & (a > 0) & (W > 0)
    if not keep.any():
        raise EmptyEnsembleError("no cell of the initial data exceeds the seeding threshold")
    R, S = zeta0.grid.mesh()
    return ParticleEnsemble(R[keep], S[keep], zeta0.values[keep], W[keep])


def probe_lattice(grid: GridSpec, n: int = PROBE_LATTICE) -> tuple[np.ndarray, np.ndarray]:
    """``n x n`` midpoint lattice over the grid extent, flattened."""
    r = (np.arange(n) + 0.5) * grid.r_max / n
    s = (np.arange(n) + 0.5) * grid.s_max / n
    R, S = np.meshgrid(r, s, indexing="ij")
    return R.ravel(), S.ravel()


@dataclass(frozen=True)
class VelocityCache:
    """Velocity of a fixed configuration at the particles and the probe lattice."""

    u_r: np.ndarray
    u_s: np.ndarray
    probe_u_r: np.ndarray
    probe_u_s: np.ndarray

    @property
    def ur_sup(self) -> float:
        return float(max(np.abs(self.u_r).max(initial=0.0), np.abs(self.probe_u_r).max(initial=0.0)))

    @property
    def us_sup(self) -> float:
        return float(max(np.abs(self.u_s).max(initial=0.0), np.abs(self.probe_u_s).max(initial=0.0)))


@dataclass(frozen=True)
class SimState:
    time: float
    particles: ParticleEnsemble
    length_L: float
    step_count: int
    spacing: float
    clip_count: int = 0
    probes: tuple = field(default=(np.zeros(0), np.zeros(0)), repr=False)
    cache: VelocityCache | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.length_L < 1.0:
            raise ValueError("length_L starts at 1 and never decreases")

    @property
    def clip_fraction(self) -> float:
        steps = len(self.particles) * self.step_count
        return self.clip_count / steps if steps else 0.0

    @property
    def reliable(self) -> bool:
        return self.clip_fraction <= CLIP_UNRELIABLE_FRACTION


def initial_state(particles: ParticleEnsemble, grid: GridSpec, probes: int = PROBE_LATTICE) -> SimState:
    spacing = min(grid.h_r, grid.h_s)
    lattice = probe_lattice(grid, probes) if probes else (np.zeros(0), np.zeros(0))
    return SimState(0.0, particles, 1.0, 0, spacing, 0, lattice)


def ensemble_velocity(particles: ParticleEnsemble, r, s, spacing: float,
                      quad: QuadratureSpec = DEFAULT_QUAD):
    """Velocity at ``(r, s)`` induced by the particles placed at ``(r, s)``."""
    return point_source_velocity(r, s, r, s, particles.strength, EXCISION_FACTOR * spacing, quad)


def configuration_velocity(state: SimState, quad: QuadratureSpec = DEFAULT_QUAD) -> VelocityCache:
    p = state.particles
    radius = EXCISION_FACTOR * state.spacing
    u_r, u_s = point_source_velocity(p.r, p.s, p.r, p.s, p.strength, radius, quad)
    pr, ps = state.probes
    if pr.size:
        v_r, v_s = point_source_velocity(pr, ps, p.r, p.s, p.strength, radius, quad)
    else:
        v_r = v_s = np.zeros(0)
    return VelocityCache(u_r, u_s, v_r, v_s)


def with_velocity(state: SimState, quad: QuadratureSpec = DEFAULT_QUAD) -> SimState:
    """The same state with the velocity of its configuration cached."""
    if state.cache is not None:
        return state
    return replace(state, cache=configuration_velocity(state, quad))


def step(state: SimState, dt: float, quad: QuadratureSpec = DEFAULT_QUAD, reverse: bool = False) -> SimState:
    """One classical RK4 step of every particle; ``reverse`` integrates the negated velocity.

    Raises :class:`CFLError` before anything is computed past the first stage
    if ``dt * max speed > 0.5 * spacing``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    state = with_velocity(state, quad)
    p = state.particles
    c = state.cache
    sign = -1.0 if reverse else 1.0
    speed = float(np.max(np.hypot(c.u_r, c.u_s), initial=0.0))
    limit = CFL_LIMIT * state.spacing
    if dt * speed > limit:
        raise CFLError(f"dt * max speed = {dt * speed:.3e} exceeds {limit:.3e}; reduce dt",
                       speed, limit)

    def vel(r, s):
        a, b = ensemble_velocity(p, r, s, state.spacing, quad)
        return sign * a, sign * b

    r0, s0 = p.r, p.s
    k1r, k1s = sign * c.u_r, sign * c.u_s
    k2r, k2s = vel(np.maximum(r0 + 0.5 * dt * k1r, 0.0), np.maximum(s0 + 0.5 * dt * k1s, 0.0))
    k3r, k3s = vel(np.maximum(r0 + 0.5 * dt * k2r, 0.0), np.maximum(s0 + 0.5 * dt * k2s, 0.0))
    k4r, k4s = vel(np.maximum(r0 + dt * k3r, 0.0), np.maximum(s0 + dt * k3s, 0.0))
    r1 = r0 + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    s1 = s0 + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
    clips = int(np.count_nonzero(r1 < 0) + np.count_nonzero(s1 < 0))
    r1 = np.maximum(r1, 0.0)
    s1 = np.maximum(s1, 0.0)

    # left-endpoint rule for L(t), using the sup at the start of the step
    length = state.length_L + dt * (c.ur_sup + c.us_sup)
    return SimState(state.time + (-dt if reverse else dt), p.moved(r1, s1), length,
                    state.step_count + 1, state.spacing, state.clip_count + clips, state.probes)


def reconstruct_fields(particles: ParticleEnsemble, grid: GridSpec) -> tuple[ScalarField, ScalarField]:
    """Bilinear deposit of ``zeta * weight`` onto the grid, divided by the cell measure.

    Deposits falling outside the index range are clamped onto the edge samples.
    """
    x = (particles.r - grid.r[0]) / grid.h_r
    y = (particles.s - grid.s[0]) / grid.h_s
    i0 = np.floor(x).astype(int)
    j0 = np.floor(y).astype(int)
    fx = x - i0
    fy = y - j0
    q = particles.zeta * particles.weight
    mass = np.zeros(grid.shape)
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        ii = np.clip(i0 + di, 0, grid.n_r - 1)
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            jj = np.clip(j0 + dj, 0, grid.n_s - 1)
            np.add.at(mass, (ii, jj), q * wx * wy)
    W = grid.measure()
    zeta = np.zeros(grid.shape)
    np.divide(mass, W, out=zeta, where=W > 0)
    R, S = grid.mesh()
    return ScalarField(grid, zeta), ScalarField(grid, R * S * zeta)


# ---------------------------------------------------------------------------
# particle-exact quantities

def particle_zeta_sup(p: ParticleEnsemble) -> float:
    return float(np.max(np.abs(p.zeta), initial=0.0))


def particle_zeta_lp(p: ParticleEnsemble, exponent: float = 1.0) -> float:
    """``(sum |zeta_i|^q W_i)^(1/q)``; unchanged by transport since both factors are carried."""
    return float(np.sum(np.abs(p.zeta) ** exponent * p.weight) ** (1.0 / exponent))


def particle_w_sup(p: ParticleEnsemble) -> float:
    return float(np.max(p.r * p.s * np.abs(p.zeta), initial=0.0))


def particle_moments(p: ParticleEnsemble) -> tuple[float, float]:
    """``(||r w / s||_{L^1}, ||s w / r||_{L^1})`` as particle sums."""
    a = np.abs(p.zeta) * p.weight
    return float(np.sum(p.r ** 2 * a)), float(np.sum(p.s ** 2 * a))


# ---------------------------------------------------------------------------
# checkpoints

def write_checkpoint(path, state: SimState) -> None:
    p = state.particles
    with open(path, "w") as fh:
        fh.write(f"{state.time:.17g} {len(p)} {state.length_L:.17g}\n")
        for row in zip(p.r, p.s, p.zeta, p.weight):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def spacing_from_particles(p: ParticleEnsemble) -> float:
    """Seeding cell size recovered from ``weight = 4 pi^2 r s h^2`` (square cells)."""
    rs = p.r * p.s
    ok = rs > 0
    if not ok.any():
        return 0.0
    return float(np.median(np.sqrt(p.weight[ok] / (FOUR_PI_SQ * rs[ok]))))


def read_checkpoint(path) -> SimState:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: malformed checkpoint header")
        t, n, length = float(header[0]), int(header[1]), float(header[2])
        data = np.array(fh.read().split(), dtype=float).reshape(-1, 4)
    if data.shape[0] != n:
        raise ValueError(f"{path}: expected {n} particles, found {data.shape[0]}")
    p = ParticleEnsemble(data[:, 0], data[:, 1], data[:, 2], data[:, 3])
    return SimState(t, p, length, 0, spacing_from_particles(p))


def probe_velocity(state: SimState, r: float, s: float, quad: QuadratureSpec = DEFAULT_QUAD):
    p = state.particles
    u_r, u_s = point_source_velocity([r], [s], p.r, p.s, p.strength,
                                     EXCISION_FACTOR * state.spacing, quad)
    return float(u_r[0]), float(u_s[0])
