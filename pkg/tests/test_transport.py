import math

import numpy as np
import pytest

from birot.fields import FOUR_PI_SQ, GridSpec, ScalarField
from birot.scenarios import DiagonalAntisymmetricPair, GaussianBlob
from birot.transport import (CFLError, EmptyEnsembleError, ParticleEnsemble, SimState, initial_state,
                             particle_moments, particle_w_sup, particle_zeta_lp, particle_zeta_sup,
                             probe_lattice, probe_velocity, read_checkpoint, reconstruct_fields,
                             seed_particles, spacing_from_particles, step, with_velocity,
                             write_checkpoint)

GRID = GridSpec(3.0, 3.0, 24, 24)


def blob_state(grid=GRID, data=GaussianBlob(width=0.3)):
    return initial_state(seed_particles(data.zeta(grid), 1e-4), grid)


def run(state, n, dt, reverse=False):
    for _ in range(n):
        state = step(state, dt, reverse=reverse)
    return state


# ---------------------------------------------------------------------------
# seeding

def test_seeding_zero_data_is_an_error():
    with pytest.raises(EmptyEnsembleError):
        seed_particles(ScalarField(GRID, np.zeros(GRID.shape)))


def test_seeding_indicator_counts_cells_and_measure():
    ind = ScalarField.from_function(GRID, lambda r, s: ((r < 1) & (s < 1)).astype(float))
    p = seed_particles(ind, 0.0)
    assert len(p) == 8 * 8
    assert p.weight.sum() == pytest.approx(math.pi ** 2, rel=1e-13)


def test_seeding_threshold_matches_direct_count():
    zeta0 = GaussianBlob().zeta(GRID)
    peak = np.abs(zeta0.values).max()
    p = seed_particles(zeta0, 1e-4)
    assert len(p) == np.count_nonzero(np.abs(zeta0.values) > 1e-4 * peak)


def test_particle_arrays_are_read_only():
    p = blob_state().particles
    with pytest.raises(ValueError):
        p.zeta[0] = 1.0


# ---------------------------------------------------------------------------
# stepping

def test_zero_circulation_ensemble_does_not_move():
    r, s = np.array([0.5, 1.0, 2.0]), np.array([1.0, 0.3, 2.0])
    p = ParticleEnsemble(r, s, np.zeros(3), np.ones(3))
    state = step(initial_state(p, GRID), 0.1)
    assert np.array_equal(state.particles.r, r) and np.array_equal(state.particles.s, s)
    assert state.length_L == 1.0


def _swap_index(a, b):
    """Index ``k`` with ``(b.r[k], b.s[k]) == (a.s, a.r)`` particle by particle."""
    where = {(y, x): k for k, (y, x) in enumerate(zip(b.s, b.r))}
    return np.array([where[(r, s)] for r, s in zip(a.r, a.s)])


def test_antisymmetric_configuration_stays_antisymmetric():
    state = blob_state(data=DiagonalAntisymmetricPair())
    perm = _swap_index(state.particles, state.particles)
    assert np.array_equal(state.particles.zeta[perm], -state.particles.zeta)
    p = run(state, 2, 0.01).particles
    scale = max(p.r.max(), p.s.max())
    assert np.max(np.abs(p.r[perm] - p.s)) <= 1e-12 * scale
    assert np.max(np.abs(p.s[perm] - p.r)) <= 1e-12 * scale


def test_mirror_runs_have_swapped_trajectories():
    # the mirror of zeta is -zeta(s, r)
    zeta = GaussianBlob(center=(1.3, 0.8), width=0.3).zeta(GRID)
    a0 = seed_particles(zeta, 1e-4)
    b0 = seed_particles(ScalarField(GRID, -zeta.values.T), 1e-4)
    idx = _swap_index(a0, b0)
    a = run(initial_state(a0, GRID), 3, 0.01).particles
    b = run(initial_state(b0, GRID), 3, 0.01).particles
    assert np.max(np.abs(b.r[idx] - a.s)) <= 1e-10
    assert np.max(np.abs(b.s[idx] - a.r)) <= 1e-10


def test_cfl_violation_raises_before_moving():
    state = with_velocity(blob_state())
    speed = np.hypot(state.cache.u_r, state.cache.u_s).max()
    dt = state.spacing / speed
    with pytest.raises(CFLError) as info:
        step(state, dt)
    assert info.value.limit == pytest.approx(0.5 * state.spacing)
    with pytest.raises(ValueError):
        step(state, 0.0)


def test_zeta_and_weight_are_bit_identical_after_steps():
    state = blob_state()
    p0 = state.particles
    p1 = run(state, 3, 0.02).particles
    assert np.array_equal(p1.zeta, p0.zeta) and np.array_equal(p1.weight, p0.weight)
    assert particle_zeta_sup(p1) == particle_zeta_sup(p0)
    assert particle_zeta_lp(p1, 1.0) == particle_zeta_lp(p0, 1.0)
    assert particle_zeta_lp(p1, 3.0) == particle_zeta_lp(p0, 3.0)
    assert not np.array_equal(p1.r, p0.r)


def test_length_function_is_nondecreasing():
    state = blob_state()
    lengths = [state.length_L]
    for _ in range(4):
        state = step(state, 0.02)
        lengths.append(state.length_L)
    assert np.all(np.diff(lengths) > 0)
    with pytest.raises(ValueError):
        SimState(0.0, state.particles, 0.5, 0, 0.1)


def test_time_reversal_error_is_fourth_order():
    state = blob_state(GridSpec(3.0, 3.0, 16, 16))
    p0 = state.particles
    errs = []
    for n, dt in ((4, 0.1), (8, 0.05)):
        back = run(run(state, n, dt), n, dt, reverse=True).particles
        errs.append(np.max(np.hypot(back.r - p0.r, back.s - p0.s)))
    assert errs[0] < 1e-4
    # halving dt at fixed end time cuts an accumulated O(dt^4) error by 16
    assert errs[0] / errs[1] >= 8.0


# ---------------------------------------------------------------------------
# reconstruction and particle quantities

def test_reconstruction_of_empty_ensemble_is_zero():
    empty = np.zeros(0)
    zeta, w = reconstruct_fields(ParticleEnsemble(empty, empty, empty, empty), GRID)
    assert np.all(zeta.values == 0) and np.all(w.values == 0)


def test_reconstruction_inverts_fresh_seeding():
    zeta0 = GaussianBlob().zeta(GRID)
    p = seed_particles(zeta0, 1e-4)
    zeta, w = reconstruct_fields(p, GRID)
    support = np.abs(zeta0.values) > 1e-4 * np.abs(zeta0.values).max()
    np.testing.assert_allclose(zeta.values[support], zeta0.values[support], rtol=1e-12, atol=0)
    R, S = GRID.mesh()
    np.testing.assert_allclose(w.values, R * S * zeta.values, rtol=1e-15)


def test_reconstruction_conserves_total_deposit():
    p = run(blob_state(), 2, 0.02).particles
    zeta, _ = reconstruct_fields(p, GRID)
    assert np.sum(zeta.values * GRID.measure()) == pytest.approx(np.sum(p.zeta * p.weight), rel=1e-12)


def test_particle_w_sup_and_moments():
    p = ParticleEnsemble([1.0, 2.0], [3.0, 0.5], [2.0, -4.0], [0.5, 1.5])
    assert particle_w_sup(p) == 6.0
    mom_r, mom_s = particle_moments(p)
    assert mom_r == pytest.approx(1.0 * 2.0 * 0.5 + 4.0 * 4.0 * 1.5)
    assert mom_s == pytest.approx(9.0 * 2.0 * 0.5 + 0.25 * 4.0 * 1.5)
    np.testing.assert_allclose(p.strength, p.zeta * p.weight / FOUR_PI_SQ)


def test_probe_lattice_covers_the_grid():
    r, s = probe_lattice(GRID, 16)
    assert r.size == 256 and r.min() > 0 and r.max() < GRID.r_max
    assert np.allclose(np.unique(r), np.unique(s))


# ---------------------------------------------------------------------------
# checkpoints

def test_checkpoint_round_trip(tmp_path):
    state = run(blob_state(), 2, 0.02)
    path = tmp_path / "ck.txt"
    write_checkpoint(path, state)
    header = path.read_text().splitlines()[0].split()
    assert len(header) == 3 and int(header[1]) == len(state.particles)
    back = read_checkpoint(path)
    assert back.time == state.time and back.length_L == state.length_L
    for name in ("r", "s", "zeta", "weight"):
        assert np.array_equal(getattr(back.particles, name), getattr(state.particles, name))


def test_spacing_is_recovered_from_fresh_particles():
    p = blob_state().particles
    assert spacing_from_particles(p) == pytest.approx(GRID.h_r, rel=1e-12)


def test_probe_velocity_from_checkpoint_matches_state(tmp_path):
    state = blob_state()
    write_checkpoint(tmp_path / "ck.txt", state)
    back = read_checkpoint(tmp_path / "ck.txt")
    assert probe_velocity(back, 2.0, 2.5) == pytest.approx(probe_velocity(state, 2.0, 2.5), rel=1e-12)
