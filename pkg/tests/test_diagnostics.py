import dataclasses
import math

import numpy as np
import pytest

from birot.config import ScenarioConfig
from birot.diagnostics import (FIELD_NAMES, DiagnosticsRecord, HypothesisError, gronwall_monitor,
                               growth_monitor, initial_data_check, read_csv, record, write_csv)
from birot.fields import GridSpec, ScalarField
from birot.runner import seed_for, simulate
from birot.scenarios import GaussianBlob
from birot.transport import ParticleEnsemble, initial_state, seed_particles

GRID = GridSpec(3.0, 3.0, 32, 32)


def zero_record(**kw):
    base = dict.fromkeys(FIELD_NAMES, 0.0)
    base["clip_count"] = 0
    base["length_L"] = 1.0
    base.update(kw)
    return DiagnosticsRecord(**base)


def smooth_series(n=21):
    out = []
    for t in np.linspace(0.0, 1.0, n):
        out.append(zero_record(time=t, w_sup=math.exp(0.1 * t), lor_w=2.0 + 0.1 * t,
                               lor_wr=1.0 + 0.1 * t, lor_ws=1.0 + 0.2 * t))
    return out


def test_record_of_zero_state():
    empty = np.zeros(0)
    state = initial_state(ParticleEnsemble(empty, empty, empty, empty), GRID)
    rec = record(state, GRID)
    assert all(getattr(rec, name) == 0 for name in FIELD_NAMES if name != "length_L")
    assert rec.length_L == 1.0


def test_record_of_seeded_blob_is_consistent():
    zeta0 = GaussianBlob().zeta(GRID)
    state = initial_state(seed_particles(zeta0, 1e-3), GRID)
    rec = record(state, GRID, dt=0.01)
    assert rec.zeta_sup == pytest.approx(np.abs(zeta0.values).max(), rel=1e-14)
    assert rec.w_sup > 0 and rec.lor_w > 0 and rec.ur_sup > 0
    assert rec.bkm_integral == 0.0 and rec.ratio_growth >= 0.0
    assert all(getattr(rec, name) >= 0 for name in FIELD_NAMES)


def test_csv_header_order_and_round_trip(tmp_path):
    series = smooth_series(5)
    series[2] = dataclasses.replace(series[2], clip_count=3, ratio_prop_vel=1 / 3)
    write_csv(tmp_path / "d.csv", series)
    header = (tmp_path / "d.csv").read_text().splitlines()[0].split(",")
    assert tuple(header) == FIELD_NAMES
    assert header[0] == "time" and header[-1] == "clip_count"
    assert read_csv(tmp_path / "d.csv") == series


def test_csv_rejects_foreign_header(tmp_path):
    (tmp_path / "d.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "d.csv")


# ---------------------------------------------------------------------------
# Gronwall monitor

def test_constant_series_has_zero_constants_and_no_flags():
    series = [zero_record(time=t, w_sup=2.0, lor_w=1.0, lor_wr=1.0, lor_ws=1.0) for t in (0, 0.1, 0.2, 0.3)]
    rep = gronwall_monitor(series)
    assert all(np.all(c == 0) for c in rep.constants.values())
    assert all(not idx for idx in rep.flagged.values())
    assert rep.suspect_records == []


def test_smooth_series_is_not_flagged():
    rep = gronwall_monitor(smooth_series())
    assert all(not idx for idx in rep.flagged.values())
    assert rep.medians["w_sup"] > 0


@pytest.mark.parametrize("k", [3, 10, 17])
def test_corrupted_record_is_reported(k):
    series = smooth_series()
    series[k] = dataclasses.replace(series[k], w_sup=2 * series[k].w_sup)
    rep = gronwall_monitor(series)
    assert k - 1 in rep.flagged["w_sup"] and k + 1 in rep.flagged["w_sup"]
    assert rep.suspect_records == [k]


def test_monitor_needs_three_records():
    with pytest.raises(ValueError):
        gronwall_monitor(smooth_series(2))


def test_growth_monitor_on_smooth_series():
    out = growth_monitor(smooth_series())
    assert out["w_sup"]["C0"] == 1.0 and out["w_sup"]["ok"]
    assert out["bkm"]["finite"] and out["bkm"]["nondecreasing"]


# ---------------------------------------------------------------------------
# initial-data hypotheses

def test_initial_data_check_values():
    zeta0 = GaussianBlob().zeta(GRID)
    out = initial_data_check(zeta0)
    assert math.isfinite(out["weighted_sup"]) and math.isfinite(out["weighted_l1"])
    assert out["weighted_sup"] >= np.abs(zeta0.values).max()


def test_initial_data_check_refuses_non_finite_data_unless_overridden():
    vals = GaussianBlob().zeta(GRID).values.copy()
    vals[5, 5] = np.nan
    bad = ScalarField(GRID, vals)
    with pytest.raises(HypothesisError):
        initial_data_check(bad)
    out = initial_data_check(bad, override=True)
    assert not math.isfinite(out["weighted_sup"]) or not math.isfinite(out["weighted_l1"])


# ---------------------------------------------------------------------------
# scale invariance and self-convergence

BASE = ScenarioConfig(grid=GridSpec(4.0, 4.0, 48, 48), dt=0.01, t_end=0.02, figures=False)


def test_velocity_ratio_is_scale_invariant_at_t0():
    ratios = []
    for lam in (0.5, 1.0, 2.0):
        cfg = BASE.scaled(lam)
        particles, _ = seed_for(cfg)
        rec = record(initial_state(particles, cfg.grid), cfg.grid, cfg.quad, dt=cfg.dt)
        ratios.append(rec.ratio_prop_vel)
    assert max(ratios) - min(ratios) <= 0.02 * min(ratios)


def test_short_run_records_are_monotone_where_required():
    series, final, _ = simulate(BASE)
    assert len(series) == BASE.n_steps + 1
    for name in ("length_L", "bkm_integral"):
        assert np.all(np.diff([getattr(r, name) for r in series]) >= 0)
    assert len({r.zeta_sup for r in series}) == 1 and len({r.zeta_l1 for r in series}) == 1


@pytest.mark.slow
def test_initial_record_converges_under_grid_doubling():
    recs = []
    for n in (96, 192):
        cfg = dataclasses.replace(BASE, grid=GridSpec(4.0, 4.0, n, n))
        particles, _ = seed_for(cfg)
        recs.append(record(initial_state(particles, cfg.grid), cfg.grid, cfg.quad, dt=cfg.dt))
    for name in ("w_sup", "zeta_l1", "mom_r", "mom_s", "lor_w", "lor_wr", "lor_ws",
                 "ur_sup", "us_sup", "ratio_prop_vel"):
        a, b = getattr(recs[0], name), getattr(recs[1], name)
        assert abs(a - b) <= 0.03 * abs(b), name
