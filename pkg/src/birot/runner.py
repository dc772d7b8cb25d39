"""The run loop: seed, integrate, record, and write every artifact of a scenario."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, serialize_config
from .diagnostics import (DiagnosticsRecord, gronwall_monitor, growth_monitor, initial_data_check,
                          record, write_csv)
from .fields import check_truncation, w_from_zeta, write_field
from .transport import (ParticleEnsemble, SimState, initial_state, probe_velocity, reconstruct_fields,
                        seed_particles, step, with_velocity, write_checkpoint)


@dataclass
class RunResult:
    config: ScenarioConfig
    series: list
    final: SimState
    summary: dict


def seed_for(cfg: ScenarioConfig) -> tuple[ParticleEnsemble, dict]:
    """Initial ensemble of a scenario after the truncation and hypothesis checks."""
    zeta0 = cfg.initial_data.zeta(cfg.grid)
    check_truncation(zeta0)
    hyp = initial_data_check(zeta0, override=cfg.override_hypothesis)
    if not np.any(zeta0.values):
        empty = np.zeros(0)
        return ParticleEnsemble(empty, empty, empty, empty), hyp
    return seed_particles(zeta0, cfg.seed_threshold), hyp


def simulate(cfg: ScenarioConfig, progress=None) -> tuple[list[DiagnosticsRecord], SimState, list]:
    """Integrate a scenario in memory; returns the records, the final state and checkpoints."""
    cfg.validate()
    particles, _ = seed_for(cfg)
    state = with_velocity(initial_state(particles, cfg.grid), cfg.quad)
    series = [record(state, cfg.grid, cfg.quad, None, cfg.dt)]
    checkpoints = []
    n = cfg.n_steps
    for k in range(1, n + 1):
        state = with_velocity(step(state, cfg.dt, cfg.quad), cfg.quad)
        if k % cfg.emit_every == 0 or k == n:
            series.append(record(state, cfg.grid, cfg.quad, series[-1], cfg.dt))
        if cfg.checkpoint_every and k % cfg.checkpoint_every == 0:
            checkpoints.append(state)
        if progress is not None:
            progress(k, n, state)
    return series, state, checkpoints


def summarize(cfg: ScenarioConfig, series, final: SimState) -> dict:
    out = {
        "steps": final.step_count,
        "particles": len(final.particles),
        "clip_count": final.clip_count,
        "clip_fraction": final.clip_fraction,
        "reliable": final.reliable,
        "growth": growth_monitor(series),
    }
    if len(series) >= 3:
        g = gronwall_monitor(series)
        out["gronwall"] = {"medians": g.medians, "flagged": g.flagged,
                           "suspect_records": g.suspect_records}
    if cfg.probe_points:
        out["probes"] = [{"r": p.r, "s": p.s, "u_r": u[0], "u_s": u[1]}
                         for p in cfg.probe_points
                         for u in [probe_velocity(final, p.r, p.s, cfg.quad)]]
    return out


def run_scenario(cfg: ScenarioConfig, progress=None) -> RunResult:
    """Run and write ``diagnostics.csv``, checkpoints, final snapshots, figures and a summary."""
    series, final, checkpoints = simulate(cfg, progress)
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(serialize_config(cfg))
    write_csv(os.path.join(out, "diagnostics.csv"), series)
    for state in checkpoints:
        write_checkpoint(os.path.join(out, f"checkpoint_{state.step_count:06d}.txt"), state)
    write_checkpoint(os.path.join(out, "checkpoint_final.txt"), final)
    zeta, w = reconstruct_fields(final.particles, cfg.grid)
    write_field(os.path.join(out, "zeta_final.txt"), zeta)
    write_field(os.path.join(out, "w_final.txt"), w)
    summary = summarize(cfg, series, final)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    if cfg.figures:
        from .plotting import plot_field, plot_series

        plot_series(os.path.join(out, "diagnostics.png"), series)
        plot_field(os.path.join(out, "w_final.png"), w, f"w at t = {final.time:.3g}")
        plot_field(os.path.join(out, "w_initial.png"),
                   w_from_zeta(cfg.initial_data.zeta(cfg.grid)), "w at t = 0")
    return RunResult(cfg, series, final, summary)
