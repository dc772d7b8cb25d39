"""Figures written next to the run's CSV output."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fields import ScalarField  # noqa: E402


def plot_series(path, series) -> None:
    """Norms, velocity sups and the two estimate ratios against time."""
    t = np.array([rec.time for rec in series])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharex=True)
    ax = axes[0, 0]
    for name in ("w_sup", "zeta_sup", "lor_w", "lor_wr", "lor_ws"):
        ax.plot(t, [getattr(rec, name) for rec in series], label=name)
    ax.set_ylabel("norm")
    ax.legend(fontsize=8)
    ax = axes[0, 1]
    ax.plot(t, [rec.ur_sup for rec in series], label="ur_sup")
    ax.plot(t, [rec.us_sup for rec in series], label="us_sup")
    ax.set_ylabel("velocity sup")
    ax.legend(fontsize=8)
    ax = axes[1, 0]
    ax.plot(t, [rec.length_L for rec in series], label="L(t)")
    ax.plot(t, [rec.bkm_integral for rec in series], label="bkm_integral")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax = axes[1, 1]
    ax.plot(t, [rec.ratio_prop_vel for rec in series], label="ratio_prop_vel")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_field(path, f: ScalarField, title: str = "") -> None:
    g = f.grid
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    lim = float(np.max(np.abs(f.values))) or 1.0
    edges_r = np.linspace(0.0, g.r_max, g.n_r + 1)
    edges_s = np.linspace(0.0, g.s_max, g.n_s + 1)
    mesh = ax.pcolormesh(edges_r, edges_s, f.values.T, cmap="RdBu_r", vmin=-lim, vmax=lim)
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("r")
    ax.set_ylabel("s")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
