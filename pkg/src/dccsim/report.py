"""Figure rendering for the CLI report path.

The CSV files are the machine-readable contract; these figures are the
human-readable companions written next to them when figure output is
requested.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dcc import DccState
from .metrics import CbrSample, LinkStats, PdrBin, PowerCurveFit

STATE_COLORS = {
    DccState.RELAXED: "#4daf4a",
    DccState.ACTIVE: "#ff7f00",
    DccState.RESTRICTIVE: "#e41a1c",
}

STATE_LEVELS = {DccState.RELAXED: 0, DccState.ACTIVE: 1, DccState.RESTRICTIVE: 2}


def save_cbr_timeseries_figure(
    samples: Sequence[CbrSample],
    path: str | Path,
    min_threshold: float = 0.15,
    max_threshold: float = 0.40,
) -> None:
    vehicle_ids = sorted({s.vehicle_id for s in samples})
    if not vehicle_ids:
        return
    fig, axes = plt.subplots(
        len(vehicle_ids), 1, figsize=(9, 2.4 * len(vehicle_ids)), sharex=True, squeeze=False
    )
    for ax, vid in zip(axes[:, 0], vehicle_ids):
        sel = [s for s in samples if s.vehicle_id == vid]
        times = [s.time_s for s in sel]
        ax.plot(times, [s.cbr for s in sel], color="#377eb8", lw=1.0, label="CBR")
        ax.axhline(min_threshold, color="gray", ls=":", lw=0.8)
        ax.axhline(max_threshold, color="gray", ls="--", lw=0.8)
        twin = ax.twinx()
        twin.step(
            times,
            [STATE_LEVELS[s.state] for s in sel],
            where="post",
            color="#984ea3",
            lw=1.0,
            alpha=0.7,
        )
        twin.set_yticks([0, 1, 2])
        twin.set_yticklabels([s.value for s in STATE_LEVELS])
        twin.set_ylim(-0.2, 2.2)
        ax.set_ylim(0, 1.02)
        ax.set_ylabel(f"vehicle {vid}\nCBR")
    axes[-1, 0].set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_pdr_vs_distance_figure(bins: Sequence[PdrBin], path: str | Path) -> None:
    populated = [b for b in bins if b.sent > 0]
    if not populated:
        return
    centers = [(b.bin_low_m + b.bin_high_m) / 2 for b in populated]
    pdrs = [b.pdr for b in populated]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(centers, pdrs, "o-", color="#377eb8")
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("PDR")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_link_pdr_figure(records: Sequence[LinkStats], path: str | Path) -> None:
    links = sorted({(r.tx_id, r.rx_id) for r in records})
    if not links:
        return
    fig, ax = plt.subplots(figsize=(9, 4))
    for tx, rx in links:
        sel = sorted(
            (r for r in records if r.tx_id == tx and r.rx_id == rx),
            key=lambda r: r.time_bucket_s,
        )
        ax.plot(
            [r.time_bucket_s for r in sel],
            [r.pdr if r.pdr is not None else np.nan for r in sel],
            "o-",
            ms=3,
            label=f"{tx} -> {rx}",
        )
    ax.set_xlabel("time (s)")
    ax.set_ylabel("per-second PDR")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_fit_figure(
    scatter: Sequence[tuple[float, float]],
    fit: PowerCurveFit,
    path: str | Path,
    sensitivity_dbm: float = -77.0,
) -> None:
    if not scatter:
        return
    d = np.array([p[0] for p in scatter])
    y = np.array([p[1] for p in scatter])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(d, y, ".", ms=3, alpha=0.5, color="#377eb8", label="measurements")
    grid = np.linspace(max(d.min(), 0.5), d.max(), 200)
    ax.plot(grid, [fit.predicted_dbm(x) for x in grid], "-", color="#e41a1c", label="power fit")
    ax.axhline(sensitivity_dbm, color="gray", ls="--", lw=0.8, label="sensitivity")
    if np.isfinite(fit.crossover_at_sensitivity_m):
        ax.axvline(fit.crossover_at_sensitivity_m, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("rx power (dBm)")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_link_budget_figure(
    rows: Sequence[tuple[float, float]],
    path: str | Path,
    sensitivity_dbm: float,
) -> None:
    """Rx power vs distance with the sensitivity line."""
    if not rows:
        return
    d = [r[0] for r in rows]
    p = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(d, p, "-", color="#377eb8")
    ax.axhline(sensitivity_dbm, color="gray", ls="--", lw=0.8)
    ax.set_xscale("log")
    ax.set_xlabel("distance (m)")
    ax.set_ylabel("rx power (dBm)")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
