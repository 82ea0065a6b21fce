"""Aggregation of simulation records into delivery curves, CBR summaries,
state timelines, and the SSE power-curve fit with crossover extraction.

CSV schemas (shared with the CLI) use a mandatory header row, fixed column
order, and 6-significant-digit floating point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .dcc import DccState


@dataclass
class LinkStats:
    """Per-link, per-time-bucket delivery accounting."""

    tx_id: int
    rx_id: int
    time_bucket_s: float
    sent: int
    delivered: int
    verdicts: dict[str, int] = field(default_factory=dict)
    mean_distance_m: float = 0.0

    @property
    def pdr(self) -> float | None:
        return self.delivered / self.sent if self.sent > 0 else None


@dataclass(frozen=True)
class CbrSample:
    time_s: float
    vehicle_id: int
    cbr: float
    state: DccState


@dataclass(frozen=True)
class PdrBin:
    bin_low_m: float
    bin_high_m: float
    sent: int
    delivered: int

    @property
    def pdr(self) -> float | None:
        return self.delivered / self.sent if self.sent > 0 else None


@dataclass(frozen=True)
class PowerCurveFit:
    """Power-law fit y = a * d^b in linear milliwatts."""

    coefficient_a: float
    exponent_b: float
    sse: float
    crossover_at_sensitivity_m: float

    def predicted_dbm(self, distance_m: float) -> float:
        return 10.0 * math.log10(self.coefficient_a * distance_m ** self.exponent_b)


class FitError(ValueError):
    """Raised when a point set cannot support a power-curve fit."""


def pdr_vs_distance(
    link_records: Iterable[LinkStats],
    bin_width_m: float = 2.5,
) -> list[PdrBin]:
    """Bin link records by mean distance into [low, high) PDR bins.

    Empty bins between populated ones are emitted with sent = 0 so the
    curve's distance axis has no silent holes.
    """
    if bin_width_m <= 0:
        raise ValueError(f"bin_width_m must be positive, got {bin_width_m}")
    sent: dict[int, int] = {}
    delivered: dict[int, int] = {}
    for rec in link_records:
        idx = int(rec.mean_distance_m // bin_width_m)
        sent[idx] = sent.get(idx, 0) + rec.sent
        delivered[idx] = delivered.get(idx, 0) + rec.delivered
    if not sent:
        return []
    bins = []
    for idx in range(min(sent), max(sent) + 1):
        bins.append(
            PdrBin(
                bin_low_m=idx * bin_width_m,
                bin_high_m=(idx + 1) * bin_width_m,
                sent=sent.get(idx, 0),
                delivered=delivered.get(idx, 0),
            )
        )
    return bins


def fit_power_curve(
    points: Sequence[tuple[float, float]],
    sensitivity_dbm: float = -77.0,
    power_in_dbm: bool = True,
) -> PowerCurveFit:
    """Least-squares fit of y = a * d^b in the linear power domain.

    ``points`` are (distance_m, power) pairs; powers are dBm unless
    ``power_in_dbm`` is False, in which case they are already milliwatts.
    The fit is initialized from a log-log linear regression and reports
    the distance where the fitted curve crosses ``sensitivity_dbm``.
    """
    if len(points) < 3:
        raise FitError(f"need at least 3 points, got {len(points)}")
    d = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(d <= 0):
        raise FitError("all distances must be positive")
    if len(np.unique(d)) < 2:
        raise FitError("need at least 2 distinct distances")
    y_mw = 10.0 ** (y / 10.0) if power_in_dbm else y
    if np.any(y_mw <= 0):
        raise FitError("all powers must be positive in the linear domain")

    # Log-log regression gives the starting point for the nonlinear fit.
    slope, intercept = np.polyfit(np.log10(d), np.log10(y_mw), 1)
    p0 = (10.0 ** intercept, slope)

    def model(x: np.ndarray, a: float, b: float) -> np.ndarray:
        return a * x ** b

    try:
        (a, b), _ = curve_fit(model, d, y_mw, p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"power-curve fit did not converge: {exc}") from exc
    residuals = y_mw - model(d, a, b)
    sse = float(np.sum(residuals * residuals))
    sens_mw = 10.0 ** (sensitivity_dbm / 10.0)
    if b < 0 and a > 0:
        crossover = float((sens_mw / a) ** (1.0 / b))
    else:
        crossover = math.inf
    return PowerCurveFit(float(a), float(b), sse, crossover)


def ambient_cbr_summary(
    samples: Iterable[CbrSample],
    discard_first_s: float = 0.0,
) -> float:
    """Time- and vehicle-averaged CBR after discarding the warm-up prefix."""
    values = [s.cbr for s in samples if s.time_s >= discard_first_s]
    if not values:
        raise ValueError("no CBR samples after warm-up discard")
    return float(np.mean(values))


@dataclass(frozen=True)
class StateInterval:
    state: DccState
    start_s: float
    end_s: float


def state_timeline(
    samples: Iterable[CbrSample],
    vehicle_id: int,
    sample_period_s: float = 0.2,
) -> list[StateInterval]:
    """Run-length-encode a vehicle's state samples into intervals.

    Each sample is taken to describe the period ending at its timestamp;
    the resulting intervals partition the observation window.
    """
    sel = sorted(
        (s for s in samples if s.vehicle_id == vehicle_id),
        key=lambda s: s.time_s,
    )
    if not sel:
        return []
    intervals: list[StateInterval] = []
    start = sel[0].time_s - sample_period_s
    current = sel[0].state
    prev_t = sel[0].time_s
    for s in sel[1:]:
        if s.state is not current:
            intervals.append(StateInterval(current, start, prev_t))
            current = s.state
            start = prev_t
        prev_t = s.time_s
    intervals.append(StateInterval(current, start, prev_t))
    return intervals


def co_state_intervals(
    timeline_a: Sequence[StateInterval],
    timeline_b: Sequence[StateInterval],
    state: DccState = DccState.RESTRICTIVE,
) -> list[tuple[float, float]]:
    """Time intervals during which both vehicles occupy ``state``."""
    out = []
    for ia in timeline_a:
        if ia.state is not state:
            continue
        for ib in timeline_b:
            if ib.state is not state:
                continue
            lo = max(ia.start_s, ib.start_s)
            hi = min(ia.end_s, ib.end_s)
            if hi > lo:
                out.append((lo, hi))
    out.sort()
    return out


# --- CSV serialization ------------------------------------------------------

def _fmt(value: float | int | str | None) -> str:
    if value is None:
        return "nan"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _write_rows(path, header: list[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_pdr_vs_distance_csv(path, bins: Sequence[PdrBin]) -> None:
    _write_rows(
        path,
        ["bin_low_m", "bin_high_m", "sent", "delivered", "pdr"],
        ((b.bin_low_m, b.bin_high_m, b.sent, b.delivered, b.pdr) for b in bins),
    )


def write_cbr_timeseries_csv(path, samples: Sequence[CbrSample]) -> None:
    _write_rows(
        path,
        ["time_s", "vehicle_id", "cbr", "state"],
        ((s.time_s, s.vehicle_id, s.cbr, s.state.value) for s in samples),
    )


def write_link_pdr_csv(path, records: Sequence[LinkStats]) -> None:
    _write_rows(
        path,
        ["time_s", "tx_id", "rx_id", "distance_m", "sent", "delivered", "pdr"],
        (
            (r.time_bucket_s, r.tx_id, r.rx_id, r.mean_distance_m, r.sent, r.delivered, r.pdr)
            for r in records
        ),
    )


def write_fit_csv(path, fit: PowerCurveFit) -> None:
    _write_rows(
        path,
        ["a", "b", "sse", "crossover_m"],
        [(fit.coefficient_a, fit.exponent_b, fit.sse, fit.crossover_at_sensitivity_m)],
    )
