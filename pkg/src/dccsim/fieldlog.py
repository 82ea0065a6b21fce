"""Ingestion of field beacon logs: RSSI translation, GPS distances, and
sequence-number matching into PDR tables and scatter points.

Log files are line-oriented CSV with a header:
  tx.csv: time_s,seq,lat_deg,lon_deg
  rx.csv: time_s,seq,rssi,lat_deg,lon_deg
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

EARTH_RADIUS_M = 6_371_000.0

RSSI_MIN = 0
RSSI_MAX = 60
RSSI_OFFSET_DBM = -95.0


class LogError(ValueError):
    """Raised for structurally unusable log inputs."""


@dataclass(frozen=True)
class TxLogRecord:
    time_s: float
    sequence_number: int
    lat_deg: float
    lon_deg: float


@dataclass(frozen=True)
class RxLogRecord:
    time_s: float
    sequence_number: int
    rssi: int
    lat_deg: float
    lon_deg: float


@dataclass
class Diagnostics:
    """Counts of rejected records, by reason."""

    rejected_rssi: int = 0
    rejected_coords: int = 0
    rejected_malformed: int = 0
    unmatched_rx: int = 0

    @property
    def total_rejected(self) -> int:
        return self.rejected_rssi + self.rejected_coords + self.rejected_malformed


def rssi_to_dbm(rssi: int) -> float:
    """Translate a device RSSI unit to dBm: 0 -> -95 dBm, 60 -> -35 dBm."""
    if not RSSI_MIN <= rssi <= RSSI_MAX:
        raise LogError(f"rssi {rssi} outside device range [{RSSI_MIN}, {RSSI_MAX}]")
    return float(rssi) + RSSI_OFFSET_DBM


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a 6371 km sphere."""
    for lat in (lat1, lat2):
        if abs(lat) > 90.0:
            raise LogError(f"latitude {lat} out of range")
    for lon in (lon1, lon2):
        if abs(lon) > 180.0:
            raise LogError(f"longitude {lon} out of range")
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(a))


def read_tx_log(path: str | Path, diag: Diagnostics | None = None) -> list[TxLogRecord]:
    diag = diag if diag is not None else Diagnostics()
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                rec = TxLogRecord(
                    time_s=float(row["time_s"]),
                    sequence_number=int(row["seq"]),
                    lat_deg=float(row["lat_deg"]),
                    lon_deg=float(row["lon_deg"]),
                )
            except (KeyError, TypeError, ValueError):
                diag.rejected_malformed += 1
                continue
            if abs(rec.lat_deg) > 90.0 or abs(rec.lon_deg) > 180.0:
                diag.rejected_coords += 1
                continue
            records.append(rec)
    return records


def read_rx_log(path: str | Path, diag: Diagnostics | None = None) -> list[RxLogRecord]:
    diag = diag if diag is not None else Diagnostics()
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                rec = RxLogRecord(
                    time_s=float(row["time_s"]),
                    sequence_number=int(row["seq"]),
                    rssi=int(row["rssi"]),
                    lat_deg=float(row["lat_deg"]),
                    lon_deg=float(row["lon_deg"]),
                )
            except (KeyError, TypeError, ValueError):
                diag.rejected_malformed += 1
                continue
            if not RSSI_MIN <= rec.rssi <= RSSI_MAX:
                diag.rejected_rssi += 1
                continue
            if abs(rec.lat_deg) > 90.0 or abs(rec.lon_deg) > 180.0:
                diag.rejected_coords += 1
                continue
            records.append(rec)
    return records


@dataclass
class PdrTable:
    """Per-distance-bin delivery table plus fit-ready scatter points."""

    bin_width_m: float
    bins: list[tuple[float, float, int, int]] = field(default_factory=list)
    # (bin_low, bin_high, sent, received), sorted by bin_low
    scatter: list[tuple[float, float]] = field(default_factory=list)
    # (distance_m, rx_power_dbm) for matched rx records


def match_and_tabulate(
    tx_records: Sequence[TxLogRecord],
    rx_records: Iterable[RxLogRecord],
    bin_width_m: float = 2.5,
    diag: Diagnostics | None = None,
) -> PdrTable:
    """Join tx and rx logs on sequence number into a binned PDR table.

    Distance for a matched pair uses the tx position carried in the beacon
    and the rx position logged at reception. Unmatched tx records are
    binned against the rx position of the nearest matched sequence number
    (the receiver track moves slowly between adjacent beacons); unmatched
    rx sequence numbers are counted as anomalies, never as deliveries.
    """
    diag = diag if diag is not None else Diagnostics()
    if not tx_records:
        raise LogError("empty tx log: PDR is undefined")
    if bin_width_m <= 0:
        raise LogError(f"bin_width_m must be positive, got {bin_width_m}")

    tx_by_seq = {rec.sequence_number: rec for rec in tx_records}
    matched: dict[int, RxLogRecord] = {}
    for rx in rx_records:
        if rx.sequence_number in tx_by_seq:
            matched[rx.sequence_number] = rx
        else:
            diag.unmatched_rx += 1

    matched_seqs = sorted(matched)
    sent: dict[int, int] = {}
    received: dict[int, int] = {}
    scatter: list[tuple[float, float]] = []

    def rx_position_for(seq: int) -> tuple[float, float]:
        if seq in matched:
            rx = matched[seq]
            return rx.lat_deg, rx.lon_deg
        if matched_seqs:
            pos = bisect.bisect_left(matched_seqs, seq)
            candidates = []
            if pos > 0:
                candidates.append(matched_seqs[pos - 1])
            if pos < len(matched_seqs):
                candidates.append(matched_seqs[pos])
            nearest = min(candidates, key=lambda s: abs(s - seq))
            rx = matched[nearest]
            return rx.lat_deg, rx.lon_deg
        # No receptions at all: fall back to the transmitter's own track so
        # the sent counts still land in a (zero-PDR) bin.
        rec = tx_by_seq[seq]
        return rec.lat_deg, rec.lon_deg

    for seq, tx in tx_by_seq.items():
        rx_lat, rx_lon = rx_position_for(seq)
        distance = haversine_m(tx.lat_deg, tx.lon_deg, rx_lat, rx_lon)
        idx = int(distance // bin_width_m)
        sent[idx] = sent.get(idx, 0) + 1
        if seq in matched:
            received[idx] = received.get(idx, 0) + 1
            scatter.append((distance, rssi_to_dbm(matched[seq].rssi)))

    table = PdrTable(bin_width_m=bin_width_m)
    for idx in sorted(sent):
        table.bins.append(
            (idx * bin_width_m, (idx + 1) * bin_width_m, sent[idx], received.get(idx, 0))
        )
    table.scatter = sorted(scatter)
    return table


def write_pdr_table_csv(path: str | Path, table: PdrTable) -> None:
    """PDR table CSV with a percent column formatted to one decimal."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low_m", "bin_high_m", "sent", "received", "pdr_percent"])
        for low, high, sent, received in table.bins:
            pdr_pct = 100.0 * received / sent if sent else float("nan")
            writer.writerow([f"{low:.6g}", f"{high:.6g}", sent, received, f"{pdr_pct:.1f}"])
