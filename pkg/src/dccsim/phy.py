"""PHY/MAC primitives: frame airtime, CCA, reception verdicts, CBR windows.

Timing follows 10 MHz OFDM: 32 us preamble, 8 us SIGNAL, 8 us data symbols,
16 service bits and 6 tail bits per PSDU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

PREAMBLE_S = 32e-6
SIGNAL_S = 8e-6
SYMBOL_S = 8e-6
SERVICE_BITS = 16
TAIL_BITS = 6

# 10 MHz OFDM data bits per symbol, keyed by PHY rate in Mbps.
DATA_BITS_PER_SYMBOL = {
    3.0: 24,
    4.5: 36,
    6.0: 48,
    9.0: 72,
    12.0: 96,
    18.0: 144,
    24.0: 192,
    27.0: 216,
}

# Minimum receiver sensitivity (dBm) per PHY rate, 10 MHz channels.
RX_SENSITIVITY_DBM = {
    3.0: -85.0,
    4.5: -84.0,
    6.0: -82.0,
    9.0: -80.0,
    12.0: -77.0,
    18.0: -73.0,
    24.0: -69.0,
    27.0: -68.0,
}

# Threshold-model SINR (dB) required to decode, per PHY rate. Calibration
# knobs: the reference values are 8 dB for QPSK 1/2 and 15 dB for 16QAM 1/2.
REQUIRED_SINR_DB = {
    3.0: 4.0,
    4.5: 5.0,
    6.0: 8.0,
    9.0: 10.0,
    12.0: 15.0,
    18.0: 19.0,
    24.0: 23.0,
    27.0: 25.0,
}

# Broadcast MAC constants (10 MHz): no ACKs, fixed contention window.
SLOT_S = 13e-6
AIFS_S = 58e-6
CONTENTION_WINDOW_SLOTS = 16

DEFAULT_NOISE_FLOOR_DBM = -94.0  # -174 dBm/Hz + 10*log10(10 MHz) + 10 dB NF


class ConfigError(ValueError):
    """Raised for unsupported PHY configurations."""


class RxVerdict(str, Enum):
    DELIVERED = "delivered"
    BELOW_SENSITIVITY = "below_sensitivity"
    SINR_FAILURE = "sinr_failure"
    RX_BUSY_TRANSMITTING = "rx_busy_transmitting"


@dataclass(frozen=True)
class PhyProfile:
    """Receiver-side PHY configuration derived from a DCC state."""

    phy_rate_mbps: float
    rx_sensitivity_dbm: float
    required_sinr_db: float
    channel_bandwidth_mhz: float = 10.0

    @classmethod
    def for_rate(
        cls,
        phy_rate_mbps: float,
        rx_sensitivity_dbm: float | None = None,
        required_sinr_db: float | None = None,
    ) -> "PhyProfile":
        if phy_rate_mbps not in DATA_BITS_PER_SYMBOL:
            raise ConfigError(f"unsupported PHY rate {phy_rate_mbps} Mbps")
        if rx_sensitivity_dbm is None:
            rx_sensitivity_dbm = RX_SENSITIVITY_DBM[phy_rate_mbps]
        if required_sinr_db is None:
            required_sinr_db = REQUIRED_SINR_DB[phy_rate_mbps]
        return cls(phy_rate_mbps, rx_sensitivity_dbm, required_sinr_db)


@dataclass
class FrameOnAir:
    """A broadcast frame in flight."""

    tx_vehicle_id: int
    start_time_s: float
    end_time_s: float
    tx_power_dbm: float
    phy_rate_mbps: float
    payload_bytes: int
    sequence_number: int

    def __post_init__(self) -> None:
        if self.end_time_s <= self.start_time_s:
            raise ValueError("frame must have positive airtime")
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")


def frame_airtime_s(
    payload_bytes: int,
    phy_rate_mbps: float,
    channel_bandwidth_mhz: float = 10.0,
) -> float:
    """Airtime of one broadcast frame: preamble + SIGNAL + data symbols."""
    if channel_bandwidth_mhz != 10.0:
        raise ConfigError(f"unsupported channel bandwidth {channel_bandwidth_mhz} MHz")
    if phy_rate_mbps not in DATA_BITS_PER_SYMBOL:
        raise ConfigError(f"unsupported PHY rate {phy_rate_mbps} Mbps for 10 MHz")
    if payload_bytes <= 0:
        raise ConfigError(f"payload_bytes must be positive, got {payload_bytes}")
    bits = SERVICE_BITS + 8 * payload_bytes + TAIL_BITS
    symbols = math.ceil(bits / DATA_BITS_PER_SYMBOL[phy_rate_mbps])
    return PREAMBLE_S + SIGNAL_S + symbols * SYMBOL_S


def cca_busy(observed_power_dbm: float, cca_threshold_dbm: float) -> bool:
    """Energy-detection CCA verdict: busy iff power >= threshold."""
    return observed_power_dbm >= cca_threshold_dbm


def reception_decision(
    rx_power_dbm: float,
    rx_profile: PhyProfile,
    interference_mw: float = 0.0,
    noise_floor_dbm: float = DEFAULT_NOISE_FLOOR_DBM,
    rx_transmitting: bool = False,
) -> RxVerdict:
    """Classify one (frame, receiver) pair into an exhaustive verdict.

    ``rx_power_dbm`` is the faded received power of the frame;
    ``interference_mw`` is the summed faded power of temporally
    overlapping frames at this receiver, in milliwatts.
    """
    if rx_transmitting:
        return RxVerdict.RX_BUSY_TRANSMITTING
    if rx_power_dbm < rx_profile.rx_sensitivity_dbm:
        return RxVerdict.BELOW_SENSITIVITY
    signal_mw = 10.0 ** (rx_power_dbm / 10.0)
    noise_mw = 10.0 ** (noise_floor_dbm / 10.0)
    sinr_db = 10.0 * math.log10(signal_mw / (noise_mw + interference_mw))
    if sinr_db < rx_profile.required_sinr_db:
        return RxVerdict.SINR_FAILURE
    return RxVerdict.DELIVERED


@dataclass
class CbrWindow:
    """Channel-busy bookkeeping over a trailing measurement window.

    Busy intervals are stored merged (union), so CBR never exceeds 1 even
    on a saturated channel. Intervals must be added in nondecreasing start
    order, which the event-ordered engine guarantees.
    """

    window_length_s: float = 1.0
    window_start_s: float = 0.0
    _intervals: list[tuple[float, float]] = field(default_factory=list)

    def add_busy(self, start_s: float, end_s: float) -> None:
        if end_s <= start_s:
            return
        if self._intervals and start_s < self._intervals[-1][0]:
            raise ValueError("busy intervals must be added in start order")
        if self._intervals and start_s <= self._intervals[-1][1]:
            prev_start, prev_end = self._intervals[-1]
            self._intervals[-1] = (prev_start, max(prev_end, end_s))
        else:
            self._intervals.append((start_s, end_s))

    def cbr(self, now_s: float) -> float:
        """CBR over the trailing window ending at ``now_s``."""
        window_start = now_s - self.window_length_s
        busy = 0.0
        for start, end in self._intervals:
            lo = max(start, window_start)
            hi = min(end, now_s)
            if hi > lo:
                busy += hi - lo
        # Prune intervals that can no longer intersect any future window.
        self._intervals = [iv for iv in self._intervals if iv[1] > window_start]
        return min(busy / self.window_length_s, 1.0)


def cbr_update(window: CbrWindow, busy_intervals: list[tuple[float, float]], now_s: float) -> float:
    """Fold new busy intervals into the window and return the current CBR."""
    for start, end in busy_intervals:
        window.add_busy(start, end)
    return window.cbr(now_s)
