"""The ETSI DCC three-state machine and its per-state parameter table.

State transitions fire only after the triggering CBR condition has held
continuously: 1 s for promotions toward Restrictive, 5 s for demotions
toward Relaxed. There is no direct Relaxed <-> Restrictive transition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .phy import ConfigError, PhyProfile

REGULATORY_TX_RANGE_DBM = (-10.0, 33.0)


class DccState(str, Enum):
    RELAXED = "Relaxed"
    ACTIVE = "Active"
    RESTRICTIVE = "Restrictive"


@dataclass(frozen=True)
class StateParams:
    """Transmit/receive parameter set prescribed for one DCC state."""

    tx_power_dbm: float
    cca_threshold_dbm: float
    beacon_rate_hz: float
    phy_rate_mbps: float
    rx_sensitivity_dbm: float

    def __post_init__(self) -> None:
        if self.beacon_rate_hz <= 0:
            raise ConfigError(f"beacon_rate_hz must be positive, got {self.beacon_rate_hz}")

    def phy_profile(self) -> PhyProfile:
        return PhyProfile.for_rate(self.phy_rate_mbps, self.rx_sensitivity_dbm)


def _default_states() -> dict[DccState, StateParams]:
    return {
        # Relaxed row is configuration, not standard-mandated.
        DccState.RELAXED: StateParams(
            tx_power_dbm=33.0,
            cca_threshold_dbm=-95.0,
            beacon_rate_hz=2.0,
            phy_rate_mbps=6.0,
            rx_sensitivity_dbm=-82.0,
        ),
        # Active: Restrictive shifted by +33 dB Tx, -20 dB CCA, doubled rate.
        DccState.ACTIVE: StateParams(
            tx_power_dbm=23.0,
            cca_threshold_dbm=-85.0,
            beacon_rate_hz=2.0,
            phy_rate_mbps=6.0,
            rx_sensitivity_dbm=-82.0,
        ),
        # Restrictive row is standard-mandated.
        DccState.RESTRICTIVE: StateParams(
            tx_power_dbm=-10.0,
            cca_threshold_dbm=-65.0,
            beacon_rate_hz=1.0,
            phy_rate_mbps=12.0,
            rx_sensitivity_dbm=-77.0,
        ),
    }


@dataclass(frozen=True)
class DccParamTable:
    """Per-state parameters plus transition thresholds and dwell times."""

    states: dict[DccState, StateParams] = field(default_factory=_default_states)
    min_cbr_threshold: float = 0.15
    max_cbr_threshold: float = 0.40
    up_dwell_s: float = 1.0
    down_dwell_s: float = 5.0

    def __post_init__(self) -> None:
        if not 0.0 < self.min_cbr_threshold < self.max_cbr_threshold < 1.0:
            raise ConfigError(
                "CBR thresholds must satisfy 0 < min < max < 1, got "
                f"min={self.min_cbr_threshold} max={self.max_cbr_threshold}"
            )
        if self.up_dwell_s <= 0 or self.down_dwell_s <= 0:
            raise ConfigError("dwell times must be positive")
        if self.down_dwell_s < self.up_dwell_s:
            raise ConfigError("down dwell must be at least the up dwell")
        for state in DccState:
            if state not in self.states:
                raise ConfigError(f"missing parameter row for state {state.value}")


def params_for(state: DccState, table: DccParamTable) -> StateParams:
    """Parameter set for a state under the given table."""
    return table.states[state]


def override_restrictive_tx(table: DccParamTable, new_tx_dbm: float) -> DccParamTable:
    """Table identical to ``table`` except for the Restrictive Tx power."""
    lo, hi = REGULATORY_TX_RANGE_DBM
    if not lo <= new_tx_dbm <= hi:
        raise ConfigError(
            f"Restrictive Tx override {new_tx_dbm} dBm outside regulatory range [{lo}, {hi}]"
        )
    states = dict(table.states)
    states[DccState.RESTRICTIVE] = replace(
        states[DccState.RESTRICTIVE], tx_power_dbm=new_tx_dbm
    )
    return replace(table, states=states)


@dataclass
class DccTimerState:
    """Mutable per-vehicle transition bookkeeping."""

    current: DccState = DccState.RELAXED
    state_entry_time_s: float = 0.0
    up_hold_start_s: float | None = None
    down_hold_start_s: float | None = None

    def _enter(self, state: DccState, now_s: float) -> None:
        self.current = state
        self.state_entry_time_s = now_s
        self.up_hold_start_s = None
        self.down_hold_start_s = None


def dcc_step(
    timer: DccTimerState,
    cbr_sample: float,
    now_s: float,
    table: DccParamTable,
) -> tuple[DccState, StateParams]:
    """Feed one CBR sample to the state machine and return the new state.

    Hold timers start at the first sample satisfying the condition and
    reset the moment the condition lapses; a transition fires once the
    condition has been satisfied across a full dwell interval.
    """
    if not 0.0 <= cbr_sample <= 1.0:
        raise ValueError(f"CBR sample out of range: {cbr_sample}")

    state = timer.current
    if state is DccState.RELAXED:
        up_cond = cbr_sample >= table.min_cbr_threshold
        down_cond = False
    elif state is DccState.ACTIVE:
        up_cond = cbr_sample >= table.max_cbr_threshold
        down_cond = cbr_sample < table.min_cbr_threshold
    else:  # Restrictive
        up_cond = False
        down_cond = cbr_sample < table.max_cbr_threshold

    if up_cond:
        if timer.up_hold_start_s is None:
            timer.up_hold_start_s = now_s
        elif now_s - timer.up_hold_start_s >= table.up_dwell_s:
            timer._enter(
                DccState.ACTIVE if state is DccState.RELAXED else DccState.RESTRICTIVE,
                now_s,
            )
    else:
        timer.up_hold_start_s = None

    if down_cond:
        if timer.down_hold_start_s is None:
            timer.down_hold_start_s = now_s
        elif now_s - timer.down_hold_start_s >= table.down_dwell_s:
            timer._enter(
                DccState.ACTIVE if state is DccState.RESTRICTIVE else DccState.RELAXED,
                now_s,
            )
    else:
        timer.down_hold_start_s = None

    return timer.current, params_for(timer.current, table)
