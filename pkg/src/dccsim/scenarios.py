"""Declarative scenario builders: vehicle placements, velocities, and
pinned/organic DCC settings for the experiment families, plus sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dcc import DccState
from .phy import ConfigError

SCENARIO_RNG_PURPOSE = 3  # keeps placement draws out of the engine streams


@dataclass(frozen=True)
class ScenarioVehicle:
    vehicle_id: int
    x_m: float
    y_m: float
    vx_m_s: float = 0.0
    vy_m_s: float = 0.0
    antenna_gain_dbi: float = 4.5
    initial_state: DccState = DccState.RELAXED
    pinned_state: DccState | None = None
    pinned_tx_power_dbm: float | None = None
    tx_enabled: bool = True


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str
    vehicles: tuple[ScenarioVehicle, ...]
    observed_ids: tuple[int, ...]
    suggested_duration_s: float | None = None

    def __post_init__(self) -> None:
        seen_pos: set[tuple[float, float]] = set()
        seen_ids: set[int] = set()
        for v in self.vehicles:
            if v.vehicle_id in seen_ids:
                raise ConfigError(f"duplicate vehicle id {v.vehicle_id}")
            seen_ids.add(v.vehicle_id)
            pos = (v.x_m, v.y_m)
            if pos in seen_pos:
                raise ConfigError(f"two vehicles share position {pos}")
            seen_pos.add(pos)
        for vid in self.observed_ids:
            if vid not in seen_ids:
                raise ConfigError(f"observed vehicle id {vid} does not exist")


def build_stationary_pair(
    distance_m: float,
    tx_power_dbm: float = -10.0,
    antenna_gain_dbi: float = 4.5,
    beacons: int = 5000,
    beacon_rate_hz: float = 1.0,
) -> ScenarioSpec:
    """Two parked vehicles; the transmitter pinned Restrictive at the given
    Tx power, the receiver silent with the Restrictive 12 Mbps profile."""
    if distance_m <= 0:
        raise ConfigError(f"distance_m must be positive, got {distance_m}")
    tx = ScenarioVehicle(
        vehicle_id=0,
        x_m=0.0,
        y_m=0.0,
        antenna_gain_dbi=antenna_gain_dbi,
        initial_state=DccState.RESTRICTIVE,
        pinned_state=DccState.RESTRICTIVE,
        pinned_tx_power_dbm=tx_power_dbm,
    )
    rx = ScenarioVehicle(
        vehicle_id=1,
        x_m=distance_m,
        y_m=0.0,
        antenna_gain_dbi=antenna_gain_dbi,
        initial_state=DccState.RESTRICTIVE,
        pinned_state=DccState.RESTRICTIVE,
        tx_enabled=False,
    )
    return ScenarioSpec(
        kind="stationary_pair",
        vehicles=(tx, rx),
        observed_ids=(0, 1),
        suggested_duration_s=beacons / beacon_rate_hz,
    )


def build_pair_grid(
    distances_m: Sequence[float],
    tx_power_dbm: float = -10.0,
    antenna_gain_dbi: float = 4.5,
    beacons: int = 5000,
    beacon_rate_hz: float = 1.0,
    pair_spacing_m: float = 2500.0,
) -> ScenarioSpec:
    """Many independent stationary pairs in one run, spaced laterally far
    beyond the relevance radius so they cannot interact. Pair i uses
    vehicle ids (2i, 2i+1) for (transmitter, receiver)."""
    vehicles: list[ScenarioVehicle] = []
    observed: list[int] = []
    for i, distance in enumerate(distances_m):
        if distance <= 0:
            raise ConfigError(f"distance_m must be positive, got {distance}")
        y = i * pair_spacing_m
        vehicles.append(
            ScenarioVehicle(
                vehicle_id=2 * i,
                x_m=0.0,
                y_m=y,
                antenna_gain_dbi=antenna_gain_dbi,
                initial_state=DccState.RESTRICTIVE,
                pinned_state=DccState.RESTRICTIVE,
                pinned_tx_power_dbm=tx_power_dbm,
            )
        )
        vehicles.append(
            ScenarioVehicle(
                vehicle_id=2 * i + 1,
                x_m=distance,
                y_m=y,
                antenna_gain_dbi=antenna_gain_dbi,
                initial_state=DccState.RESTRICTIVE,
                pinned_state=DccState.RESTRICTIVE,
                tx_enabled=False,
            )
        )
        observed.extend((2 * i, 2 * i + 1))
    return ScenarioSpec(
        kind="pair_grid",
        vehicles=tuple(vehicles),
        observed_ids=tuple(observed),
        suggested_duration_s=beacons / beacon_rate_hz,
    )


def build_two_way_multilane(
    congested_lanes: int = 4,
    vehicles_per_lane: int = 400,
    vehicle_length_m: float = 5.0,
    gap_m: float = 1.5,
    lane_width_m: float = 5.0,
    median_width_m: float = 2.0,
    free_speed_m_s: float = 20.0,
    free_separation_m: float = 40.0,
    antenna_gain_dbi: float = 4.5,
    duration_s: float = 30.0,
) -> ScenarioSpec:
    """Congested direction packed bumper-to-bumper and starting Restrictive;
    two Relaxed free-direction vehicles pass on the opposite side 40 m apart.
    """
    if congested_lanes < 0 or vehicles_per_lane < 0:
        raise ConfigError("lane and vehicle counts must be nonnegative")
    if vehicle_length_m <= 0 or gap_m < 0 or lane_width_m <= 0:
        raise ConfigError("inconsistent lane geometry")
    pitch = vehicle_length_m + gap_m
    vehicles: list[ScenarioVehicle] = []
    vid = 0
    for lane in range(congested_lanes):
        y = (lane + 0.5) * lane_width_m
        for i in range(vehicles_per_lane):
            vehicles.append(
                ScenarioVehicle(
                    vehicle_id=vid,
                    x_m=i * pitch,
                    y_m=y,
                    antenna_gain_dbi=antenna_gain_dbi,
                    initial_state=DccState.RESTRICTIVE,
                )
            )
            vid += 1

    n_congested = vid
    observed: list[int] = []
    if n_congested:
        # Center of the middle congested lane.
        center_lane = congested_lanes // 2
        center = center_lane * vehicles_per_lane + vehicles_per_lane // 2
        observed.append(min(center, n_congested - 1))

    # Free direction on the far side of the median, lanes 1 and 4.
    strip_length = vehicles_per_lane * pitch if vehicles_per_lane else 1000.0
    free_base_y = congested_lanes * lane_width_m + median_width_m
    y1 = free_base_y + 0.5 * lane_width_m
    y4 = free_base_y + 3.5 * lane_width_m
    lateral = y4 - y1
    if free_separation_m < lateral:
        raise ConfigError(
            f"free-direction separation {free_separation_m} m shorter than the "
            f"lateral lane offset {lateral} m"
        )
    dx = math.sqrt(free_separation_m**2 - lateral**2)
    # Start so that the pair stays adjacent to the congested strip all run.
    x_start = max(strip_length / 2.0 - free_speed_m_s * duration_s / 2.0, 0.0)
    for vehicle_id, (x, y) in ((vid, (x_start, y1)), (vid + 1, (x_start + dx, y4))):
        vehicles.append(
            ScenarioVehicle(
                vehicle_id=vehicle_id,
                x_m=x,
                y_m=y,
                vx_m_s=free_speed_m_s,
                antenna_gain_dbi=antenna_gain_dbi,
                initial_state=DccState.RELAXED,
            )
        )
    observed.extend((vid, vid + 1))
    return ScenarioSpec(
        kind="two_way_multilane",
        vehicles=tuple(vehicles),
        observed_ids=tuple(observed),
        suggested_duration_s=duration_s,
    )


def build_smooth_flow(
    seed: int,
    lanes: int = 3,
    vehicles_per_lane: int = 100,
    gap_low_m: float = 30.0,
    gap_high_m: float = 60.0,
    lane_width_m: float = 5.0,
    speed_m_s: float = 20.0,
    road_length_m: float = 4000.0,
    antenna_gain_dbi: float = 4.5,
    observed_gaps_m: tuple[float, float] = (40.0, 60.0),
    duration_s: float = 30.0,
) -> ScenarioSpec:
    """Free-flowing traffic with uniform random headways in [30, 60] m.

    The observed triple sits mid-strip on the middle lane with its two
    gaps pinned (front-to-middle, middle-to-rear) to ``observed_gaps_m``.
    """
    if lanes <= 0 or vehicles_per_lane <= 0:
        raise ConfigError("lanes and vehicles_per_lane must be positive")
    if not 0 < gap_low_m <= gap_high_m:
        raise ConfigError("gap bounds must satisfy 0 < low <= high")
    vehicles: list[ScenarioVehicle] = []
    observed: list[int] = []
    observed_lane = lanes // 2
    mid_index = vehicles_per_lane // 2
    vid = 0
    for lane in range(lanes):
        rng = np.random.default_rng([seed, lane, SCENARIO_RNG_PURPOSE])
        gaps = rng.uniform(gap_low_m, gap_high_m, vehicles_per_lane - 1)
        pinned: dict[int, float] = {}
        if lane == observed_lane and vehicles_per_lane >= 3:
            # Pin the gaps around the observed middle vehicle. Ids run
            # front-to-rear while positions grow rear-to-front, so the
            # front->middle gap sits at array index n-1-mid and the
            # middle->rear gap one below it.
            n = vehicles_per_lane
            pinned = {
                n - 1 - mid_index: observed_gaps_m[0],
                n - 2 - mid_index: observed_gaps_m[1],
            }
            for j, g in pinned.items():
                gaps[j] = g
        # The nominal headway distribution can overrun the strip; shrink
        # the unpinned gaps by a common factor so the lane fits while the
        # observed gaps stay exact.
        span = float(gaps.sum())
        if span > road_length_m:
            pinned_total = sum(pinned.values())
            free_total = span - pinned_total
            budget = road_length_m - pinned_total
            if budget <= 0.0 or free_total <= 0.0:
                raise ConfigError(
                    f"lane {lane} needs {span:.0f} m but the road is "
                    f"{road_length_m:.0f} m long"
                )
            scale = budget / free_total
            for j in range(len(gaps)):
                if j not in pinned:
                    gaps[j] *= scale
        x = 0.0
        positions = [x]
        for gap in gaps:
            x += gap
            positions.append(x)
        # Front of the platoon at the largest x; ids increase front-to-rear.
        y = (lane + 0.5) * lane_width_m
        for i, pos in enumerate(reversed(positions)):
            vehicles.append(
                ScenarioVehicle(
                    vehicle_id=vid,
                    x_m=pos,
                    y_m=y,
                    vx_m_s=speed_m_s,
                    antenna_gain_dbi=antenna_gain_dbi,
                    initial_state=DccState.RELAXED,
                )
            )
            if lane == observed_lane and i in (mid_index - 1, mid_index, mid_index + 1):
                observed.append(vid)
            vid += 1
    return ScenarioSpec(
        kind="smooth_flow",
        vehicles=tuple(vehicles),
        observed_ids=tuple(observed),
        suggested_duration_s=duration_s,
    )


def build_packed_lanes(
    lanes: int = 3,
    vehicles_per_lane: int = 150,
    vehicle_length_m: float = 5.0,
    gap_m: float = 1.5,
    lane_width_m: float = 5.0,
    tx_power_dbm: float = -10.0,
    antenna_gain_dbi: float = 4.5,
    duration_s: float = 20.0,
) -> ScenarioSpec:
    """Back-to-back packed lanes, every vehicle pinned Restrictive with the
    given Tx power; used for the ambient-CBR vs Tx-power study."""
    if lanes <= 0 or vehicles_per_lane <= 0:
        raise ConfigError("lanes and vehicles_per_lane must be positive")
    pitch = vehicle_length_m + gap_m
    vehicles = []
    vid = 0
    for lane in range(lanes):
        y = (lane + 0.5) * lane_width_m
        for i in range(vehicles_per_lane):
            vehicles.append(
                ScenarioVehicle(
                    vehicle_id=vid,
                    x_m=i * pitch,
                    y_m=y,
                    antenna_gain_dbi=antenna_gain_dbi,
                    initial_state=DccState.RESTRICTIVE,
                    pinned_state=DccState.RESTRICTIVE,
                    pinned_tx_power_dbm=tx_power_dbm,
                )
            )
            vid += 1
    # Observe the central vehicle of each lane.
    observed = tuple(
        lane * vehicles_per_lane + vehicles_per_lane // 2 for lane in range(lanes)
    )
    return ScenarioSpec(
        kind="packed_lanes",
        vehicles=tuple(vehicles),
        observed_ids=observed,
        suggested_duration_s=duration_s,
    )


SWEEPABLE_PARAMETERS = ("restrictive_tx_power", "rx_sensitivity", "distance", "antenna_gain")


def sweep(base_config, parameter: str, values: Sequence[float]) -> list[tuple[float, object]]:
    """One SimConfig per value, sharing the seed and all other fields.

    ``base_config`` is an engine SimConfig; the import is deferred to keep
    the builder layer free of the engine dependency.
    """
    from .dcc import override_restrictive_tx
    from .engine import SimConfig  # noqa: F401 (type anchor)

    if parameter not in SWEEPABLE_PARAMETERS:
        raise ConfigError(
            f"unknown sweep parameter {parameter!r}; expected one of {SWEEPABLE_PARAMETERS}"
        )
    out = []
    for value in values:
        cfg = base_config
        if parameter == "restrictive_tx_power":
            table = override_restrictive_tx(cfg.dcc_table, value)
            # Pinned per-vehicle Tx overrides would mask the table change.
            scenario = replace(
                cfg.scenario,
                vehicles=tuple(
                    replace(v, pinned_tx_power_dbm=value)
                    if v.pinned_tx_power_dbm is not None
                    else v
                    for v in cfg.scenario.vehicles
                ),
            )
            cfg = replace(cfg, dcc_table=table, scenario=scenario)
        elif parameter == "rx_sensitivity":
            table = cfg.dcc_table
            states = dict(table.states)
            states[DccState.RESTRICTIVE] = replace(
                states[DccState.RESTRICTIVE], rx_sensitivity_dbm=value
            )
            cfg = replace(cfg, dcc_table=replace(table, states=states))
        elif parameter == "distance":
            scenario = _rebuild_with_distance(cfg.scenario, value)
            cfg = replace(cfg, scenario=scenario)
        elif parameter == "antenna_gain":
            scenario = replace(
                cfg.scenario,
                vehicles=tuple(
                    replace(v, antenna_gain_dbi=value) for v in cfg.scenario.vehicles
                ),
            )
            cfg = replace(cfg, scenario=scenario)
        out.append((value, cfg))
    return out


def _rebuild_with_distance(scenario: ScenarioSpec, distance_m: float) -> ScenarioSpec:
    if scenario.kind not in ("stationary_pair", "pair_grid"):
        raise ConfigError(f"distance sweep requires a pair scenario, got {scenario.kind!r}")
    if distance_m <= 0:
        raise ConfigError(f"distance_m must be positive, got {distance_m}")
    vehicles = tuple(
        replace(v, x_m=distance_m) if v.vehicle_id % 2 == 1 else v
        for v in scenario.vehicles
    )
    return replace(scenario, vehicles=vehicles)
