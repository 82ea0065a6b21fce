"""Deterministic discrete-event simulation core.

Single-threaded engine owning all mutable state: a time-ordered event queue
(ties broken by event-kind rank then vehicle id), constant-velocity
mobility, per-state beacon generation, CSMA broadcast access, vectorized
reception verdicts, and per-vehicle channel-busy accounting.

All randomness flows from named per-(vehicle, purpose) streams derived from
the run seed, so identical (config, seed) pairs give bit-identical outputs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import phy
from .dcc import DccParamTable, DccState, DccTimerState, dcc_step, params_for
from .metrics import CbrSample, LinkStats
from .phy import ConfigError, frame_airtime_s
from .propagation import RadioEnvironment, pathloss_db_array, sample_fading_gain
from .scenarios import ScenarioSpec

# Event-kind ranks for deterministic tie-breaking.
EV_TX_END = 0
EV_TX_START = 1
EV_RETRY = 2
EV_BEACON_DUE = 3
EV_CBR_TICK = 4

# Named rng stream purposes.
STREAM_FADING = 0
STREAM_BACKOFF = 1
STREAM_PHASE = 2

CBR_EVAL_PERIOD_S = 0.2
CBR_WINDOW_S = 1.0
CBR_SLOTS = round(CBR_WINDOW_S / CBR_EVAL_PERIOD_S)

MAX_CSMA_RETRIES = 200


@dataclass
class VehicleState:
    """Point-in-time view of one vehicle, for inspection and tests."""

    vehicle_id: int
    position: tuple[float, float]
    velocity: tuple[float, float]
    dcc_state: DccState
    antenna_gain_dbi: float
    next_beacon_due_s: float | None
    beacon_sequence: int
    time_s: float


def advance_mobility(vehicle: VehicleState, to_time_s: float) -> VehicleState:
    """Constant-velocity position update to ``to_time_s``."""
    if to_time_s < vehicle.time_s:
        raise ValueError("cannot advance mobility backwards in time")
    dt = to_time_s - vehicle.time_s
    x, y = vehicle.position
    vx, vy = vehicle.velocity
    return replace(vehicle, position=(x + vx * dt, y + vy * dt), time_s=to_time_s)


@dataclass(frozen=True)
class SimConfig:
    duration_s: float
    seed: int
    scenario: ScenarioSpec
    env: RadioEnvironment = field(default_factory=RadioEnvironment)
    dcc_table: DccParamTable = field(default_factory=DccParamTable)
    payload_bytes: int = 250
    relevance_radius_m: float = 1000.0
    noise_floor_dbm: float = phy.DEFAULT_NOISE_FLOOR_DBM
    required_sinr_db_by_rate: dict[float, float] | None = None
    discard_first_s: float = 2.0

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        if self.payload_bytes <= 0:
            raise ConfigError(f"payload_bytes must be positive, got {self.payload_bytes}")
        if self.relevance_radius_m <= 0:
            raise ConfigError("relevance_radius_m must be positive")


@dataclass
class RunOutput:
    """Metric record streams plus global accounting for one replication."""

    seed: int
    duration_s: float
    link_stats: list[LinkStats]
    cbr_samples: list[CbrSample]
    verdict_totals: dict[str, int]
    frames_sent: int
    pairs_in_scope: int
    beacons_dropped: int


@dataclass
class _Frame:
    tx_index: int
    start_s: float
    end_s: float
    sequence: int
    rx_idx: np.ndarray        # receiver indices within relevance radius
    rx_mw: np.ndarray         # faded rx power at those receivers, mW
    dist_m: np.ndarray        # tx-rx distance at frame start
    interf_base_mw: np.ndarray  # active aggregate at frame start (excl self)
    cum_start_mw: np.ndarray    # cumulative-start aggregate snapshot


@dataclass
class _Pending:
    token: int
    sequence: int
    backoff_slots: int | None = None
    retries: int = 0


class Engine:
    """One simulation replication. Use :func:`run` for the plain interface."""

    def __init__(self, config: SimConfig):
        self.config = config
        scenario = config.scenario
        self.n = len(scenario.vehicles)
        if self.n == 0:
            raise ConfigError("scenario has no vehicles")
        self.vehicle_ids = np.array([v.vehicle_id for v in scenario.vehicles])
        self.index_of = {v.vehicle_id: i for i, v in enumerate(scenario.vehicles)}
        self.pos0 = np.array([(v.x_m, v.y_m) for v in scenario.vehicles], dtype=float)
        self.vel = np.array([(v.vx_m_s, v.vy_m_s) for v in scenario.vehicles], dtype=float)
        self.gain_dbi = np.array([v.antenna_gain_dbi for v in scenario.vehicles], dtype=float)
        self.tx_enabled = np.array([v.tx_enabled for v in scenario.vehicles], dtype=bool)
        self.pinned = np.array(
            [v.pinned_state is not None for v in scenario.vehicles], dtype=bool
        )
        self.pinned_tx = [v.pinned_tx_power_dbm for v in scenario.vehicles]
        self.observed = set(scenario.observed_ids)

        self.timers = [
            DccTimerState(current=v.pinned_state or v.initial_state)
            for v in scenario.vehicles
        ]

        # Per-vehicle transmit/receive parameter arrays, refreshed on state change.
        self.tx_power_dbm = np.zeros(self.n)
        self.cca_mw = np.zeros(self.n)
        self.sens_mw = np.zeros(self.n)
        self.beacon_rate_hz = np.zeros(self.n)
        self.airtime_s = np.zeros(self.n)
        self.sinr_req_lin = np.zeros(self.n)
        for i in range(self.n):
            self._refresh_params(i)

        # Channel accounting.
        self.noise_mw = 10.0 ** (config.noise_floor_dbm / 10.0)
        self.active_mw = np.zeros(self.n)      # aggregate power of active frames
        self.cum_start_mw = np.zeros(self.n)   # running total of all started frames
        self.busy_until = np.full(self.n, -math.inf)    # CCA-busy horizon
        self.decode_until = np.full(self.n, -math.inf)  # decodable-frame horizon
        self.busy_slots = np.zeros((self.n, CBR_SLOTS))
        self.spill = np.zeros(self.n)
        self.slot_cursor = np.zeros(self.n, dtype=int)
        self.own_last_start = np.full(self.n, -math.inf)
        self.own_last_end = np.full(self.n, -math.inf)

        seed = config.seed
        self.fading_rng = [
            np.random.default_rng([seed, int(v.vehicle_id), STREAM_FADING])
            for v in scenario.vehicles
        ]
        self.backoff_rng = [
            np.random.default_rng([seed, int(v.vehicle_id), STREAM_BACKOFF])
            for v in scenario.vehicles
        ]
        self.phase_rng = [
            np.random.default_rng([seed, int(v.vehicle_id), STREAM_PHASE])
            for v in scenario.vehicles
        ]

        # Each vehicle evaluates CBR on its own phase-offset 200 ms grid, as
        # independently booted radios would; a fleet-wide shared grid locks
        # every vehicle into the same state-transition instants.
        self.slot_end_s = np.array(
            [
                CBR_EVAL_PERIOD_S + float(rng.uniform(0.0, CBR_EVAL_PERIOD_S))
                for rng in self.phase_rng
            ]
        )

        self.pending: dict[int, _Pending] = {}
        self.next_token = 0
        self.sequence = [0] * self.n
        self.next_due_s: list[float | None] = [None] * self.n
        self.due_token = [0] * self.n

        self.events: list[tuple] = []
        self.event_counter = 0

        # Outputs.
        self.cbr_samples: list[CbrSample] = []
        self.link_acc: dict[tuple[int, int, int], list] = {}
        self.verdict_totals = {v.value: 0 for v in phy.RxVerdict}
        self.frames_sent = 0
        self.pairs_in_scope = 0
        self.beacons_dropped = 0
        self.last_cbr = np.zeros(self.n)

    # -- configuration ------------------------------------------------------

    def _required_sinr_db(self, rate: float) -> float:
        table = self.config.required_sinr_db_by_rate
        if table and rate in table:
            return table[rate]
        return phy.REQUIRED_SINR_DB[rate]

    def _refresh_params(self, i: int) -> None:
        params = params_for(self.timers[i].current, self.config.dcc_table)
        tx = self.pinned_tx[i] if self.pinned_tx[i] is not None else params.tx_power_dbm
        self.tx_power_dbm[i] = tx
        self.cca_mw[i] = 10.0 ** (params.cca_threshold_dbm / 10.0)
        self.sens_mw[i] = 10.0 ** (params.rx_sensitivity_dbm / 10.0)
        self.beacon_rate_hz[i] = params.beacon_rate_hz
        self.airtime_s[i] = frame_airtime_s(self.config.payload_bytes, params.phy_rate_mbps)
        self.sinr_req_lin[i] = 10.0 ** (self._required_sinr_db(params.phy_rate_mbps) / 10.0)

    def force_state(self, vehicle_id: int, state: DccState | None) -> None:
        """Pin (or, with None, unpin) a vehicle's DCC state for the run."""
        if vehicle_id not in self.index_of:
            raise KeyError(f"unknown vehicle id {vehicle_id}")
        i = self.index_of[vehicle_id]
        if state is None:
            self.pinned[i] = False
        else:
            self.pinned[i] = True
            self.timers[i] = DccTimerState(current=state)
            self._refresh_params(i)

    # -- inspection ---------------------------------------------------------

    def positions_at(self, t: float) -> np.ndarray:
        return self.pos0 + self.vel * t

    def vehicle_state(self, vehicle_id: int, t: float) -> VehicleState:
        i = self.index_of[vehicle_id]
        pos = self.pos0[i] + self.vel[i] * t
        return VehicleState(
            vehicle_id=vehicle_id,
            position=(float(pos[0]), float(pos[1])),
            velocity=(float(self.vel[i][0]), float(self.vel[i][1])),
            dcc_state=self.timers[i].current,
            antenna_gain_dbi=float(self.gain_dbi[i]),
            next_beacon_due_s=self.next_due_s[i],
            beacon_sequence=self.sequence[i],
            time_s=t,
        )

    # -- event machinery ----------------------------------------------------

    def _push(self, time_s: float, rank: int, vid: int, payload=None) -> None:
        self.event_counter += 1
        heapq.heappush(self.events, (time_s, rank, vid, self.event_counter, payload))

    def run(self) -> RunOutput:
        duration = self.config.duration_s
        for i in range(self.n):
            if not self.tx_enabled[i]:
                continue
            phase = float(self.phase_rng[i].uniform(0.0, 1.0 / self.beacon_rate_hz[i]))
            self.next_due_s[i] = phase
            self._push(phase, EV_BEACON_DUE, int(self.vehicle_ids[i]), self.due_token[i])
        for i in range(self.n):
            self._push(float(self.slot_end_s[i]), EV_CBR_TICK, int(self.vehicle_ids[i]))

        while self.events:
            time_s, rank, vid, _, payload = heapq.heappop(self.events)
            if time_s > duration and rank != EV_TX_END:
                # Nothing past the horizon matters except frames already on
                # the air, whose verdicts keep the accounting conserved.
                continue
            if rank == EV_TX_END:
                self._on_tx_end(time_s, payload)
            elif rank == EV_TX_START:
                self._on_tx_start(time_s, vid, payload)
            elif rank == EV_RETRY:
                self._on_retry(time_s, vid, payload)
            elif rank == EV_BEACON_DUE:
                self._on_beacon_due(time_s, vid, payload)
            elif rank == EV_CBR_TICK:
                self._on_cbr_tick(time_s, vid)

        link_stats = [
            LinkStats(
                tx_id=tx,
                rx_id=rx,
                time_bucket_s=float(bucket),
                sent=acc[0],
                delivered=acc[1],
                verdicts=dict(acc[2]),
                mean_distance_m=acc[3] / acc[0],
            )
            for (bucket, tx, rx), acc in sorted(self.link_acc.items())
        ]
        return RunOutput(
            seed=self.config.seed,
            duration_s=duration,
            link_stats=link_stats,
            cbr_samples=self.cbr_samples,
            verdict_totals=dict(self.verdict_totals),
            frames_sent=self.frames_sent,
            pairs_in_scope=self.pairs_in_scope,
            beacons_dropped=self.beacons_dropped,
        )

    # -- beacon generation and CSMA -----------------------------------------

    def _on_beacon_due(self, t: float, vid: int, token: int) -> None:
        i = self.index_of[vid]
        if token != self.due_token[i]:
            return
        next_due = t + 1.0 / self.beacon_rate_hz[i]
        self.next_due_s[i] = next_due
        self._push(next_due, EV_BEACON_DUE, vid, token)
        if vid in self.pending:
            # Previous beacon never made it to the air: superseded.
            self.beacons_dropped += 1
            del self.pending[vid]
        self.next_token += 1
        self.sequence[i] += 1
        pending = _Pending(token=self.next_token, sequence=self.sequence[i])
        self.pending[vid] = pending
        self._attempt(t, vid, i, pending, deferred=False)

    def _channel_horizon(self, i: int) -> float:
        return max(self.busy_until[i], self.decode_until[i], self.own_last_end[i])

    def _attempt(self, t: float, vid: int, i: int, pending: _Pending, deferred: bool) -> None:
        horizon = self._channel_horizon(i)
        if horizon <= t:
            start = t if deferred else t + phy.AIFS_S
            self._push(start, EV_TX_START, vid, pending.token)
            return
        if pending.backoff_slots is None:
            pending.backoff_slots = int(
                self.backoff_rng[i].integers(0, phy.CONTENTION_WINDOW_SLOTS)
            )
        pending.retries += 1
        if pending.retries > MAX_CSMA_RETRIES:
            self.beacons_dropped += 1
            del self.pending[vid]
            return
        retry_at = horizon + phy.AIFS_S + pending.backoff_slots * phy.SLOT_S
        self._push(retry_at, EV_RETRY, vid, pending.token)

    def _on_retry(self, t: float, vid: int, token: int) -> None:
        pending = self.pending.get(vid)
        if pending is None or pending.token != token:
            return
        self._attempt(t, vid, self.index_of[vid], pending, deferred=True)

    # -- frame lifecycle ----------------------------------------------------

    def _on_tx_start(self, t: float, vid: int, token: int) -> None:
        pending = self.pending.get(vid)
        if pending is None or pending.token != token:
            return
        del self.pending[vid]
        i = self.index_of[vid]
        end = t + self.airtime_s[i]

        pos = self.positions_at(t)
        delta = pos - pos[i]
        dist = np.hypot(delta[:, 0], delta[:, 1])
        mask = dist <= self.config.relevance_radius_m
        mask[i] = False
        rx_idx = np.nonzero(mask)[0]

        pl_db = pathloss_db_array(dist[rx_idx], self.config.env)
        det_dbm = self.tx_power_dbm[i] + self.gain_dbi[i] + self.gain_dbi[rx_idx] - pl_db
        gain = sample_fading_gain(self.config.env, self.fading_rng[i], size=len(rx_idx))
        rx_mw = 10.0 ** (det_dbm / 10.0) * np.asarray(gain)

        # Channel-busy accounting at every vehicle that senses this frame.
        busy_idx = rx_idx[rx_mw >= self.cca_mw[rx_idx]]
        self._add_busy(busy_idx, t, end)
        self._add_busy(np.array([i]), t, end)  # own airtime is never idle
        decode_idx = rx_idx[rx_mw >= self.sens_mw[rx_idx]]
        if len(decode_idx):
            self.decode_until[decode_idx] = np.maximum(self.decode_until[decode_idx], end)

        interf_base = self.active_mw[rx_idx].copy()  # excludes this frame
        np.add.at(self.active_mw, rx_idx, rx_mw)
        np.add.at(self.cum_start_mw, rx_idx, rx_mw)
        frame = _Frame(
            tx_index=i,
            start_s=t,
            end_s=end,
            sequence=pending.sequence,
            rx_idx=rx_idx,
            rx_mw=rx_mw,
            dist_m=dist[rx_idx],
            interf_base_mw=interf_base,
            # Snapshot taken after adding this frame, so later deltas count
            # only frames that started during its airtime.
            cum_start_mw=self.cum_start_mw[rx_idx].copy(),
        )
        self.own_last_start[i] = t
        self.own_last_end[i] = end
        self.frames_sent += 1
        self.pairs_in_scope += len(rx_idx)
        self._push(end, EV_TX_END, vid, frame)

    def _add_busy(self, idx: np.ndarray, start: float, end: float) -> None:
        if len(idx) == 0:
            return
        eff = np.maximum(self.busy_until[idx], start)
        total = np.clip(end - eff, 0.0, None)
        in_slot = np.clip(np.minimum(end, self.slot_end_s[idx]) - eff, 0.0, None)
        in_slot = np.minimum(in_slot, total)
        np.add.at(self.busy_slots, (idx, self.slot_cursor[idx]), in_slot)
        np.add.at(self.spill, idx, total - in_slot)
        self.busy_until[idx] = np.maximum(self.busy_until[idx], end)

    def _on_tx_end(self, t: float, frame: _Frame) -> None:
        rx_idx = frame.rx_idx
        np.add.at(self.active_mw, rx_idx, -frame.rx_mw)
        if len(rx_idx) == 0:
            return
        # Interference: everything active at frame start plus every frame
        # that started during this frame's airtime, at full faded power.
        interf_mw = frame.interf_base_mw + (self.cum_start_mw[rx_idx] - frame.cum_start_mw)

        rx_busy = (self.own_last_start[rx_idx] < frame.end_s) & (
            self.own_last_end[rx_idx] > frame.start_s
        )
        below = frame.rx_mw < self.sens_mw[rx_idx]
        sinr_ok = frame.rx_mw >= self.sinr_req_lin[rx_idx] * (self.noise_mw + interf_mw)
        delivered = ~rx_busy & ~below & sinr_ok

        n_rx_busy = int(np.count_nonzero(rx_busy))
        n_below = int(np.count_nonzero(below & ~rx_busy))
        n_delivered = int(np.count_nonzero(delivered))
        n_sinr = len(rx_idx) - n_rx_busy - n_below - n_delivered
        self.verdict_totals[phy.RxVerdict.RX_BUSY_TRANSMITTING.value] += n_rx_busy
        self.verdict_totals[phy.RxVerdict.BELOW_SENSITIVITY.value] += n_below
        self.verdict_totals[phy.RxVerdict.SINR_FAILURE.value] += n_sinr
        self.verdict_totals[phy.RxVerdict.DELIVERED.value] += n_delivered

        tx_id = int(self.vehicle_ids[frame.tx_index])
        if tx_id in self.observed:
            bucket = int(frame.start_s)
            for pos, ridx in enumerate(rx_idx):
                rx_id = int(self.vehicle_ids[ridx])
                if rx_id not in self.observed:
                    continue
                key = (bucket, tx_id, rx_id)
                acc = self.link_acc.get(key)
                if acc is None:
                    acc = [0, 0, {}, 0.0]
                    self.link_acc[key] = acc
                acc[0] += 1
                if rx_busy[pos]:
                    verdict = phy.RxVerdict.RX_BUSY_TRANSMITTING
                elif below[pos]:
                    verdict = phy.RxVerdict.BELOW_SENSITIVITY
                elif delivered[pos]:
                    verdict = phy.RxVerdict.DELIVERED
                else:
                    verdict = phy.RxVerdict.SINR_FAILURE
                if verdict is phy.RxVerdict.DELIVERED:
                    acc[1] += 1
                acc[2][verdict.value] = acc[2].get(verdict.value, 0) + 1
                acc[3] += float(frame.dist_m[pos])

    # -- CBR evaluation and DCC ---------------------------------------------

    def _on_cbr_tick(self, t: float, vid: int) -> None:
        i = self.index_of[vid]
        cbr = min(float(self.busy_slots[i].sum()) / CBR_WINDOW_S, 1.0)
        self.last_cbr[i] = cbr
        if not self.pinned[i]:
            old = self.timers[i].current
            state, _ = dcc_step(self.timers[i], cbr, t, self.config.dcc_table)
            if state is not old:
                old_rate = self.beacon_rate_hz[i]
                self._refresh_params(i)
                if self.tx_enabled[i] and self.beacon_rate_hz[i] != old_rate:
                    # Beacon cadence follows the new state immediately,
                    # re-phased to avoid fleet-wide synchronization.
                    self.due_token[i] += 1
                    jitter = float(
                        self.phase_rng[i].uniform(0.0, 1.0 / self.beacon_rate_hz[i])
                    )
                    self.next_due_s[i] = t + jitter
                    self._push(t + jitter, EV_BEACON_DUE, vid, self.due_token[i])
        if vid in self.observed:
            self.cbr_samples.append(CbrSample(t, vid, cbr, self.timers[i].current))
        cur = (self.slot_cursor[i] + 1) % CBR_SLOTS
        self.slot_cursor[i] = cur
        self.busy_slots[i, cur] = self.spill[i]
        self.spill[i] = 0.0
        self.slot_end_s[i] = t + CBR_EVAL_PERIOD_S
        self._push(t + CBR_EVAL_PERIOD_S, EV_CBR_TICK, vid)


def run(config: SimConfig) -> RunOutput:
    """Simulate one replication of ``config`` and return its metric streams."""
    return Engine(config).run()
