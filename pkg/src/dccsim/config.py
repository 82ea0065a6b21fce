"""Run-configuration files: parsing, validation, and manifest resolution.

Configs are YAML mappings. Every field is optional with documented
defaults; unknown keys are hard errors so typos cannot silently change a
run. The fully resolved configuration (all defaults expanded) is written
back as the run manifest, and re-running from a manifest reproduces the
original outputs byte for byte.
"""

from __future__ import annotations

import inspect
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

import yaml

from . import scenarios
from .dcc import DccParamTable, DccState, override_restrictive_tx
from .engine import SimConfig
from .phy import ConfigError
from .propagation import RadioEnvironment

SCENARIO_BUILDERS: dict[str, Callable] = {
    "stationary_pair": scenarios.build_stationary_pair,
    "pair_grid": scenarios.build_pair_grid,
    "two_way_multilane": scenarios.build_two_way_multilane,
    "smooth_flow": scenarios.build_smooth_flow,
    "packed_lanes": scenarios.build_packed_lanes,
}

_TOP_LEVEL_KEYS = {
    "duration_s",
    "seed",
    "replications",
    "output_dir",
    "payload_bytes",
    "relevance_radius_m",
    "noise_floor_dbm",
    "discard_first_s",
    "figures",
    "environment",
    "dcc_table",
    "scenario",
    "sweep",
}

_ENV_KEYS = {
    "frequency_mhz",
    "pathloss_exponent",
    "tx_antenna_height_m",
    "rx_antenna_height_m",
    "rician_k",
    "fading_enabled",
}

_TABLE_KEYS = {
    "min_cbr_threshold",
    "max_cbr_threshold",
    "up_dwell_s",
    "down_dwell_s",
    "restrictive_tx_override",
    "states",
}

_STATE_KEYS = {
    "tx_power_dbm",
    "cca_threshold_dbm",
    "beacon_rate_hz",
    "phy_rate_mbps",
    "rx_sensitivity_dbm",
}

_SWEEP_KEYS = {"parameter", "values"}


def _reject_unknown(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {context}; allowed: {sorted(allowed)}"
        )


def _build_environment(raw: dict) -> RadioEnvironment:
    _reject_unknown(raw, _ENV_KEYS, "environment")
    return RadioEnvironment(**raw)


def _build_table(raw: dict) -> DccParamTable:
    _reject_unknown(raw, _TABLE_KEYS, "dcc_table")
    table = DccParamTable()
    states = dict(table.states)
    for name, params_raw in (raw.get("states") or {}).items():
        try:
            state = DccState(name.capitalize())
        except ValueError as exc:
            raise ConfigError(f"unknown DCC state {name!r} in dcc_table.states") from exc
        _reject_unknown(params_raw, _STATE_KEYS, f"dcc_table.states.{name}")
        states[state] = replace(states[state], **params_raw)
    table = replace(
        table,
        states=states,
        **{
            k: raw[k]
            for k in ("min_cbr_threshold", "max_cbr_threshold", "up_dwell_s", "down_dwell_s")
            if k in raw
        },
    )
    if "restrictive_tx_override" in raw:
        table = override_restrictive_tx(table, raw["restrictive_tx_override"])
    return table


def _build_scenario(raw: dict, seed: int) -> scenarios.ScenarioSpec:
    _reject_unknown(raw, {"kind", "params"}, "scenario")
    kind = raw.get("kind")
    if kind not in SCENARIO_BUILDERS:
        raise ConfigError(
            f"unknown scenario kind {kind!r}; expected one of {sorted(SCENARIO_BUILDERS)}"
        )
    builder = SCENARIO_BUILDERS[kind]
    params = dict(raw.get("params") or {})
    signature = inspect.signature(builder)
    unknown = set(params) - set(signature.parameters)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in scenario.params for kind {kind!r}"
        )
    if "seed" in signature.parameters and "seed" not in params:
        params["seed"] = seed
    missing = [
        name
        for name, p in signature.parameters.items()
        if p.default is inspect.Parameter.empty and name not in params
    ]
    if missing:
        raise ConfigError(f"scenario kind {kind!r} requires params: {missing}")
    return builder(**params)


class RunConfig:
    """A parsed and validated run-configuration file."""

    def __init__(self, raw: dict[str, Any]):
        if not isinstance(raw, dict):
            raise ConfigError("configuration root must be a mapping")
        _reject_unknown(raw, _TOP_LEVEL_KEYS, "the configuration root")
        if "scenario" not in raw:
            raise ConfigError("configuration requires a 'scenario' section")
        self.seed = int(raw.get("seed", 0))
        self.replications = int(raw.get("replications", 1))
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1, got {self.replications}")
        self.output_dir = str(raw.get("output_dir", "out"))
        self.figures = bool(raw.get("figures", False))
        self.environment = _build_environment(dict(raw.get("environment") or {}))
        self.dcc_table = _build_table(dict(raw.get("dcc_table") or {}))
        self.scenario = _build_scenario(dict(raw["scenario"]), self.seed)
        duration = raw.get("duration_s", self.scenario.suggested_duration_s)
        if duration is None:
            raise ConfigError("duration_s is required for this scenario")
        self.sweep_spec = None
        if "sweep" in raw and raw["sweep"] is not None:
            _reject_unknown(dict(raw["sweep"]), _SWEEP_KEYS, "sweep")
            self.sweep_spec = (raw["sweep"]["parameter"], list(raw["sweep"]["values"]))
        self.sim = SimConfig(
            duration_s=float(duration),
            seed=self.seed,
            scenario=self.scenario,
            env=self.environment,
            dcc_table=self.dcc_table,
            payload_bytes=int(raw.get("payload_bytes", 250)),
            relevance_radius_m=float(raw.get("relevance_radius_m", 1000.0)),
            noise_floor_dbm=float(raw.get("noise_floor_dbm", -94.0)),
            discard_first_s=float(raw.get("discard_first_s", 2.0)),
        )
        self._raw = raw

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if raw is None:
            raise ConfigError(f"{path} is empty")
        return cls(raw)

    def resolved(self) -> dict[str, Any]:
        """Fully expanded configuration suitable for the run manifest."""
        table = self.dcc_table
        return {
            "duration_s": self.sim.duration_s,
            "seed": self.seed,
            "replications": self.replications,
            "output_dir": self.output_dir,
            "figures": self.figures,
            "payload_bytes": self.sim.payload_bytes,
            "relevance_radius_m": self.sim.relevance_radius_m,
            "noise_floor_dbm": self.sim.noise_floor_dbm,
            "discard_first_s": self.sim.discard_first_s,
            "environment": {
                "frequency_mhz": self.environment.frequency_mhz,
                "pathloss_exponent": self.environment.pathloss_exponent,
                "tx_antenna_height_m": self.environment.tx_antenna_height_m,
                "rx_antenna_height_m": self.environment.rx_antenna_height_m,
                "rician_k": self.environment.rician_k,
                "fading_enabled": self.environment.fading_enabled,
            },
            "dcc_table": {
                "min_cbr_threshold": table.min_cbr_threshold,
                "max_cbr_threshold": table.max_cbr_threshold,
                "up_dwell_s": table.up_dwell_s,
                "down_dwell_s": table.down_dwell_s,
                "states": {
                    state.value.lower(): {
                        "tx_power_dbm": p.tx_power_dbm,
                        "cca_threshold_dbm": p.cca_threshold_dbm,
                        "beacon_rate_hz": p.beacon_rate_hz,
                        "phy_rate_mbps": p.phy_rate_mbps,
                        "rx_sensitivity_dbm": p.rx_sensitivity_dbm,
                    }
                    for state, p in table.states.items()
                },
            },
            "scenario": self._resolved_scenario(),
            "sweep": (
                {"parameter": self.sweep_spec[0], "values": self.sweep_spec[1]}
                if self.sweep_spec
                else None
            ),
        }

    def _resolved_scenario(self) -> dict[str, Any]:
        raw = dict(self._raw["scenario"])
        kind = raw["kind"]
        builder = SCENARIO_BUILDERS[kind]
        params = dict(raw.get("params") or {})
        signature = inspect.signature(builder)
        resolved = {}
        for name, p in signature.parameters.items():
            if name in params:
                resolved[name] = params[name]
            elif name == "seed":
                resolved[name] = self.seed
            else:
                resolved[name] = p.default
        return {"kind": kind, "params": resolved}


def write_manifest(path: str | Path, config: RunConfig) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(_tuples_to_lists(config.resolved()), fh, sort_keys=True)


def _tuples_to_lists(obj):
    if isinstance(obj, tuple):
        return [_tuples_to_lists(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _tuples_to_lists(v) for k, v in obj.items()}
    return obj


def load_manifest(path: str | Path) -> RunConfig:
    """A manifest is itself a valid configuration file."""
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if raw.get("sweep") is None:
        raw.pop("sweep", None)
    return RunConfig(_tuples_to_lists(raw))
