"""Vehicular safety-beaconing simulator under ETSI DCC congestion control,
with a field-log ingestion pipeline and link-budget analysis tools."""

from .dcc import DccParamTable, DccState, StateParams, override_restrictive_tx
from .engine import RunOutput, SimConfig, run
from .propagation import LinkBudget, RadioEnvironment
from .scenarios import ScenarioSpec

__all__ = [
    "DccParamTable",
    "DccState",
    "StateParams",
    "override_restrictive_tx",
    "RunOutput",
    "SimConfig",
    "run",
    "LinkBudget",
    "RadioEnvironment",
    "ScenarioSpec",
]

__version__ = "0.1.0"
