"""Seeded network simulator: drives real SDKs through synthetic link conditions."""

from .harness import (
    SIM_EPOCH_MS,
    ScenarioReport,
    ServerUnreachable,
    SimClock,
    run_scenario,
)
from .scenario import (
    InvalidScenario,
    OutOfRange,
    Scenario,
    Segment,
    Workload,
    load_scenario,
    scenario_from_dict,
)
from .transport import SimTransport

__all__ = [
    "SIM_EPOCH_MS",
    "InvalidScenario",
    "OutOfRange",
    "Scenario",
    "ScenarioReport",
    "Segment",
    "ServerUnreachable",
    "SimClock",
    "SimTransport",
    "Workload",
    "load_scenario",
    "run_scenario",
    "scenario_from_dict",
]
