"""Packet-level simulation of an RTT-aware fuzzy AQM against RED and CoDel."""

from .aqm import CoDelAqm, DropTail, FuzzyRttAqm, RedAqm, Verdict
from .engine import Simulator
from .flc import MisoFlc
from .metrics import jain_index
from .runner import RunResult, run_scenario, run_transient
from .scenario import ConfigError, Scenario, load_scenario, parse_scenario, size_flow_count

__all__ = [
    "CoDelAqm", "DropTail", "FuzzyRttAqm", "RedAqm", "Verdict", "Simulator", "MisoFlc",
    "jain_index", "RunResult", "run_scenario", "run_transient", "ConfigError", "Scenario",
    "load_scenario", "parse_scenario", "size_flow_count",
]
