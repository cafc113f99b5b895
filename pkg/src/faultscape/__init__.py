"""Deterministic fault-injection benchmark harness for edge-cloud remediation strategies."""
from .config import load_scenario, parse_scenario, scenario_digest
from .errors import FaultscapeError, SimulationFault
from .kernels import BACKEND
from .remediation import builtin_strategies
from .runner import compare, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FaultscapeError",
    "SimulationFault",
    "builtin_strategies",
    "compare",
    "load_scenario",
    "parse_scenario",
    "run",
    "scenario_digest",
]
