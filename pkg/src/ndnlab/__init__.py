"""Testbed controller with an embedded deterministic NDN/IP emulation harness."""

__version__ = "0.1.0"

from .topo import Topology, parse_adjacency, compute_routes, compile_node_configs  # noqa: F401
from .emulator import ExperimentSpec, Engine, run_experiment  # noqa: F401
