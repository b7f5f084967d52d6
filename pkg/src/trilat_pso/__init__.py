"""Trilateration flooding simulator and particle swarm power assignment for sensor networks."""
__version__ = "0.1.0"

from .mopso import LeadersArchive, MopsoConfig, mopso_run
from .radio import PowerLevel, RadioParams, RangeAssignment, dbm_from_range, range_from_dbm
from .simulation import SimOutcome, flood_steps, node_states, simulate
from .swarm import PsoConfig, Representation, sopso_run
from .topology import Node, NodeKind, Topology, generate_random

__all__ = [
    "LeadersArchive",
    "MopsoConfig",
    "Node",
    "NodeKind",
    "PowerLevel",
    "PsoConfig",
    "RadioParams",
    "RangeAssignment",
    "Representation",
    "SimOutcome",
    "Topology",
    "dbm_from_range",
    "flood_steps",
    "generate_random",
    "mopso_run",
    "node_states",
    "range_from_dbm",
    "simulate",
    "sopso_run",
]
