"""Secret distribution of two-colorable graph states over noisy channels."""

from .channels import PauliChannel, PauliChannelEstimator, transmit
from .gdstate import GraphDiagonalState, fidelity, pure_state
from .graph import TwoColorableGraph, cluster, enlarge, ghz, graph_from_preset, line, parse_graph, ring
from .protocols import ProtocolConfig, run_protocol
from .recurrence import Schedule, fixed_point, p1_map, p2_map, threshold_scan

__version__ = "0.1.0"

__all__ = [
    "GraphDiagonalState",
    "PauliChannel",
    "PauliChannelEstimator",
    "ProtocolConfig",
    "Schedule",
    "TwoColorableGraph",
    "cluster",
    "enlarge",
    "fidelity",
    "fixed_point",
    "ghz",
    "graph_from_preset",
    "line",
    "p1_map",
    "p2_map",
    "parse_graph",
    "pure_state",
    "ring",
    "run_protocol",
    "threshold_scan",
    "transmit",
]
