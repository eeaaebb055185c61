"""VNF orchestration: place and chain virtual network functions at minimum operating cost."""

from .cost import CostBreakdown, CostWeights, energy_fraction, evaluate_event
from .errors import Infeasible, LimitExceeded
from .exact import ExactLimits, check_feasibility, lower_bound, solve_exact
from .heuristic import HeuristicOptions, MultiStageGraph, build_stage_costs, provision_batch, provision_traffic, viterbi
from .model import (ModelError, ParseError, Topology, TrafficRequest, VnfCatalog, VnfType, build_traffic_graph,
                    load_catalog, load_topology, load_traffic, neighbors)
from .state import Assignment, NetworkState
from .transform import AugmentedNetwork, PseudoVnf, enumerate_vnfs, slots_for

__all__ = [
    "Assignment", "AugmentedNetwork", "CostBreakdown", "CostWeights", "ExactLimits", "HeuristicOptions",
    "Infeasible", "LimitExceeded", "ModelError", "MultiStageGraph", "NetworkState", "ParseError", "PseudoVnf",
    "Topology", "TrafficRequest", "VnfCatalog", "VnfType", "build_stage_costs", "build_traffic_graph",
    "check_feasibility", "energy_fraction", "enumerate_vnfs", "evaluate_event", "load_catalog", "load_topology",
    "load_traffic", "lower_bound", "neighbors", "provision_batch", "provision_traffic", "slots_for",
    "solve_exact", "viterbi",
]
