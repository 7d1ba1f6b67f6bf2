"""Monte Carlo harness: scenarios, vectorised procedures, reports and oracles."""

from .engine import WeightTables, reject_matrix
from .gatekeeping import GatekeepingSchedule, gatekeeping_components, gatekeeping_entangled
from .oracle import OracleDisagreement, oracle_subset_weights
from .randgraph import holm_graph, random_graph
from .report import (PowerReport, RunEstimate, estimate_error_rates,
                     estimate_marginal_power, simulate_rejections)
from .spec import (ExtraStat, Run, SimulationSpec, equicorrelated_root, load_spec,
                   parse_spec, sample_block, sample_pvalues, sample_test_statistics)

__all__ = [
    "WeightTables", "reject_matrix", "GatekeepingSchedule", "gatekeeping_components",
    "gatekeeping_entangled", "OracleDisagreement", "oracle_subset_weights", "holm_graph",
    "random_graph", "PowerReport", "RunEstimate", "estimate_error_rates",
    "estimate_marginal_power", "simulate_rejections", "ExtraStat", "Run", "SimulationSpec",
    "equicorrelated_root", "load_spec", "parse_spec", "sample_block", "sample_pvalues",
    "sample_test_statistics",
]
