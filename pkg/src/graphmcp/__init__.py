"""Graphical multiple testing with FWER, k-FWER and FDP control."""

from .graph import (EntangledGraph, Family, GraphState, SubsetWeightTable,
                    TestingGraph, ValidationReport, entangle, expand_families,
                    subset_weights, update_after_removal, validate_graph)
from .procedures import (UNBOUNDED, ProcedureConfig, adjusted_pvalues,
                         fdp_augmented, fdp_augmented_adjusted, fdp_generalised,
                         fdr_bounds, fwer_test, kfwer_augmented,
                         kfwer_augmented_adjusted, kfwer_generalised,
                         kfwer_operative, run_procedure)
from .weight import EPS, ONE, ZERO, Weight, format_weight, parse_weight

__version__ = "0.1.0"
