from .base import UNBOUNDED, RejectionTrace, Step
from .fdp import (FdpResult, FdrBounds, augmentation_budget, fdp_augmented,
                  fdp_augmented_adjusted, fdp_generalised, fdr_bounds)
from .fwer import AdjustedPValues, adjusted_pvalues, fwer_test
from .kfwer import (ProcedureConfig, kfwer_augmented, kfwer_augmented_adjusted,
                    kfwer_generalised, kfwer_operative, operative_pool_size)

PROCEDURES = (
    "fwer",
    "kfwer-aug",
    "kfwer-aug-adj",
    "kfwer-gen",
    "kfwer-operative",
    "fdp-aug",
    "fdp-aug-adj",
    "fdp-gen",
)


def run_procedure(name: str, graph, p, cfg: ProcedureConfig):
    """Dispatch by procedure id; returns a RejectionTrace or FdpResult."""
    if name == "fwer":
        return fwer_test(graph, p, cfg.alpha)
    if name == "kfwer-aug":
        return kfwer_augmented(graph, p, cfg.alpha, cfg.k, cfg.delta)
    if name == "kfwer-aug-adj":
        return kfwer_augmented_adjusted(graph, p, cfg.alpha, cfg.k)
    if name == "kfwer-gen":
        return kfwer_generalised(graph, p, cfg.alpha, cfg.k, cfg.delta)
    if name == "kfwer-operative":
        return kfwer_operative(graph, p, cfg.alpha, cfg.k, cfg.delta, cfg.nmax)
    if name == "fdp-aug":
        return fdp_augmented(graph, p, cfg.alpha, cfg.gamma, cfg.delta)
    if name == "fdp-aug-adj":
        return fdp_augmented_adjusted(graph, p, cfg.alpha, cfg.gamma)
    if name == "fdp-gen":
        return fdp_generalised(graph, p, cfg.alpha, cfg.gamma, cfg.delta)
    raise KeyError(f"unknown procedure {name!r}; choose from {', '.join(PROCEDURES)}")


def rejected_set(result) -> frozenset:
    return result.rejected


__all__ = [
    "UNBOUNDED", "RejectionTrace", "Step", "FdpResult", "FdrBounds",
    "AdjustedPValues", "ProcedureConfig", "PROCEDURES",
    "adjusted_pvalues", "augmentation_budget", "fdp_augmented",
    "fdp_augmented_adjusted", "fdp_generalised", "fdr_bounds", "fwer_test",
    "kfwer_augmented", "kfwer_augmented_adjusted", "kfwer_generalised",
    "kfwer_operative", "operative_pool_size", "run_procedure", "rejected_set",
]
