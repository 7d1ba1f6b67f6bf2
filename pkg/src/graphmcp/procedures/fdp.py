"""Graphical procedures for the tail probability of the FDP, P(V/max(R,1) > gamma)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .base import RejectionTrace, as_level, check_alpha, new_trace, prepare, sequential
from .kfwer import _augment_adjusted, _generalised

__all__ = [
    "FdpResult",
    "FdrBounds",
    "augmentation_budget",
    "fdp_augmented",
    "fdp_augmented_adjusted",
    "fdp_generalised",
    "fdr_bounds",
]


@dataclass(frozen=True)
class FdrBounds:
    """FDR levels implied by FDP control at ``alpha`` with bound ``gamma``.

    ``asymptotic`` is ``2 alpha`` (augmented procedure, large samples);
    ``finite_sample`` is ``alpha (1 - gamma) + gamma``, which holds in
    finite samples for the augmented procedure and asymptotically for the
    generalised one.  ``finite_preferred`` is true when it is the smaller,
    i.e. exactly when ``gamma < alpha / (1 - alpha)``.
    """

    asymptotic: Fraction
    finite_sample: Fraction
    finite_preferred: bool

    @property
    def best(self) -> Fraction:
        return min(self.asymptotic, self.finite_sample)


@dataclass
class FdpResult:
    trace: RejectionTrace
    budget: Optional[int] = None
    k_sequence: list[int] = field(default_factory=list)
    fdr: Optional[FdrBounds] = None

    @property
    def rejected(self) -> frozenset:
        return self.trace.rejected

    @property
    def rejected_labels(self) -> list[str]:
        return self.trace.rejected_labels

    def __getattr__(self, name):
        # order, live, steps, stage_nodes ... come from the trace
        if name == "trace":
            raise AttributeError(name)
        return getattr(self.trace, name)

    @property
    def D(self) -> Optional[int]:
        return self.budget


def _check_gamma(gamma) -> Fraction:
    g = as_level(gamma, "gamma")
    if not 0 <= g < 1:
        raise ValueError(f"gamma must lie in [0, 1), got {g}")
    return g


def augmentation_budget(gamma, n_rejected: int) -> int:
    """Largest ``D`` with ``D / (D + n_rejected) <= gamma``.

    For ``n_rejected = 0`` this is 0 (``0/0`` read as 0; any ``D >= 1``
    gives proportion 1 > gamma).
    """
    gamma = _check_gamma(gamma)
    return math.floor(gamma * n_rejected / (1 - gamma))


def fdr_bounds(alpha, gamma) -> FdrBounds:
    alpha = check_alpha(alpha)
    gamma = _check_gamma(gamma)
    asym = 2 * alpha
    fin = alpha * (1 - gamma) + gamma
    return FdrBounds(asym, fin, gamma < alpha / (1 - alpha))


def fdp_augmented(graph, p, alpha, gamma, delta=1) -> FdpResult:
    """FWER test, then up to ``D`` more rejections at ``delta``."""
    alpha = check_alpha(alpha)
    gamma = _check_gamma(gamma)
    delta = as_level(delta, "delta", allow_unbounded=True)
    wt, p = prepare(graph, p)
    trace = new_trace(wt)
    live = sequential(wt, p, frozenset(range(wt.m)), alpha, trace, "base")
    D = augmentation_budget(gamma, len(trace.steps))
    if live and D:
        sequential(wt, p, live, delta, trace, "augmented", budget=D)
    return FdpResult(trace, D, [], fdr_bounds(alpha, gamma))


def fdp_augmented_adjusted(graph, p, alpha, gamma) -> FdpResult:
    """Adjusted p <= alpha plus the ``min(|I|, D)`` next smallest adjusted p-values."""
    alpha = check_alpha(alpha)
    gamma = _check_gamma(gamma)
    budgets = []

    def budget(r):
        budgets.append(augmentation_budget(gamma, r))
        return budgets[-1]

    trace, _ = _augment_adjusted(graph, p, alpha, budget)
    return FdpResult(trace, budgets[0], [], fdr_bounds(alpha, gamma))


def fdp_generalised(graph, p, alpha, gamma, delta=1) -> FdpResult:
    """Run the generalised k-FWER procedure for k = 1, 2, ... until ``|R_k| < k/gamma - 1``.

    ``gamma = 0`` stops after ``k = 1`` (FWER control).
    """
    alpha = check_alpha(alpha)
    gamma = _check_gamma(gamma)
    delta = as_level(delta, "delta", allow_unbounded=True)
    wt, p = prepare(graph, p)
    k = 1
    ks = []
    while True:
        ks.append(k)
        trace = _generalised(wt, p, alpha, k, delta)
        if gamma == 0 or len(trace.steps) < Fraction(k) / gamma - 1:
            return FdpResult(trace, None, ks, fdr_bounds(alpha, gamma))
        k += 1
