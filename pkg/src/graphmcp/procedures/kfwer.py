"""Graphical procedures controlling the k-FWER, P(V >= k) <= alpha."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..weight import ZERO
from .base import (UNBOUNDED, RejectionTrace, as_level, check_alpha, new_trace,
                   passes, prepare, sequential)
from .fwer import adjusted_pvalues

__all__ = [
    "ProcedureConfig",
    "kfwer_augmented",
    "kfwer_augmented_adjusted",
    "kfwer_generalised",
    "kfwer_operative",
    "operative_pool_size",
]


@dataclass(frozen=True)
class ProcedureConfig:
    """Parameters shared by all procedures.

    ``delta`` and ``nmax`` accept :data:`UNBOUNDED`.  ``gamma`` is only read
    by the FDP procedures and ``nmax`` only by the operative one.
    """

    alpha: Fraction = Fraction(1, 20)
    k: int = 1
    delta: Optional[Fraction] = Fraction(1)
    gamma: Fraction = Fraction(0)
    nmax: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "delta", as_level(self.delta, "delta", allow_unbounded=True))
        g = as_level(self.gamma, "gamma")
        if not 0 <= g < 1:
            raise ValueError(f"gamma must lie in [0, 1), got {g}")
        object.__setattr__(self, "gamma", g)
        n = self.nmax
        if n is not None and not (isinstance(n, float) and math.isinf(n)):
            if int(n) != n or n < 1:
                raise ValueError(f"nmax must be a positive integer, got {n}")
            object.__setattr__(self, "nmax", int(n))
        else:
            object.__setattr__(self, "nmax", None)


def _check_k(k) -> int:
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    return int(k)


def kfwer_augmented(graph, p, alpha, k, delta=1) -> RejectionTrace:
    """FWER test at ``alpha``, then up to ``k - 1`` more rejections at ``delta``.

    ``delta=UNBOUNDED`` rejects the next ``k - 1`` hypotheses in argmin
    order regardless of their p-values.
    """
    alpha = check_alpha(alpha)
    k = _check_k(k)
    delta = as_level(delta, "delta", allow_unbounded=True)
    wt, p = prepare(graph, p)
    trace = new_trace(wt)
    live = sequential(wt, p, frozenset(range(wt.m)), alpha, trace, "base")
    if live and k > 1:
        sequential(wt, p, live, delta, trace, "augmented", budget=k - 1)
    return trace


def _augment_adjusted(graph, p, alpha, budget_fn) -> tuple[RejectionTrace, int]:
    wt, p = prepare(graph, p)
    adj = adjusted_pvalues(wt, p)
    trace = new_trace(wt)
    ranked = adj.rank()
    base = [i for i in ranked if adj.exact[i] <= alpha]
    for i in base:
        trace.add(i, "base", None)
    rest = [i for i in ranked if adj.exact[i] > alpha]
    extra = min(len(rest), budget_fn(len(base)))
    for i in rest[:extra]:
        trace.add(i, "augmented", None)
    return trace, extra


def kfwer_augmented_adjusted(graph, p, alpha, k) -> RejectionTrace:
    """Reject adjusted p <= alpha plus the ``min(|I|, k-1)`` next smallest.

    Ties among the remaining adjusted p-values follow the order in which
    the adjusted values were computed, which is the order an unbounded
    augmentation level would reject them.
    """
    alpha = check_alpha(alpha)
    k = _check_k(k)
    trace, _ = _augment_adjusted(graph, p, alpha, lambda r: k - 1)
    return trace


def operative_pool_size(k: int, nmax) -> Optional[int]:
    """Largest ``B`` with ``C(B, k-1) <= nmax``; ``None`` if unbounded."""
    if nmax is None or (isinstance(nmax, float) and math.isinf(nmax)) or k == 1:
        return None
    if nmax < 1:
        raise ValueError("nmax must be >= 1")
    b = k - 1
    while math.comb(b + 1, k - 1) <= nmax:
        b += 1
    return b


def _generalised(wt, p, alpha, k, delta, pool_size=None) -> RejectionTrace:
    m = wt.m
    everything = frozenset(range(m))
    level = alpha * k
    trace = new_trace(wt)
    w0 = wt.weights(everything)
    R = [i for i in range(m) if passes(p[i], w0[i], level)]
    for i in R:
        trace.add(i, "base", w0[i] * level, w0)
    live = everything - set(R)
    if len(R) < k or not live:
        if live and len(R) < k - 1:
            sequential(wt, p, live, delta, trace, "subprocedure", budget=k - 1 - len(R))
        return trace
    while live:
        if pool_size is None or pool_size >= len(R):
            pool = sorted(R)
        else:
            by_p = sorted(R, key=lambda i: (p[i], i))
            pool = sorted(by_p[len(by_p) - pool_size:])
        thr = None
        for J in itertools.combinations(pool, k - 1):
            w = wt.weights(live.union(J))
            if thr is None:
                thr = {i: w[i] for i in live}
            else:
                for i in live:
                    if w[i] < thr[i]:
                        thr[i] = w[i]
        new = [i for i in sorted(live) if passes(p[i], thr[i], level)]
        if not new:
            break
        snapshot = tuple(thr.get(i, ZERO) for i in range(m))
        for i in new:
            trace.add(i, "base", thr[i] * level, snapshot)
        live = live - set(new)
        R.extend(new)
    return trace


def kfwer_generalised(graph, p, alpha, k, delta=1) -> RejectionTrace:
    """Stepdown at ``k alpha`` using worst-case weights over ``k-1`` prior rejections.

    If the first round rejects fewer than ``k`` hypotheses the procedure
    stops; when live hypotheses remain it first tops the total up to
    ``k - 1`` rejections with a sequential test at ``delta``.
    """
    alpha = check_alpha(alpha)
    k = _check_k(k)
    delta = as_level(delta, "delta", allow_unbounded=True)
    wt, p = prepare(graph, p)
    return _generalised(wt, p, alpha, k, delta)


def kfwer_operative(graph, p, alpha, k, delta=1, nmax=UNBOUNDED) -> RejectionTrace:
    """Generalised procedure minimising only over the ``B`` least significant rejections.

    ``B`` is the largest integer with ``C(B, k-1) <= nmax``; ``nmax=1``
    gives the streamlined variant.
    """
    alpha = check_alpha(alpha)
    k = _check_k(k)
    delta = as_level(delta, "delta", allow_unbounded=True)
    wt, p = prepare(graph, p)
    return _generalised(wt, p, alpha, k, delta, operative_pool_size(k, nmax))
