"""Bonferroni-based graphical test and its adjusted p-values."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..weight import ONE, Weight
from .base import (RejectionTrace, _ratio_key, check_alpha, new_trace, prepare,
                   sequential)

__all__ = ["fwer_test", "adjusted_pvalues", "AdjustedPValues"]


def fwer_test(graph, p, alpha) -> RejectionTrace:
    """Sequentially rejective graphical test controlling the FWER.

    Parameters
    ----------
    graph : TestingGraph or weighting
        Families are expanded automatically.
    p : sequence
        Raw p-values; strings and Fractions are taken exactly.
    alpha : level in (0, 1)

    Returns
    -------
    RejectionTrace
        Every step is in stage ``"base"``.
    """
    alpha = check_alpha(alpha)
    wt, p = prepare(graph, p)
    trace = new_trace(wt)
    sequential(wt, p, frozenset(range(wt.m)), alpha, trace, "base")
    return trace


@dataclass(frozen=True)
class AdjustedPValues:
    """Adjusted p-values with the order in which they were computed.

    ``exact`` keeps the infinitesimal part so that comparisons with a level
    agree with the test at threshold ties; ``values`` is the limit.
    """

    exact: tuple[Weight, ...]
    order: tuple[int, ...]

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(x.a for x in self.exact)

    def __getitem__(self, i):
        return self.exact[i].a

    def __len__(self):
        return len(self.exact)

    def rejected(self, alpha) -> frozenset:
        alpha = check_alpha(alpha)
        return frozenset(i for i, x in enumerate(self.exact) if x <= alpha)

    def rank(self) -> list[int]:
        """Indices sorted by adjusted value, ties in computation order."""
        pos = {j: n for n, j in enumerate(self.order)}
        return sorted(range(len(self.exact)), key=lambda i: (self.exact[i], pos[i]))


def adjusted_pvalues(graph, p) -> AdjustedPValues:
    """Running-maximum adjusted p-values, capped at 1."""
    wt, p = prepare(graph, p)
    m = wt.m
    live = frozenset(range(m))
    pmax = None  # None until finite; "inf" tracked by flag
    inf = False
    out = [ONE] * m
    order = []
    while live:
        w = wt.weights(live)
        j = min(sorted(live), key=lambda i: _ratio_key(p[i], w[i]))
        flag, ratio = _ratio_key(p[j], w[j])
        if flag or inf:
            inf = True
            out[j] = ONE
        else:
            val = ratio if pmax is None or ratio > pmax else pmax
            pmax = val
            out[j] = val if val <= 1 else ONE
        order.append(j)
        live = live - {j}
    return AdjustedPValues(tuple(out), tuple(order))
