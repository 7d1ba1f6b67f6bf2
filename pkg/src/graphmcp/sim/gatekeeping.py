"""``r``-out-of-``n`` gatekeeping: a primary family guarding one secondary hypothesis.

The procedure is the entangled graph built from one component per
``r``-subset ``J`` of the primaries: Holm on ``J`` with its whole level
moving to the secondary hypothesis once every member of ``J`` is rejected.
Components are mixed with equal coefficients.

:class:`GatekeepingSchedule` evaluates the resulting weights in closed
form.  With ``u`` live primaries ``L``, a component contributes
``1/|L & J|`` to each live member of ``J`` and its full level to the
secondary when ``L & J`` is empty, so

    w_i = sum_t C(u-1, t-1) C(n-u, r-t) / (t C(n, r))     for i in L
    w_sec = C(n-u, r) / C(n, r)

:func:`gatekeeping_components` builds the components explicitly for
cross-checking with :func:`graphmcp.graph.entangle`.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable

from ..graph import Family, TestingGraph, entangle
from ..weight import ONE, ZERO, Weight

__all__ = ["GatekeepingSchedule", "gatekeeping_components", "gatekeeping_entangled"]


class GatekeepingSchedule:
    """Weighting strategy with ``n`` primaries (indices ``0..n-1``) and a
    secondary at index ``n``.

    The secondary has no outgoing edges, so once it is rejected the
    primary weights stay as they were.
    """

    def __init__(self, n_primary: int = 9, required: int = 6, labels=()):
        if not 1 <= required <= n_primary:
            raise ValueError("need 1 <= required <= n_primary")
        self.n = n_primary
        self.r = required
        self.m = n_primary + 1
        self.labels = tuple(labels) or tuple(f"H{i + 1}" for i in range(self.m))

    @lru_cache(maxsize=None)
    def schedule(self, u: int) -> tuple[Fraction, Fraction]:
        """``(primary weight, secondary weight)`` with ``u`` live primaries."""
        n, r = self.n, self.r
        total = comb(n, r)
        sec = Fraction(comb(n - u, r), total)
        if u == 0:
            return ZERO.a, sec
        prim = sum((Fraction(comb(u - 1, t - 1) * comb(n - u, r - t), t * total)
                    for t in range(1, min(u, r) + 1)), Fraction(0))
        return prim, sec

    def table(self) -> list[tuple[int, Fraction, Fraction]]:
        return [(u, *self.schedule(u)) for u in range(self.n, -1, -1)]

    @property
    def initial_weights(self):
        return self.weights(range(self.m))

    def weights(self, live: Iterable[int]) -> tuple[Weight, ...]:
        live = frozenset(live)
        prim = [i for i in live if i < self.n]
        wp, ws = self.schedule(len(prim))
        out = [ZERO] * self.m
        for i in prim:
            out[i] = Weight(wp)
        if self.n in live:
            out[self.n] = Weight(ws)
        return tuple(out)


def gatekeeping_components(n_primary: int = 9, required: int = 6, labels=()) -> list[TestingGraph]:
    """One Holm-on-``J`` graph per ``required``-subset ``J`` of the primaries."""
    m = n_primary + 1
    labels = tuple(labels) or tuple(f"H{i + 1}" for i in range(m))
    out = []
    for J in itertools.combinations(range(n_primary), required):
        w = [ZERO] * m
        for i in J:
            w[i] = Weight(Fraction(1, required))
        fam = Family("J", tuple(J), ((n_primary, ONE),))
        g = ((ZERO,) * m,) * m
        out.append(TestingGraph(tuple(w), g, labels, (fam,)))
    return out


def gatekeeping_entangled(n_primary: int = 9, required: int = 6, labels=()):
    comps = gatekeeping_components(n_primary, required, labels)
    return entangle(comps, [Fraction(1, len(comps))] * len(comps))
