"""Brute-force reference for subset weights.

The update rule is transcribed here independently of :mod:`graphmcp.graph`
and applied along every removal order of the complement of ``J``; all
orders must give the same weights.
"""

from __future__ import annotations

import itertools
from typing import Iterable

from ..graph import TestingGraph, expand_families
from ..weight import ZERO, Weight

__all__ = ["OracleDisagreement", "oracle_subset_weights"]

MAX_REMOVED = 8


class OracleDisagreement(AssertionError):
    """Two removal orders gave different weights."""


def _remove(w: dict, g: dict, j) -> tuple[dict, dict]:
    rest = [x for x in w if x != j]
    nw = {l: w[l] + w[j] * g[j][l] for l in rest}
    ng = {}
    for l in rest:
        row = {}
        denom = 1 - g[l][j] * g[j][l]
        for h in rest:
            if h == l:
                row[h] = ZERO
            elif denom > 0:
                row[h] = (g[l][h] + g[l][j] * g[j][h]) / denom
            else:
                row[h] = ZERO
        ng[l] = row
    return nw, ng


def oracle_subset_weights(graph: TestingGraph, J: Iterable[int]) -> dict[int, Weight]:
    """Weights ``w_j(J)`` from every removal order of ``M \\ J``.

    Raises
    ------
    ValueError
        ``J`` empty, out of range, or more than 8 nodes to remove.
    OracleDisagreement
        Removal orders disagree.
    """
    J = frozenset(J)
    g0 = expand_families(graph)
    m = g0.m
    if not J or not J <= frozenset(range(m)):
        raise ValueError("J must be a nonempty subset of the node indices")
    removed = sorted(frozenset(range(m)) - J)
    if len(removed) > MAX_REMOVED:
        raise ValueError(f"at most {MAX_REMOVED} removals supported, got {len(removed)}")
    w0 = {i: g0.weights[i] for i in range(m)}
    t0 = {i: {h: g0.transition[i][h] for h in range(m)} for i in range(m)}
    result = None
    for order in itertools.permutations(removed):
        w, g = w0, t0
        for j in order:
            w, g = _remove(w, g, j)
        out = {j: w[j] for j in sorted(J)}
        if result is None:
            result = out
        elif out != result:
            raise OracleDisagreement(f"removal order {order} gives {out}, expected {result}")
    return result
