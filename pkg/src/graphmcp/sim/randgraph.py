"""Random valid testing graphs for property tests and Monte Carlo checks."""

from __future__ import annotations

import random
from fractions import Fraction

from ..graph import TestingGraph

__all__ = ["WEIGHT_STYLES", "random_graph", "holm_graph"]

WEIGHT_STYLES = ("random", "holm", "zero", "deficient")


def holm_graph(m: int) -> TestingGraph:
    """``w_i = 1/m`` and ``g_ij = 1/(m-1)``: Holm's procedure as a graph."""
    if m < 1:
        raise ValueError("m must be >= 1")
    w = [Fraction(1, m)] * m
    g = [[Fraction(0) if i == j else Fraction(1, m - 1) for j in range(m)] for i in range(m)]
    return TestingGraph(tuple(w), tuple(tuple(r) for r in g))


def _simplex(rng: random.Random, n: int, denom: int) -> list[Fraction]:
    # integer composition of ``denom`` into ``n`` nonnegative parts
    cuts = sorted(rng.randint(0, denom) for _ in range(n - 1))
    edges = [0] + cuts + [denom]
    return [Fraction(edges[i + 1] - edges[i], denom) for i in range(n)]


def random_graph(seed: int, m: int, sparsity: float = 0.3, weight_style: str = "random") -> TestingGraph:
    """A graph satisfying the regularity conditions by construction.

    Parameters
    ----------
    seed : int
    m : int
        Number of hypotheses, at least 1.
    sparsity : float
        Probability that a possible edge is absent; 1 gives an unconnected graph.
    weight_style : {"random", "holm", "zero", "deficient"}
        ``random`` draws initial weights summing to 1; ``zero`` puts them on a
        random nonempty subset and leaves the rest at 0; ``deficient`` lets
        them sum to less than 1; ``holm`` returns :func:`holm_graph`.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if weight_style not in WEIGHT_STYLES:
        raise ValueError(f"weight_style must be one of {', '.join(WEIGHT_STYLES)}")
    if weight_style == "holm":
        return holm_graph(m)
    rng = random.Random(seed)
    denom = rng.choice([4, 6, 8, 12, 24])
    if weight_style == "zero" and m > 1:
        support = rng.sample(range(m), rng.randint(1, m - 1))
        part = _simplex(rng, len(support), denom)
        w = [Fraction(0)] * m
        for i, x in zip(support, part):
            w[i] = x
    elif weight_style == "deficient":
        w = _simplex(rng, m + 1, denom)[:m]
    else:
        w = _simplex(rng, m, denom)
    g = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        targets = [j for j in range(m) if j != i and rng.random() >= sparsity]
        if not targets:
            continue
        # rows either use all their level or leak some of it
        total = Fraction(1) if rng.random() < 0.7 else Fraction(rng.randint(1, 3), 4)
        parts = [Fraction(rng.randint(1, 5)) for _ in targets]
        s = sum(parts)
        for j, x in zip(targets, parts):
            g[i][j] = total * x / s
    return TestingGraph(tuple(w), tuple(tuple(r) for r in g))
