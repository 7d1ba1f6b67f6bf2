"""Shared pieces: levels, p-value coercion, traces and the sequential test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ..graph import as_weighting
from ..weight import Weight, ZERO, to_fraction

UNBOUNDED = math.inf

STAGES = ("base", "augmented", "subprocedure")


def as_level(value, name="alpha", allow_unbounded=False) -> Optional[Fraction]:
    """Exact level; ``None`` stands for an unbounded level."""
    if value is None or (isinstance(value, float) and math.isinf(value)) or (
        isinstance(value, str) and value.strip().lower() in ("inf", "unbounded")
    ):
        if allow_unbounded:
            return None
        raise ValueError(f"{name} must be finite")
    x = to_fraction(value)
    if x < 0:
        raise ValueError(f"{name} must be nonnegative, got {x}")
    return x


def check_alpha(alpha) -> Fraction:
    a = as_level(alpha, "alpha")
    if not 0 < a < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {a}")
    return a


def as_pvalues(p: Sequence, m: int) -> tuple[Fraction, ...]:
    if len(p) != m:
        raise ValueError(f"expected {m} p-values, got {len(p)}")
    out = tuple(to_fraction(x) for x in p)
    for i, x in enumerate(out):
        if not 0 <= x <= 1:
            raise ValueError(f"p-value {i + 1} = {x} outside [0, 1]")
    return out


@dataclass(frozen=True)
class Step:
    """One rejection: node, stage, the threshold it met, live weights then.

    ``threshold`` is ``None`` when the level was unbounded or the rejection
    came from an adjusted p-value ranking.
    """

    node: int
    stage: str
    threshold: Optional[Weight]
    weights: Optional[tuple[Weight, ...]] = None


@dataclass
class RejectionTrace:
    m: int
    labels: tuple[str, ...]
    steps: list[Step] = field(default_factory=list)

    @property
    def rejected(self) -> frozenset:
        return frozenset(s.node for s in self.steps)

    @property
    def live(self) -> frozenset:
        return frozenset(range(self.m)) - self.rejected

    @property
    def order(self) -> list[int]:
        return [s.node for s in self.steps]

    def stage_nodes(self, stage: str) -> list[int]:
        return [s.node for s in self.steps if s.stage == stage]

    @property
    def rejected_labels(self) -> list[str]:
        return [self.labels[i] for i in sorted(self.rejected)]

    def add(self, node, stage, threshold=None, weights=None):
        self.steps.append(Step(node, stage, threshold, weights))


def _ratio_key(pi: Fraction, wi: Weight):
    # zero finite part counts as an infinite ratio
    if not wi.a:
        return (1, ZERO)
    return (0, Weight.coerce(pi) / wi)


def passes(pi: Fraction, wi: Weight, level: Optional[Fraction]) -> bool:
    if level is None:
        return True
    return wi * level >= pi


def select(p, w, live: Iterable[int], level) -> Optional[int]:
    """Argmin of ``p_i / w_i`` among live hypotheses meeting ``p_i <= w_i level``.

    Ties go to the smallest index.
    """
    best = None
    best_key = None
    for i in sorted(live):
        if not passes(p[i], w[i], level):
            continue
        key = _ratio_key(p[i], w[i])
        if best is None or key < best_key:
            best, best_key = i, key
    return best


def sequential(wt, p, live: frozenset, level, trace: RejectionTrace, stage: str,
               budget: Optional[int] = None) -> frozenset:
    """Sequentially reject at ``level`` until nothing passes or ``budget`` is spent."""
    made = 0
    while live and (budget is None or made < budget):
        w = wt.weights(live)
        j = select(p, w, live, level)
        if j is None:
            break
        trace.add(j, stage, None if level is None else w[j] * level, w)
        live = live - {j}
        made += 1
    return live


def prepare(graph, p):
    wt = as_weighting(graph)
    return wt, as_pvalues(p, wt.m)


def new_trace(wt) -> RejectionTrace:
    labels = tuple(getattr(wt, "labels", ()) or (f"H{i + 1}" for i in range(wt.m)))
    return RejectionTrace(wt.m, labels)
