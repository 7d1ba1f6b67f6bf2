"""Testing graphs, the node-removal update and the graphical weighting strategy.

Indices are 0-based throughout the library; files, the CLI and reports
use 1-based ids.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .weight import ONE, ZERO, EPS, Weight, format_weight, to_fraction

__all__ = [
    "Family",
    "TestingGraph",
    "Violation",
    "ValidationReport",
    "GraphState",
    "SubsetWeightTable",
    "EntangledGraph",
    "validate_graph",
    "update_after_removal",
    "subset_weights",
    "entangle",
    "expand_families",
    "donors",
    "as_weighting",
]


@dataclass(frozen=True)
class Family:
    """A group of nodes tested by Holm internally.

    The group's level leaves through ``out_edges`` only once every member
    has been rejected.  ``out_edges`` holds ``(node, fraction)`` pairs.
    """

    name: str
    members: tuple[int, ...]
    out_edges: tuple[tuple[int, Weight], ...] = ()


@dataclass(frozen=True)
class TestingGraph:
    """Initial weights ``w_i(M)`` and transition matrix ``G``.

    Parameters
    ----------
    weights : sequence
        Initial weights, one per hypothesis.  Anything convertible by
        :func:`Weight.coerce`; strings such as ``"1/3"`` are exact.
    transition : sequence of sequences
        ``m x m`` matrix of edge fractions ``g_ij``.
    labels : sequence of str, optional
        Display names, default ``H1..Hm``.
    families : sequence of Family, optional
        Member groups expanded by :func:`expand_families` before testing.
    """

    __test__ = False

    weights: tuple[Weight, ...]
    transition: tuple[tuple[Weight, ...], ...]
    labels: tuple[str, ...] = ()
    families: tuple[Family, ...] = ()

    def __post_init__(self):
        w = tuple(Weight.coerce(x) for x in self.weights)
        m = len(w)
        g = tuple(tuple(Weight.coerce(x) for x in row) for row in self.transition)
        if len(g) != m or any(len(row) != m for row in g):
            raise ValueError(f"transition matrix must be {m}x{m}")
        labels = tuple(self.labels) if self.labels else tuple(f"H{i + 1}" for i in range(m))
        if len(labels) != m:
            raise ValueError("one label per hypothesis required")
        if len(set(labels)) != m:
            raise ValueError("labels must be distinct")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "transition", g)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "families", tuple(self.families))

    @property
    def m(self) -> int:
        return len(self.weights)

    @classmethod
    def from_edges(cls, weights, edges: Mapping[tuple[int, int], object], labels=(), families=()):
        """Build from a sparse ``{(i, j): g_ij}`` mapping (0-based)."""
        m = len(weights)
        g = [[ZERO] * m for _ in range(m)]
        for (i, j), val in edges.items():
            g[i][j] = Weight.coerce(val)
        return cls(tuple(weights), tuple(tuple(r) for r in g), labels, families)

    def index(self, ref) -> int:
        """Resolve a 0-based index or a label to an index."""
        if isinstance(ref, int):
            if not 0 <= ref < self.m:
                raise IndexError(f"node {ref} out of range")
            return ref
        try:
            return self.labels.index(ref)
        except ValueError:
            raise KeyError(f"unknown node {ref!r}") from None

    def edges(self):
        """Nonzero ``(i, j, g_ij)`` in row-major order."""
        for i, row in enumerate(self.transition):
            for j, val in enumerate(row):
                if val:
                    yield i, j, val

    def weighting(self) -> "SubsetWeightTable":
        return SubsetWeightTable(self)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    nodes: tuple[int, ...]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(v.message for v in self.violations)


def validate_graph(graph: TestingGraph) -> ValidationReport:
    """Check the regularity conditions and the initial weight budget.

    Bounds are checked lexicographically on ``(a, b)``, so an edge
    ``1 - eps`` is fine while ``1 + eps`` is not.
    """
    out = []
    m = graph.m
    total = sum((w.a for w in graph.weights), Fraction(0))
    if total > 1:
        out.append(Violation("weight-sum", (), f"initial weights sum to {total} > 1"))
    for i, w in enumerate(graph.weights):
        if w < 0:
            out.append(Violation("weight-range", (i,), f"w must be >= 0 at node {i + 1}"))
        elif w.a > 1:
            out.append(Violation("weight-range", (i,), f"w must be <= 1 at node {i + 1}"))
    for i, row in enumerate(graph.transition):
        if row[i]:
            out.append(Violation("diagonal", (i,), f"g_ii must be 0 at node {i + 1}"))
        for j, val in enumerate(row):
            if val < 0 or val > 1:
                out.append(Violation("edge-range", (i, j),
                                     f"g_{i + 1},{j + 1} = {format_weight(val)} outside [0, 1]"))
        s = sum(row, ZERO)
        if s > 1:
            out.append(Violation("row-sum", (i,), f"outgoing fractions of row {i + 1} sum to {format_weight(s)} > 1"))
    seen = {}
    for fam in graph.families:
        for mem in fam.members:
            if not 0 <= mem < m:
                out.append(Violation("family", (mem,), f"family {fam.name}: member {mem + 1} out of range"))
            elif mem in seen:
                out.append(Violation("family", (mem,),
                                     f"node {mem + 1} in families {seen[mem]} and {fam.name}"))
            else:
                seen[mem] = fam.name
        s = sum((v for _, v in fam.out_edges), ZERO)
        if s > 1:
            out.append(Violation("row-sum", fam.members, f"family {fam.name} out-edges sum to {format_weight(s)} > 1"))
    return ValidationReport(tuple(out))


# -- working state and the update rule ---------------------------------------


@dataclass(frozen=True)
class GraphState:
    """The graph restricted to the live set ``I``.

    ``weights`` and ``transition`` keep full length ``m`` with zeros for
    removed nodes.
    """

    live: frozenset
    weights: tuple[Weight, ...]
    transition: tuple[tuple[Weight, ...], ...]
    labels: tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def initial(cls, graph: TestingGraph) -> "GraphState":
        if graph.families:
            graph = expand_families(graph)
        return cls(frozenset(range(graph.m)), graph.weights, graph.transition, graph.labels)

    @property
    def m(self) -> int:
        return len(self.weights)

    def remove(self, j: int) -> "GraphState":
        return update_after_removal(self, j)

    def as_graph(self) -> TestingGraph:
        """The live subgraph as a stand-alone graph (for display)."""
        keep = sorted(self.live)
        return TestingGraph(
            tuple(self.weights[i] for i in keep),
            tuple(tuple(self.transition[i][h] for h in keep) for i in keep),
            tuple(self.labels[i] for i in keep) if self.labels else (),
        )


def update_after_removal(state: GraphState, j: int) -> GraphState:
    """Remove live node ``j`` and redistribute its level and edges.

    ``w_l += w_j g_jl`` and
    ``g_lh = (g_lh + g_lj g_jh) / (1 - g_lj g_jl)`` when ``g_lj g_jl < 1``,
    else 0.
    """
    if j not in state.live:
        raise ValueError(f"node {j} is not live")
    w, g = state.weights, state.transition
    m = len(w)
    live = state.live - {j}
    order = sorted(live)
    gj = g[j]
    wj = w[j]
    new_w = list(w)
    new_w[j] = ZERO
    if wj:
        for l in order:
            if gj[l]:
                new_w[l] = w[l] + wj * gj[l]
    new_g = list(g)
    zero_row = (ZERO,) * m
    new_g[j] = zero_row
    for l in order:
        glj = g[l][j]
        if not glj:
            continue
        prod = glj * gj[l]
        row = [ZERO] * m
        if prod < 1:
            denom = ONE - prod
            gl = g[l]
            for h in order:
                if h == l:
                    continue
                num = gl[h] + glj * gj[h] if gj[h] else gl[h]
                if num:
                    row[h] = num / denom
        new_g[l] = tuple(row)
    return GraphState(live, tuple(new_w), tuple(new_g), state.labels)


def subset_weights(graph, J: Iterable[int]) -> dict[int, Weight]:
    """Weights ``w_j(J)`` of the intersection hypothesis over ``J``.

    Removes ``M \\ J`` one node at a time.  ``graph`` may be a
    :class:`TestingGraph` or any weighting object (see :func:`as_weighting`).
    """
    J = frozenset(J)
    if not J:
        raise ValueError("J must be nonempty")
    wt = as_weighting(graph)
    if not J <= frozenset(range(wt.m)):
        raise ValueError("J must be a subset of the node indices")
    w = wt.weights(J)
    return {j: w[j] for j in sorted(J)}


class SubsetWeightTable:
    """Memoized graph states keyed by live set.

    A state is derived from any cached superset that differs by one node,
    so sequential procedures reuse their previous state.  Thread-safe.
    """

    def __init__(self, graph: TestingGraph):
        if graph.families:
            graph = expand_families(graph)
        self.graph = graph
        self.m = graph.m
        self.labels = graph.labels
        self._all = frozenset(range(graph.m))
        self._cache: dict[frozenset, GraphState] = {self._all: GraphState.initial(graph)}
        self._lock = threading.RLock()

    @property
    def initial_weights(self) -> tuple[Weight, ...]:
        return self.graph.weights

    def state(self, live: Iterable[int]) -> GraphState:
        live = frozenset(live)
        with self._lock:
            return self._state(live)

    def _state(self, live: frozenset) -> GraphState:
        s = self._cache.get(live)
        if s is not None:
            return s
        missing = sorted(self._all - live)
        if len(missing) == len(self._all):
            s = GraphState(live, (ZERO,) * self.m, ((ZERO,) * self.m,) * self.m, self.labels)
            self._cache[live] = s
            return s
        for x in missing:
            parent = self._cache.get(live | {x})
            if parent is not None:
                s = parent.remove(x)
                break
        else:
            x = missing[-1]
            s = self._state(live | {x}).remove(x)
        self._cache[live] = s
        return s

    def weights(self, live: Iterable[int]) -> tuple[Weight, ...]:
        return self.state(live).weights

    def __len__(self):
        return len(self._cache)


# -- entangled graphs ---------------------------------------------------------


class EntangledGraph:
    """Convex combination of component graphs over a shared node set."""

    def __init__(self, components: Sequence[TestingGraph], mixing: Sequence):
        if not components:
            raise ValueError("at least one component graph required")
        c = tuple(to_fraction(x) if not isinstance(x, Fraction) else x for x in mixing)
        if len(c) != len(components):
            raise ValueError("one mixing coefficient per component required")
        if any(x < 0 for x in c) or sum(c) != 1:
            raise ValueError("mixing coefficients must be nonnegative and sum to 1")
        m = components[0].m
        labels = components[0].labels
        for comp in components[1:]:
            if comp.m != m or comp.labels != labels:
                raise ValueError("components must share the node set and labels")
        self.components = tuple(components)
        self.mixing = c
        self.m = m
        self.labels = labels
        self._tables = [SubsetWeightTable(comp) for comp in components]
        self._cache: dict[frozenset, tuple[Weight, ...]] = {}
        self._lock = threading.Lock()

    @property
    def initial_weights(self) -> tuple[Weight, ...]:
        return self.weights(range(self.m))

    def weights(self, live: Iterable[int]) -> tuple[Weight, ...]:
        live = frozenset(live)
        with self._lock:
            hit = self._cache.get(live)
        if hit is not None:
            return hit
        acc = [ZERO] * self.m
        for cl, table in zip(self.mixing, self._tables):
            if not cl:
                continue
            for i, wi in enumerate(table.weights(live)):
                if wi:
                    acc[i] = acc[i] + wi * cl
        out = tuple(acc)
        with self._lock:
            self._cache[live] = out
        return out


def entangle(components: Sequence[TestingGraph], c: Sequence) -> EntangledGraph:
    """Entangle ``components`` with mixing vector ``c`` (summing to 1)."""
    return EntangledGraph(components, c)


# -- families -----------------------------------------------------------------


def expand_families(graph: TestingGraph) -> TestingGraph:
    """Replace every family by plain nodes.

    Members split the family's level by Holm: each member sends ``1 - eps``
    to the other members in equal parts and ``eps * g`` along each family
    out-edge ``g``.  In the ``eps -> 0`` limit, level only leaves the family
    once its last member is rejected, and then along the family out-edges.
    """
    if not graph.families:
        return graph
    m = graph.m
    owner = {}
    for fam in graph.families:
        for mem in fam.members:
            if not 0 <= mem < m:
                raise ValueError(f"family {fam.name}: member {mem} out of range")
            if mem in owner:
                raise ValueError(f"families {owner[mem]} and {fam.name} overlap at node {mem}")
            owner[mem] = fam.name
    g = [list(row) for row in graph.transition]
    for fam in graph.families:
        members = fam.members
        f = len(members)
        for mem in members:
            if any(g[mem]):
                raise ValueError(
                    f"family {fam.name}: member {graph.labels[mem]} has its own out-edges; "
                    "declare them as family out-edges")
        for t, _ in fam.out_edges:
            if t in members:
                raise ValueError(f"family {fam.name} has an out-edge into itself")
        if f == 1:
            (mem,) = members
            for t, val in fam.out_edges:
                g[mem][t] = g[mem][t] + val
            continue
        internal = (ONE - EPS) / (f - 1)
        for mem in members:
            for other in members:
                if other != mem:
                    g[mem][other] = internal
            for t, val in fam.out_edges:
                g[mem][t] = g[mem][t] + EPS * val
    return TestingGraph(graph.weights, tuple(tuple(r) for r in g), graph.labels, ())


def donors(graph: TestingGraph, j: int) -> frozenset:
    """Nodes with a positive edge into ``j``."""
    return frozenset(i for i in range(graph.m) if graph.transition[i][j] > 0)


def as_weighting(graph):
    """Coerce a graph-like object to something with ``weights(live)``."""
    if isinstance(graph, TestingGraph):
        return SubsetWeightTable(graph)
    if hasattr(graph, "weights") and callable(graph.weights) and hasattr(graph, "m"):
        return graph
    raise TypeError(f"not a graph or weighting strategy: {type(graph).__name__}")
