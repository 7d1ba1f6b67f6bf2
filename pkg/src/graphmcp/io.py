"""Graph files, p-value and truth-label CSVs, and DOT export.

Graph files are YAML::

    m: 4
    nodes:
      - {id: 1, label: H1, weight: 1/2}
      - {id: 2, label: H2, weight: 1/2}
      ...
    edges:
      - {from: H1, to: H2, weight: 1/2}
      - {from: 3, to: H2, weight: 1}
    families:
      - name: F
        members: [H41, H42]
        out_edges:
          - {to: H2, weight: 1}

Numbers are read as strings and converted exactly, so ``0.1`` means one
tenth.  Nodes are referenced by 1-based id, by label, or (for edge
targets) by family name; an edge into a family is split equally among
its members.  An edge with ``epsilon: true`` contributes ``weight * eps``.
Repeated edges between the same pair are summed.
"""

from __future__ import annotations

import csv
import io
import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import yaml

from .graph import Family, GraphState, TestingGraph, validate_graph
from .weight import ZERO, Weight, format_weight, parse_weight, to_fraction

__all__ = [
    "GraphFileError",
    "parse_graph_file",
    "load_graph",
    "dump_graph_file",
    "export_dot",
    "parse_pvalues_csv",
    "load_pvalues",
    "parse_truth_csv",
    "load_truth",
    "format_pvalues_csv",
]


class GraphFileError(ValueError):
    """Malformed input file; ``location`` says where."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


def _load_yaml(text: str, source: str):
    try:
        # BaseLoader keeps every scalar a string, so "0.1" stays exact
        return yaml.load(text, Loader=yaml.BaseLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise GraphFileError(f"invalid YAML ({getattr(exc, 'problem', exc)})", loc) from None


def _req(entry, key, loc):
    if not isinstance(entry, dict):
        raise GraphFileError("expected a mapping", loc)
    if key not in entry:
        raise GraphFileError(f"missing field '{key}'", loc)
    return entry[key]


def _number(text, loc, what="weight") -> Weight:
    if not isinstance(text, str):
        raise GraphFileError(f"{what} must be a scalar", loc)
    try:
        return parse_weight(text)
    except (ValueError, ZeroDivisionError):
        raise GraphFileError(f"{what} {text!r} is not an exact rational", loc) from None


def _is_true(text) -> bool:
    return isinstance(text, str) and text.strip().lower() in ("true", "yes", "1", "on")


def parse_graph_file(text: str, source: str = "<graph>") -> TestingGraph:
    """Parse and validate a graph document.

    Raises
    ------
    GraphFileError
        On malformed structure, non-rational numbers, unknown node
        references or violated regularity conditions.
    """
    doc = _load_yaml(text, source)
    if not isinstance(doc, dict):
        raise GraphFileError("top level must be a mapping", source)
    nodes = _req(doc, "nodes", source)
    if not isinstance(nodes, list) or not nodes:
        raise GraphFileError("'nodes' must be a nonempty list", f"{source}:nodes")
    if "m" in doc:
        try:
            m = int(doc["m"])
        except (TypeError, ValueError):
            raise GraphFileError(f"m = {doc['m']!r} is not an integer", f"{source}:m") from None
        if m != len(nodes):
            raise GraphFileError(f"m = {m} but {len(nodes)} nodes listed", f"{source}:m")
    m = len(nodes)

    slot: dict[int, tuple] = {}
    for n, entry in enumerate(nodes):
        loc = f"{source}:nodes[{n}]"
        raw_id = _req(entry, "id", loc)
        try:
            nid = int(raw_id)
        except (TypeError, ValueError):
            raise GraphFileError(f"id {raw_id!r} is not an integer", loc) from None
        if not 1 <= nid <= m:
            raise GraphFileError(f"id {nid} outside 1..{m}", loc)
        if nid in slot:
            raise GraphFileError(f"duplicate id {nid}", loc)
        label = str(entry.get("label", f"H{nid}"))
        w = _number(_req(entry, "weight", loc), loc)
        if "epsilon" in entry:
            w = w + Weight(0, _number(entry["epsilon"], loc, "epsilon").a)
        slot[nid] = (label, w)
    labels = [slot[i + 1][0] for i in range(m)]
    if len(set(labels)) != m:
        raise GraphFileError("labels must be distinct", f"{source}:nodes")
    weights = [slot[i + 1][1] for i in range(m)]
    by_label = {lab: i for i, lab in enumerate(labels)}

    raw_fams = doc.get("families") or []
    if not isinstance(raw_fams, list):
        raise GraphFileError("'families' must be a list", f"{source}:families")

    def node_ref(ref, loc) -> int:
        if isinstance(ref, str) and ref in by_label:
            return by_label[ref]
        if isinstance(ref, str) and re.fullmatch(r"\d+", ref.strip()):
            i = int(ref)
            if 1 <= i <= m:
                return i - 1
        raise GraphFileError(f"unknown node {ref!r}", loc)

    fam_members: dict[str, tuple[int, ...]] = {}
    for n, entry in enumerate(raw_fams):
        loc = f"{source}:families[{n}]"
        name = str(_req(entry, "name", loc))
        if name in by_label:
            raise GraphFileError(f"family name {name!r} clashes with a node label", loc)
        if name in fam_members:
            raise GraphFileError(f"duplicate family {name!r}", loc)
        members = _req(entry, "members", loc)
        if not isinstance(members, list) or not members:
            raise GraphFileError("'members' must be a nonempty list", loc)
        fam_members[name] = tuple(node_ref(x, loc) for x in members)

    def targets(ref, loc) -> list[int]:
        if isinstance(ref, str) and ref in fam_members:
            return list(fam_members[ref])
        return [node_ref(ref, loc)]

    def edge_value(entry, loc) -> Weight:
        w = _number(_req(entry, "weight", loc), loc)
        if _is_true(entry.get("epsilon", "false")):
            if w.b:
                raise GraphFileError("epsilon edge weight must be a plain rational", loc)
            w = Weight(0, w.a)
        return w

    g = [[ZERO] * m for _ in range(m)]
    fam_out: dict[str, dict[int, Weight]] = {name: {} for name in fam_members}
    raw_edges = doc.get("edges") or []
    if not isinstance(raw_edges, list):
        raise GraphFileError("'edges' must be a list", f"{source}:edges")
    for n, entry in enumerate(raw_edges):
        loc = f"{source}:edges[{n}]"
        src = _req(entry, "from", loc)
        dst = targets(_req(entry, "to", loc), loc)
        val = edge_value(entry, loc)
        share = val / len(dst) if len(dst) > 1 else val
        if isinstance(src, str) and src in fam_members:
            out = fam_out[src]
            for t in dst:
                out[t] = out.get(t, ZERO) + share
            continue
        i = node_ref(src, loc)
        for t in dst:
            g[i][t] = g[i][t] + share

    families = []
    for n, entry in enumerate(raw_fams):
        loc = f"{source}:families[{n}]"
        name = str(entry["name"])
        out = fam_out[name]
        for e, oe in enumerate(entry.get("out_edges") or []):
            eloc = f"{loc}.out_edges[{e}]"
            dst = targets(_req(oe, "to", eloc), eloc)
            val = edge_value(oe, eloc)
            share = val / len(dst) if len(dst) > 1 else val
            for t in dst:
                out[t] = out.get(t, ZERO) + share
        families.append(Family(name, fam_members[name], tuple(sorted(out.items()))))

    try:
        graph = TestingGraph(tuple(weights), tuple(tuple(r) for r in g), tuple(labels), tuple(families))
    except ValueError as exc:
        raise GraphFileError(str(exc), source) from None
    report = validate_graph(graph)
    if not report.ok:
        raise GraphFileError(str(report), source)
    for fam in families:
        for mem in fam.members:
            if any(g[mem]):
                raise GraphFileError(
                    f"family {fam.name}: member {labels[mem]} has its own out-edges; "
                    "give them as family out-edges instead", source)
    return graph


def load_graph(path) -> TestingGraph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFileError(f"cannot read: {exc.strerror}", str(path)) from None
    return parse_graph_file(text, str(path))


def _q(text: str) -> str:
    # quote anything YAML might misread, keep plain fractions readable
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*|-?\d+(/\d+)?", text):
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _edge_lines(src: str, dst: str, w: Weight, indent: str) -> list[str]:
    out = []
    if w.a:
        out.append(f"{indent}- {{from: {_q(src)}, to: {_q(dst)}, weight: {_q(str(w.a))}}}")
    if w.b:
        out.append(f"{indent}- {{from: {_q(src)}, to: {_q(dst)}, weight: {_q(str(w.b))}, epsilon: true}}")
    return out


def dump_graph_file(graph: TestingGraph) -> str:
    """Render ``graph`` in the graph-file format (families kept unexpanded)."""
    lab = graph.labels
    lines = [f"m: {graph.m}", "nodes:"]
    for i, w in enumerate(graph.weights):
        entry = f"  - {{id: {i + 1}, label: {_q(lab[i])}, weight: {_q(str(w.a))}"
        if w.b:
            entry += f", epsilon: {_q(str(w.b))}"
        lines.append(entry + "}")
    edge_lines = []
    for i, j, w in graph.edges():
        edge_lines += _edge_lines(lab[i], lab[j], w, "  ")
    lines.append("edges:" if edge_lines else "edges: []")
    lines += edge_lines
    if graph.families:
        lines.append("families:")
        for fam in graph.families:
            lines.append(f"  - name: {_q(fam.name)}")
            lines.append("    members: [" + ", ".join(_q(lab[i]) for i in fam.members) + "]")
            oe = []
            for t, w in fam.out_edges:
                for line in _edge_lines("", lab[t], w, "      "):
                    oe.append(line.replace("from: \"\", ", ""))
            lines.append("    out_edges:" if oe else "    out_edges: []")
            lines += oe
    return "\n".join(lines) + "\n"


def _dot_id(label: str) -> str:
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", label):
        return label
    return '"' + label.replace('"', '\\"') + '"'


def export_dot(graph, name: str = "G") -> str:
    """Deterministic DOT text for a :class:`TestingGraph` or :class:`GraphState`.

    A state shows only its live nodes.  Families are drawn as dashed
    clusters when exporting an unexpanded graph.
    """
    if isinstance(graph, GraphState):
        live = sorted(graph.live)
        labels = graph.labels or tuple(f"H{i + 1}" for i in range(graph.m))
        weights, g, families = graph.weights, graph.transition, ()
    else:
        live = list(range(graph.m))
        labels, weights, g, families = graph.labels, graph.weights, graph.transition, graph.families
    lines = [f"digraph {_dot_id(name)} {{", "  rankdir=LR;"]
    in_family = set()
    for n, fam in enumerate(families):
        lines.append(f"  subgraph cluster_{n} {{")
        lines.append(f'    label="{fam.name}"; style=dashed;')
        for i in fam.members:
            in_family.add(i)
            lines.append(f'    {_dot_id(labels[i])} [label="{labels[i]}\\nw={format_weight(weights[i])}"];')
        lines.append("  }")
    for i in live:
        if i not in in_family:
            lines.append(f'  {_dot_id(labels[i])} [label="{labels[i]}\\nw={format_weight(weights[i])}"];')
    for i in live:
        for j in live:
            if g[i][j]:
                lines.append(f'  {_dot_id(labels[i])} -> {_dot_id(labels[j])} [label="{format_weight(g[i][j])}"];')
    for fam in families:
        head = labels[fam.members[0]]
        for t, w in fam.out_edges:
            lines.append(f'  {_dot_id(head)} -> {_dot_id(labels[t])} '
                         f'[label="{format_weight(w)}", style=dashed, ltail=cluster_{families.index(fam)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _read_csv(text: str, source: str, columns: Sequence[str]) -> list[tuple[int, dict]]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise GraphFileError("empty file", source)
    names = [f.strip() for f in reader.fieldnames]
    missing = [c for c in columns if c not in names]
    if missing:
        raise GraphFileError(f"missing column(s) {', '.join(missing)}; header is {','.join(names)}", source)
    rows = []
    for row in reader:
        clean = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
        if not any(clean.values()):
            continue
        rows.append((reader.line_num, clean))
    return rows


def _order_rows(rows, graph: Optional[TestingGraph], source, value_fn):
    if graph is None:
        return [value_fn(r, f"{source}:{ln}") for ln, r in rows]
    out: list = [None] * graph.m
    for ln, r in rows:
        loc = f"{source}:{ln}"
        ref = r["node"]
        if ref in graph.labels:
            i = graph.labels.index(ref)
        elif ref.isdigit() and 1 <= int(ref) <= graph.m:
            i = int(ref) - 1
        else:
            raise GraphFileError(f"unknown node {ref!r}", loc)
        if out[i] is not None:
            raise GraphFileError(f"node {ref!r} listed twice", loc)
        out[i] = value_fn(r, loc)
    gaps = [graph.labels[i] for i, v in enumerate(out) if v is None]
    if gaps:
        raise GraphFileError(f"no entry for {', '.join(gaps)}", source)
    return out


def parse_pvalues_csv(text: str, graph: Optional[TestingGraph] = None,
                      source: str = "<pvalues>") -> list[Fraction]:
    """Read a ``node,p`` CSV; with ``graph`` given, rows are matched to nodes."""
    def value(r, loc):
        try:
            x = to_fraction(r["p"])
        except (ValueError, ZeroDivisionError):
            raise GraphFileError(f"p-value {r['p']!r} is not an exact rational", loc) from None
        if not 0 <= x <= 1:
            raise GraphFileError(f"p-value {r['p']} outside [0, 1]", loc)
        return x

    return _order_rows(_read_csv(text, source, ("node", "p")), graph, source, value)


def parse_truth_csv(text: str, graph: Optional[TestingGraph] = None,
                    source: str = "<truth>") -> list[bool]:
    """Read a ``node,true_null`` CSV; values are true/false or 1/0."""
    def value(r, loc):
        v = r["true_null"].lower()
        if v in ("true", "1", "yes"):
            return True
        if v in ("false", "0", "no"):
            return False
        raise GraphFileError(f"true_null must be true or false, got {r['true_null']!r}", loc)

    return _order_rows(_read_csv(text, source, ("node", "true_null")), graph, source, value)


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise GraphFileError(f"cannot read: {exc.strerror}", str(path)) from None


def load_pvalues(path, graph: Optional[TestingGraph] = None) -> list[Fraction]:
    return parse_pvalues_csv(_read(path), graph, str(path))


def load_truth(path, graph: Optional[TestingGraph] = None) -> list[bool]:
    return parse_truth_csv(_read(path), graph, str(path))


def format_pvalues_csv(labels: Iterable[str], p: Iterable) -> str:
    lines = ["node,p"]
    for lab, x in zip(labels, p):
        lines.append(f"{lab},{x}")
    return "\n".join(lines) + "\n"
