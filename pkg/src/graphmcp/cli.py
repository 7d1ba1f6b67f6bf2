"""Command-line interface.

Exit status is 0 on success, 2 on bad input (unreadable or invalid files,
missing or invalid flags) and 1 on an internal failure or a case study
whose results differ from the stored expectations.

File arguments that do not exist are looked up among the bundled data
files, so ``graphmcp run atmosphere.graph atmosphere.pvals ...`` works from
any directory.  Relative ``--out`` paths are placed under ``$GRAPHMCP_OUT``
when that variable is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .casestudy import CASE_STUDIES, data_path, run_case_study
from .graph import GraphState
from .io import GraphFileError, export_dot, load_graph, load_pvalues
from .procedures import PROCEDURES, ProcedureConfig, adjusted_pvalues, run_procedure
from .procedures.fdp import FdpResult
from .weight import format_weight

OUT_ENV = "GRAPHMCP_OUT"

_NEEDS = {
    "kfwer-aug": ("k",),
    "kfwer-aug-adj": ("k",),
    "kfwer-gen": ("k",),
    "kfwer-operative": ("k",),
    "fdp-aug": ("gamma",),
    "fdp-aug-adj": ("gamma",),
    "fdp-gen": ("gamma",),
}


class UsageError(Exception):
    pass


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    try:
        return data_path(p.name) if p.parent == Path(".") else p
    except GraphFileError:
        return p


def _out_path(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get(OUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: Optional[str]):
    p = _out_path(out)
    if p is None:
        sys.stdout.write(text)
    else:
        p.write_text(text)
        print(f"wrote {p}")


def _dec(x: Fraction) -> str:
    return f"{float(x):.6g}"


def _load(args):
    g = load_graph(_resolve(args.graph))
    p = load_pvalues(_resolve(args.pvalues), g)
    return g, p


# -- run ----------------------------------------------------------------------


def _config(args) -> ProcedureConfig:
    missing = [f"--{f}" for f in _NEEDS.get(args.procedure, ()) if getattr(args, f) is None]
    if missing:
        raise UsageError(f"procedure {args.procedure} requires {', '.join(missing)}")
    return ProcedureConfig(
        alpha=args.alpha,
        k=args.k if args.k is not None else 1,
        delta=args.delta,
        gamma=args.gamma if args.gamma is not None else "0",
        nmax=None if args.nmax in (None, "unbounded", "inf") else int(args.nmax),
    )


def run_report(graph, p, procedure: str, cfg: ProcedureConfig) -> dict:
    """Machine-readable report of one procedure run (1-based node ids)."""
    res = run_procedure(procedure, graph, p, cfg)
    trace = res.trace if isinstance(res, FdpResult) else res
    labels = trace.labels
    steps = []
    for n, s in enumerate(trace.steps, 1):
        steps.append({
            "step": n,
            "node": s.node + 1,
            "label": labels[s.node],
            "stage": s.stage,
            "p": str(p[s.node]),
            "threshold": None if s.threshold is None else format_weight(s.threshold),
            "threshold_decimal": None if s.threshold is None else _dec(s.threshold.a),
        })
    rep = {
        "procedure": procedure,
        "config": {
            "alpha": str(cfg.alpha), "k": cfg.k,
            "delta": "unbounded" if cfg.delta is None else str(cfg.delta),
            "gamma": str(cfg.gamma), "nmax": "unbounded" if cfg.nmax is None else cfg.nmax,
        },
        "steps": steps,
        "rejected": [labels[i] for i in sorted(trace.rejected)],
        "not_rejected": [labels[i] for i in sorted(trace.live)],
    }
    if procedure in ("fwer", "kfwer-aug-adj", "fdp-aug-adj"):
        adj = adjusted_pvalues(graph, p)
        rep["adjusted_p"] = {labels[i]: str(adj[i]) for i in range(len(labels))}
    if isinstance(res, FdpResult):
        rep["fdp"] = {
            "D": res.budget,
            "k_sequence": res.k_sequence,
            "fdr_bound_asymptotic": str(res.fdr.asymptotic),
            "fdr_bound_finite_sample": str(res.fdr.finite_sample),
            "finite_sample_bound_smaller": res.fdr.finite_preferred,
        }
    return rep


def format_run_report(rep: dict) -> str:
    c = rep["config"]
    lines = [f"procedure {rep['procedure']}  alpha={c['alpha']} k={c['k']} delta={c['delta']} "
             f"gamma={c['gamma']} nmax={c['nmax']}"]
    if rep["steps"]:
        lines.append(f"{'step':>4}  {'node':<8} {'stage':<13} {'p':>12}  threshold")
        for s in rep["steps"]:
            thr = "-" if s["threshold"] is None else f"{s['threshold']} ({s['threshold_decimal']})"
            lines.append(f"{s['step']:>4}  {s['label']:<8} {s['stage']:<13} {s['p']:>12}  {thr}")
    lines.append("rejected: " + (", ".join(rep["rejected"]) or "none"))
    if "adjusted_p" in rep:
        lines.append("adjusted p-values:")
        for lab, v in rep["adjusted_p"].items():
            lines.append(f"  {lab:<8} {v:>14}  ({_dec(Fraction(v))})")
    if "fdp" in rep:
        f = rep["fdp"]
        if rep["procedure"] != "fdp-gen":
            lines.append(f"augmentation budget D = {f['D']}")
        else:
            lines.append("k sequence: " + ", ".join(str(k) for k in f["k_sequence"]))
        lines.append(f"FDR bounds: asymptotic {f['fdr_bound_asymptotic']}, finite-sample "
                     f"{f['fdr_bound_finite_sample']}"
                     + (" (smaller)" if f["finite_sample_bound_smaller"] else ""))
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    cfg = _config(args)
    g, p = _load(args)
    rep = run_report(g, p, args.procedure, cfg)
    text = json.dumps(rep, indent=2) + "\n" if args.format == "json" else format_run_report(rep)
    _emit(text, args.out)
    return 0


# -- adjust / weights / export -------------------------------------------------


def cmd_adjust(args) -> int:
    g, p = _load(args)
    adj = adjusted_pvalues(g, p)
    lines = ["node,label,p,adjusted,adjusted_decimal"]
    for i, lab in enumerate(g.labels):
        lines.append(f"{i + 1},{lab},{p[i]},{adj[i]},{_dec(adj[i])}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _subset(g, text: str) -> list[int]:
    if text.strip().lower() in ("all", "all-nodes"):
        return list(range(g.m))
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.isdigit():
            i = int(tok)
            if not 1 <= i <= g.m:
                raise UsageError(f"node {i} outside 1..{g.m}")
            out.append(i - 1)
        elif tok in g.labels:
            out.append(g.labels.index(tok))
        else:
            raise UsageError(f"unknown node {tok!r}")
    if not out:
        raise UsageError("empty subset")
    return sorted(set(out))


def cmd_weights(args) -> int:
    g = load_graph(_resolve(args.graph))
    J = _subset(g, args.subset)
    w = g.weighting().weights(J)
    lines = ["node,label,weight,decimal"]
    for i in J:
        lines.append(f"{i + 1},{g.labels[i]},{format_weight(w[i])},{_dec(w[i].a)}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_export(args) -> int:
    g = load_graph(_resolve(args.graph))
    target = g
    if args.remove:
        state = GraphState.initial(g)
        for i in _subset(g, args.remove):
            state = state.remove(i)
        target = state
    _emit(export_dot(target), args.dot)
    return 0


# -- simulate / casestudy -----------------------------------------------------


def cmd_simulate(args) -> int:
    from .io import load_truth
    from .sim import estimate_error_rates, estimate_marginal_power, load_spec

    overrides = {}
    if args.reps is not None:
        overrides["n_reps"] = str(args.reps)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    spec = load_spec(_resolve(args.spec), overrides)
    if args.truth:
        truth = load_truth(_resolve(args.truth))
        if len(truth) != spec.m:
            raise UsageError(f"truth file has {len(truth)} labels, scenario has {spec.m} hypotheses")
        report = estimate_error_rates(spec, truth)
    elif spec.truth is not None:
        report = estimate_error_rates(spec)
    else:
        report = estimate_marginal_power(spec)
    out = _out_path(args.out) if args.out else None
    if out is None and os.environ.get(OUT_ENV):
        out = _out_path(f"{spec.name}_power.csv")
    sys.stdout.write(report.to_table())
    if out is not None:
        out.write_text(report.to_csv())
        print(f"wrote {out}")
    return 0


def cmd_casestudy(args) -> int:
    checks, report = run_case_study(args.name, args.reps)
    if report is not None:
        sys.stdout.write(report.to_table())
    for c in checks:
        print(c.line())
    failed = sum(not c.ok for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 0 if failed == 0 else 1


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphmcp", description="Graphical multiple testing procedures.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="apply a procedure to a graph and p-values")
    r.add_argument("graph")
    r.add_argument("pvalues")
    r.add_argument("--procedure", required=True, choices=PROCEDURES)
    r.add_argument("--alpha", required=True)
    r.add_argument("--k", type=int)
    r.add_argument("--gamma")
    r.add_argument("--delta", default="1", help="augmentation level, a number or 'unbounded' (default 1)")
    r.add_argument("--nmax", help="subset budget for kfwer-operative (default unbounded)")
    r.add_argument("--format", choices=("text", "json"), default="text")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("adjust", help="adjusted p-values")
    a.add_argument("graph")
    a.add_argument("pvalues")
    a.add_argument("--out")
    a.set_defaults(func=cmd_adjust)

    w = sub.add_parser("weights", help="weights of an intersection hypothesis")
    w.add_argument("graph")
    w.add_argument("--subset", required=True, help="comma-separated ids or labels, or 'all'")
    w.add_argument("--out")
    w.set_defaults(func=cmd_weights)

    e = sub.add_parser("export", help="write the graph in DOT format")
    e.add_argument("graph")
    e.add_argument("--dot", help="output file (default stdout)")
    e.add_argument("--remove", help="nodes to remove first, comma-separated")
    e.set_defaults(func=cmd_export)

    s = sub.add_parser("simulate", help="Monte Carlo power and error rates")
    s.add_argument("spec")
    s.add_argument("--truth", help="node,true_null CSV; adds error-rate estimates")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="CSV report path")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("casestudy", help="replay a bundled case study")
    c.add_argument("name", choices=CASE_STUDIES)
    c.add_argument("--reps", type=int, help="replications for simulation-based checks")
    c.set_defaults(func=cmd_casestudy)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, GraphFileError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"graphmcp: error: {msg}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report, do not dump a traceback
        print(f"graphmcp: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
