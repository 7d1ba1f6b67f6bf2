"""Replays of the bundled case studies against their stored expectations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .io import GraphFileError, load_graph, load_pvalues
from .procedures import ProcedureConfig, run_procedure
from .sim.gatekeeping import GatekeepingSchedule, gatekeeping_entangled
from .weight import Weight, format_weight, parse_weight

__all__ = ["CASE_STUDIES", "Check", "data_path", "run_case_study", "prerelax_property_checks"]

CASE_STUDIES = ("pd", "atmosphere", "prerelax")


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}" + (f"  ({self.detail})" if self.detail else "")


def data_path(name: str) -> Path:
    """Path of a bundled data file."""
    p = Path(str(resources.files("graphmcp") / "data" / name))
    if not p.exists():
        raise GraphFileError("no such bundled file", name)
    return p


def _expected(name: str) -> dict:
    return yaml.load(data_path(f"{name}.expected").read_text(), Loader=yaml.BaseLoader)


def _cfg(case: dict, doc: dict) -> ProcedureConfig:
    return ProcedureConfig(
        alpha=case.get("alpha", doc["alpha"]),
        k=int(case.get("k", 1)),
        delta=case.get("delta", doc.get("delta", "1")),
        gamma=case.get("gamma", "0"),
    )


def _rejection_cases(doc: dict) -> list[Check]:
    out = []
    graphs = {}
    for case in doc["cases"]:
        gname = case.get("graph", doc.get("graph"))
        if gname not in graphs:
            g = load_graph(data_path(gname))
            graphs[gname] = (g, load_pvalues(data_path(case.get("pvalues", doc["pvalues"])), g))
        g, p = graphs[gname]
        cfg = _cfg(case, doc)
        res = run_procedure(case["procedure"], g, p, cfg)
        got = set(res.rejected_labels)
        want = set(case["reject"])
        par = f"k={cfg.k}" if "k" in case else (f"gamma={case['gamma']}" if "gamma" in case else "")
        name = f"{gname} {case['procedure']} {par}".strip()
        detail = "" if got == want else f"got {sorted(got)}, expected {sorted(want)}"
        out.append(Check(name, got == want, detail))
    return out


def _atmosphere_weights(doc: dict) -> list[Check]:
    g = load_graph(data_path(doc["graph"]))
    table = g.weighting()
    out = []
    for entry in doc.get("weights", []):
        live = [g.index(x) for x in entry["live"]]
        w = table.weights(live)
        bad = []
        for lab, val in entry["expect"].items():
            got = w[g.index(lab)].a
            if got != parse_weight(val).a:
                bad.append(f"{lab}={format_weight(Weight(got))} (expected {val})")
        out.append(Check(f"weights on {{{', '.join(entry['live'])}}}", not bad, "; ".join(bad)))
    return out


def _prerelax_weights(doc: dict) -> list[Check]:
    sched = GatekeepingSchedule(9, 6)
    ent = gatekeeping_entangled(9, 6)
    out = []
    for entry in doc["weights"]:
        u = int(entry["live_primaries"])
        live = list(range(u)) + [9]
        wp, ws = sched.schedule(u)
        ew = ent.weights(live)
        want_p, want_s = parse_weight(entry["primary"]).a, parse_weight(entry["secondary"]).a
        ent_p = ew[0].a if u else want_p
        ok = wp == want_p and ws == want_s and ent_p == want_p and ew[9].a == want_s
        detail = "" if ok else (f"schedule ({wp}, {ws}), entangled ({ent_p}, {ew[9].a}), "
                                f"expected ({want_p}, {want_s})")
        out.append(Check(f"gatekeeping weights with {u} live primaries", ok, detail))
    return out


def prerelax_property_checks(report) -> list[Check]:
    """Qualitative power-table patterns for the gatekeeping scenario.

    * augmented power is at least generalised power (within 3 SE) for every
      hypothesis at every k and gamma;
    * the generalised rejection rate of the true null H9 is at most
      0.10 + 3 SE;
    * H6 and H7 have power at least 0.99 under every run;
    * generalised FDP power for H10 at gamma = 0.3 is below that at
      gamma = 0.1 by more than 3 SE.
    """
    est = {(e.run.procedure, e.run.config.k if e.run.procedure.startswith("kfwer") else e.run.config.gamma): e
           for e in report.estimates}
    labels = list(report.labels)
    i9, i6, i7, i10 = (labels.index(x) for x in ("H9", "H6", "H7", "H10"))
    out = []
    worst = None
    for (proc, par), gen in est.items():
        if not proc.endswith("-gen"):
            continue
        aug = est.get((proc.replace("-gen", "-aug"), par))
        if aug is None:
            continue
        for i in range(len(labels)):
            se = math.sqrt(aug.power_se[i] ** 2 + gen.power_se[i] ** 2)
            slack = aug.power[i] - gen.power[i] + 3 * se
            if worst is None or slack < worst[0]:
                worst = (slack, f"{proc} {par} {labels[i]}: aug {aug.power[i]:.4f} vs gen {gen.power[i]:.4f}")
    out.append(Check("augmented power >= generalised power (3 SE)", worst is not None and worst[0] >= 0,
                     worst[1] if worst else "no paired runs"))
    bad = []
    for (proc, par), e in est.items():
        if proc.endswith("-gen") and e.power[i9] > 0.10 + 3 * e.power_se[i9]:
            bad.append(f"{proc} {par}: {e.power[i9]:.4f}")
    out.append(Check("generalised H9 rate <= 0.10 + 3 SE", not bad, "; ".join(bad)))
    low = [f"{e.run.name} {labels[i]}: {e.power[i]:.4f}" for e in report.estimates for i in (i6, i7)
           if e.power[i] < 0.99]
    out.append(Check("H6 and H7 power >= 0.99", not low, "; ".join(low)))
    g1 = est.get(("fdp-gen", Fraction(1, 10)))
    g3 = est.get(("fdp-gen", Fraction(3, 10)))
    if g1 is None or g3 is None:
        out.append(Check("generalised H10 power falls from gamma 0.1 to 0.3", False, "runs missing"))
    else:
        diff = g1.power[i10] - g3.power[i10]
        se = math.sqrt(g1.power_se[i10] ** 2 + g3.power_se[i10] ** 2)
        out.append(Check("generalised H10 power falls from gamma 0.1 to 0.3", diff > 3 * se,
                         f"{g1.power[i10]:.4f} -> {g3.power[i10]:.4f}, 3 SE = {3 * se:.4f}"))
    return out


def run_case_study(name: str, n_reps: Optional[int] = None) -> tuple[list[Check], Optional[object]]:
    """Run one case study; returns the checks and (for prerelax) the power report."""
    if name not in CASE_STUDIES:
        raise KeyError(f"unknown case study {name!r}; choose from {', '.join(CASE_STUDIES)}")
    doc = _expected(name)
    if name == "pd":
        return _rejection_cases(doc), None
    if name == "atmosphere":
        return _rejection_cases(doc) + _atmosphere_weights(doc), None
    from .sim import estimate_marginal_power, load_spec

    checks = _prerelax_weights(doc)
    overrides = {"n_reps": str(n_reps)} if n_reps else None
    spec = load_spec(data_path(doc["scenario"]), overrides)
    report = estimate_marginal_power(spec)
    return checks + prerelax_property_checks(report), report
