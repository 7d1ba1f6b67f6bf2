"""Monte Carlo estimates of marginal power and error rates."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import WeightTables, reject_matrix
from .spec import BLOCK, Run, SimulationSpec, sample_pvalues

__all__ = [
    "RunEstimate",
    "PowerReport",
    "simulate_rejections",
    "estimate_marginal_power",
    "estimate_error_rates",
]

CHUNK = 32 * BLOCK


def _se(f: float, n: int) -> float:
    return math.sqrt(max(f * (1 - f), 0.0) / n)


@dataclass
class RunEstimate:
    """Counts accumulated for one procedure run.

    Error-rate fields are ``None`` unless truth labels were supplied.
    """

    run: Run
    n_reps: int
    rejections: np.ndarray
    kfwer_events: Optional[int] = None
    fdp_tail_events: Optional[int] = None
    fdp_sum: Optional[float] = None
    fdp_sq_sum: Optional[float] = None

    @property
    def power(self) -> np.ndarray:
        return self.rejections / self.n_reps

    @property
    def power_se(self) -> np.ndarray:
        f = self.power
        return np.sqrt(f * (1 - f) / self.n_reps)

    @property
    def kfwer(self) -> Optional[tuple[float, float]]:
        """Estimated ``P(V >= k)`` and its standard error."""
        if self.kfwer_events is None:
            return None
        f = self.kfwer_events / self.n_reps
        return f, _se(f, self.n_reps)

    @property
    def fdp_tail(self) -> Optional[tuple[float, float]]:
        """Estimated ``P(FDP > gamma)`` and its standard error."""
        if self.fdp_tail_events is None:
            return None
        f = self.fdp_tail_events / self.n_reps
        return f, _se(f, self.n_reps)

    @property
    def fdr(self) -> Optional[tuple[float, float]]:
        """Estimated ``E[FDP]`` and its Monte Carlo standard error."""
        if self.fdp_sum is None:
            return None
        n = self.n_reps
        mean = self.fdp_sum / n
        var = max(self.fdp_sq_sum / n - mean * mean, 0.0)
        return mean, math.sqrt(var / n)


@dataclass
class PowerReport:
    spec: SimulationSpec
    estimates: list = field(default_factory=list)

    @property
    def labels(self) -> tuple:
        return self.spec.labels

    def __getitem__(self, name) -> RunEstimate:
        for e in self.estimates:
            if e.run.name == name or e.run == name:
                return e
        raise KeyError(name)

    def to_csv(self) -> str:
        """One row per (run, metric, hypothesis); fixed float formatting."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", "procedure", "alpha", "k", "gamma", "delta", "metric", "hypothesis", "estimate", "se"])
        for e in self.estimates:
            c = e.run.config
            head = [e.run.name, e.run.procedure, str(c.alpha), c.k, str(c.gamma),
                    "unbounded" if c.delta is None else str(c.delta)]
            for lab, f, s in zip(self.labels, e.power, e.power_se):
                w.writerow(head + ["power", lab, f"{f:.6f}", f"{s:.6f}"])
            for metric in ("kfwer", "fdp_tail", "fdr"):
                val = getattr(e, metric)
                if val is not None:
                    w.writerow(head + [metric, "", f"{val[0]:.6f}", f"{val[1]:.6f}"])
        return buf.getvalue()

    def to_table(self) -> str:
        """Marginal powers in percent, one line per run."""
        s = self.spec
        lines = [f"scenario {s.name}: n_reps={s.n_reps} seed={s.seed} rho={s.rho:g} n={s.n:g}"]
        width = max([len(e.run.name) for e in self.estimates] + [3])
        lines.append(" " * width + "  " + " ".join(f"{lab:>6}" for lab in self.labels))
        for e in self.estimates:
            lines.append(f"{e.run.name:<{width}}  " + " ".join(f"{100 * f:6.1f}" for f in e.power))
        errs = [e for e in self.estimates if e.kfwer is not None]
        if errs:
            lines.append("")
            lines.append(f"{'run':<{width}}  {'P(V>=k)':>9} {'P(FDP>g)':>9} {'E[FDP]':>9}")
            for e in errs:
                lines.append(f"{e.run.name:<{width}}  {e.kfwer[0]:9.4f} {e.fdp_tail[0]:9.4f} {e.fdr[0]:9.4f}")
        return "\n".join(lines) + "\n"


def simulate_rejections(spec: SimulationSpec, run: Run, start: int = 0, stop: Optional[int] = None,
                        tables: Optional[WeightTables] = None) -> np.ndarray:
    """Rejection matrix for replicates ``start..stop-1`` of ``spec``."""
    tables = tables or WeightTables(spec.weighting)
    p = sample_pvalues(spec, start, spec.n_reps if stop is None else stop)
    return reject_matrix(tables, p, run.procedure, run.config)


def _simulate(spec: SimulationSpec, truth: Optional[Sequence[bool]], runs=None) -> PowerReport:
    runs = tuple(runs) if runs is not None else spec.runs
    if not runs:
        raise ValueError("scenario lists no runs")
    if spec.weighting is None:
        raise ValueError("scenario has no graph or weighting")
    tables = WeightTables(spec.weighting)
    m, n = spec.m, spec.n_reps
    null = None
    if truth is not None:
        if len(truth) != m:
            raise ValueError(f"truth labels: expected {m}, got {len(truth)}")
        null = np.asarray(truth, dtype=bool)
    est = [RunEstimate(r, n, np.zeros(m, dtype=np.int64)) for r in runs]
    tails = {}
    if null is not None:
        for e in est:
            e.kfwer_events, e.fdp_tail_events, e.fdp_sum, e.fdp_sq_sum = 0, 0, 0.0, 0.0
            # FDP > gamma decided exactly as V > gamma * max(R, 1)
            g = e.run.config.gamma
            tails[id(e)] = np.array([[v > g * max(r, 1) for r in range(m + 1)] for v in range(m + 1)])
    for start in range(0, n, CHUNK):
        stop = min(n, start + CHUNK)
        p = sample_pvalues(spec, start, stop)
        for e in est:
            rej = reject_matrix(tables, p, e.run.procedure, e.run.config)
            e.rejections += rej.sum(axis=0)
            if null is None:
                continue
            V = (rej & null).sum(axis=1)
            R = rej.sum(axis=1)
            fdp = V / np.maximum(R, 1)
            k = e.run.config.k if e.run.procedure.startswith("kfwer") else 1
            e.kfwer_events += int((V >= k).sum())
            e.fdp_tail_events += int(tails[id(e)][V, R].sum())
            e.fdp_sum += float(fdp.sum())
            e.fdp_sq_sum += float((fdp ** 2).sum())
    return PowerReport(spec, est)


def estimate_marginal_power(spec: SimulationSpec, runs=None) -> PowerReport:
    """Marginal rejection frequency of each hypothesis under each run."""
    return _simulate(spec, None, runs)


def estimate_error_rates(spec: SimulationSpec, truth: Optional[Sequence[bool]] = None, runs=None) -> PowerReport:
    """Power plus k-FWER, FDP tail probability and FDR against ``truth``.

    ``truth[i]`` is true when hypothesis ``i`` is a true null; by default
    the labels stored in (or implied by) the scenario are used.
    """
    if truth is None:
        truth = spec.true_nulls()
    return _simulate(spec, truth, runs)
