"""Simulation scenarios and test-statistic sampling.

A scenario describes two arms (control C, experimental E) whose observed
endpoint means are equicorrelated normal, plus optional independent
normal statistics appended after the endpoints.  The statistic for
endpoint ``i`` is the standardised difference

    T_i = (Xbar_i^E - Xbar_i^C) / sqrt((sigma_C,i^2 + sigma_E,i^2) / n)

with one-sided upper-tail p-value ``1 - Phi(T_i)``.

Random numbers are drawn in blocks of :data:`BLOCK` replicates, each block
from its own stream ``SeedSequence(seed, spawn_key=(block,))``, so a
replicate depends only on ``(seed, replicate index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from scipy.special import ndtr

from ..io import GraphFileError, load_graph
from ..procedures import PROCEDURES, ProcedureConfig

__all__ = [
    "BLOCK",
    "ExtraStat",
    "Run",
    "SimulationSpec",
    "parse_spec",
    "load_spec",
    "equicorrelated_root",
    "sample_block",
    "sample_pvalues",
    "sample_test_statistics",
]

BLOCK = 1024


@dataclass(frozen=True)
class ExtraStat:
    label: str
    mean: float
    sd: float = 1.0


@dataclass(frozen=True)
class Run:
    """One procedure with its parameters."""

    procedure: str
    config: ProcedureConfig

    def __post_init__(self):
        if self.procedure not in PROCEDURES:
            raise ValueError(f"unknown procedure {self.procedure!r}; choose from {', '.join(PROCEDURES)}")

    @property
    def name(self) -> str:
        c = self.config
        if self.procedure.startswith("kfwer"):
            return f"{self.procedure} k={c.k}"
        if self.procedure.startswith("fdp"):
            return f"{self.procedure} gamma={float(c.gamma):g}"
        return self.procedure


@dataclass(frozen=True)
class SimulationSpec:
    """Scenario, weighting and procedures for a Monte Carlo study.

    Parameters
    ----------
    mu_c, mu_e, sigma_c, sigma_e : sequences of float
        Per-endpoint means and standard deviations of the two arms.
    rho : float
        Common correlation between endpoint means within an arm.
    n : float
        Divisor applied to the covariance (per-arm sample size).
    extra : tuple of ExtraStat
        Independent normal statistics appended after the endpoints.
    n_reps, seed : int
    runs : tuple of Run
    weighting : object
        A graph or weighting strategy over ``d + len(extra)`` hypotheses.
    labels : tuple of str
    """

    mu_c: tuple
    mu_e: tuple
    sigma_c: tuple
    sigma_e: tuple
    rho: float = 0.0
    n: float = 1.0
    extra: tuple = ()
    n_reps: int = 10_000
    seed: int = 0
    runs: tuple = ()
    weighting: object = None
    labels: tuple = ()
    truth: Optional[tuple] = None
    name: str = "scenario"

    def __post_init__(self):
        d = len(self.mu_c)
        for nm in ("mu_e", "sigma_c", "sigma_e"):
            if len(getattr(self, nm)) != d:
                raise ValueError(f"{nm} has length {len(getattr(self, nm))}, expected {d}")
        if any(s < 0 for s in self.sigma_c + self.sigma_e):
            raise ValueError("standard deviations must be nonnegative")
        if d > 1 and not (-1 / (d - 1) < self.rho < 1):
            raise ValueError(f"rho = {self.rho} does not give a positive definite "
                             f"correlation matrix in dimension {d}")
        if d == 1 and not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        m = self.m
        labels = tuple(self.labels) or tuple(f"H{i + 1}" for i in range(m))
        if len(labels) != m:
            raise ValueError(f"expected {m} labels, got {len(labels)}")
        object.__setattr__(self, "labels", labels)
        if self.weighting is not None and self.weighting.m != m:
            raise ValueError(f"weighting has {self.weighting.m} hypotheses, scenario has {m}")
        if self.truth is not None and len(self.truth) != m:
            raise ValueError(f"truth labels: expected {m}, got {len(self.truth)}")

    @property
    def d(self) -> int:
        return len(self.mu_c)

    @property
    def m(self) -> int:
        return self.d + len(self.extra)

    def true_nulls(self) -> tuple:
        """Stored truth labels, else endpoints with zero mean difference and
        extras with zero mean."""
        if self.truth is not None:
            return tuple(self.truth)
        out = [a == b for a, b in zip(self.mu_c, self.mu_e)]
        out += [e.mean <= 0 for e in self.extra]
        return tuple(out)


def equicorrelated_root(d: int, rho: float) -> np.ndarray:
    """Symmetric square root ``L`` of ``(1 - rho) I + rho 11'``.

    ``L = a I + c 11'`` with ``a = sqrt(1 - rho)`` and
    ``c = (sqrt(1 - rho + d rho) - a) / d``.
    """
    lam = 1 + (d - 1) * rho
    if lam <= 0 or rho >= 1:
        raise ValueError(f"rho = {rho} is not a valid common correlation in dimension {d}")
    a = math.sqrt(1 - rho)
    c = (math.sqrt(lam) - a) / d
    return a * np.eye(d) + c * np.ones((d, d))


def _block_normals(spec: SimulationSpec, block: int) -> np.ndarray:
    ss = np.random.SeedSequence(spec.seed, spawn_key=(block,))
    rng = np.random.Generator(np.random.PCG64(ss))
    return rng.standard_normal((BLOCK, 2 * spec.d + len(spec.extra)))


def _statistics(spec: SimulationSpec, z: np.ndarray) -> np.ndarray:
    d = spec.d
    L = equicorrelated_root(d, spec.rho)
    mu_c, mu_e = np.asarray(spec.mu_c, float), np.asarray(spec.mu_e, float)
    s_c, s_e = np.asarray(spec.sigma_c, float), np.asarray(spec.sigma_e, float)
    scale = 1 / math.sqrt(spec.n)
    xc = mu_c + (z[:, :d] @ L) * s_c * scale
    xe = mu_e + (z[:, d:2 * d] @ L) * s_e * scale
    se = np.sqrt((s_c ** 2 + s_e ** 2) / spec.n)
    t = (xe - xc) / se
    if spec.extra:
        mean = np.array([e.mean for e in spec.extra])
        sd = np.array([e.sd for e in spec.extra])
        t = np.hstack([t, mean + sd * z[:, 2 * d:]])
    return t


def sample_block(spec: SimulationSpec, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    """Statistics and p-values for replicates ``start..stop-1``."""
    if not 0 <= start <= stop:
        raise ValueError("need 0 <= start <= stop")
    parts = []
    b = start // BLOCK
    while b * BLOCK < stop:
        lo = max(start, b * BLOCK) - b * BLOCK
        hi = min(stop, (b + 1) * BLOCK) - b * BLOCK
        parts.append(_block_normals(spec, b)[lo:hi])
        b += 1
    z = np.vstack(parts) if parts else np.empty((0, 2 * spec.d + len(spec.extra)))
    t = _statistics(spec, z)
    return t, ndtr(-t)


def sample_pvalues(spec: SimulationSpec, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
    return sample_block(spec, start, spec.n_reps if stop is None else stop)[1]


def sample_test_statistics(spec: SimulationSpec, rep: int) -> tuple[np.ndarray, np.ndarray]:
    """Statistics and one-sided p-values of replicate ``rep``."""
    t, p = sample_block(spec, rep, rep + 1)
    return t[0], p[0]


# -- scenario files -----------------------------------------------------------


def _floats(doc, key, loc):
    val = doc.get(key)
    if not isinstance(val, list):
        raise GraphFileError(f"'{key}' must be a list of numbers", loc)
    try:
        return tuple(float(x) for x in val)
    except (TypeError, ValueError):
        raise GraphFileError(f"'{key}' must be a list of numbers", loc) from None


def _scalar(doc, key, kind, default, loc):
    if key not in doc:
        return default
    try:
        return kind(doc[key])
    except (TypeError, ValueError):
        raise GraphFileError(f"'{key}' = {doc[key]!r} is not a valid {kind.__name__}", loc) from None


def _weighting_from(doc, base: Path, loc):
    from .gatekeeping import GatekeepingSchedule

    if "graph" in doc:
        path = Path(doc["graph"])
        if not path.is_absolute():
            path = base / path
        return load_graph(path)
    w = doc.get("weighting")
    if isinstance(w, dict) and w.get("type") == "gatekeeping":
        return GatekeepingSchedule(int(w.get("primaries", 9)), int(w.get("required", 6)))
    raise GraphFileError("give either 'graph: <file>' or 'weighting: {type: gatekeeping, ...}'", loc)


def parse_spec(text: str, base_dir=".", source: str = "<spec>", overrides: Optional[dict] = None) -> SimulationSpec:
    """Parse a scenario document.

    ``runs`` is a list of ``{procedure, k, gamma, delta, nmax}`` entries;
    top-level ``alpha`` and ``delta`` are defaults for every run.
    """
    try:
        doc = yaml.load(text, Loader=yaml.BaseLoader)
    except yaml.YAMLError as exc:
        raise GraphFileError(f"invalid YAML ({exc})", source) from None
    if not isinstance(doc, dict):
        raise GraphFileError("top level must be a mapping", source)
    doc.update(overrides or {})
    mu_c = _floats(doc, "mu_c", source)
    mu_e = _floats(doc, "mu_e", source)
    s_c = _floats(doc, "sigma_c", source)
    s_e = _floats(doc, "sigma_e", source)
    extra = []
    for n, e in enumerate(doc.get("extra_stats") or []):
        try:
            extra.append(ExtraStat(str(e.get("label", f"X{n + 1}")), float(e["mean"]), float(e.get("sd", 1))))
        except (AttributeError, KeyError, TypeError, ValueError):
            raise GraphFileError("extra_stats entries need a numeric 'mean'", f"{source}:extra_stats[{n}]") from None
    alpha = doc.get("alpha", "0.05")
    delta = doc.get("delta", "1")
    runs = []
    for n, r in enumerate(doc.get("runs") or []):
        loc = f"{source}:runs[{n}]"
        if not isinstance(r, dict) or "procedure" not in r:
            raise GraphFileError("each run needs a 'procedure'", loc)
        try:
            cfg = ProcedureConfig(
                alpha=r.get("alpha", alpha), k=int(r.get("k", 1)), delta=r.get("delta", delta),
                gamma=r.get("gamma", "0"),
                nmax=None if r.get("nmax", "unbounded") == "unbounded" else int(r["nmax"]))
            runs.append(Run(r["procedure"], cfg))
        except (TypeError, ValueError) as exc:
            raise GraphFileError(str(exc), loc) from None
    truth = doc.get("truth")
    if truth is not None:
        truth = tuple(str(x).lower() in ("true", "1", "yes") for x in truth)
    weighting = _weighting_from(doc, Path(base_dir), source)
    labels = doc.get("labels") or getattr(weighting, "labels", ())
    try:
        return SimulationSpec(
            mu_c=mu_c, mu_e=mu_e, sigma_c=s_c, sigma_e=s_e,
            rho=_scalar(doc, "rho", float, 0.0, source),
            n=_scalar(doc, "n", float, 1.0, source),
            extra=tuple(extra),
            n_reps=_scalar(doc, "n_reps", int, 10_000, source),
            seed=_scalar(doc, "seed", int, 0, source),
            runs=tuple(runs), weighting=weighting, labels=tuple(labels), truth=truth,
            name=str(doc.get("name", Path(source).stem)),
        )
    except ValueError as exc:
        raise GraphFileError(str(exc), source) from None


def load_spec(path, overrides: Optional[dict] = None) -> SimulationSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphFileError(f"cannot read: {exc.strerror}", str(path)) from None
    return parse_spec(text, path.parent, str(path), overrides)
