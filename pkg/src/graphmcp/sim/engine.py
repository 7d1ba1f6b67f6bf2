"""Vectorised procedures over many p-value vectors at once.

Subset weights are tabulated once per weighting strategy as a float array
``W[mask, i]`` indexed by the bitmask of live hypotheses, which makes every
step of every procedure a handful of array operations.  The tables hold the
finite part of the exact weights; the infinitesimal part only matters on
exact ties between a p-value and a threshold, which continuous p-values hit
with probability zero.

The adjusted-augmented procedures reject exactly what the augmented ones
reject with an unbounded augmentation level, and the operative procedure
with unbounded ``nmax`` is the generalised one; both are routed that way.
The operative procedure with finite ``nmax`` falls back to the exact
per-replicate implementation.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Optional

import numpy as np

from ..graph import as_weighting
from ..procedures import ProcedureConfig, run_procedure
from ..procedures.fdp import augmentation_budget

__all__ = ["MAX_TABLE_M", "WeightTables", "reject_matrix"]

MAX_TABLE_M = 14
_BIG = np.finfo(float).max


class WeightTables:
    """Float subset-weight tables for one weighting strategy.

    ``base`` is ``W[mask, i]``; :meth:`generalised` returns
    ``T_k[mask, i] = min over (k-1)-subsets J of the complement of mask``
    of ``W[mask | J, i]``.
    """

    def __init__(self, graph):
        self.wt = as_weighting(graph)
        self.m = m = self.wt.m
        if m > MAX_TABLE_M:
            raise ValueError(f"weight tables limited to m <= {MAX_TABLE_M}, got {m}")
        self.full = (1 << m) - 1
        W = np.zeros((1 << m, m))
        for mask in range(1, 1 << m):
            live = [i for i in range(m) if mask >> i & 1]
            w = self.wt.weights(live)
            for i in live:
                W[mask, i] = float(w[i].a)
        self.base = W
        self._gen = {1: W}
        self.bits = np.array([1 << i for i in range(m)], dtype=np.int64)

    def generalised(self, k: int) -> np.ndarray:
        if k in self._gen:
            return self._gen[k]
        m, W = self.m, self.base
        T = np.full_like(W, np.inf)
        for mask in range(1 << m):
            comp = [j for j in range(m) if not mask >> j & 1]
            if len(comp) < k - 1:
                continue
            for J in itertools.combinations(comp, k - 1):
                sup = mask
                for j in J:
                    sup |= 1 << j
                np.minimum(T[mask], W[sup], out=T[mask])
        T[~np.isfinite(T)] = 0.0
        self._gen[k] = T
        return T

    def live_bits(self, live: np.ndarray) -> np.ndarray:
        return (live[:, None] & self.bits) != 0


def _sequential(tab: WeightTables, p, live, level, budget=None):
    """Sequential rejections at ``level`` (``None`` = unbounded).

    ``budget`` is an optional per-row cap.  Returns the new live masks.
    """
    live = live.copy()
    left = None if budget is None else budget.astype(np.int64).copy()
    for _ in range(tab.m):
        active = live != 0
        if left is not None:
            active &= left > 0
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        lv = live[idx]
        w = tab.base[lv]
        bits = tab.live_bits(lv)
        pp = p[idx]
        ok = bits if level is None else bits & (pp <= w * level)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0, pp / np.where(w > 0, w, 1.0), _BIG)
        key = np.where(ok, ratio, np.inf)
        j = np.argmin(key, axis=1)
        hit = np.isfinite(key[np.arange(len(idx)), j])
        if not hit.any():
            break
        sel = idx[hit]
        live[sel] &= ~(np.int64(1) << j[hit].astype(np.int64))
        if left is not None:
            left[sel] -= 1
    return live


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x = x >> 1
    return c


def _generalised(tab: WeightTables, p, k: int, alpha: float, delta) -> np.ndarray:
    m, full = tab.m, tab.full
    n = len(p)
    level = k * alpha
    w0 = tab.base[full]
    first = p <= w0 * level
    rejected = (first * tab.bits).sum(axis=1).astype(np.int64)
    live = np.full(n, full, dtype=np.int64) & ~rejected
    r = first.sum(axis=1)
    stop = (r < k) | (live == 0)
    out = live.copy()
    sub = stop & (r < k - 1) & (live != 0)
    if sub.any():
        out[sub] = _sequential(tab, p[sub], live[sub], delta, budget=(k - 1 - r[sub]))
    go = ~stop
    if go.any():
        T = tab.generalised(k)
        lv = live[go]
        pp = p[go]
        for _ in range(m):
            new = tab.live_bits(lv) & (pp <= T[lv] * level)
            if not new.any():
                break
            lv = lv & ~(new * tab.bits).sum(axis=1).astype(np.int64)
        out[go] = lv
    return out


def _to_matrix(tab, live) -> np.ndarray:
    return ~tab.live_bits(live)


def _float_level(x) -> Optional[float]:
    return None if x is None else float(x)


def reject_matrix(graph_or_tables, p: np.ndarray, procedure: str, cfg: ProcedureConfig) -> np.ndarray:
    """Boolean ``(n, m)`` matrix of rejections, one row per p-value vector."""
    tab = graph_or_tables if isinstance(graph_or_tables, WeightTables) else WeightTables(graph_or_tables)
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[1] != tab.m:
        raise ValueError(f"p must have shape (n, {tab.m})")
    n = len(p)
    alpha = float(cfg.alpha)
    delta = _float_level(cfg.delta)
    full = np.full(n, tab.full, dtype=np.int64)
    if procedure == "kfwer-aug-adj":
        procedure, delta = "kfwer-aug", None
    elif procedure == "fdp-aug-adj":
        procedure, delta = "fdp-aug", None
    elif procedure == "kfwer-operative" and cfg.nmax is None:
        procedure = "kfwer-gen"
    if procedure == "fwer" or (procedure in ("kfwer-aug", "kfwer-aug-adj", "kfwer-gen", "kfwer-operative")
                               and cfg.k == 1) or (procedure.startswith("fdp") and cfg.gamma == 0):
        return _to_matrix(tab, _sequential(tab, p, full, alpha))
    if procedure == "kfwer-aug":
        live = _sequential(tab, p, full, alpha)
        budget = np.full(n, cfg.k - 1)
        return _to_matrix(tab, _sequential(tab, p, live, delta, budget))
    if procedure == "kfwer-gen":
        return _to_matrix(tab, _generalised(tab, p, cfg.k, alpha, delta))
    if procedure == "fdp-aug":
        live = _sequential(tab, p, full, alpha)
        r = tab.m - _popcount(live)
        D = np.array([augmentation_budget(cfg.gamma, x) for x in range(tab.m + 1)])
        return _to_matrix(tab, _sequential(tab, p, live, delta, D[r]))
    if procedure == "fdp-gen":
        gamma = cfg.gamma
        out = np.zeros(n, dtype=np.int64)
        done = np.zeros(n, dtype=bool)
        k = 1
        while not done.all():
            idx = np.nonzero(~done)[0]
            live = _generalised(tab, p[idx], k, alpha, delta)
            r = tab.m - _popcount(live)
            # exact stopping rule |R_k| < k / gamma - 1
            stops = np.array([x < Fraction(k) / gamma - 1 for x in range(tab.m + 1)])
            fin = stops[r]
            out[idx[fin]] = live[fin]
            done[idx[fin]] = True
            k += 1
        return _to_matrix(tab, out)
    return _exact_rows(tab, p, procedure, cfg)


def _exact_rows(tab: WeightTables, p: np.ndarray, procedure: str, cfg: ProcedureConfig) -> np.ndarray:
    out = np.zeros(p.shape, dtype=bool)
    for row, pv in enumerate(p):
        res = run_procedure(procedure, tab.wt, [Fraction(float(x)) for x in pv], cfg)
        for i in res.rejected:
            out[row, i] = True
    return out
