"""Independent brute-force check of the closed-form diversity curve.

The closed-form curve is the value of a small optimization: minimize the
probability-decay cost of a joint fade pattern over all patterns deep enough
to cause outage at multiplexing gain ``r``, given that the transmitter boosts
power based on what its channel estimate shows.  This module solves that
optimization directly — by exhaustive search over a fade-depth grid, and by
enumerating the finitely many vertices of each fade-cardinality polytope —
with none of the piecewise closed-form algebra, so agreement between the two
routes is meaningful evidence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import eigen_decay_weights
from .tradeoff import candidate_indices, diversity_boost

__all__ = [
    "GridOracleResult",
    "fade_weights",
    "grid_oracle",
    "grid_oracle_curve",
    "outage_condition",
    "subset_oracle",
]

_MAX_RX = 4
_MAX_STEP = 0.05
_EDGE_TOL = 1e-12
# Strictness dust margin: a pattern whose delivered rate ties the probe to
# within float dust must stay infeasible, exactly as in exact arithmetic,
# even when rounding pushed the computed rate a few ulp below the probe.
_STRICT_MARGIN = 1e-12


def fade_weights(cfg):
    """Probability-decay weight of each ordered fade depth.

    Entry ``j`` (ascending, 1-based) multiplies the ``j``-th largest fade
    depth: the deepest fade is the cheapest, at weight ``m - n + 1``.
    """
    return eigen_decay_weights(cfg.m_tx, cfg.n_rx)


def outage_condition(cfg, v, r):
    """Whether fade depths ``v`` force an outage at multiplexing gain ``r``.

    ``v`` lists per-direction fade depths sorted deepest first.  The
    transmitter's estimate tracks each depth only down to ``alpha``, so the
    power boost it earns is the decay-weighted sum of the capped depths; a
    direction then delivers rate ``(1 - v + boost)^+`` and outage means the
    depths leave strictly less than ``r`` in total.
    """
    v = np.asarray(v, dtype=float)
    n = cfg.n_rx
    if v.shape != (n,):
        raise ValueError(f"expected {n} fade depths, got shape {v.shape}")
    if not np.isfinite(v).all() or (v < 0).any():
        raise ValueError("fade depths must be finite and non-negative")
    if (np.diff(v) > 0).any():
        raise ValueError("fade depths must be sorted deepest first")
    c = fade_weights(cfg)
    boost = float(c @ np.minimum(v, cfg.alpha))
    lhs = float(np.clip(1.0 - v + boost, 0.0, None).sum())
    return bool(lhs + _STRICT_MARGIN < r)


@dataclass(frozen=True)
class GridOracleResult:
    """Cheapest outage-forcing fade pattern found on the search grid."""

    d_min: float
    argmin_v: np.ndarray
    r_probe: float
    grid_step: float


def _validate_search(cfg, step, v_max):
    n = cfg.n_rx
    if n > _MAX_RX:
        raise ValueError(
            f"grid search supports at most {_MAX_RX} fade directions, got {n}")
    step = float(step)
    if not (0.0 < step <= _MAX_STEP):
        raise ValueError(f"grid step must lie in (0, {_MAX_STEP}], got {step}")
    ceiling = diversity_boost(cfg, n) + 1.0
    if v_max is None:
        v_max = ceiling
    else:
        v_max = float(v_max)
        if v_max < ceiling - _EDGE_TOL:
            raise ValueError(
                f"v_max must be at least {ceiling} so the all-deep pattern "
                f"stays in the search box, got {v_max}")
    return step, v_max


def _validate_probe(cfg, r):
    r = float(r)
    if not (0.0 < r <= cfg.n_rx):
        raise ValueError(f"probe rate must lie in (0, {cfg.n_rx}], got {r}")
    return r


def _descending_index_chunks(gsize, n):
    """Yield (rows, n) index arrays covering all non-increasing tuples."""
    if n == 1:
        yield np.arange(gsize, dtype=np.intp)[:, None]
        return
    if n == 2:
        lead, trail = np.tril_indices(gsize)
        yield np.column_stack([lead, trail]).astype(np.intp, copy=False)
        return
    for lead in range(gsize):
        for inner in _descending_index_chunks(lead + 1, n - 1):
            block = np.empty((inner.shape[0], n), dtype=np.intp)
            block[:, 0] = lead
            block[:, 1:] = inner
            yield block


def _chunk_arrays(cfg, idx, step):
    """Fade depths, total delivered rate, and decay cost for an index chunk."""
    v = idx * step
    c = fade_weights(cfg)
    boost = np.minimum(v, cfg.alpha) @ c
    lhs = np.clip(1.0 - v + boost[:, None], 0.0, None).sum(axis=1)
    cost = v @ c
    return v, lhs, cost


def grid_oracle(cfg, r_probe, step=0.02, v_max=None):
    """Exhaustively minimize decay cost over outage-forcing grid patterns."""
    step, v_max = _validate_search(cfg, step, v_max)
    r = _validate_probe(cfg, r_probe)
    gsize = int(v_max / step + _EDGE_TOL) + 1
    best = math.inf
    best_v = None
    for idx in _descending_index_chunks(gsize, cfg.n_rx):
        v, lhs, cost = _chunk_arrays(cfg, idx, step)
        feasible = (lhs + _STRICT_MARGIN) < r
        if feasible.any():
            cost = np.where(feasible, cost, np.inf)
            i = int(np.argmin(cost))
            if cost[i] < best:
                best = float(cost[i])
                best_v = v[i].copy()
    if best_v is None:
        raise ValueError(
            "no grid pattern forces an outage; enlarge v_max or the grid")
    return GridOracleResult(d_min=best, argmin_v=best_v, r_probe=r, grid_step=step)


def grid_oracle_curve(cfg, r_probes, step=0.02, v_max=None):
    """Grid-search minima for many probe rates in one enumeration pass.

    Each pattern's delivered rate is computed once and bucketed against the
    sorted probes; a prefix minimum then gives every probe its cheapest
    outage-forcing pattern.  Identical to calling :func:`grid_oracle` per
    probe, but the grid is walked only once.
    """
    step, v_max = _validate_search(cfg, step, v_max)
    rs = np.asarray([_validate_probe(cfg, r) for r in r_probes], dtype=float)
    order = np.argsort(rs, kind="stable")
    sorted_rs = rs[order]
    gsize = int(v_max / step + _EDGE_TOL) + 1
    best = np.full(rs.size + 1, np.inf)
    for idx in _descending_index_chunks(gsize, cfg.n_rx):
        _, lhs, cost = _chunk_arrays(cfg, idx, step)
        # A pattern with delivered rate `lhs` forces outage for every probe
        # strictly above it: bucket it at the first such probe, then sweep.
        pos = np.searchsorted(sorted_rs, lhs + _STRICT_MARGIN, side="right")
        np.minimum.at(best, pos, cost)
    np.minimum.accumulate(best[:-1], out=best[:-1])
    out = np.empty(rs.size)
    out[order] = best[:-1]
    return out


def subset_oracle(cfg, k, r):
    """Cheapest outage-forcing pattern with exactly ``k`` deep directions.

    Solved as a tiny linear program by enumerating the vertices of the
    feasible polytope: patterns where the deepest directions sit at the
    adapted ceiling, one direction balances the rate constraint, the rest of
    the deep block sits at the estimate floor ``alpha``, and the remaining
    ``n - k`` directions do not fade.  Infinite when cardinality ``k`` can
    never force an outage at ``r``.
    """
    k = int(k)
    n, m, alpha = cfg.n_rx, cfg.m_tx, cfg.alpha
    if k < 1 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    r = float(r)
    if k not in candidate_indices(cfg):
        return math.inf
    tau = diversity_boost(cfg, k)
    if r <= (n - k) * tau:
        return math.inf
    c = fade_weights(cfg)
    best = math.inf
    for kprime in range(1, k + 1):
        x = (n - kprime + 1) * tau - (k - kprime) * alpha - r
        if alpha - _EDGE_TOL <= x <= tau + _EDGE_TOL:
            v = np.zeros(n)
            v[:kprime - 1] = tau
            v[kprime - 1] = x
            v[kprime:k] = alpha
            best = min(best, float(v @ c))
    # Every deep direction at the estimate floor: feasible once the floor
    # pattern alone drops the delivered rate below r.
    if k * alpha >= n * tau - r - _EDGE_TOL:
        v = np.zeros(n)
        v[:k] = alpha
        best = min(best, float(v @ c))
    return best
