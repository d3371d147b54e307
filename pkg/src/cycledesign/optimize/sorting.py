"""Constraint-dominated non-dominated sorting and crowding distance."""

from __future__ import annotations

import numpy as np


def _clean(F: np.ndarray) -> np.ndarray:
    F = np.atleast_2d(np.asarray(F, dtype=float))
    return np.where(np.isnan(F), np.inf, F)


def domination_matrix(F: np.ndarray, cv: np.ndarray | None = None) -> np.ndarray:
    """``D[i, j]`` is True when row ``i`` constraint-dominates row ``j``.

    Feasible (``cv == 0``) beats infeasible; two infeasible rows compare by
    total violation; two feasible rows by Pareto dominance (minimization).
    """
    F = _clean(F)
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    pareto = le & lt
    if cv is None:
        return pareto
    cv = np.asarray(cv, dtype=float).reshape(n)
    cv = np.where(np.isnan(cv), np.inf, cv)
    feas = cv <= 0
    both_feas = feas[:, None] & feas[None, :]
    feas_vs_infeas = feas[:, None] & ~feas[None, :]
    both_infeas = ~feas[:, None] & ~feas[None, :]
    return (both_feas & pareto) | feas_vs_infeas | (both_infeas & (cv[:, None] < cv[None, :]))


def nondominated_sort(F: np.ndarray, cv: np.ndarray | None = None) -> list[np.ndarray]:
    """Fronts as index arrays in rank order; together they partition ``range(n)``."""
    F = _clean(F)
    n = F.shape[0]
    if n == 0:
        return []
    D = domination_matrix(F, cv)
    count = D.sum(axis=0)
    remaining = np.ones(n, dtype=bool)
    fronts = []
    while remaining.any():
        front = np.flatnonzero(remaining & (count == 0))
        fronts.append(front)
        remaining[front] = False
        count = count - D[front].sum(axis=0)
    return fronts


def ranks(fronts: list[np.ndarray], n: int) -> np.ndarray:
    r = np.empty(n, dtype=int)
    for k, f in enumerate(fronts):
        r[f] = k
    return r


def crowding_distance(F: np.ndarray) -> np.ndarray:
    """Sum over objectives of the normalized gap between each point's neighbours.

    Boundary points of every objective get ``inf``; objectives with zero
    range contribute nothing. Ties are broken by the remaining objective
    values (not by position), so permuting a front of distinct points
    permutes the result identically.
    """
    F = _clean(F)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    tiebreak = tuple(F[:, k] for k in reversed(range(m)))
    for j in range(m):
        order = np.lexsort(tiebreak + (F[:, j],))
        f = F[order, j]
        d[order[0]] = d[order[-1]] = np.inf
        span = f[-1] - f[0]
        if not np.isfinite(span) or span <= 0:
            continue
        d[order[1:-1]] += (f[2:] - f[:-2]) / span
    return d
