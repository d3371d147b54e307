"""Slow, independent reference implementations used as test oracles."""

import itertools
import math

import numpy as np


def hv_inclusion_exclusion(points, ref):
    """Dominated volume by inclusion-exclusion over all subsets of boxes."""
    P = [np.asarray(p, dtype=float) for p in points if np.all(np.asarray(p) < ref)]
    ref = np.asarray(ref, dtype=float)
    total = 0.0
    for k in range(1, len(P) + 1):
        sign = 1.0 if k % 2 else -1.0
        for subset in itertools.combinations(P, k):
            corner = np.max(subset, axis=0)
            total += sign * float(np.prod(ref - corner))
    return total


def constraint_dominates(fa, cva, fb, cvb):
    feas_a, feas_b = cva <= 0, cvb <= 0
    if feas_a and not feas_b:
        return True
    if feas_b and not feas_a:
        return False
    if not feas_a and not feas_b:
        return cva < cvb
    no_worse = all(x <= y for x, y in zip(fa, fb))
    better = any(x < y for x, y in zip(fa, fb))
    return no_worse and better


def brute_force_fronts(F, cv=None):
    """Peel fronts using an explicit pairwise dominance table."""
    n = len(F)
    cv = np.zeros(n) if cv is None else cv
    F = [list(map(float, row)) for row in F]
    cv = [float(c) for c in cv]
    dom = [[i != j and constraint_dominates(F[i], cv[i], F[j], cv[j]) for j in range(n)] for i in range(n)]
    remaining = set(range(n))
    fronts = []
    while remaining:
        front = sorted(i for i in remaining if not any(dom[j][i] for j in remaining))
        fronts.append(front)
        remaining -= set(front)
    return fronts


def mmd_naive(A, B, bandwidth):
    def k(x, y):
        return math.exp(-sum((a - b) ** 2 for a, b in zip(x, y)) / (2 * bandwidth**2))

    kaa = sum(k(x, y) for x in A for y in A) / len(A) ** 2
    kbb = sum(k(x, y) for x in B for y in B) / len(B) ** 2
    kab = sum(k(x, y) for x in A for y in B) / (len(A) * len(B))
    return math.sqrt(max(0.0, kaa + kbb - 2 * kab))
