"""Hypervolume of a minimization point set, normalized to the unit box.

Objectives are mapped by ``(f - ideal) / (ref - ideal)`` so the reference
point becomes the all-ones corner and the box volume is 1. Points that do
not strictly beat the reference in every objective add no volume and are
dropped; coordinates better than ``ideal`` are clipped to 0.

``exact`` uses a recursive dimension sweep (fine for small sets or few
objectives). ``montecarlo`` counts dominated uniform samples in the unit
box, drawn in fixed-size chunks whose seeds are spawned from the run seed,
so the estimate does not depend on how chunks are spread over workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

MC_CHUNK = 20_000


@dataclass(frozen=True)
class HVResult:
    value: float
    stderr: float
    mode: str
    n_points: int


def nondominated_mask(P: np.ndarray) -> np.ndarray:
    """Rows of ``P`` not weakly dominated by a different row (first duplicate kept)."""
    P = np.asarray(P, dtype=float)
    n = len(P)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        le = np.all(P <= P[i], axis=1)
        lt = np.any(P < P[i], axis=1)
        dominated_by = le & lt
        dup_before = le & ~lt & (np.arange(n) < i)
        if np.any(dominated_by & keep) or np.any(dup_before & keep):
            keep[i] = False
    return keep


def normalize(points, ref, ideal=None) -> np.ndarray:
    """Normalized points that strictly dominate the reference, clipped at 0."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    ref = np.asarray(ref, dtype=float)
    if P.size == 0:
        return np.zeros((0, ref.shape[0]))
    if P.shape[1] != ref.shape[0]:
        raise ValueError(f"points have {P.shape[1]} objectives but the reference has {ref.shape[0]}")
    ideal = np.zeros_like(ref) if ideal is None else np.asarray(ideal, dtype=float)
    if ideal.shape != ref.shape:
        raise ValueError("ideal and reference points differ in dimension")
    span = ref - ideal
    span = np.where(span > 0, span, 1.0)
    Z = (P - ideal) / span
    Z = Z[np.all(np.isfinite(Z), axis=1) & np.all(Z < 1.0, axis=1) & np.all(P < ref, axis=1)]
    return np.clip(Z, 0.0, None)


def _hv_sweep(Z: np.ndarray) -> float:
    """Exact dominated volume of ``Z`` inside the unit box (ref = ones)."""
    n, m = Z.shape
    if n == 0:
        return 0.0
    if m == 1:
        return float(1.0 - Z[:, 0].min())
    if m == 2:
        Z = Z[np.lexsort((Z[:, 1], Z[:, 0]))]
        vol, best_y = 0.0, 1.0
        for x, y in Z:
            if y < best_y:
                vol += (1.0 - x) * (best_y - y)
                best_y = y
        return vol
    # sweep along the last objective, slicing into (m-1)-dimensional problems
    Z = Z[np.argsort(Z[:, -1], kind="stable")]
    vol = 0.0
    for i in range(n):
        upper = Z[i + 1, -1] if i + 1 < n else 1.0
        height = upper - Z[i, -1]
        if height <= 0:
            continue
        front = Z[: i + 1, :-1]
        front = front[nondominated_mask(front)]
        vol += height * _hv_sweep(front)
    return float(vol)


def hypervolume_exact(points, ref, ideal=None) -> float:
    Z = normalize(points, ref, ideal)
    if len(Z) == 0:
        return 0.0
    return _hv_sweep(Z[nondominated_mask(Z)])


def _mc_chunk(Z: np.ndarray, size: int, seed_seq: np.random.SeedSequence) -> int:
    S = np.random.default_rng(seed_seq).random((size, Z.shape[1]))
    alive = np.ones(size, dtype=bool)
    # most-dominating points first so the live set shrinks quickly
    for z in Z[np.argsort(np.prod(1.0 - Z, axis=1))[::-1]]:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        hit = np.all(S[idx] >= z, axis=1)
        alive[idx[hit]] = False
    return int(size - alive.sum())


def hypervolume_mc(points, ref, ideal=None, samples: int = 1_000_000, seed: int = 0, workers: int = 1) -> HVResult:
    Z = normalize(points, ref, ideal)
    if len(Z) == 0:
        return HVResult(0.0, 0.0, "montecarlo", 0)
    Z = Z[nondominated_mask(Z)]
    sizes = [MC_CHUNK] * (samples // MC_CHUNK) + ([samples % MC_CHUNK] if samples % MC_CHUNK else [])
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda a: _mc_chunk(Z, *a), zip(sizes, seqs)))
    else:
        counts = [_mc_chunk(Z, s, q) for s, q in zip(sizes, seqs)]
    p = sum(counts) / samples
    return HVResult(float(p), float(np.sqrt(p * (1 - p) / samples)), "montecarlo", len(Z))


def hypervolume(
    points,
    ref,
    mode: str = "exact",
    mc_samples: int = 1_000_000,
    seed: int = 0,
    ideal=None,
    workers: int = 1,
) -> float:
    """Normalized hypervolume in [0, 1]; an empty (or fully dominated-by-ref) set gives 0."""
    if mode == "exact":
        return hypervolume_exact(points, ref, ideal)
    if mode == "montecarlo":
        return hypervolume_mc(points, ref, ideal, mc_samples, seed, workers).value
    raise ValueError(f"unknown hypervolume mode {mode!r}")
