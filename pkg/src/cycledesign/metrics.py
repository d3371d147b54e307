"""Benchmark scores: validity, hypervolume optimality, MMD similarity.

Also hosts the consensus rule used to turn rating counts into usability
labels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .hypervolume import hypervolume, hypervolume_mc

USABLE, UNUSABLE, UNLABELED = "usable", "unusable", "unlabeled"


@dataclass(frozen=True)
class ScoreSummary:
    validity: float
    optimality: float
    similarity: float
    optimality_stderr: float = 0.0
    n_designs: int = 0

    def __post_init__(self):
        if not 0.0 <= self.validity <= 1.0:
            raise ValueError("validity must lie in [0, 1]")
        if not 0.0 <= self.optimality <= 1.0:
            raise ValueError("optimality must lie in [0, 1]")
        if not self.similarity >= 0.0:
            raise ValueError("similarity must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def mean(summaries: Sequence["ScoreSummary"]) -> "ScoreSummary":
        if not summaries:
            raise ValueError("no summaries to average")
        return ScoreSummary(
            validity=float(np.mean([s.validity for s in summaries])),
            optimality=float(np.mean([s.optimality for s in summaries])),
            similarity=float(np.mean([s.similarity for s in summaries])),
            optimality_stderr=float(np.sqrt(np.sum([s.optimality_stderr**2 for s in summaries])) / len(summaries)),
            n_designs=int(sum(s.n_designs for s in summaries)),
        )


def _margins(reports) -> np.ndarray:
    if isinstance(reports, np.ndarray):
        return np.atleast_2d(reports)
    return np.array([r.constraint_vector() if r.valid else np.full(len(r.constraints), np.inf) for r in reports])


def feasible_mask(reports) -> np.ndarray:
    """All margins <= 0; accepts reports or an ``(n, 15)`` margin array."""
    G = _margins(reports)
    return np.all(G <= 0, axis=1)


def validity_rate(reports) -> float:
    G = _margins(reports)
    if G.shape[0] == 0 or G.size == 0:
        raise ValueError("validity of an empty set is undefined")
    return float(np.mean(np.all(G <= 0, axis=1)))


def _objectives(reports) -> np.ndarray:
    if isinstance(reports, np.ndarray):
        return np.atleast_2d(reports)
    return np.array([r.objective_vector() for r in reports])


def reference_point(reports) -> np.ndarray:
    """Coordinate-wise worst (max) objective over finite rows."""
    F = _objectives(reports)
    if F.shape[0] == 0:
        raise ValueError("reference point of an empty set is undefined")
    F = F[np.all(np.isfinite(F), axis=1)]
    if F.shape[0] == 0:
        raise ValueError("no finite objective vectors")
    return F.max(axis=0)


def ideal_point(reports) -> np.ndarray:
    """Coordinate-wise best (min) objective over finite rows."""
    F = _objectives(reports)
    F = F[np.all(np.isfinite(F), axis=1)]
    if F.shape[0] == 0:
        raise ValueError("no finite objective vectors")
    return F.min(axis=0)


# ---------------------------------------------------------------------------
# MMD


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 0, std, 1.0))

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(np.asarray(X, dtype=float)) - self.mean) / self.std


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    d = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2 * A @ B.T
    return np.maximum(d, 0.0)


def _even_subsample(X: np.ndarray, k: int) -> np.ndarray:
    if len(X) <= k:
        return X
    return X[np.linspace(0, len(X) - 1, k).round().astype(int)]


def median_bandwidth(A: np.ndarray, B: np.ndarray, max_points: int = 2000) -> float:
    """Median pairwise distance over the pooled set.

    Large pools are thinned to ``max_points`` by evenly spaced, proportional
    subsamples of each set, with rows in a canonical (sorted) order first
    so the bandwidth is unchanged by permuting either set or swapping them.
    """
    A = A[np.lexsort(A.T[::-1])]
    B = B[np.lexsort(B.T[::-1])]
    n = len(A) + len(B)
    if n > max_points:
        ka = max(1, round(max_points * len(A) / n))
        A = _even_subsample(A, ka)
        B = _even_subsample(B, max(1, max_points - ka))
    P = np.concatenate([A, B])
    P = P[np.lexsort(P.T[::-1])]
    D = np.sqrt(_sq_dists(P, P))
    iu = np.triu_indices(len(P), k=1)
    return float(np.median(D[iu])) if iu[0].size else 0.0


def mmd(setA, setB, bandwidth: float | str = "auto", standardizer: Standardizer | None = None,
        max_median_points: int = 2000, fallback_bandwidth: float | None = None) -> float:
    """Biased Gaussian-kernel MMD, returned as ``sqrt(max(0, MMD^2))``.

    Args:
        setA, setB: ``(n, d)`` and ``(m, d)`` arrays.
        bandwidth: kernel width ``sigma`` in ``exp(-|x - y|^2 / (2 sigma^2))``,
            or ``"auto"`` for the pooled median distance.
        standardizer: applied to both sets first (fit it on the training split).
        fallback_bandwidth: used when the auto bandwidth is zero; without one a
            zero median raises.
    """
    A = np.atleast_2d(np.asarray(setA, dtype=float))
    B = np.atleast_2d(np.asarray(setB, dtype=float))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("MMD needs two non-empty sets")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if standardizer is not None:
        A, B = standardizer(A), standardizer(B)
    # canonical row order and set order make the float sums, and hence the
    # result, bitwise invariant to permutations and to swapping the sets
    A = A[np.lexsort(A.T[::-1])]
    B = B[np.lexsort(B.T[::-1])]
    if (len(A), A.tobytes()) > (len(B), B.tobytes()):
        A, B = B, A
    if bandwidth == "auto":
        bw = median_bandwidth(A, B, max_median_points)
        if bw <= 0:
            if fallback_bandwidth is None:
                raise ValueError("median pairwise distance is zero; pass an explicit fallback_bandwidth")
            bw = float(fallback_bandwidth)
    else:
        bw = float(bandwidth)
        if not bw > 0:
            raise ValueError("bandwidth must be positive")
    gamma = 1.0 / (2.0 * bw * bw)

    def mean_kernel(P, Q):
        # blocked to keep memory flat for large sets
        total = 0.0
        for i in range(0, len(P), 2048):
            total += float(np.exp(-gamma * _sq_dists(P[i : i + 2048], Q)).sum())
        return total / (len(P) * len(Q))

    kab = mean_kernel(A, B)
    m2 = mean_kernel(A, A) + mean_kernel(B, B) - 2.0 * kab
    return float(np.sqrt(max(0.0, m2)))


# ---------------------------------------------------------------------------
# consensus


def consensus_labels(yes: Iterable[float], totals: Iterable[float], high: float = 0.7, low: float = 0.3) -> list[str]:
    """Label each design by the fraction of raters answering yes."""
    yes = np.asarray(list(yes), dtype=float)
    totals = np.asarray(list(totals), dtype=float)
    if yes.shape != totals.shape:
        raise ValueError("yes counts and totals differ in length")
    if np.any(totals <= 0):
        raise ValueError("every design needs at least one rating")
    frac = yes / totals
    return [USABLE if f >= high else UNUSABLE if f <= low else UNLABELED for f in frac]


def consensus_counts(labels: Sequence[str]) -> dict[str, int]:
    return {k: sum(1 for x in labels if x == k) for k in (USABLE, UNUSABLE, UNLABELED)}


def score_set(
    F: np.ndarray,
    G: np.ndarray,
    X: np.ndarray,
    held_out: np.ndarray,
    ref: np.ndarray,
    ideal: np.ndarray | None,
    standardizer: Standardizer,
    mc_samples: int,
    seed: int,
    hv_mode: str = "montecarlo",
    bandwidth: float | str = "auto",
    max_median_points: int = 2000,
    workers: int = 1,
) -> ScoreSummary:
    """Validity, HV over the feasible rows only, and MMD against ``held_out``."""
    feas = feasible_mask(G)
    validity = float(feas.mean()) if len(feas) else 0.0
    if hv_mode == "montecarlo":
        hv = hypervolume_mc(F[feas], ref, ideal, mc_samples, seed, workers)
        opt, se = hv.value, hv.stderr
    else:
        opt, se = hypervolume(F[feas], ref, "exact", ideal=ideal), 0.0
    sim = mmd(X, held_out, bandwidth, standardizer, max_median_points, fallback_bandwidth=1.0)
    return ScoreSummary(validity, float(opt), sim, float(se), int(len(F)))
