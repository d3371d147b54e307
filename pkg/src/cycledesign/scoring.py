"""Scalar aggregate quality: calibrated weights plus a smooth constraint penalty.

    s(x) = sum_i o_i / w_o[i] + sum_j g(c_j / w_c[j])

    g(x) = alpha * exp(beta * x) / beta      x <= 0
         = alpha * (x + 1 / beta)            x >= 0

Lower ``s`` is better. ``g`` is C^1 at 0 (value ``alpha / beta``, slope
``alpha``) and still rewards satisfied constraints for moving further
from the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .evaluation import CONSTRAINT_NAMES, N_CONSTRAINTS, N_OBJECTIVES, OBJECTIVE_NAMES

WEIGHT_FLOOR = float(np.finfo(float).eps)


@dataclass(frozen=True)
class PenaltyParams:
    alpha: float = 10.0
    beta: float = 10.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")


@dataclass(frozen=True)
class Weights:
    objective_weights: np.ndarray
    constraint_weights: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        wo = np.asarray(self.objective_weights, dtype=float).copy()
        wc = np.asarray(self.constraint_weights, dtype=float).copy()
        for name, w, k in (("objective", wo, N_OBJECTIVES), ("constraint", wc, N_CONSTRAINTS)):
            if w.shape != (k,):
                raise ValueError(f"{name} weights must have length {k}, got shape {w.shape}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError(f"{name} weights must be finite and strictly positive")
        wo.flags.writeable = False
        wc.flags.writeable = False
        object.__setattr__(self, "objective_weights", wo)
        object.__setattr__(self, "constraint_weights", wc)

    @classmethod
    def unit(cls) -> "Weights":
        return cls(np.ones(N_OBJECTIVES), np.ones(N_CONSTRAINTS))

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "objective_weights": dict(zip(OBJECTIVE_NAMES, map(float, self.objective_weights))),
            "constraint_weights": dict(zip(CONSTRAINT_NAMES, map(float, self.constraint_weights))),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Weights":
        wo, wc = doc["objective_weights"], doc["constraint_weights"]
        return cls(
            np.array([wo[n] for n in OBJECTIVE_NAMES], dtype=float),
            np.array([wc[n] for n in CONSTRAINT_NAMES], dtype=float),
            doc.get("seed"),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "Weights":
        return cls.from_dict(json.loads(Path(path).read_text()))


def penalty_g(x, p: PenaltyParams = PenaltyParams()):
    """Piecewise exponential/linear penalty; works on scalars and arrays."""
    x = np.asarray(x, dtype=float)
    neg = p.alpha * np.exp(p.beta * np.minimum(x, 0.0)) / p.beta
    pos = p.alpha * (x + 1.0 / p.beta)
    out = np.where(x <= 0, neg, pos)
    return float(out) if out.ndim == 0 else out


def weights_from_values(F: np.ndarray, G: np.ndarray, seed: int | None = None) -> Weights:
    """Mean absolute value per column, floored at machine epsilon."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if F.shape[0] == 0:
        raise ValueError("cannot calibrate weights on an empty dataset")
    wo = np.maximum(np.mean(np.abs(F), axis=0), WEIGHT_FLOOR)
    wc = np.maximum(np.mean(np.abs(G), axis=0), WEIGHT_FLOOR)
    return Weights(wo, wc, seed)


def calibrate_weights(
    X: np.ndarray,
    evaluators,
    seed: int,
    conditions: Sequence | None = None,
) -> Weights:
    """Calibrate on dataset rows ``X`` (continuous encoding) paired with random conditions.

    With ``conditions=None`` one condition per row is drawn with
    ``sample_conditions(len(X), seed)``.
    """
    from .conditions import ConditionArrays, sample_conditions

    X = np.atleast_2d(X)
    if len(X) == 0:
        raise ValueError("cannot calibrate weights on an empty dataset")
    if conditions is None:
        conditions = sample_conditions(len(X), seed, evaluators.config, evaluators.embedder, evaluators.schema)
    if len(conditions) != len(X):
        raise ValueError("need exactly one condition per dataset row")
    F, G = evaluators.evaluate_batch(X, ConditionArrays.stack(conditions))
    # guard against an occasional non-finite evaluation skewing the means
    ok = np.all(np.isfinite(F), axis=1) & np.all(np.isfinite(G), axis=1)
    return weights_from_values(F[ok], G[ok], seed)


def aggregate_quality(objectives, constraints, w: Weights, p: PenaltyParams = PenaltyParams()):
    """Aggregate score for one vector pair or row-wise for ``(n, 10)`` / ``(n, 15)`` arrays.

    Non-finite inputs propagate to a non-finite score (never silently
    treated as good).
    """
    o = np.asarray(objectives, dtype=float)
    c = np.asarray(constraints, dtype=float)
    s = np.sum(o / w.objective_weights, axis=-1) + np.sum(penalty_g(c / w.constraint_weights, p), axis=-1)
    return float(s) if np.ndim(s) == 0 else s
