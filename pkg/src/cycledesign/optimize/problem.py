"""Optimization problems and populations.

A problem is a box ``[lower, upper]`` over continuous vectors plus a vector
function returning objectives ``(n, n_obj)`` and constraint margins
``(n, n_con)`` (``<= 0`` satisfied). ``DesignProblem`` binds the bicycle
evaluators to one fixed condition; ``FunctionProblem`` wraps any callable,
which keeps the optimizers testable on problems with known optima.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..conditions import Condition, ConditionArrays
from ..design_space import DesignSchema
from ..scoring import PenaltyParams, Weights, aggregate_quality


class ProblemBase:
    lower: np.ndarray
    upper: np.ndarray
    objective_weights: np.ndarray
    constraint_weights: np.ndarray

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def n_var(self) -> int:
        return len(self.lower)

    def canonicalize(self, X: np.ndarray) -> np.ndarray:
        """Map relaxed vectors onto the nearest valid encoding."""
        return np.clip(X, self.lower, self.upper)

    def discrete_blocks(self) -> list[slice]:
        """Slots that are snapped (argmax / threshold) before any polish phase."""
        return []

    def violation(self, G: np.ndarray) -> np.ndarray:
        """Total normalized violation ``sum max(0, c / w_c)``; NaN counts as infinite."""
        v = np.sum(np.maximum(0.0, np.asarray(G) / self.constraint_weights), axis=-1)
        return np.where(np.isnan(v), np.inf, v)

    def score(self, F: np.ndarray, G: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass
class FunctionProblem(ProblemBase):
    """Generic box-constrained problem around ``func(X) -> (F, G)``."""

    func: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    lower: np.ndarray
    upper: np.ndarray
    objective_weights: np.ndarray | None = None
    constraint_weights: np.ndarray | None = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        F, G = self.func(((self.lower + self.upper) / 2)[None, :])
        if self.objective_weights is None:
            self.objective_weights = np.ones(np.shape(F)[1])
        if self.constraint_weights is None:
            self.constraint_weights = np.ones(np.shape(G)[1])
        self.objective_weights = np.asarray(self.objective_weights, dtype=float)
        self.constraint_weights = np.asarray(self.constraint_weights, dtype=float)

    def evaluate(self, X):
        F, G = self.func(np.atleast_2d(X))
        return np.atleast_2d(F).astype(float), np.atleast_2d(G).astype(float)

    def score(self, F, G):
        return np.sum(F / self.objective_weights, axis=-1) + np.sum(
            np.maximum(0.0, G / self.constraint_weights), axis=-1
        )


class DesignProblem(ProblemBase):
    """The 10-objective / 15-constraint design problem under a fixed condition."""

    def __init__(self, evaluators, condition: Condition, weights: Weights, penalty: PenaltyParams = PenaltyParams()):
        self.evaluators = evaluators
        self.schema: DesignSchema = evaluators.schema
        self.condition = condition
        self._context = ConditionArrays.single(condition)
        self.weights = weights
        self.penalty = penalty
        self.lower, self.upper = self.schema.continuous_bounds()
        self.objective_weights = weights.objective_weights
        self.constraint_weights = weights.constraint_weights
        self.n_evaluations = 0

    def evaluate(self, X):
        X = np.atleast_2d(X)
        self.n_evaluations += len(X)
        with np.errstate(all="ignore"):
            return self.evaluators.evaluate_batch(X, self._context)

    def canonicalize(self, X):
        return self.schema.canonicalize(np.atleast_2d(X))

    def discrete_blocks(self):
        return [self.schema.slot(p.name) for p in self.schema.of_kind("categorical", "boolean", "integer")]

    def score(self, F, G):
        return aggregate_quality(F, G, self.weights, self.penalty)


@dataclass
class Population:
    """Evaluated designs of one generation (or the output of a run).

    ``X`` holds continuous encodings, ``M`` the mixed matrix when the
    optimizer works on it directly.
    """

    X: np.ndarray
    F: np.ndarray
    G: np.ndarray
    cv: np.ndarray
    score: np.ndarray
    generation: int = 0
    seed: int | None = None
    M: np.ndarray | None = None
    history: list[dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.X)

    @property
    def feasible(self) -> np.ndarray:
        return np.all(self.G <= 0, axis=1)

    def best_feasible_score(self) -> float:
        f = self.feasible
        return float(np.min(self.score[f])) if f.any() else float("inf")

    def designs(self, schema: DesignSchema) -> list[dict[str, Any]]:
        return schema.from_mixed(schema.continuous_to_mixed(self.X))
