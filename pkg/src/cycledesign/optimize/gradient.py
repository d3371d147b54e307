"""Aggregate penalty descent on the continuous (one-hot relaxed) encoding.

Each chain minimizes

    L(x) = sum_i o_i(x) / w_o[i] + penalty_weight * sum_j max(0, c_j(x) / w_c[j] + margin)^2

over the box, working in unit coordinates ``z = (x - lower) / (upper - lower)``.
Gradients are central finite differences (one-sided where the stencil
would leave the box). Steps are projected gradient steps whose initial
length follows the (short) Barzilai-Borwein rule ``s.y / y.y``, shortened by Armijo backtracking
until the loss does not increase; a chain that cannot find such a step
stays put. A chain whose loss turns non-finite is restarted from a fresh
random point.

An optional polish phase snaps the categorical, boolean and integer slots
to a valid encoding and continues on the remaining continuous slots, so
the decoded design is the one that was actually optimized.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .problem import ProblemBase

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4


@dataclass(frozen=True)
class GradConfig:
    starts: int = 100
    steps: int = 60
    polish_steps: int = 30
    learning_rate: float = 0.05
    penalty_weight: float = 1000.0
    constraint_margin: float = 0.02
    fd_step: float = 1e-4
    max_backtracks: int = 12

    @classmethod
    def from_mapping(cls, cfg: Mapping[str, Any]) -> "GradConfig":
        return cls(**{k: cfg[k] for k in cls.__dataclass_fields__ if k in cfg})


@dataclass
class GradResult:
    X: np.ndarray  # canonical continuous encodings, one row per chain
    F: np.ndarray
    G: np.ndarray
    loss: np.ndarray  # final loss per chain
    loss_history: np.ndarray  # (steps + 1, starts), main phase
    polish_history: np.ndarray  # (polish_steps + 1, starts), after snapping
    restarts: list[tuple[int, int]] = field(default_factory=list)  # (iteration, chain)
    n_evaluations: int = 0

    @property
    def feasible(self) -> np.ndarray:
        return np.all(self.G <= 0, axis=1)


class _Objective:
    """Penalized loss in unit coordinates, counting evaluations."""

    def __init__(self, problem: ProblemBase, cfg: GradConfig):
        self.problem = problem
        self.cfg = cfg
        self.lo = np.asarray(problem.lower, dtype=float)
        self.span = np.asarray(problem.upper, dtype=float) - self.lo
        self.n_evaluations = 0

    def to_x(self, Z: np.ndarray) -> np.ndarray:
        return self.lo + Z * self.span

    def to_z(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.span > 0, (X - self.lo) / np.where(self.span > 0, self.span, 1.0), 0.0)

    def parts(self, Z: np.ndarray):
        X = self.to_x(np.atleast_2d(Z))
        self.n_evaluations += len(X)
        with np.errstate(all="ignore"):
            F, G = self.problem.evaluate(X)
        return F, G

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        F, G = self.parts(Z)
        p = self.problem
        with np.errstate(all="ignore"):
            hinge = np.maximum(0.0, G / p.constraint_weights + self.cfg.constraint_margin)
            loss = np.sum(F / p.objective_weights, axis=1) + self.cfg.penalty_weight * np.sum(hinge**2, axis=1)
        return np.where(np.isfinite(loss), loss, np.inf)

    def gradient(self, Z: np.ndarray, free: np.ndarray) -> np.ndarray:
        """Central differences over the ``free`` coordinates for every chain at once."""
        S, n = Z.shape
        idx = np.flatnonzero(free)
        k = idx.size
        h = self.cfg.fd_step
        Zp = np.repeat(Z[:, None, :], k, axis=1)
        Zm = Zp.copy()
        ar = np.arange(k)
        Zp[:, ar, idx] = np.minimum(Z[:, idx] + h, 1.0)
        Zm[:, ar, idx] = np.maximum(Z[:, idx] - h, 0.0)
        denom = Zp[:, ar, idx] - Zm[:, ar, idx]
        vals = self(np.concatenate([Zp.reshape(-1, n), Zm.reshape(-1, n)]))
        lp = vals[: S * k].reshape(S, k)
        lm = vals[S * k :].reshape(S, k)
        g = np.zeros((S, n))
        with np.errstate(all="ignore"):
            g[:, idx] = np.where(denom > 0, (lp - lm) / np.where(denom > 0, denom, 1.0), 0.0)
        return np.where(np.isfinite(g), g, 0.0)


def _descend(obj: _Objective, Z: np.ndarray, loss: np.ndarray, steps: int, free: np.ndarray,
             rng: np.random.Generator, restarts: list, history: list, offset: int,
             reseed=None) -> tuple[np.ndarray, np.ndarray]:
    cfg = obj.cfg
    S = len(Z)
    alpha0 = np.full(S, cfg.learning_rate)
    Z_prev = g_prev = None
    for it in range(steps):
        bad = ~np.isfinite(loss)
        if bad.any() and reseed is not None:
            for c in np.flatnonzero(bad):
                restarts.append((offset + it, int(c)))
            Z[bad] = reseed(int(bad.sum()))
            loss[bad] = obj(Z[bad])
            alpha0[bad] = cfg.learning_rate
        g = obj.gradient(Z, free)
        if Z_prev is not None:
            s = Z - Z_prev
            y = g - g_prev
            sy = np.sum(s * y, axis=1)
            yy = np.sum(y * y, axis=1)
            bb = np.where((sy > 1e-16) & (yy > 0), sy / np.where(yy > 0, yy, 1.0), cfg.learning_rate)
            alpha0 = np.clip(bb, 1e-8, 10.0)
            if bad.any():
                alpha0[bad] = cfg.learning_rate
        Z_prev, g_prev = Z.copy(), g.copy()

        # projected Armijo backtracking, vectorized over still-searching chains
        alpha = alpha0.copy()
        searching = np.ones(S, dtype=bool) & np.any(g != 0, axis=1)
        Z_new, loss_new = Z.copy(), loss.copy()
        for _ in range(cfg.max_backtracks + 1):
            if not searching.any():
                break
            rows = np.flatnonzero(searching)
            cand = np.clip(Z[rows] - alpha[rows, None] * g[rows], 0.0, 1.0)
            lc = obj(cand)
            decrease = np.sum(g[rows] * (Z[rows] - cand), axis=1)
            ok = np.isfinite(lc) & (lc <= loss[rows] - ARMIJO_C * decrease)
            Z_new[rows[ok]] = cand[ok]
            loss_new[rows[ok]] = lc[ok]
            searching[rows[ok]] = False
            alpha[rows[~ok]] *= 0.5
        Z, loss = Z_new, loss_new
        history.append(loss.copy())
    return Z, loss


def grad_penalty_descent(
    problem: ProblemBase,
    config: GradConfig | Mapping[str, Any] | None = None,
    seed: int = 0,
    x0: np.ndarray | None = None,
) -> GradResult:
    """Run ``starts`` independent descent chains and return their decoded end points."""
    if config is None:
        cfg = GradConfig()
    elif isinstance(config, GradConfig):
        cfg = config
    else:
        cfg = GradConfig.from_mapping(config)
    rng = np.random.default_rng(seed)
    obj = _Objective(problem, cfg)
    n = problem.n_var

    def reseed(k: int) -> np.ndarray:
        return rng.random((k, n))

    Z = obj.to_z(np.atleast_2d(np.asarray(x0, dtype=float))) if x0 is not None else reseed(cfg.starts)
    Z = np.clip(Z, 0.0, 1.0)
    loss = obj(Z)
    history = [loss.copy()]
    restarts: list[tuple[int, int]] = []
    free = np.asarray(obj.span > 0)
    Z, loss = _descend(obj, Z, loss, cfg.steps, free, rng, restarts, history, 0, reseed)

    discrete = np.zeros(n, dtype=bool)
    for s in problem.discrete_blocks():
        discrete[s] = True
    Z = obj.to_z(problem.canonicalize(obj.to_x(Z)))
    loss = obj(Z)
    polish = [loss.copy()]
    if cfg.polish_steps > 0 and discrete.any():
        Z, loss = _descend(obj, Z, loss, cfg.polish_steps, free & ~discrete, rng, restarts, polish,
                           cfg.steps, None)
    X = problem.canonicalize(obj.to_x(Z))
    F, G = obj.parts(obj.to_z(X))
    if restarts:
        log.info("%d chain restarts after non-finite losses", len(restarts))
    return GradResult(X, F, G, loss, np.array(history), np.array(polish), restarts, obj.n_evaluations)
