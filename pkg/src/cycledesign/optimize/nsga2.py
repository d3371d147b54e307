"""Mixed-variable NSGA-II working directly on the mixed design matrix.

Columns keep their native types: continuous and integer parameters use
simulated binary crossover (SBX) and polynomial mutation, booleans and
categoricals use uniform crossover and flip / resample mutation. Parents
are chosen by binary tournament on (rank, crowding) and survivors by
elitist (mu + lambda) truncation under constraint domination. The member
with the best aggregate score among feasible designs is always kept, so the
best feasible score never gets worse from one generation to the next.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from ..design_space import DesignSchema, read_designs_csv, sample_mixed, write_designs_csv
from .problem import DesignProblem, Population
from .sorting import crowding_distance, nondominated_sort, ranks

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NSGA2Config:
    pop_size: int = 100
    generations: int = 200
    crossover_prob: float = 0.9
    eta_crossover: float = 15.0
    eta_mutation: float = 20.0
    mutation_prob: float | None = None  # per variable; None -> 1 / n_parameters

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError("pop_size must be an even number >= 2")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")

    @classmethod
    def from_mapping(cls, cfg: Mapping[str, Any]) -> "NSGA2Config":
        return cls(**{k: cfg[k] for k in cls.__dataclass_fields__ if k in cfg})


class OptimizationAborted(RuntimeError):
    """An evaluation failed mid-run; ``population`` holds the last good generation."""

    def __init__(self, message: str, population: Population | None):
        super().__init__(message)
        self.population = population


# ---------------------------------------------------------------------------
# variation operators


def sbx(p1, p2, lo, hi, eta: float, rng: np.random.Generator, prob_var: float = 0.5):
    """Bounded simulated binary crossover on rows ``p1``, ``p2``."""
    c1, c2 = p1.copy(), p2.copy()
    shape = p1.shape
    rand = rng.random(shape)
    active = (rng.random(shape) < prob_var) & (np.abs(p1 - p2) > 1e-14) & (hi > lo)
    swap = rng.random(shape) < 0.5
    if not active.any():
        return c1, c2
    y1 = np.minimum(p1, p2)
    y2 = np.maximum(p1, p2)
    diff = np.where(active, y2 - y1, 1.0)
    with np.errstate(all="ignore"):

        def child(beta):
            alpha = 2.0 - beta ** -(eta + 1.0)
            return np.where(
                rand <= 1.0 / alpha,
                (rand * alpha) ** (1.0 / (eta + 1.0)),
                (1.0 / (2.0 - rand * alpha)) ** (1.0 / (eta + 1.0)),
            )

        bq1 = child(1.0 + 2.0 * (y1 - lo) / diff)
        bq2 = child(1.0 + 2.0 * (hi - y2) / diff)
    a = np.clip(0.5 * ((y1 + y2) - bq1 * diff), lo, hi)
    b = np.clip(0.5 * ((y1 + y2) + bq2 * diff), lo, hi)
    a, b = np.where(swap, b, a), np.where(swap, a, b)
    c1 = np.where(active, a, c1)
    c2 = np.where(active, b, c2)
    return c1, c2


def polynomial_mutation(Y, lo, hi, eta: float, prob: float, rng: np.random.Generator):
    Y = Y.copy()
    mask = (rng.random(Y.shape) < prob) & (hi > lo)
    r = rng.random(Y.shape)
    span = np.where(hi > lo, hi - lo, 1.0)
    d1 = (Y - lo) / span
    d2 = (hi - Y) / span
    p = 1.0 / (eta + 1.0)
    with np.errstate(all="ignore"):
        low = (2 * r + (1 - 2 * r) * (1 - d1) ** (eta + 1)) ** p - 1
        high = 1 - (2 * (1 - r) + 2 * (r - 0.5) * (1 - d2) ** (eta + 1)) ** p
    dq = np.where(r < 0.5, low, high)
    return np.where(mask, np.clip(Y + dq * span, lo, hi), Y)


class MixedVariation:
    """Crossover and mutation on the mixed matrix of a schema."""

    def __init__(self, schema: DesignSchema, cfg: NSGA2Config):
        self.schema = schema
        self.cfg = cfg
        kinds = np.array([p.kind for p in schema.parameters])
        self.numeric = np.flatnonzero((kinds == "continuous") | (kinds == "integer"))
        self.integer = np.flatnonzero(kinds == "integer")
        self.boolean = np.flatnonzero(kinds == "boolean")
        self.categorical = np.flatnonzero(kinds == "categorical")
        self.n_cats = np.array([len(schema.parameters[i].categories) for i in self.categorical])
        self.lo = np.array([p.lower for p in schema.parameters], dtype=float)
        self.hi = np.array([p.upper for p in schema.parameters], dtype=float)
        self.pm = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / len(schema)

    def __call__(self, P1: np.ndarray, P2: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = len(P1)
        C1, C2 = P1.copy(), P2.copy()
        cross = rng.random(n) < self.cfg.crossover_prob
        num = self.numeric
        lo, hi = self.lo[num], self.hi[num]
        a, b = sbx(P1[:, num], P2[:, num], lo, hi, self.cfg.eta_crossover, rng)
        C1[:, num] = np.where(cross[:, None], a, P1[:, num])
        C2[:, num] = np.where(cross[:, None], b, P2[:, num])
        disc = np.concatenate([self.boolean, self.categorical])
        swap = (rng.random((n, disc.size)) < 0.5) & cross[:, None]
        C1[:, disc] = np.where(swap, P2[:, disc], P1[:, disc])
        C2[:, disc] = np.where(swap, P1[:, disc], P2[:, disc])
        return np.concatenate([self.mutate(C1, rng), self.mutate(C2, rng)])

    def mutate(self, C: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        C = C.copy()
        num = self.numeric
        C[:, num] = polynomial_mutation(C[:, num], self.lo[num], self.hi[num], self.cfg.eta_mutation, self.pm, rng)
        ints = self.integer
        C[:, ints] = np.clip(np.floor(C[:, ints] + 0.5), self.lo[ints], self.hi[ints])
        flip = rng.random((len(C), self.boolean.size)) < self.pm
        C[:, self.boolean] = np.where(flip, 1.0 - C[:, self.boolean], C[:, self.boolean])
        cat = self.categorical
        resample = rng.random((len(C), cat.size)) < self.pm
        shift = rng.integers(1, self.n_cats, size=(len(C), cat.size))  # never the same category
        C[:, cat] = np.where(resample, (C[:, cat] + shift) % self.n_cats, C[:, cat])
        return C


# ---------------------------------------------------------------------------
# selection


def tournament(rank: np.ndarray, crowd: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    pairs = rng.integers(0, len(rank), size=(n, 2))
    a, b = pairs[:, 0], pairs[:, 1]
    a_wins = (rank[a] < rank[b]) | ((rank[a] == rank[b]) & (crowd[a] >= crowd[b]))
    return np.where(a_wins, a, b)


def survival(F, cv, score, feasible, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Indices of the ``n`` survivors plus their rank and crowding."""
    fronts = nondominated_sort(F, cv)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= n:
            chosen.extend(front.tolist())
            if len(chosen) == n:
                break
            continue
        cd = crowding_distance(F[front])
        order = np.lexsort((front, -cd))  # largest crowding first, then index
        chosen.extend(front[order[: n - len(chosen)]].tolist())
        break
    chosen_arr = np.array(chosen)
    if feasible.any():
        s = np.where(feasible & np.isfinite(score), score, np.inf)
        best = int(np.argmin(s))
        if np.isfinite(s[best]) and best not in chosen:
            chosen_arr[-1] = best
    rank, crowd = rank_and_crowding(F[chosen_arr], cv[chosen_arr])
    return chosen_arr, rank, crowd


def rank_and_crowding(F, cv) -> tuple[np.ndarray, np.ndarray]:
    fronts = nondominated_sort(F, cv)
    crowd = np.empty(len(F))
    for f in fronts:
        crowd[f] = crowding_distance(F[f])
    return ranks(fronts, len(F)), crowd


# ---------------------------------------------------------------------------
# driver


def _evaluate(problem: DesignProblem, M: np.ndarray):
    X = problem.schema.mixed_to_continuous(M)
    F, G = problem.evaluate(X)
    cv = problem.violation(G)
    score = problem.score(F, G)
    return X, F, G, cv, np.where(np.isnan(score), np.inf, score)


def _checkpoint(directory: Path, pop: Population, rng: np.random.Generator, schema: DesignSchema, seed: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    stem = directory / f"gen_{pop.generation:04d}"
    write_designs_csv(stem.with_suffix(".csv"), schema.from_mixed(pop.M), schema)
    meta = {"generation": pop.generation, "seed": seed, "rng_state": rng.bit_generator.state, "history": pop.history}
    stem.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True))


def latest_checkpoint(directory: str | Path) -> Path | None:
    metas = sorted(Path(directory).glob("gen_*.json"))
    return metas[-1] if metas else None


def nsga2(
    problem: DesignProblem,
    config: NSGA2Config | Mapping[str, Any] | None = None,
    seed: int = 0,
    checkpoint_dir: str | Path | None = None,
    resume: bool = False,
    callback: Callable[[Population], None] | None = None,
) -> Population:
    """Run NSGA-II and return the final population.

    With ``checkpoint_dir`` set, each generation writes ``gen_NNNN.csv``
    (designs) and ``gen_NNNN.json`` (generation, RNG state, history);
    ``resume=True`` continues from the newest one and reproduces the
    uninterrupted run exactly.
    """
    if config is None:
        config = NSGA2Config()
    elif not isinstance(config, NSGA2Config):
        config = NSGA2Config.from_mapping(config)
    schema = problem.schema
    variation = MixedVariation(schema, config)
    rng = np.random.default_rng(seed)
    ckpt = Path(checkpoint_dir) if checkpoint_dir is not None else None

    meta_path = latest_checkpoint(ckpt) if (ckpt is not None and resume) else None
    if meta_path is not None:
        meta = json.loads(meta_path.read_text())
        rng.bit_generator.state = meta["rng_state"]
        M = schema.to_mixed(read_designs_csv(meta_path.with_suffix(".csv"), schema))
        start, history = int(meta["generation"]), list(meta["history"])
        log.info("resuming from %s", meta_path)
    else:
        M = sample_mixed(schema, config.pop_size, rng)
        start, history = 0, []

    try:
        X, F, G, cv, score = _evaluate(problem, M)
    except Exception as exc:
        raise OptimizationAborted(f"initial evaluation failed: {exc!r}", None) from exc
    rank, crowd = rank_and_crowding(F, cv)
    pop = Population(X, F, G, cv, score, start, seed, M, history)
    if start == 0:
        pop.history.append(_record(pop))
        if ckpt is not None:
            _checkpoint(ckpt, pop, rng, schema, seed)

    for gen in range(start + 1, config.generations + 1):
        parents = tournament(rank, crowd, config.pop_size, rng)
        P1, P2 = pop.M[parents[0::2]], pop.M[parents[1::2]]
        children = variation(P1, P2, rng)
        try:
            Xc, Fc, Gc, cvc, sc = _evaluate(problem, children)
        except Exception as exc:
            raise OptimizationAborted(f"evaluation failed in generation {gen}: {exc!r}", pop) from exc
        M_all = np.concatenate([pop.M, children])
        X_all = np.concatenate([pop.X, Xc])
        F_all = np.concatenate([pop.F, Fc])
        G_all = np.concatenate([pop.G, Gc])
        cv_all = np.concatenate([pop.cv, cvc])
        s_all = np.concatenate([pop.score, sc])
        idx, rank, crowd = survival(F_all, cv_all, s_all, cv_all <= 0, config.pop_size)
        pop = Population(X_all[idx], F_all[idx], G_all[idx], cv_all[idx], s_all[idx], gen, seed, M_all[idx], pop.history)
        pop.history.append(_record(pop))
        if ckpt is not None:
            _checkpoint(ckpt, pop, rng, schema, seed)
        if callback is not None:
            callback(pop)
    return pop


def _record(pop: Population) -> dict[str, Any]:
    return {
        "generation": pop.generation,
        "n_feasible": int(pop.feasible.sum()),
        "best_feasible_score": pop.best_feasible_score() if pop.feasible.any() else None,
    }
