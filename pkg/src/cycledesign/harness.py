"""Benchmark protocols, design generators and the dataset baseline.

Seeds: a run seed ``s`` fixes the conditions (``s``), each condition's
generator seed (``s * 1000 + i``) and the Monte Carlo seed of each
hypervolume (``s * 1000 + i`` as well, on a separate generator). The
dataset and the weight calibration use ``protocol.dataset_seed`` so every
generator is scored against the same data.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .conditions import Condition, ConditionArrays, sample_conditions
from .design_space import DesignBatch, DesignSchema, read_designs_csv, sample_mixed
from .evaluation import Evaluators
from .geometry import geometric_margins
from .metrics import ScoreSummary, Standardizer, ideal_point, reference_point, score_set
from .optimize.gradient import grad_penalty_descent
from .optimize.nsga2 import nsga2
from .optimize.problem import DesignProblem
from .scoring import Weights, calibrate_weights

log = logging.getLogger(__name__)

WORKERS_ENV = "CYCLEDESIGN_WORKERS"
SCALES = ("full", "desk")
MODES = ("unconditional", "conditional")


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer %s=%r", WORKERS_ENV, raw)
        return 1


# ---------------------------------------------------------------------------
# data


def geometric_pass(X: np.ndarray, evaluators: Evaluators) -> np.ndarray:
    """Rows passing all 12 closed-form checks and frame validity."""
    batch = DesignBatch(X, evaluators.schema)
    with np.errstate(all="ignore"):
        ok = np.all(geometric_margins(batch, evaluators.crank_length) <= 0, axis=1)
        fv = evaluators._family("frame_validity", batch, None)[:, 0]
    return ok & (fv <= 0)


def pseudo_dataset(n: int, seed: int, evaluators: Evaluators, chunk: int = 20_000) -> np.ndarray:
    """``n`` uniform designs that pass the geometric checks (continuous encoding).

    Structural and other constraints are left unfiltered, so most rows still
    fail the safety factors, like a real design corpus would under strict
    structural requirements.
    """
    if n < 1:
        raise ValueError("dataset size must be positive")
    schema = evaluators.schema
    rng = np.random.default_rng(seed)
    parts, have = [], 0
    while have < n:
        X = schema.mixed_to_continuous(sample_mixed(schema, chunk, rng))
        X = X[geometric_pass(X, evaluators)]
        parts.append(X)
        have += len(X)
    return np.concatenate(parts)[:n]


def load_dataset(path: str | Path, schema: DesignSchema) -> np.ndarray:
    designs = read_designs_csv(path, schema)
    if not designs:
        raise ValueError(f"{path} contains no designs")
    return schema.mixed_to_continuous(schema.to_mixed(designs))


def split_dataset(X: np.ndarray, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(len(X))
    k = int(round(train_fraction * len(X)))
    k = min(max(k, 1), len(X) - 1) if len(X) > 1 else len(X)
    return X[perm[:k]], X[perm[k:]]


def dataset_baseline(dataset: Sequence[Any] | np.ndarray, n: int, seed: int):
    """Uniform sample of ``n`` items; without replacement unless ``n`` exceeds the dataset."""
    size = len(dataset)
    if size == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    idx = rng.choice(size, size=n, replace=n > size)
    if isinstance(dataset, np.ndarray):
        return dataset[idx]
    return [dataset[i] for i in idx]


# ---------------------------------------------------------------------------
# context and generators


@dataclass
class BenchmarkContext:
    evaluators: Evaluators
    config: Mapping[str, Any]
    train: np.ndarray
    held_out: np.ndarray
    weights: Weights
    reference: np.ndarray
    ideal: np.ndarray
    standardizer: Standardizer
    protocol: Mapping[str, Any]

    @property
    def schema(self) -> DesignSchema:
        return self.evaluators.schema


class GeneratorError(RuntimeError):
    pass


class DesignGenerator:
    """Source of designs (continuous encodings).

    ``reentrant`` generators may be called concurrently for different
    conditions; all bundled ones are, since they keep no state between calls.
    """

    name = "generator"
    reentrant = True
    conditional = True

    def generate(self, condition: Condition, n: int, ctx: BenchmarkContext, seed: int) -> np.ndarray:
        raise NotImplementedError

    def generate_conditional(self, conditions: Sequence[Condition], ctx: BenchmarkContext, seed: int) -> np.ndarray:
        """One design per condition."""
        if not self.conditional:
            raise GeneratorError(f"{self.name} does not support conditional generation")
        return np.concatenate([self.generate(c, 1, ctx, seed * 100_003 + i) for i, c in enumerate(conditions)])


class DatasetGenerator(DesignGenerator):
    name = "dataset"

    def generate(self, condition, n, ctx, seed):
        return dataset_baseline(ctx.train, n, seed)

    def generate_conditional(self, conditions, ctx, seed):
        return dataset_baseline(ctx.train, len(conditions), seed)


class RandomGenerator(DesignGenerator):
    """Uniform random designs over the whole box."""

    name = "random"

    def generate(self, condition, n, ctx, seed):
        return ctx.schema.mixed_to_continuous(sample_mixed(ctx.schema, n, np.random.default_rng(seed)))

    def generate_conditional(self, conditions, ctx, seed):
        return self.generate(None, len(conditions), ctx, seed)


class ConstantGenerator(DesignGenerator):
    """Always the same design: the first training row."""

    name = "constant"

    def generate(self, condition, n, ctx, seed):
        return np.repeat(ctx.train[:1], n, axis=0)

    def generate_conditional(self, conditions, ctx, seed):
        return self.generate(None, len(conditions), ctx, seed)


class NSGA2Generator(DesignGenerator):
    """Final NSGA-II population for the condition (at most ``pop_size`` designs)."""

    name = "nsga2"
    conditional = False

    def generate(self, condition, n, ctx, seed):
        problem = DesignProblem(ctx.evaluators, condition, ctx.weights)
        pop = nsga2(problem, ctx.config["optimizers"]["nsga2"], seed=seed)
        return pop.X[:n]


class GradGenerator(DesignGenerator):
    """End points of the penalty descent chains for the condition."""

    name = "grad"
    conditional = False

    def generate(self, condition, n, ctx, seed):
        problem = DesignProblem(ctx.evaluators, condition, ctx.weights)
        return grad_penalty_descent(problem, ctx.config["optimizers"]["grad"], seed=seed).X[:n]


GENERATORS: dict[str, type[DesignGenerator]] = {
    g.name: g for g in (DatasetGenerator, RandomGenerator, ConstantGenerator, NSGA2Generator, GradGenerator)
}


def make_generator(name: str) -> DesignGenerator:
    try:
        return GENERATORS[name]()
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None


# ---------------------------------------------------------------------------
# runs


@dataclass
class ConditionResult:
    index: int
    seed: int
    summary: ScoreSummary | None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "seed": self.seed,
            "summary": self.summary.to_dict() if self.summary else None,
            "error": self.error,
        }


@dataclass
class BenchmarkRun:
    mode: str
    generator: str
    scale: str
    seeds: dict[str, int]
    per_condition: list[ConditionResult]
    aggregate: ScoreSummary | None
    partial: bool = False
    provenance: dict[str, str] = field(default_factory=dict)
    settings: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "generator": self.generator,
            "scale": self.scale,
            "seeds": dict(self.seeds),
            "per_condition": [c.to_dict() for c in self.per_condition],
            "aggregate": self.aggregate.to_dict() if self.aggregate else None,
            "partial": self.partial,
            "provenance": dict(self.provenance),
            "settings": dict(self.settings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "BenchmarkRun":
        def summ(d):
            return ScoreSummary(**d) if d else None

        return cls(
            mode=doc["mode"],
            generator=doc["generator"],
            scale=doc["scale"],
            seeds=dict(doc["seeds"]),
            per_condition=[ConditionResult(c["index"], c["seed"], summ(c["summary"]), c.get("error"))
                           for c in doc["per_condition"]],
            aggregate=summ(doc["aggregate"]),
            partial=bool(doc.get("partial", False)),
            provenance=dict(doc.get("provenance", {})),
            settings=dict(doc.get("settings", {})),
        )

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkRun":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def protocol_settings(config: Mapping[str, Any], scale: str) -> dict[str, Any]:
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    p = dict(config["protocol"][scale])
    p.setdefault("dataset_seed", config["protocol"].get("dataset_seed", 0))
    p.setdefault("dataset_path", config["protocol"].get("dataset_path"))
    return p


def build_context(config: Mapping[str, Any], scale: str, evaluators: Evaluators | None = None) -> BenchmarkContext:
    """Dataset, split, calibrated weights, HV box and MMD standardizer."""
    ev = evaluators or Evaluators(config=config)
    proto = protocol_settings(config, scale)
    dseed = int(proto["dataset_seed"])
    if proto.get("dataset_path"):
        data = load_dataset(proto["dataset_path"], ev.schema)
    else:
        data = pseudo_dataset(int(proto["dataset_size"]), dseed, ev)
    train, held_out = split_dataset(data, float(proto["train_fraction"]), dseed)
    weights = calibrate_weights(train, ev, seed=dseed)
    # worst / best objectives over the whole dataset under random conditions
    conds = sample_conditions(len(data), dseed + 1, config, ev.embedder, ev.schema)
    F, _ = ev.evaluate_batch(data, ConditionArrays.stack(conds))
    return BenchmarkContext(ev, config, train, held_out, weights, reference_point(F), ideal_point(F),
                            Standardizer.fit(train), proto)


def _score(ctx: BenchmarkContext, X: np.ndarray, conditions, seed: int) -> ScoreSummary:
    F, G = ctx.evaluators.evaluate_batch(X, conditions)
    m = ctx.config["metrics"]
    return score_set(
        F, G, X, ctx.held_out, ctx.reference, ctx.ideal, ctx.standardizer,
        mc_samples=int(ctx.protocol["mc_samples"]), seed=seed, hv_mode=m["hv_mode"],
        bandwidth=m["bandwidth"], max_median_points=int(m["mmd_median_points"]),
    )


def _settings(ctx: BenchmarkContext) -> dict[str, Any]:
    return {
        "protocol": {k: v for k, v in ctx.protocol.items()},
        "metrics": dict(ctx.config["metrics"]),
        "weights": ctx.weights.to_dict(),
        "reference_point": [float(v) for v in ctx.reference],
        "ideal_point": [float(v) for v in ctx.ideal],
    }


def run_unconditional(
    generator: DesignGenerator | str,
    config: Mapping[str, Any],
    scale: str = "desk",
    seed: int = 0,
    context: BenchmarkContext | None = None,
    workers: int | None = None,
) -> BenchmarkRun:
    """Score ``generator`` on ``n_conditions`` seeded conditions; aggregate = mean."""
    gen = make_generator(generator) if isinstance(generator, str) else generator
    ctx = context or build_context(config, scale)
    n_cond = int(ctx.protocol["n_conditions"])
    n_samples = int(ctx.protocol["samples_per_condition"])
    conditions = sample_conditions(n_cond, seed, config, ctx.evaluators.embedder, ctx.schema)

    def one(i: int) -> ConditionResult:
        s = seed * 1000 + i
        try:
            X = gen.generate(conditions[i], n_samples, ctx, s)
            if len(X) == 0:
                raise GeneratorError("generator returned no designs")
            return ConditionResult(i, s, _score(ctx, X, conditions[i], s))
        except Exception as exc:
            log.warning("condition %d failed: %r", i, exc)
            return ConditionResult(i, s, None, f"{type(exc).__name__}: {exc}")

    workers = worker_count() if workers is None else workers
    if workers > 1 and gen.reentrant:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(n_cond)))
    else:
        results = [one(i) for i in range(n_cond)]
    ok = [r.summary for r in results if r.summary is not None]
    return BenchmarkRun(
        mode="unconditional",
        generator=gen.name,
        scale=scale,
        seeds={"run": seed, "conditions": seed, "dataset": int(ctx.protocol["dataset_seed"])},
        per_condition=results,
        aggregate=ScoreSummary.mean(ok) if ok else None,
        partial=len(ok) < n_cond,
        provenance=ctx.evaluators.provenance(),
        settings=_settings(ctx),
    )


def run_conditional(
    generator: DesignGenerator | str,
    config: Mapping[str, Any],
    scale: str = "desk",
    seed: int = 0,
    context: BenchmarkContext | None = None,
) -> BenchmarkRun:
    """One design per seeded condition, scored as a single pooled set."""
    gen = make_generator(generator) if isinstance(generator, str) else generator
    ctx = context or build_context(config, scale)
    n = int(ctx.protocol["conditional_cases"])
    conditions = sample_conditions(n, seed, config, ctx.evaluators.embedder, ctx.schema)
    s = seed * 1000
    try:
        X = gen.generate_conditional(conditions, ctx, s)
        if len(X) != n:
            raise GeneratorError(f"expected {n} designs, got {len(X)}")
        result = ConditionResult(0, s, _score(ctx, X, ConditionArrays.stack(conditions), s))
    except Exception as exc:
        log.warning("conditional run failed: %r", exc)
        result = ConditionResult(0, s, None, f"{type(exc).__name__}: {exc}")
    return BenchmarkRun(
        mode="conditional",
        generator=gen.name,
        scale=scale,
        seeds={"run": seed, "conditions": seed, "dataset": int(ctx.protocol["dataset_seed"])},
        per_condition=[result],
        aggregate=result.summary,
        partial=result.summary is None,
        provenance=ctx.evaluators.provenance(),
        settings=_settings(ctx),
    )


def run_benchmark(mode: str, generator: str, config: Mapping[str, Any], scale: str = "desk", seed: int = 0,
                  context: BenchmarkContext | None = None) -> BenchmarkRun:
    if mode == "unconditional":
        return run_unconditional(generator, config, scale, seed, context)
    if mode == "conditional":
        return run_conditional(generator, config, scale, seed, context)
    raise ValueError(f"mode must be one of {MODES}")
