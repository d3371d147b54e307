import numpy as np
import pytest

from cycledesign.conditions import Condition, sample_conditions
from cycledesign.ergonomics import RiderProfile
from cycledesign.evaluation import OBJECTIVE_NAMES
from cycledesign.harness import (
    BenchmarkRun,
    DesignGenerator,
    build_context,
    dataset_baseline,
    geometric_pass,
    make_generator,
    pseudo_dataset,
    run_benchmark,
    run_conditional,
    run_unconditional,
    split_dataset,
    worker_count,
)
from cycledesign.metrics import feasible_mask
from cycledesign.proxies import Embedding


def test_dataset_baseline_examples():
    data = list(range(50))
    perm = dataset_baseline(data, 50, seed=1)
    assert sorted(perm) == data and perm != data
    assert dataset_baseline(data, 1, seed=3) == dataset_baseline(data, 1, seed=3)
    assert len(set(dataset_baseline(data, 30, seed=0))) == 30
    assert len(dataset_baseline(data, 80, seed=0)) == 80
    with pytest.raises(ValueError):
        dataset_baseline([], 3, seed=0)


def test_pseudo_dataset(evaluators):
    X = pseudo_dataset(200, 5, evaluators, chunk=5000)
    assert X.shape == (200, evaluators.schema.continuous_dim)
    assert geometric_pass(X, evaluators).all()
    assert np.array_equal(X, pseudo_dataset(200, 5, evaluators, chunk=5000))
    with pytest.raises(ValueError):
        pseudo_dataset(0, 5, evaluators)


def test_split_dataset():
    X = np.arange(20.0)[:, None]
    a, b = split_dataset(X, 0.8, seed=0)
    assert len(a) == 16 and len(b) == 4
    assert sorted(np.r_[a[:, 0], b[:, 0]].tolist()) == X[:, 0].tolist()


def test_dataset_fails_mostly_on_safety_factors(desk_context):
    ctx = desk_context
    data = np.concatenate([ctx.train, ctx.held_out])
    conds = sample_conditions(len(data), 99, ctx.config, ctx.evaluators.embedder, ctx.schema)
    from cycledesign.conditions import ConditionArrays

    _, G = ctx.evaluators.evaluate_batch(data, ConditionArrays.stack(conds))
    fail = (G > 0).mean(axis=0)
    assert feasible_mask(G).mean() < 0.1
    planar, eccentric = fail[0], fail[1]
    assert planar > 0.8 and eccentric > 0.6
    assert planar > eccentric
    assert np.all(fail[2:] < eccentric)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CYCLEDESIGN_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("CYCLEDESIGN_WORKERS", "lots")
    assert worker_count() == 1
    monkeypatch.delenv("CYCLEDESIGN_WORKERS")
    assert worker_count() == 1


def test_condition_dependency_structure(center, evaluators, config):
    base = sample_conditions(1, 0, config, evaluators.embedder, evaluators.schema)[0]
    other_rider = Condition(RiderProfile(400.0, 420.0, 550.0, 480.0, 260.0, 340.0), base.use_case,
                            base.target_embedding, base.prompt_text)
    other_target = Condition(base.rider, base.use_case, Embedding(-base.target_embedding.data), base.prompt_text)
    X = evaluators.schema.mixed_to_continuous(evaluators.schema.to_mixed([center]))
    F0, G0 = evaluators.evaluate_batch(X, base)
    F1, G1 = evaluators.evaluate_batch(X, other_rider)
    F2, G2 = evaluators.evaluate_batch(X, other_target)
    assert np.array_equal(G0, G1) and np.array_equal(G0, G2)
    changed_rider = {OBJECTIVE_NAMES[i] for i in np.flatnonzero(F0[0] != F1[0])}
    assert changed_rider <= {"drag_force", "knee_angle_error", "hip_angle_error", "arm_angle_error"}
    assert "drag_force" in changed_rider
    assert {OBJECTIVE_NAMES[i] for i in np.flatnonzero(F0[0] != F2[0])} == {"cosine_distance"}


def test_run_unconditional_dataset(tiny_config, tiny_context):
    run = run_unconditional("dataset", tiny_config, "desk", seed=2, context=tiny_context, workers=1)
    assert run.mode == "unconditional" and not run.partial
    assert len(run.per_condition) == 3
    conds = sample_conditions(3, 2, tiny_config, tiny_context.evaluators.embedder, tiny_context.schema)
    for res, cond in zip(run.per_condition, conds):
        X = dataset_baseline(tiny_context.train, 150, res.seed)
        _, G = tiny_context.evaluators.evaluate_batch(X, cond)
        assert res.summary.validity == feasible_mask(G).mean()
    assert run.aggregate.validity == pytest.approx(np.mean([r.summary.validity for r in run.per_condition]))


def test_run_deterministic_and_worker_independent(tiny_config, tiny_context):
    a = run_unconditional("random", tiny_config, "desk", seed=4, context=tiny_context, workers=1)
    b = run_unconditional("random", tiny_config, "desk", seed=4, context=tiny_context, workers=3)
    assert a.to_json() == b.to_json()


class Infeasible(DesignGenerator):
    name = "infeasible"

    def generate(self, condition, n, ctx, seed):
        X = np.repeat(ctx.train[:1], n, axis=0).copy()
        X[:, ctx.schema.slot("FIRST color R_RGB")] = 280.0
        return X


class Flaky(DesignGenerator):
    name = "flaky"

    def generate(self, condition, n, ctx, seed):
        if seed % 1000 == 1:
            raise RuntimeError("model diverged")
        return ctx.train[:n]


def test_zero_feasible_gives_zero_optimality(tiny_config, tiny_context):
    run = run_unconditional(Infeasible(), tiny_config, "desk", seed=0, context=tiny_context, workers=1)
    assert all(r.summary.validity == 0 and r.summary.optimality == 0 for r in run.per_condition)


def test_generator_failure_marks_partial(tiny_config, tiny_context):
    run = run_unconditional(Flaky(), tiny_config, "desk", seed=0, context=tiny_context, workers=1)
    assert run.partial
    assert run.per_condition[1].summary is None and "model diverged" in run.per_condition[1].error
    assert run.aggregate is not None
    assert run.aggregate.validity == pytest.approx(
        np.mean([run.per_condition[i].summary.validity for i in (0, 2)])
    )


def test_conditional_constant_and_counts(tiny_config, tiny_context):
    run = run_conditional("constant", tiny_config, "desk", seed=1, context=tiny_context)
    assert run.aggregate.n_designs == 120
    assert run.aggregate.similarity > 0
    ds = run_conditional("dataset", tiny_config, "desk", seed=1, context=tiny_context)
    assert ds.aggregate.n_designs == 120
    assert ds.aggregate.similarity < run.aggregate.similarity


def test_optimizers_refuse_conditional(tiny_config, tiny_context):
    run = run_conditional("nsga2", tiny_config, "desk", seed=0, context=tiny_context)
    assert run.partial and run.aggregate is None
    assert "conditional" in run.per_condition[0].error


def test_optimizer_generators_smoke(tiny_config, tiny_context):
    for name in ("nsga2", "grad"):
        run = run_benchmark("unconditional", name, tiny_config, "desk", seed=0, context=tiny_context)
        assert not run.partial
        assert 0 <= run.aggregate.validity <= 1


def test_run_json_round_trip(tiny_config, tiny_context, tmp_path):
    run = run_unconditional("dataset", tiny_config, "desk", seed=0, context=tiny_context, workers=1)
    run.save(tmp_path / "run.json")
    back = BenchmarkRun.load(tmp_path / "run.json")
    assert back.to_json() == run.to_json()
    assert back.provenance["structural"] == "substitute"


def test_unknown_names(tiny_config, tiny_context):
    with pytest.raises(ValueError):
        make_generator("diffusion")
    with pytest.raises(ValueError):
        run_benchmark("baseline", "dataset", tiny_config, "desk", 0, tiny_context)
    with pytest.raises(ValueError):
        build_context(tiny_config, "huge")
