import math

import numpy as np
import pytest

from cycledesign.conditions import (
    USE_CASE_ORDER,
    ConditionArrays,
    condition_from_record,
    condition_to_record,
    load_conditions,
    sample_conditions,
    save_conditions,
)
from cycledesign.design_space import sample_mixed
from cycledesign.evaluation import (
    CONSTRAINT_NAMES,
    OBJECTIVE_NAMES,
    Evaluators,
    evaluate_design,
    evaluate_many,
)


def test_sample_conditions_deterministic(config, evaluators, schema):
    a = sample_conditions(5, 3, config, evaluators.embedder, schema)
    b = sample_conditions(5, 3, config, evaluators.embedder, schema)
    assert [c.text() for c in a] == [c.text() for c in b]
    assert all(np.array_equal(x.target_embedding.data, y.target_embedding.data) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        sample_conditions(0, 1, config)


def test_use_case_frequencies(config, evaluators, schema):
    conds = sample_conditions(10_000, 0, config, evaluators.embedder, schema)
    names = [c.use_case.name for c in conds]
    for u in USE_CASE_ORDER:
        assert abs(names.count(u) / len(names) - 1 / 3) <= 0.02


def test_riders_clamped(config, evaluators, schema):
    conds = sample_conditions(5_000, 1, config, evaluators.embedder, schema)
    ul = np.array([c.rider.upper_leg for c in conds])
    mean, sd = config["riders"]["upper_leg"]
    assert ul.min() >= mean - 3 * sd and ul.max() <= mean + 3 * sd
    assert abs(ul.mean() - mean) < 2.0


def test_condition_text(config):
    c = sample_conditions(1, 0, config)[0]
    t = c.text()
    assert t.startswith("Rider Body Dimensions: Upper leg length - ")
    assert f"Use Case: {c.use_case.label}." in t


def test_condition_record_round_trip(tmp_path, config):
    conds = sample_conditions(3, 4, config)
    save_conditions(tmp_path / "c.json", conds)
    back = load_conditions(tmp_path / "c.json", config)
    assert [c.text() for c in back] == [c.text() for c in conds]
    rec = condition_to_record(conds[0])
    rec["Use Case"] = "mountain"
    assert condition_from_record(rec, config).use_case.name == "mountain"
    rec["Use Case"] = "skiing"
    with pytest.raises(ValueError):
        condition_from_record(rec, config)
    rec = condition_to_record(conds[0])
    del rec["target_embedding"]
    with pytest.raises(ValueError):
        condition_from_record(rec, config)


def test_report_layout(center, evaluators, config):
    cond = sample_conditions(1, 0, config, evaluators.embedder, evaluators.schema)[0]
    r = evaluate_design(center, cond, evaluators)
    assert list(r.objectives) == list(OBJECTIVE_NAMES)
    assert list(r.constraints) == list(CONSTRAINT_NAMES)
    assert len(r.objective_vector()) == 10 and len(r.constraint_vector()) == 15
    assert r.valid and not r.errors
    assert r.feasible == all(v <= 0 for v in r.constraints.values())
    assert r.provenance["structural"] == "substitute"
    assert 0 <= r.objectives["usability"] <= 1
    assert 0 <= r.objectives["cosine_distance"] <= 2


def test_invalid_design_reported(center, evaluators, config):
    cond = sample_conditions(1, 0, config)[0]
    r = evaluate_design(dict(center, MATERIAL="WOOD"), cond, evaluators)
    assert not r.valid and not r.feasible
    assert all(math.isnan(v) for v in r.objectives.values())


def test_failing_family_is_isolated(center, schema, config):
    class Broken:
        provenance = "external"

        def classify(self, design):
            raise RuntimeError("classifier offline")

    ev = Evaluators(schema, config, frame_validity=Broken())
    cond = sample_conditions(1, 0, config, ev.embedder, schema)[0]
    r = evaluate_design(center, cond, ev)
    assert set(r.errors) == {"frame_validity"}
    assert r.constraints["frame_validity"] == math.inf
    assert not r.feasible
    assert all(np.isfinite(r.objective_vector()))


def test_batch_matches_single(schema, evaluators, config):
    M = sample_mixed(schema, 40, np.random.default_rng(0))
    designs = schema.from_mixed(M)
    conds = sample_conditions(40, 9, config, evaluators.embedder, schema)
    F, G = evaluators.evaluate_batch(schema.mixed_to_continuous(M), ConditionArrays.stack(conds))
    reports = evaluate_many(designs, conds, evaluators)
    for f, g, r in zip(F, G, reports):
        np.testing.assert_allclose(f, r.objective_vector(), rtol=1e-10)
        np.testing.assert_allclose(g, r.constraint_vector(), rtol=1e-10)
    with pytest.raises(ValueError):
        evaluate_many(designs, conds[:-1], evaluators)


def test_repeated_evaluation_bitwise_equal(schema, evaluators, config):
    X = schema.mixed_to_continuous(sample_mixed(schema, 100, np.random.default_rng(1)))
    cond = sample_conditions(1, 2, config, evaluators.embedder, schema)[0]
    F1, G1 = evaluators.evaluate_batch(X, cond)
    F2, G2 = evaluators.evaluate_batch(X, cond)
    assert np.array_equal(F1, F2) and np.array_equal(G1, G2)
