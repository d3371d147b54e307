import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cycledesign.evaluation import reports_from_arrays
from cycledesign.metrics import (
    ScoreSummary,
    Standardizer,
    consensus_counts,
    consensus_labels,
    ideal_point,
    median_bandwidth,
    mmd,
    reference_point,
    score_set,
    validity_rate,
)
from oracles import mmd_naive


def reports(G, F=None):
    G = np.asarray(G, dtype=float)
    F = np.zeros((len(G), 10)) if F is None else F
    return reports_from_arrays(F, G)


def test_validity_examples():
    assert validity_rate(reports(np.ones((5, 15)))) == 0.0
    assert validity_rate(reports(-np.ones((5, 15)))) == 1.0
    G = np.ones((1000, 15))
    G[:27] = -1.0
    assert validity_rate(reports(G)) == pytest.approx(0.027)
    G[5, 3] = 0.0  # boundary counts as satisfied
    assert validity_rate(G) == pytest.approx(0.027)
    with pytest.raises(ValueError):
        validity_rate([])
    perm = np.random.default_rng(0).permutation(1000)
    assert validity_rate(G[perm]) == validity_rate(G)


def test_reference_and_ideal_points():
    F = np.zeros((2, 10))
    F[0, :2] = [1, 2]
    F[1, :2] = [2, 1]
    R = reports(-np.ones((2, 15)), F)
    assert reference_point(R)[:2].tolist() == [2.0, 2.0]
    assert ideal_point(R)[:2].tolist() == [1.0, 1.0]
    assert np.array_equal(reference_point(R[:1]), F[0])
    with pytest.raises(ValueError):
        reference_point([])


def test_mmd_examples():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(30, 4))
    assert mmd(A, A.copy()) <= 1e-12
    assert mmd([[0.0]], [[100.0]], bandwidth=1.0) == pytest.approx(np.sqrt(2), abs=1e-6)
    with pytest.raises(ValueError):
        mmd(A, rng.normal(size=(5, 3)))
    with pytest.raises(ValueError):
        mmd(A[:0], A)
    with pytest.raises(ValueError):
        mmd(np.ones((3, 2)), np.ones((3, 2)))
    assert mmd(np.ones((3, 2)), np.ones((3, 2)), fallback_bandwidth=1.0) == 0.0


def test_mmd_matches_naive_oracle():
    rng = np.random.default_rng(1)
    for _ in range(5):
        A = rng.normal(size=(int(rng.integers(1, 12)), 3))
        B = rng.normal(loc=0.5, size=(int(rng.integers(1, 12)), 3))
        bw = float(rng.uniform(0.5, 2.0))
        assert mmd(A, B, bandwidth=bw) == pytest.approx(mmd_naive(A.tolist(), B.tolist(), bw), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_mmd_symmetric_and_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(int(rng.integers(1, 40)), 5))
    B = rng.normal(loc=0.3, size=(int(rng.integers(1, 40)), 5))
    base = mmd(A, B)
    assert base >= 0
    assert mmd(B, A) == base
    assert mmd(A[rng.permutation(len(A))], B[rng.permutation(len(B))]) == base


def test_median_bandwidth_subsampling_is_order_free():
    rng = np.random.default_rng(2)
    A, B = rng.normal(size=(300, 3)), rng.normal(size=(200, 3))
    a = median_bandwidth(A, B, max_points=100)
    assert a == median_bandwidth(A[::-1], B[rng.permutation(200)], max_points=100)
    assert a > 0


def test_standardizer():
    X = np.array([[1.0, 5.0], [3.0, 5.0]])
    s = Standardizer.fit(X)
    Z = s(X)
    assert Z[:, 0].tolist() == [-1.0, 1.0]
    assert Z[:, 1].tolist() == [0.0, 0.0]


def test_consensus_examples():
    assert consensus_labels([38], [50]) == ["usable"]
    assert consensus_labels([25], [50]) == ["unlabeled"]
    assert consensus_labels([15], [50]) == ["unusable"]
    assert consensus_labels([35, 14, 16], [50, 50, 50]) == ["usable", "unusable", "unlabeled"]
    with pytest.raises(ValueError):
        consensus_labels([1], [0])


def test_consensus_synthetic_table():
    rng = np.random.default_rng(3)
    totals = rng.integers(20, 80, size=500)
    yes = rng.integers(0, totals + 1)
    labels = consensus_labels(yes, totals)
    frac = yes / totals
    counts = consensus_counts(labels)
    assert counts["usable"] == int(np.sum(frac >= 0.7))
    assert counts["unusable"] == int(np.sum(frac <= 0.3))
    assert sum(counts.values()) == 500


# JSON file {"yes": [...], "totals": [...]} with the published per-design rating counts
RATINGS = os.environ.get("CYCLEDESIGN_RATINGS")


@pytest.mark.skipif(not RATINGS or not Path(RATINGS).exists(), reason="published rating table not provided")
def test_consensus_published_ratings():
    doc = json.loads(RATINGS.read_text())
    counts = consensus_counts(consensus_labels(doc["yes"], doc["totals"]))
    assert (counts["usable"], counts["unusable"]) == (49, 51)


def test_score_summary_ranges():
    with pytest.raises(ValueError):
        ScoreSummary(1.5, 0.1, 0.1)
    with pytest.raises(ValueError):
        ScoreSummary(0.5, 0.1, -0.1)
    m = ScoreSummary.mean([ScoreSummary(0.2, 0.4, 0.1, 0.01, 10), ScoreSummary(0.4, 0.2, 0.3, 0.01, 10)])
    assert m.validity == pytest.approx(0.3) and m.n_designs == 20


def test_score_set_uses_feasible_rows_only():
    rng = np.random.default_rng(4)
    F = rng.uniform(0, 1, size=(20, 3))
    G = np.full((20, 15), -1.0)
    G[10:] = 1.0
    X = rng.normal(size=(20, 4))
    s = score_set(F, G, X, X, np.ones(3), np.zeros(3), Standardizer.fit(X), 0, 0, hv_mode="exact")
    from cycledesign.hypervolume import hypervolume_exact

    assert s.validity == 0.5
    assert s.optimality == pytest.approx(hypervolume_exact(F[:10], np.ones(3)))
    assert s.similarity <= 1e-12
