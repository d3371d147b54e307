import numpy as np
from hypothesis import given, settings, strategies as st

from cycledesign.optimize.sorting import crowding_distance, nondominated_sort, ranks
from oracles import brute_force_fronts


def _as_lists(fronts):
    return [sorted(int(i) for i in f) for f in fronts]


def test_sort_matches_brute_force_unconstrained():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n, m = int(rng.integers(1, 60)), int(rng.integers(1, 6))
        F = rng.integers(0, 5, size=(n, m)).astype(float)  # many ties
        assert _as_lists(nondominated_sort(F)) == brute_force_fronts(F)


def test_sort_matches_brute_force_constrained():
    rng = np.random.default_rng(1)
    for _ in range(30):
        n, m = int(rng.integers(1, 60)), int(rng.integers(2, 6))
        F = rng.normal(size=(n, m))
        cv = np.where(rng.random(n) < 0.5, 0.0, rng.integers(1, 4, size=n).astype(float))
        assert _as_lists(nondominated_sort(F, cv)) == brute_force_fronts(F, cv)


def test_fronts_partition_and_ranks():
    F = np.random.default_rng(2).normal(size=(40, 3))
    fronts = nondominated_sort(F)
    allidx = np.sort(np.concatenate(fronts))
    assert allidx.tolist() == list(range(40))
    r = ranks(fronts, 40)
    for k, f in enumerate(fronts):
        assert np.all(r[f] == k)
    assert nondominated_sort(np.zeros((0, 2))) == []


def test_nan_treated_as_worst():
    F = np.array([[np.nan, 0.0], [1.0, 1.0]])
    fronts = _as_lists(nondominated_sort(F))
    assert fronts[0] == [1] or fronts == [[0, 1]]
    assert 1 in fronts[0]


def test_crowding_collinear():
    F = np.array([[0.0, 4.0], [1.0, 3.0], [2.0, 2.0], [4.0, 0.0]])
    d = crowding_distance(F)
    assert np.isinf(d[0]) and np.isinf(d[3])
    # each objective spans 4; neighbour gaps 2/4 and 3/4 in both objectives
    assert d[1] == 2 * (2 / 4)
    assert d[2] == 2 * (3 / 4)


def test_crowding_small_sets_and_constant_objective():
    assert np.all(np.isinf(crowding_distance(np.array([[1.0, 2.0], [2.0, 1.0]]))))
    F = np.array([[0.0, 5.0], [1.0, 5.0], [3.0, 5.0]])
    assert crowding_distance(F)[1] == 3 / 3


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_crowding_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(int(rng.integers(3, 20)), int(rng.integers(1, 5))))
    perm = rng.permutation(len(F))
    assert np.array_equal(crowding_distance(F)[perm], crowding_distance(F[perm]))
