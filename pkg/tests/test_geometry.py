import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cycledesign.design_space import DesignBatch, sample_mixed
from cycledesign.geometry import (
    CHECK_NAMES,
    ClosureFrameValidity,
    closure_margins,
    frame_geometry,
    frame_validity,
    geometric_checks,
    geometric_margins,
)

ANGLES = ("Head angle", "Seat angle")
RGB = ("FIRST color R_RGB", "FIRST color G_RGB", "FIRST color B_RGB")


def margin(checks, name):
    return next(c for c in checks if c.name == name).value


def test_check_order_and_satisfied_flag(schema, center):
    checks = geometric_checks(center, schema)
    assert [c.name for c in checks] == list(CHECK_NAMES)
    assert len(checks) == 12
    for c in checks:
        assert c.satisfied == (c.value <= 0)


def test_chain_stay_margin(schema, center):
    d = dict(center, **{"CS textfield": 400.0, "Wheel diameter rear": 700.0})
    c = margin(geometric_checks(d, schema), "chain_stay_vs_wheel_radius")
    assert c == pytest.approx(-50.0)


def test_rgb_margin(schema, center):
    d = dict(center, **{"FIRST color R_RGB": 300.0})
    checks = geometric_checks(d, schema)
    c = next(c for c in checks if c.name == "rgb_bound")
    assert c.value == pytest.approx(45.0) and not c.satisfied


def test_crank_ground_oracle(schema, center):
    # ground sits at (drop - Rr) below the BB; the crank tip reaches -crank
    rr, drop, crank = 340.0, 147.5, 172.5
    d = dict(center, **{"Wheel diameter rear": 2 * rr, "BB textfield": drop})
    clearance = -crank - (drop - rr)
    assert clearance == pytest.approx(20.0)
    assert margin(geometric_checks(d, schema, crank), "crank_ground_clearance") == pytest.approx(-clearance)


def test_chain_stay_vs_bb_drop(schema, center):
    d = dict(center, **{"CS textfield": 300.0, "BB textfield": -40.0})
    assert margin(geometric_checks(d, schema), "chain_stay_vs_bb_drop") == pytest.approx(-260.0)


def test_positive_parameters(schema, center):
    d = dict(center, **{"Saddle height": -10.0})
    assert margin(geometric_checks(d, schema), "positive_parameters") == pytest.approx(10.0)


def test_saddle_and_seatpost(schema, center):
    d = dict(center, **{"Saddle height": 600.0, "Seat angle": 90.0, "Seat tube length": 650.0, "Seatpost LENGTH": 200.0})
    checks = geometric_checks(d, schema)
    assert margin(checks, "saddle_height_too_small") == pytest.approx(50.0)
    d["Saddle height"] = 900.0
    assert margin(geometric_checks(d, schema), "seat_post_too_short") == pytest.approx(250.0 - 200.0)


def test_non_finite_inputs_are_violated(schema, center):
    d = dict(center, **{"Stack": float("nan")})
    checks = geometric_checks(d, schema)
    for name in ("positive_parameters", "down_tube_reach", "pedal_front_wheel_clearance"):
        assert margin(checks, name) == np.inf
    assert all(not np.isnan(c.value) for c in checks)
    assert not frame_validity(d).satisfied


def _scaled(design, schema, k):
    out = dict(design)
    for p in schema.of_kind("continuous"):
        if p.name not in ANGLES + RGB:
            out[p.name] = design[p.name] * k
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 5.0))
def test_scale_consistency(schema, seed, k):
    d = schema.from_mixed(sample_mixed(schema, 1, np.random.default_rng(seed)))[0]
    base = np.array([c.value for c in geometric_checks(d, schema, 172.5)])
    scaled = np.array([c.value for c in geometric_checks(_scaled(d, schema, k), schema, 172.5 * k)])
    rgb = CHECK_NAMES.index("rgb_bound")
    lengths = np.arange(12) != rgb
    assert np.allclose(scaled[lengths], k * base[lengths], rtol=1e-9, atol=1e-7)
    assert scaled[rgb] == base[rgb]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.floats(0, 1000), min_size=3, max_size=3))
def test_rgb_independence(schema, seed, rgb):
    d = schema.from_mixed(sample_mixed(schema, 1, np.random.default_rng(seed)))[0]
    e = dict(d, **dict(zip(RGB, rgb)))
    a = [c.value for c in geometric_checks(d, schema)]
    b = [c.value for c in geometric_checks(e, schema)]
    i = CHECK_NAMES.index("rgb_bound")
    assert a[:i] + a[i + 1 :] == b[:i] + b[i + 1 :]
    assert b[i] == pytest.approx(max(rgb) - 255.0)


def test_every_check_flags_some_random_design(schema):
    M = sample_mixed(schema, 1000, np.random.default_rng(2024))
    batch = DesignBatch(schema.mixed_to_continuous(M), schema)
    G = geometric_margins(batch)
    flagged = (G > 0).any(axis=0)
    assert flagged.all(), [n for n, f in zip(CHECK_NAMES, flagged) if not f]
    assert (ClosureFrameValidity(schema).classify_batch(batch) > 0).any()


def test_batch_matches_single(schema):
    M = sample_mixed(schema, 50, np.random.default_rng(3))
    batch = DesignBatch(schema.mixed_to_continuous(M), schema)
    G = geometric_margins(batch)
    for row, d in zip(G, schema.from_mixed(M)):
        assert np.allclose(row, [c.value for c in geometric_checks(d, schema)])


def test_frame_validity_default_center_satisfied(center):
    assert frame_validity(center).satisfied


def test_zero_top_tube_is_invalid(schema, center):
    batch = DesignBatch.from_designs([center], schema)
    g = frame_geometry(batch)
    degenerate = dataclasses.replace(g, tt_head_junction=g.tt_seat_junction.copy(), top_tube_length=np.zeros(1))
    assert closure_margins(batch, degenerate).max() > 0


def test_custom_classifier_contract(schema):
    class AlwaysPass:
        def classify(self, design):
            return -1.0

    class Broken:
        def classify(self, design):
            raise RuntimeError("model missing")

    for seed in range(20):
        d = schema.from_mixed(sample_mixed(schema, 1, np.random.default_rng(seed)))[0]
        assert frame_validity(d, AlwaysPass()).satisfied
    bad = frame_validity(d, Broken())
    assert not bad.satisfied and "model missing" in bad.diagnostic


def test_frame_validity_deterministic(schema):
    d = schema.from_mixed(sample_mixed(schema, 1, np.random.default_rng(9)))[0]
    assert frame_validity(d).value == frame_validity(d).value
