"""Planar frame geometry and closed-form feasibility checks.

Frame coordinates are in mm with the bottom bracket (BB) at the origin,
``x`` pointing forward and ``y`` up. Every check returns a signed margin:
``<= 0`` is satisfied, ``> 0`` is violated, in the units of the underlying
quantity.

Derived points:

* rear axle: ``BB textfield`` above the BB, ``CS textfield`` away;
* seat tube: from the BB at ``Seat angle`` to horizontal, leaning back;
* head tube: its top sits at height ``Stack``; its horizontal position
  is whatever makes the down tube (``DT Length``, BB to the junction
  ``Head tube lower extension2`` above the head tube bottom) close;
* front axle: on the line parallel to the steering axis offset forward by
  ``FORK0R``, at the height where both wheels touch flat ground.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Protocol

import numpy as np

from .design_space import DesignBatch, DesignSchema, default_schema

DEFAULT_CRANK_LENGTH = 172.5

CHECK_NAMES = (
    "saddle_height_too_small",
    "seat_post_too_short",
    "head_tube_lower_extension_too_great",
    "head_tube_length_too_great",
    "positive_parameters",
    "chain_stay_vs_wheel_radius",
    "chain_stay_vs_bb_drop",
    "seat_stay_vs_wheel_radius",
    "down_tube_reach",
    "pedal_front_wheel_clearance",
    "crank_ground_clearance",
    "rgb_bound",
)
FRAME_VALIDITY_NAME = "frame_validity"

# Length-valued parameters that must be strictly positive.
POSITIVE_PARAMETERS = (
    "CS textfield",
    "Stack",
    "Head tube length textfield",
    "Seat tube length",
    "DT Length",
    "BB diameter",
    "ttd",
    "csd",
    "ssd",
    "dtd",
    "Head tube upper extension2",
    "Seat tube extension2",
    "Head tube lower extension2",
    "Wall thickness Bottom Bracket",
    "Wall thickness Top tube",
    "Wall thickness Head tube",
    "Wall thickness Down tube",
    "Wall thickness Chain stay",
    "Wall thickness Seat stay",
    "Wall thickness Seat tube",
    "Wheel diameter front",
    "Wheel diameter rear",
    "BB length",
    "Head tube diameter",
    "Seat tube diameter",
    "Saddle height",
    "Seatpost LENGTH",
)
RGB_PARAMETERS = ("FIRST color R_RGB", "FIRST color G_RGB", "FIRST color B_RGB")


class GeometryError(ValueError):
    """Raised for geometry that cannot be placed at all (e.g. a flat seat tube)."""


@dataclass(frozen=True)
class ConstraintValue:
    name: str
    value: float
    diagnostic: str = ""

    @property
    def satisfied(self) -> bool:
        return bool(self.value <= 0)


def _pt(x, y) -> np.ndarray:
    return np.stack([np.asarray(x, dtype=float), np.asarray(y, dtype=float)], axis=-1)


def _norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(v * v, axis=-1))


@dataclass
class FrameGeometry:
    """Derived frame points (arrays of shape ``(n, 2)``) and lengths (``(n,)``)."""

    rear_axle: np.ndarray
    front_axle: np.ndarray
    seat_dir: np.ndarray
    saddle: np.ndarray
    head_top: np.ndarray
    head_dir: np.ndarray
    dt_junction: np.ndarray
    tt_head_junction: np.ndarray
    tt_seat_junction: np.ndarray
    ss_junction: np.ndarray
    rear_radius: np.ndarray
    front_radius: np.ndarray
    saddle_distance: np.ndarray
    seat_stay_length: np.ndarray
    top_tube_length: np.ndarray
    dt_junction_height: np.ndarray
    crank_length: float


def frame_geometry(batch: DesignBatch, crank_length: float = DEFAULT_CRANK_LENGTH) -> FrameGeometry:
    cs = batch["CS textfield"]
    bb_drop = batch["BB textfield"]
    stack = batch["Stack"]
    ha = np.radians(batch["Head angle"])
    htl = batch["Head tube length textfield"]
    st = batch["Seat tube length"]
    sa = np.radians(batch["Seat angle"])
    dt = batch["DT Length"]
    fork_offset = batch["FORK0R"]
    htux = batch["Head tube upper extension2"]
    stx = batch["Seat tube extension2"]
    htlx = batch["Head tube lower extension2"]
    ssj = batch["Seat stay junction0"]
    saddle_h = batch["Saddle height"]
    rr = batch["Wheel diameter rear"] / 2
    rf = batch["Wheel diameter front"] / 2

    rear_axle = _pt(-np.sqrt(np.maximum(cs**2 - bb_drop**2, 0.0)), bb_drop)
    seat_dir = _pt(-np.cos(sa), np.sin(sa))
    saddle_distance = saddle_h / np.sin(sa)
    saddle = _pt(-saddle_h / np.tan(sa), saddle_h)

    # head tube axis points down and forward from its top
    head_dir = _pt(np.cos(ha), -np.sin(ha))
    along = htl - htlx
    y_j = stack - along * np.sin(ha)
    x_j = np.sqrt(np.maximum(dt**2 - y_j**2, 0.0))
    head_top = _pt(x_j - along * np.cos(ha), stack)
    dt_junction = _pt(x_j, y_j)
    tt_head_junction = head_top + htux[:, None] * head_dir
    tt_seat_junction = (st - stx)[:, None] * seat_dir
    ss_junction = (st - ssj)[:, None] * seat_dir

    # front axle: wheels share flat ground, so its height is fixed by radii
    y_front = bb_drop + rf - rr
    t = (stack + fork_offset * np.cos(ha) - y_front) / np.sin(ha)
    x_front = head_top[:, 0] + t * np.cos(ha) + fork_offset * np.sin(ha)
    front_axle = _pt(x_front, y_front)

    return FrameGeometry(
        rear_axle=rear_axle,
        front_axle=front_axle,
        seat_dir=seat_dir,
        saddle=saddle,
        head_top=head_top,
        head_dir=head_dir,
        dt_junction=dt_junction,
        tt_head_junction=tt_head_junction,
        tt_seat_junction=tt_seat_junction,
        ss_junction=ss_junction,
        rear_radius=rr,
        front_radius=rf,
        saddle_distance=saddle_distance,
        seat_stay_length=_norm(ss_junction - rear_axle),
        top_tube_length=_norm(tt_head_junction - tt_seat_junction),
        dt_junction_height=y_j,
        crank_length=crank_length,
    )


def geometric_margins(batch: DesignBatch, crank_length: float = DEFAULT_CRANK_LENGTH) -> np.ndarray:
    """Margins of the 12 closed-form checks, shape ``(n, 12)`` in ``CHECK_NAMES`` order."""
    g = frame_geometry(batch, crank_length)
    st = batch["Seat tube length"]
    htl = batch["Head tube length textfield"]
    htlx = batch["Head tube lower extension2"]
    htux = batch["Head tube upper extension2"]
    ttd = batch["ttd"]
    dtd = batch["dtd"]
    cs = batch["CS textfield"]
    bb_drop = batch["BB textfield"]

    gap = g.saddle_distance - st
    positives = np.stack([batch[name] for name in POSITIVE_PARAMETERS], axis=1)
    rgb = np.stack([batch[name] for name in RGB_PARAMETERS], axis=1)
    pedal_forward = _pt(np.full(len(batch), crank_length), np.zeros(len(batch)))

    m = np.stack(
        [
            -gap,
            gap - batch["Seatpost LENGTH"],
            htlx + dtd / 2 - htl,
            htux + htlx + (ttd + dtd) / 2 - htl,
            np.max(-positives, axis=1),
            g.rear_radius - cs,
            np.abs(bb_drop) - cs,
            g.rear_radius - g.seat_stay_length,
            np.abs(g.dt_junction_height) - batch["DT Length"],
            g.front_radius - _norm(g.front_axle - pedal_forward),
            crank_length + bb_drop - g.rear_radius,
            np.max(rgb, axis=1) - 255.0,
        ],
        axis=1,
    )
    return np.where(np.isfinite(m), m, np.inf)


def _turn_margin(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Negative when a -> b -> c turns left (counter-clockwise), in mm."""
    ab = b - a
    bc = c - b
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    return -cross / np.maximum(_norm(bc), 1e-12)


def closure_margins(batch: DesignBatch, geometry: FrameGeometry | None = None) -> np.ndarray:
    """Per-row margins of the main-triangle closure proxy, shape ``(n, 8)``.

    The quadrilateral BB -> down-tube junction -> top-tube/head junction ->
    top-tube/seat junction must be convex and counter-clockwise, and each of
    its four sides must be longer than the tube ends it joins.
    """
    g = geometry if geometry is not None else frame_geometry(batch)
    bb = np.zeros_like(g.dt_junction)
    quad = [bb, g.dt_junction, g.tt_head_junction, g.tt_seat_junction]
    turns = [_turn_margin(quad[i - 1], quad[i], quad[(i + 1) % 4]) for i in range(4)]
    bb_r = batch["BB diameter"] / 2
    seat_segment = batch["Seat tube length"] - batch["Seat tube extension2"]
    head_segment = (
        batch["Head tube length textfield"]
        - batch["Head tube upper extension2"]
        - batch["Head tube lower extension2"]
    )
    sides = [
        bb_r + batch["ttd"] / 2 - seat_segment,
        (batch["Seat tube diameter"] + batch["Head tube diameter"]) / 2 - g.top_tube_length,
        -head_segment,
        bb_r + batch["Head tube diameter"] / 2 - _norm(g.dt_junction),
    ]
    m = np.stack(turns + sides, axis=1)
    return np.where(np.isfinite(m), m, np.inf)


class FrameValidityClassifier(Protocol):
    def classify(self, design: Mapping[str, Any]) -> float:
        ...


class ClosureFrameValidity:
    """Default frame-validity proxy: worst closure margin of the main frame.

    Stands in for a classifier trained on frames that fail to regenerate in
    CAD; any object with a ``classify(design) -> float`` method can replace it.
    """

    provenance = "substitute"

    def __init__(self, schema: DesignSchema | None = None):
        self.schema = schema or default_schema()

    def classify_batch(self, batch: DesignBatch) -> np.ndarray:
        return np.max(closure_margins(batch), axis=1)

    def classify(self, design: Mapping[str, Any]) -> float:
        return float(self.classify_batch(DesignBatch.from_designs([design], self.schema))[0])


def geometric_checks(
    design: Mapping[str, Any],
    schema: DesignSchema | None = None,
    crank_length: float = DEFAULT_CRANK_LENGTH,
) -> list[ConstraintValue]:
    schema = schema or default_schema()
    batch = _lenient_batch(design, schema)
    margins = geometric_margins(batch, crank_length)[0]
    return [ConstraintValue(n, float(v)) for n, v in zip(CHECK_NAMES, margins)]


def frame_validity(
    design: Mapping[str, Any], classifier: FrameValidityClassifier | None = None
) -> ConstraintValue:
    classifier = classifier or ClosureFrameValidity()
    try:
        value = float(classifier.classify(design))
    except Exception as exc:  # classifier errors become a violated constraint
        return ConstraintValue(FRAME_VALIDITY_NAME, float("inf"), f"classifier failed: {exc!r}")
    if not np.isfinite(value):
        return ConstraintValue(FRAME_VALIDITY_NAME, float("inf"), "classifier returned a non-finite margin")
    return ConstraintValue(FRAME_VALIDITY_NAME, value)


def _lenient_batch(design: Mapping[str, Any], schema: DesignSchema) -> DesignBatch:
    """Batch of one without bound checks, so out-of-range values still get margins."""
    X = np.zeros((1, schema.continuous_dim))
    for p in schema.parameters:
        s = schema.slot(p.name)
        v = design[p.name]
        if p.kind == "categorical":
            X[0, s.start + p.categories.index(str(v))] = 1.0
        else:
            try:
                X[0, s.start] = float(v)
            except (TypeError, ValueError):
                X[0, s.start] = np.nan
    return DesignBatch(X, schema)
