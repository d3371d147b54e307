"""Static rider-fit kinematics: interface points, joint angles, angle errors.

The rider is a planar linkage. The hip sits on the saddle, the foot on the
pedal at its farthest point from the saddle (full leg extension), and the
hands on the grip. The shoulder closes the torso/arm two-link chain between
saddle and grip; of the two closures the higher shoulder is used.

All functions broadcast over numpy arrays so a whole population, or a
population paired with per-design riders, is processed in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Mapping, Sequence

import numpy as np

from .design_space import DesignBatch, DesignSchema, default_schema
from .geometry import DEFAULT_CRANK_LENGTH, GeometryError, frame_geometry

DEFAULT_PENALTY = 100.0
DEFAULT_DEFICIT_RATE = 0.1  # degrees of error per mm of missing reach

USE_CASE_LABELS = {"road": "Road Biking", "mountain": "Mountain Biking", "commuting": "Commuting"}


@dataclass(frozen=True)
class RiderProfile:
    """Six anthropometric lengths in mm (scalars, or equal-length arrays)."""

    upper_leg: Any
    lower_leg: Any
    arm: Any
    torso: Any
    neck_head: Any
    torso_width: Any

    def __post_init__(self):
        for f in fields(self):
            v = np.asarray(getattr(self, f.name), dtype=float)
            if not np.all(np.isfinite(v)) or np.any(v <= 0):
                raise ValueError(f"rider {f.name} must be finite and strictly positive")

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


def stack_riders(riders: Sequence[RiderProfile]) -> RiderProfile:
    return RiderProfile(**{f.name: np.array([float(getattr(r, f.name)) for r in riders]) for f in fields(RiderProfile)})


@dataclass(frozen=True)
class UseCase:
    """Riding context with target joint-angle ranges ``(lo, hi)`` in degrees."""

    name: str
    knee: tuple[Any, Any]
    hip: tuple[Any, Any]
    arm: tuple[Any, Any]

    def __post_init__(self):
        for joint in ("knee", "hip", "arm"):
            lo, hi = (np.asarray(v, dtype=float) for v in getattr(self, joint))
            if np.any(lo >= hi):
                raise ValueError(f"{self.name}: {joint} range must have lo < hi")

    @property
    def label(self) -> str:
        return USE_CASE_LABELS.get(self.name, self.name)


def use_cases_from_config(config: Mapping[str, Any]) -> dict[str, UseCase]:
    raw = config["ergonomics"]["use_cases"]
    return {
        name: UseCase(name, tuple(r["knee"]), tuple(r["hip"]), tuple(r["arm"]))
        for name, r in raw.items()
    }


def stack_use_cases(cases: Sequence[UseCase]) -> UseCase:
    def col(joint, k):
        return np.array([float(getattr(c, joint)[k]) for c in cases])

    return UseCase(
        "mixed",
        (col("knee", 0), col("knee", 1)),
        (col("hip", 0), col("hip", 1)),
        (col("arm", 0), col("arm", 1)),
    )


@dataclass
class InterfacePoints:
    """Saddle, grip and far-pedal positions (mm, BB origin); arrays ``(n, 2)``."""

    saddle: np.ndarray
    grip: np.ndarray
    pedal_far: np.ndarray


@dataclass
class JointAngles:
    knee: np.ndarray
    hip: np.ndarray
    arm: np.ndarray
    incompatible: np.ndarray
    reach_deficit: np.ndarray
    shoulder: np.ndarray
    torso_angle: np.ndarray  # torso inclination above horizontal, degrees


def _cockpit(config: Mapping[str, Any] | None) -> dict[str, Any]:
    if config is None:
        from .config import default_config

        config = default_config()
    return config["cockpit"]


def interface_points_batch(
    batch: DesignBatch,
    config: Mapping[str, Any] | None = None,
    crank_length: float = DEFAULT_CRANK_LENGTH,
) -> InterfacePoints:
    cockpit = _cockpit(config)
    g = frame_geometry(batch, crank_length)
    stem = batch.weights("Stem kind") @ np.asarray(cockpit["stem_offsets"], dtype=float)
    bar = batch.weights("Handlebar style") @ np.asarray(cockpit["handlebar_offsets"], dtype=float)
    aero = batch["Display AEROBARS"][:, None] * np.asarray(cockpit["aerobar_offset"], dtype=float)
    grip = g.head_top + stem + bar + aero
    saddle = g.saddle
    dist = np.sqrt(np.sum(saddle**2, axis=1, keepdims=True))
    pedal_far = -saddle / dist * crank_length
    return InterfacePoints(saddle=saddle, grip=grip, pedal_far=pedal_far)


def interface_points(
    design: Mapping[str, Any],
    schema: DesignSchema | None = None,
    config: Mapping[str, Any] | None = None,
    crank_length: float = DEFAULT_CRANK_LENGTH,
) -> InterfacePoints:
    """Interface points of a single design (arrays of shape ``(1, 2)``)."""
    angle = float(design["Seat angle"])
    if np.isclose(np.sin(np.radians(angle)), 0.0):
        raise GeometryError(f"seat angle {angle} deg leaves the saddle undefined")
    batch = DesignBatch.from_designs([design], schema or default_schema())
    return interface_points_batch(batch, config, crank_length)


def _angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    nu = np.sqrt(np.sum(u * u, axis=-1))
    nv = np.sqrt(np.sum(v * v, axis=-1))
    c = np.sum(u * v, axis=-1) / np.maximum(nu * nv, 1e-12)
    return np.degrees(np.arccos(np.clip(c, -1.0, 1.0)))


def _law_of_cosines(a, b, c) -> np.ndarray:
    """Angle (deg) between sides ``a`` and ``b`` of a triangle with third side ``c``."""
    cos = (a**2 + b**2 - c**2) / (2 * a * b)
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def _two_link_joint(base: np.ndarray, tip: np.ndarray, l1, l2, side: float) -> tuple[np.ndarray, np.ndarray]:
    """Joint of a two-link chain from ``base`` to ``tip``.

    ``side`` selects the closure: +1 puts the joint left of base->tip
    (counter-clockwise). Unreachable tips place the joint on the base-tip
    line, fully stretched (or folded). Returns the joint and the reach
    deficit in mm.
    """
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    v = tip - base
    d = np.sqrt(np.sum(v * v, axis=-1))
    e = v / np.maximum(d, 1e-12)[..., None]
    n = np.stack([-e[..., 1], e[..., 0]], axis=-1)
    a = (l1**2 - l2**2 + d**2) / (2 * np.maximum(d, 1e-12))
    a = np.clip(a, -l1, l1)
    h = np.sqrt(np.maximum(l1**2 - a**2, 0.0))
    joint = base + a[..., None] * e + side * h[..., None] * n
    deficit = np.maximum.reduce([d - (l1 + l2), np.abs(l1 - l2) - d, np.zeros_like(d)])
    return joint, deficit


def joint_angles(points: InterfacePoints, rider: RiderProfile) -> JointAngles:
    """Knee, hip and arm angles at full leg extension.

    knee: law of cosines on (upper_leg, lower_leg) spanning saddle -> far
    pedal; 180 deg once the span reaches the leg length.
    hip: between torso (saddle -> shoulder) and thigh (saddle -> knee).
    arm: at the shoulder, between torso (shoulder -> saddle) and arm
    (shoulder -> grip).
    """
    saddle, grip, pedal = points.saddle, points.grip, points.pedal_far
    l1 = np.asarray(rider.upper_leg, dtype=float)
    l2 = np.asarray(rider.lower_leg, dtype=float)
    d = np.sqrt(np.sum((pedal - saddle) ** 2, axis=-1))
    knee = np.where(d >= l1 + l2, 180.0, _law_of_cosines(l1, l2, d))

    # knee sits forward of the hip -> pedal line
    knee_pt, leg_deficit = _two_link_joint(saddle, pedal, l1, l2, side=1.0)

    torso = np.asarray(rider.torso, dtype=float)
    arm_len = np.asarray(rider.arm, dtype=float)
    # saddle -> grip runs forward; the higher shoulder is on its left
    shoulder, reach_deficit = _two_link_joint(saddle, grip, torso, arm_len, side=1.0)

    torso_vec = shoulder - saddle
    hip = _angle_between(torso_vec, knee_pt - saddle)
    arm = _angle_between(saddle - shoulder, grip - shoulder)
    torso_angle = np.degrees(np.arctan2(torso_vec[..., 1], torso_vec[..., 0]))

    deficit = np.maximum(leg_deficit, reach_deficit)
    return JointAngles(
        knee=knee,
        hip=hip,
        arm=arm,
        incompatible=deficit > 0,
        reach_deficit=deficit,
        shoulder=shoulder,
        torso_angle=torso_angle,
    )


def _range_error(angle, lo, hi) -> np.ndarray:
    return np.maximum.reduce([np.asarray(lo) - angle, angle - np.asarray(hi), np.zeros_like(angle)])


def ergonomic_errors(
    angles: JointAngles,
    use_case: UseCase,
    penalty: float = DEFAULT_PENALTY,
    deficit_rate: float = DEFAULT_DEFICIT_RATE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distance (deg) of each joint angle outside its target range.

    Riders who cannot reach the pedal or the grip at all get
    ``penalty + deficit_rate * reach_deficit`` added to every joint.
    """
    extra = np.where(angles.incompatible, penalty + deficit_rate * angles.reach_deficit, 0.0)
    knee = _range_error(angles.knee, *use_case.knee) + extra
    hip = _range_error(angles.hip, *use_case.hip) + extra
    arm = _range_error(angles.arm, *use_case.arm) + extra
    return knee, hip, arm
