"""Full-design evaluation: 10 objectives and 15 constraint margins.

``Evaluators`` bundles one implementation per criterion family. The batch
path (``evaluate_batch``) is what optimizers and the harness use; the
single-design path (``evaluate_design``) isolates each family so a failure
is reported against the criteria it feeds instead of aborting the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .conditions import Condition, ConditionArrays
from .design_space import DesignBatch, DesignSchema, default_schema, validate
from .ergonomics import ergonomic_errors, interface_points_batch, joint_angles
from .geometry import CHECK_NAMES, FRAME_VALIDITY_NAME, ClosureFrameValidity, geometric_margins
from .proxies import DragProxy, Evaluator, LinearEmbedder, StructuralProxy, UsabilityProxy, cosine_distance_batch

OBJECTIVE_NAMES = (
    "usability",
    "drag_force",
    "knee_angle_error",
    "hip_angle_error",
    "arm_angle_error",
    "cosine_distance",
    "mass",
    "planar_compliance",
    "transverse_compliance",
    "eccentric_compliance",
)
CONSTRAINT_NAMES = ("planar_safety_factor", "eccentric_safety_factor") + CHECK_NAMES + (FRAME_VALIDITY_NAME,)
N_OBJECTIVES = len(OBJECTIVE_NAMES)
N_CONSTRAINTS = len(CONSTRAINT_NAMES)

# which criteria each family produces
FAMILIES = {
    "structural": ("mass", "planar_compliance", "transverse_compliance", "eccentric_compliance",
                   "planar_safety_factor", "eccentric_safety_factor"),
    "drag": ("drag_force",),
    "ergonomics": ("knee_angle_error", "hip_angle_error", "arm_angle_error"),
    "usability": ("usability",),
    "aesthetics": ("cosine_distance",),
    "geometry": CHECK_NAMES,
    "frame_validity": (FRAME_VALIDITY_NAME,),
}


@dataclass
class EvaluationReport:
    objectives: dict[str, float]
    constraints: dict[str, float]
    provenance: dict[str, str] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        """False when any evaluator failed."""
        return not self.errors

    @property
    def feasible(self) -> bool:
        return self.valid and all(v <= 0 for v in self.constraints.values())

    def objective_vector(self) -> np.ndarray:
        return np.array([self.objectives[n] for n in OBJECTIVE_NAMES])

    def constraint_vector(self) -> np.ndarray:
        return np.array([self.constraints[n] for n in CONSTRAINT_NAMES])

    def to_dict(self) -> dict[str, Any]:
        return {
            "objectives": dict(self.objectives),
            "constraints": dict(self.constraints),
            "provenance": dict(self.provenance),
            "errors": dict(self.errors),
            "feasible": self.feasible,
        }


class Evaluators:
    """One evaluator per criterion family; defaults are the analytic proxies."""

    def __init__(
        self,
        schema: DesignSchema | None = None,
        config: Mapping[str, Any] | None = None,
        structural: Evaluator | None = None,
        drag: Evaluator | None = None,
        usability: Evaluator | None = None,
        embedder: Evaluator | None = None,
        frame_validity: Any = None,
    ):
        if config is None:
            from .config import default_config

            config = default_config()
        self.schema = schema or default_schema()
        self.config = config
        self.structural = structural or StructuralProxy(self.schema, config)
        self.drag = drag or DragProxy(self.schema, config)
        self.usability = usability or UsabilityProxy(self.schema, config)
        self.embedder = embedder or LinearEmbedder(self.schema, config)
        self.frame_validity = frame_validity or ClosureFrameValidity(self.schema)

    @property
    def crank_length(self) -> float:
        return float(self.config["crank_length"])

    def provenance(self) -> dict[str, str]:
        return {
            "structural": self.structural.provenance,
            "drag": self.drag.provenance,
            "ergonomics": "closed-form",
            "usability": self.usability.provenance,
            "aesthetics": self.embedder.provenance,
            "geometry": "closed-form",
            "frame_validity": getattr(self.frame_validity, "provenance", "external"),
        }

    # -- per-family batch evaluation ------------------------------------------------

    def _family(self, name: str, batch: DesignBatch, ctx: ConditionArrays) -> np.ndarray:
        """Columns (n, k) for the criteria of family ``name``."""
        n = len(batch)
        if name == "structural":
            out = self.structural.evaluate_batch(batch, ctx)
            return np.stack([np.broadcast_to(out[k], (n,)) for k in FAMILIES[name]], axis=1)
        if name == "drag":
            return np.reshape(self.drag.evaluate_batch(batch, ctx)["drag_force"], (n, 1))
        if name == "ergonomics":
            pts = interface_points_batch(batch, self.config, self.crank_length)
            angles = joint_angles(pts, ctx.rider)
            erg = self.config["ergonomics"]
            errs = ergonomic_errors(angles, ctx.use_case, erg["penalty"], erg["deficit_rate"])
            return np.stack([np.broadcast_to(e, (n,)) for e in errs], axis=1)
        if name == "usability":
            return np.reshape(self.usability.evaluate_batch(batch, ctx)["usability"], (n, 1))
        if name == "aesthetics":
            if hasattr(self.embedder, "cosine_distance"):
                return self.embedder.cosine_distance(batch, ctx.target)[:, None]
            E = self.embedder.evaluate_batch(batch, ctx)["embedding"]
            return cosine_distance_batch(E, np.broadcast_to(ctx.target, E.shape))[:, None]
        if name == "geometry":
            return geometric_margins(batch, self.crank_length)
        if name == "frame_validity":
            fv = self.frame_validity
            if hasattr(fv, "classify_batch"):
                v = fv.classify_batch(batch)
            else:
                v = np.array([fv.classify(d) for d in self.schema.from_mixed(self.schema.continuous_to_mixed(batch.X))])
            v = np.asarray(v, dtype=float)
            return np.where(np.isfinite(v), v, np.inf)[:, None]
        raise KeyError(name)

    def evaluate_batch(self, X: np.ndarray, conditions: ConditionArrays | Condition) -> tuple[np.ndarray, np.ndarray]:
        """Objectives ``(n, 10)`` and constraint margins ``(n, 15)`` for continuous rows ``X``."""
        if isinstance(conditions, Condition):
            conditions = ConditionArrays.single(conditions)
        batch = DesignBatch(np.atleast_2d(X), self.schema)
        cols = {}
        for fam, names in FAMILIES.items():
            vals = self._family(fam, batch, conditions)
            for j, nm in enumerate(names):
                cols[nm] = vals[:, j]
        F = np.stack([cols[k] for k in OBJECTIVE_NAMES], axis=1)
        G = np.stack([cols[k] for k in CONSTRAINT_NAMES], axis=1)
        return F, G


def evaluate_design(design: Mapping[str, Any], condition: Condition, evaluators: Evaluators | None = None) -> EvaluationReport:
    """Evaluate one design; failing families are named in ``report.errors``.

    Objectives of a failed family are NaN and its constraints are ``+inf``
    so the design can never count as feasible.
    """
    ev = evaluators or Evaluators()
    objectives = {k: float("nan") for k in OBJECTIVE_NAMES}
    constraints = {k: float("inf") for k in CONSTRAINT_NAMES}
    errors: dict[str, str] = {}
    problems = validate(design, ev.schema)
    if problems:
        msg = "; ".join(f"{v.name}: {v.message}" for v in problems)
        errors = {k: f"invalid design: {msg}" for k in OBJECTIVE_NAMES + CONSTRAINT_NAMES}
        return EvaluationReport(objectives, constraints, ev.provenance(), errors)

    batch = DesignBatch.from_designs([design], ev.schema)
    ctx = ConditionArrays.single(condition)
    for fam, names in FAMILIES.items():
        try:
            vals = ev._family(fam, batch, ctx)[0]
        except Exception as exc:
            for nm in names:
                errors[nm] = f"{fam} evaluator failed: {exc!r}"
            continue
        for nm, v in zip(names, vals):
            v = float(v)
            if not np.isfinite(v):
                errors[nm] = f"{fam} evaluator returned a non-finite value"
                v = float("nan") if nm in objectives else float("inf")
            (objectives if nm in objectives else constraints)[nm] = v
    return EvaluationReport(objectives, constraints, ev.provenance(), errors)


def reports_from_arrays(F: np.ndarray, G: np.ndarray, provenance: Mapping[str, str] | None = None) -> list[EvaluationReport]:
    out = []
    for f, g in zip(F, G):
        errors = {n: "non-finite value" for n, v in zip(OBJECTIVE_NAMES + CONSTRAINT_NAMES, np.r_[f, g]) if not np.isfinite(v)}
        out.append(EvaluationReport(dict(zip(OBJECTIVE_NAMES, map(float, f))), dict(zip(CONSTRAINT_NAMES, map(float, g))),
                                    dict(provenance or {}), errors))
    return out


def evaluate_many(
    designs: Sequence[Mapping[str, Any]], conditions: Sequence[Condition], evaluators: Evaluators | None = None
) -> list[EvaluationReport]:
    if len(designs) != len(conditions):
        raise ValueError("need one condition per design")
    ev = evaluators or Evaluators()
    return [evaluate_design(d, c, ev) for d, c in zip(designs, conditions)]
