"""Conditional inputs: rider, use case, aesthetic target and prompt text.

Conditions are sampled from independent clamped normals per rider length
(parameters in config), a uniform use case, and a target embedding taken
from a seeded random design. Condition files are JSON lists of records whose
keys mirror the fields of the conditioning text string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .design_space import DesignBatch, DesignSchema, default_schema, sample_mixed
from .ergonomics import RiderProfile, UseCase, USE_CASE_LABELS, stack_riders, stack_use_cases, use_cases_from_config
from .proxies import Embedding, Evaluator, LinearEmbedder

USE_CASE_ORDER = ("road", "mountain", "commuting")
CLAMP_SIGMA = 3.0

# record key <-> RiderProfile field
RIDER_KEYS = {
    "Upper leg length": "upper_leg",
    "Lower leg length": "lower_leg",
    "Arm length": "arm",
    "Torso length": "torso",
    "Neck and head length": "neck_head",
    "Torso width": "torso_width",
}


@dataclass(frozen=True)
class Condition:
    rider: RiderProfile
    use_case: UseCase
    target_embedding: Embedding
    prompt_text: str = ""

    def text(self) -> str:
        """The flat conditioning string handed to text-based generators."""
        r = self.rider
        return (
            f"Rider Body Dimensions: Upper leg length - {r.upper_leg:.1f}, "
            f"Lower leg length - {r.lower_leg:.1f}, Arm length - {r.arm:.1f}, "
            f"Torso length - {r.torso:.1f}, Neck and head length - {r.neck_head:.1f}, "
            f"Torso width - {r.torso_width:.1f}. Use Case: {self.use_case.label}. "
            f"Marketing Description: {self.prompt_text}"
        )


@dataclass
class ConditionArrays:
    """Conditions broadcast row-wise against a design batch.

    ``rider`` and ``use_case`` hold arrays (or scalars), ``target`` is an
    ``(n, E)`` or ``(E,)`` array. Fields may be ``None`` when a caller only
    needs part of the context.
    """

    rider: RiderProfile | None
    use_case: UseCase | None
    target: np.ndarray | None

    @classmethod
    def single(cls, condition: Condition) -> "ConditionArrays":
        return cls(condition.rider, condition.use_case, condition.target_embedding.data)

    @classmethod
    def stack(cls, conditions: Sequence[Condition]) -> "ConditionArrays":
        return cls(
            stack_riders([c.rider for c in conditions]),
            stack_use_cases([c.use_case for c in conditions]),
            np.stack([c.target_embedding.data for c in conditions]),
        )


def sample_riders(n: int, rng: np.random.Generator, config: Mapping[str, Any]) -> list[RiderProfile]:
    cols = {}
    for f in fields(RiderProfile):
        mean, sd = config["riders"][f.name]
        z = np.clip(rng.standard_normal(n), -CLAMP_SIGMA, CLAMP_SIGMA)
        cols[f.name] = mean + sd * z
    return [RiderProfile(**{k: float(v[i]) for k, v in cols.items()}) for i in range(n)]


def describe_design(design: Mapping[str, Any]) -> str:
    """Short opaque prompt derived from a few categorical features."""
    material = str(design.get("MATERIAL", "")).lower()
    rims = str(design.get("RIM_STYLE front", "")).lower()
    return f"a {material} bicycle with {rims} front wheel"


def sample_conditions(
    n: int,
    seed: int,
    config: Mapping[str, Any] | None = None,
    embedder: Evaluator | None = None,
    schema: DesignSchema | None = None,
) -> list[Condition]:
    """Draw ``n`` conditions deterministically from ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if config is None:
        from .config import default_config

        config = default_config()
    schema = schema or default_schema()
    embedder = embedder or LinearEmbedder(schema, config)
    rng = np.random.default_rng(seed)
    riders = sample_riders(n, rng, config)
    cases = use_cases_from_config(config)
    picks = rng.integers(0, len(USE_CASE_ORDER), size=n)
    M = sample_mixed(schema, n, rng)
    targets = embedder.evaluate_batch(DesignBatch(schema.mixed_to_continuous(M), schema))["embedding"]
    designs = schema.from_mixed(M)
    return [
        Condition(riders[i], cases[USE_CASE_ORDER[picks[i]]], Embedding(targets[i]), describe_design(designs[i]))
        for i in range(n)
    ]


def condition_to_record(c: Condition) -> dict[str, Any]:
    rec: dict[str, Any] = {key: float(getattr(c.rider, attr)) for key, attr in RIDER_KEYS.items()}
    rec["Use Case"] = c.use_case.label
    rec["Marketing Description"] = c.prompt_text
    rec["target_embedding"] = [float(v) for v in c.target_embedding.data]
    return rec


def condition_from_record(rec: Mapping[str, Any], config: Mapping[str, Any] | None = None) -> Condition:
    if config is None:
        from .config import default_config

        config = default_config()
    cases = use_cases_from_config(config)
    by_label = {USE_CASE_LABELS.get(k, k): v for k, v in cases.items()}
    label = rec["Use Case"]
    if label in by_label:
        use_case = by_label[label]
    elif label in cases:
        use_case = cases[label]
    else:
        raise ValueError(f"unknown use case {label!r}")
    rider = RiderProfile(**{attr: float(rec[key]) for key, attr in RIDER_KEYS.items()})
    if rec.get("target_embedding") is None:
        raise ValueError("condition record has no target_embedding")
    return Condition(rider, use_case, Embedding(np.asarray(rec["target_embedding"], dtype=float)),
                     str(rec.get("Marketing Description", "")))


def save_conditions(path: str | Path, conditions: Sequence[Condition]) -> None:
    Path(path).write_text(json.dumps([condition_to_record(c) for c in conditions], indent=1))


def load_conditions(path: str | Path, config: Mapping[str, Any] | None = None) -> list[Condition]:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, Mapping):
        doc = [doc]
    return [condition_from_record(r, config) for r in doc]
