"""Pluggable evaluators and the analytic reference proxies behind them.

Each evaluator family exposes ``evaluate_batch(batch, context)`` returning
named arrays, plus a per-design ``evaluate``. The bundled implementations are
closed-form substitutes for trained surrogates and report
``provenance = "substitute"``; an external model only has to subclass
:class:`Evaluator` (or provide the same methods) to be swapped in.

``context`` is the :class:`~cycledesign.conditions.ConditionArrays` of the
rows being evaluated; evaluators that ignore the rider or target do not
touch it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .design_space import DesignBatch, DesignSchema, default_schema
from .ergonomics import RiderProfile, interface_points_batch, joint_angles
from .structural import STRUCTURAL_OUTPUTS, structural_batch


class EvaluatorError(RuntimeError):
    """An evaluator could not produce outputs for the given designs."""


class Evaluator:
    outputs: tuple[str, ...] = ()
    provenance = "substitute"

    def __init__(self, schema: DesignSchema | None = None, config: Mapping[str, Any] | None = None):
        if config is None:
            from .config import default_config

            config = default_config()
        self.schema = schema or default_schema()
        self.config = config

    def evaluate_batch(self, batch: DesignBatch, context: Any = None) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def evaluate(self, design: Mapping[str, Any], context: Any = None) -> dict[str, Any]:
        out = self.evaluate_batch(DesignBatch.from_designs([design], self.schema), context)
        return {k: (v[0] if np.ndim(v) > 1 else float(v[0])) for k, v in out.items()}


class StructuralProxy(Evaluator):
    outputs = STRUCTURAL_OUTPUTS

    def evaluate_batch(self, batch, context=None):
        return structural_batch(batch, self.config)


# ---------------------------------------------------------------------------
# aerodynamics


def drag_from_area(area_m2, config: Mapping[str, Any] | None = None):
    """Quadratic drag ``0.5 * rho * Cd * A * v^2`` in N."""
    c = (config or {}).get("drag", {})
    rho = c.get("air_density", 1.225)
    cd = c.get("drag_coefficient", 0.9)
    v = c.get("speed", 10.0)
    return 0.5 * rho * cd * np.asarray(area_m2) * v**2


def frontal_area(rider: RiderProfile, torso_angle_deg, config: Mapping[str, Any]):
    """Frontal area in m^2: projected torso plus fixed leg and head areas."""
    c = config["drag"]
    torso = np.asarray(rider.torso_width) * np.asarray(rider.torso) * np.sin(np.radians(torso_angle_deg))
    return torso * 1e-6 + c["leg_area"] + c["head_area"]


class DragProxy(Evaluator):
    outputs = ("drag_force",)

    def evaluate_batch(self, batch, context):
        pts = interface_points_batch(batch, self.config, self.config["crank_length"])
        angles = joint_angles(pts, context.rider)
        area = frontal_area(context.rider, angles.torso_angle, self.config)
        return {"drag_force": drag_from_area(area, self.config)}


def drag_force(
    design: Mapping[str, Any],
    rider: RiderProfile,
    schema: DesignSchema | None = None,
    config: Mapping[str, Any] | None = None,
) -> float:
    from .conditions import ConditionArrays

    proxy = DragProxy(schema, config)
    ctx = ConditionArrays(rider=rider, use_case=None, target=None)
    return float(proxy.evaluate(design, ctx)["drag_force"])


# ---------------------------------------------------------------------------
# usability


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-z))


class UsabilityProxy(Evaluator):
    """Logistic score over interpretable features; 0 is most usable."""

    outputs = ("usability",)

    def logit(self, batch: DesignBatch) -> np.ndarray:
        w = self.config["usability"]
        rgb = np.stack([batch[f"FIRST color {c}_RGB"] for c in "RGB"], axis=1)
        brightness = np.clip(rgb, 0, 255).mean(axis=1) / 255.0
        return (
            w["bias"]
            + batch.weights("Handlebar style") @ np.asarray(w["handlebar_style"], dtype=float)
            + w["front_fender"] * batch["Front Fender include"]
            + w["rear_fender"] * batch["Rear Fender include"]
            + w["rack"] * batch["Display RACK"]
            + w["wheel_diameter"] * (batch["Wheel diameter front"] - 650.0) / 100.0
            + w["brightness"] * (brightness - 0.5)
        )

    def evaluate_batch(self, batch, context=None):
        return {"usability": _logistic(self.logit(batch))}


def usability_score(
    design: Mapping[str, Any], schema: DesignSchema | None = None, config: Mapping[str, Any] | None = None
) -> float:
    return float(UsabilityProxy(schema, config).evaluate(design)["usability"])


# ---------------------------------------------------------------------------
# aesthetics


@dataclass(frozen=True)
class Embedding:
    data: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).ravel()
        if not np.all(np.isfinite(data)):
            raise ValueError("embedding entries must be finite")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "norm", float(np.linalg.norm(data)))

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def standardize_for_embedding(X: np.ndarray, schema: DesignSchema) -> np.ndarray:
    """Numeric slots to [-1, 1] by schema bounds; one-hot slots centred at 1/k."""
    lo, hi = schema.continuous_bounds()
    Z = (np.asarray(X, dtype=float) - (lo + hi) / 2) / ((hi - lo) / 2)
    for p in schema.of_kind("categorical"):
        s = schema.slot(p.name)
        Z[:, s] = X[:, s] - 1.0 / p.width
    return Z


class LinearEmbedder(Evaluator):
    """Fixed seeded random affine map of the standardized one-hot vector."""

    outputs = ("embedding",)

    def __init__(self, schema=None, config=None, dim: int | None = None, seed: int | None = None):
        super().__init__(schema, config)
        c = self.config["embedding"]
        self.dim = int(dim if dim is not None else c["dim"])
        rng = np.random.default_rng(c["seed"] if seed is None else seed)
        n_in = self.schema.continuous_dim
        self.weight = rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, self.dim))
        self.bias = rng.normal(0.0, 0.25, size=self.dim)
        self._gram = None

    def evaluate_batch(self, batch, context=None):
        return {"embedding": standardize_for_embedding(batch.X, self.schema) @ self.weight + self.bias}

    def cosine_distance(self, batch: DesignBatch, targets: np.ndarray) -> np.ndarray:
        """Cosine distance to ``targets`` without materializing the embeddings.

        Uses ``|Z W + b|^2 = z (W W^T) z + 2 z (W b) + b.b``, which costs
        O(n d^2) instead of O(n d E).
        """
        if self._gram is None:
            self._gram = (self.weight @ self.weight.T, self.weight @ self.bias, float(self.bias @ self.bias))
        gram, wb, bb = self._gram
        Z = standardize_for_embedding(batch.X, self.schema)
        sq = np.einsum("ij,jk,ik->i", Z, gram, Z, optimize=True) + 2 * Z @ wb + bb
        T = np.asarray(targets, dtype=float)
        if T.ndim == 1:
            num = Z @ (self.weight @ T) + self.bias @ T
            tn = np.linalg.norm(T)
        else:
            num = np.einsum("ij,ij->i", Z @ self.weight + self.bias, T)
            tn = np.linalg.norm(T, axis=1)
        den = np.sqrt(np.maximum(sq, 0.0)) * tn
        return 1.0 - num / np.where(den > 0, den, np.nan)


class TableEmbedder(Evaluator):
    """Embeddings precomputed by an external model, looked up by design row.

    The exchange format is a design CSV (one design per row) and an
    embedding CSV with the same row order and ``dim`` columns.
    """

    outputs = ("embedding",)
    provenance = "external"

    def __init__(self, designs_csv: str | Path, embeddings_csv: str | Path, schema=None, config=None):
        from .design_space import read_designs_csv

        super().__init__(schema, config)
        designs = read_designs_csv(designs_csv, self.schema)
        with open(embeddings_csv, newline="") as fh:
            rows = [[float(v) for v in r] for r in csv.reader(fh) if r]
        if len(rows) != len(designs):
            raise EvaluatorError(f"{len(designs)} designs but {len(rows)} embedding rows")
        X = self.schema.mixed_to_continuous(self.schema.to_mixed(designs))
        self._table = {self._key(x): np.array(r) for x, r in zip(X, rows)}

    @staticmethod
    def _key(x: np.ndarray) -> bytes:
        return np.round(x, 9).tobytes()

    def evaluate_batch(self, batch, context=None):
        try:
            return {"embedding": np.stack([self._table[self._key(x)] for x in batch.X])}
        except KeyError as exc:
            raise EvaluatorError("design not present in the embedding table") from exc


def embed_design(design: Mapping[str, Any], embedder: Evaluator | None = None) -> Embedding:
    embedder = embedder or LinearEmbedder()
    try:
        out = embedder.evaluate(design)
    except EvaluatorError:
        raise
    except Exception as exc:
        raise EvaluatorError(f"embedder {type(embedder).__name__} failed: {exc!r}") from exc
    return Embedding(np.asarray(out["embedding"]))


def cosine_distance_batch(E: np.ndarray, targets: np.ndarray) -> np.ndarray:
    E = np.atleast_2d(E)
    T = np.atleast_2d(targets)
    num = np.sum(E * T, axis=1)
    den = np.linalg.norm(E, axis=1) * np.linalg.norm(T, axis=1)
    return 1.0 - num / np.where(den > 0, den, np.nan)


def aesthetic_distance(e: Embedding, target: Embedding) -> float:
    if e.norm == 0 or target.norm == 0:
        raise ValueError("cosine distance is undefined for a zero-norm embedding")
    cos = float(np.dot(e.data, target.data) / (e.norm * target.norm))
    return 1.0 - float(np.clip(cos, -1.0, 1.0))
