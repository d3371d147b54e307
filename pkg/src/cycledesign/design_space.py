"""Mixed-datatype design schema, one-hot relaxation and sampling.

A design is a plain ``dict`` mapping each of the 70 parameter names to a
typed value (``float`` for continuous, ``int`` for integer, ``bool`` for
boolean, ``str`` label for categorical).

Three array layouts are used throughout the package:

* the *mixed* matrix, shape ``(n, 70)``: one column per parameter, booleans
  as 0/1 and categoricals as the integer category index;
* the *continuous* (one-hot) matrix, shape ``(n, continuous_dim)``: numeric
  parameters copied, booleans as 0/1, categoricals expanded to one-hot
  blocks, in schema order;
* the *unit* matrix: the continuous matrix rescaled so that every slot lies
  in ``[0, 1]`` (used by gradient optimizers).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

Design = dict[str, Any]

KINDS = ("continuous", "integer", "boolean", "categorical")
N_PARAMETERS = 70


class SchemaError(ValueError):
    """Raised when a schema file is malformed or violates schema invariants."""


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    kind: str
    lower: float = 0.0
    upper: float = 1.0
    categories: tuple[str, ...] = ()

    @property
    def width(self) -> int:
        """Number of slots this parameter occupies in the one-hot layout."""
        return len(self.categories) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class Violation:
    name: str
    message: str


@dataclass(frozen=True)
class DesignSchema:
    parameters: tuple[ParameterSpec, ...]
    _index: dict[str, int] = field(default_factory=dict, repr=False, compare=False)
    _slots: dict[str, slice] = field(default_factory=dict, repr=False, compare=False)
    _cache: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        start = 0
        for i, p in enumerate(self.parameters):
            self._index[p.name] = i
            self._slots[p.name] = slice(start, start + p.width)
            start += p.width

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @property
    def continuous_dim(self) -> int:
        return sum(p.width for p in self.parameters)

    def __len__(self) -> int:
        return len(self.parameters)

    def __getitem__(self, name: str) -> ParameterSpec:
        return self.parameters[self._index[name]]

    def index(self, name: str) -> int:
        return self._index[name]

    def slot(self, name: str) -> slice:
        """Slice of the continuous layout occupied by ``name``."""
        return self._slots[name]

    def of_kind(self, *kinds: str) -> list[ParameterSpec]:
        return [p for p in self.parameters if p.kind in kinds]

    # -- bounds of the continuous layout ---------------------------------

    def continuous_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-slot lower/upper bounds of the continuous layout."""
        if "bounds" in self._cache:
            lo, hi = self._cache["bounds"]
            return lo.copy(), hi.copy()
        lo = np.zeros(self.continuous_dim)
        hi = np.ones(self.continuous_dim)
        for p in self.parameters:
            if p.kind in ("continuous", "integer"):
                s = self.slot(p.name)
                lo[s] = p.lower
                hi[s] = p.upper
        self._cache["bounds"] = (lo, hi)
        return lo.copy(), hi.copy()

    def to_unit(self, X: np.ndarray) -> np.ndarray:
        lo, hi = self.continuous_bounds()
        return (np.asarray(X, dtype=float) - lo) / (hi - lo)

    def from_unit(self, Z: np.ndarray) -> np.ndarray:
        lo, hi = self.continuous_bounds()
        return lo + np.asarray(Z, dtype=float) * (hi - lo)

    # -- mixed <-> design ------------------------------------------------

    def to_mixed(self, designs: Sequence[Mapping[str, Any]]) -> np.ndarray:
        M = np.empty((len(designs), len(self)))
        for r, d in enumerate(designs):
            for c, p in enumerate(self.parameters):
                v = d[p.name]
                if p.kind == "categorical":
                    M[r, c] = p.categories.index(str(v))
                else:
                    M[r, c] = float(v)
        return M

    def from_mixed(self, M: np.ndarray) -> list[Design]:
        M = np.atleast_2d(M)
        out = []
        for row in M:
            d: Design = {}
            for p, v in zip(self.parameters, row):
                if p.kind == "continuous":
                    d[p.name] = float(v)
                elif p.kind == "integer":
                    d[p.name] = int(v)
                elif p.kind == "boolean":
                    d[p.name] = bool(v >= 0.5)
                else:
                    d[p.name] = p.categories[int(v)]
            out.append(d)
        return out

    # -- mixed <-> continuous --------------------------------------------

    def mixed_to_continuous(self, M: np.ndarray) -> np.ndarray:
        M = np.atleast_2d(np.asarray(M, dtype=float))
        X = np.zeros((M.shape[0], self.continuous_dim))
        for c, p in enumerate(self.parameters):
            s = self.slot(p.name)
            if p.kind == "categorical":
                idx = M[:, c].astype(int)
                X[np.arange(M.shape[0]), s.start + idx] = 1.0
            else:
                X[:, s.start] = M[:, c]
        return X

    def continuous_to_mixed(self, X: np.ndarray) -> np.ndarray:
        """Apply the decode rule row-wise: the result is always a valid design.

        Booleans are ``value >= 0.5``; categoricals take the argmax of their
        block (ties go to the lowest index); integers round half away from
        zero; numeric values are clamped into bounds.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.continuous_dim:
            raise ValueError(
                f"expected vectors of length {self.continuous_dim}, got {X.shape[1]}"
            )
        M = np.empty((X.shape[0], len(self)))
        for c, p in enumerate(self.parameters):
            s = self.slot(p.name)
            if p.kind == "categorical":
                block = np.nan_to_num(X[:, s], nan=-np.inf)
                M[:, c] = np.argmax(block, axis=1)
                continue
            v = X[:, s.start]
            if p.kind == "boolean":
                M[:, c] = (v >= 0.5).astype(float)
            elif p.kind == "integer":
                r = np.sign(v) * np.floor(np.abs(v) + 0.5)
                M[:, c] = np.clip(r, np.ceil(p.lower), np.floor(p.upper))
            else:
                M[:, c] = np.clip(v, p.lower, p.upper)
        return M

    def canonicalize(self, X: np.ndarray) -> np.ndarray:
        """Decode then re-encode rows of a continuous matrix."""
        return self.mixed_to_continuous(self.continuous_to_mixed(X))


# ---------------------------------------------------------------------------
# loading


def _parse_parameter(raw: Mapping[str, Any]) -> ParameterSpec:
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"parameter without a name: {raw!r}")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"{name}: unknown kind {kind!r}")
    if kind == "categorical":
        cats = raw.get("categories")
        if not cats:
            raise SchemaError(f"{name}: categorical parameter needs categories")
        cats = tuple(str(c) for c in cats)
        if len(set(cats)) != len(cats):
            raise SchemaError(f"{name}: duplicate categories")
        return ParameterSpec(name, kind, 0.0, float(len(cats) - 1), cats)
    if kind == "boolean":
        return ParameterSpec(name, kind, 0.0, 1.0)
    try:
        lower, upper = float(raw["lower"]), float(raw["upper"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: missing or invalid bounds") from exc
    if not lower < upper:
        raise SchemaError(f"{name}: lower bound must be below upper bound")
    return ParameterSpec(name, kind, lower, upper)


def schema_from_dict(doc: Mapping[str, Any], expected_count: int | None = N_PARAMETERS) -> DesignSchema:
    raw_params = doc.get("parameters") if isinstance(doc, Mapping) else None
    if not isinstance(raw_params, list):
        raise SchemaError("schema document needs a 'parameters' list")
    params = [_parse_parameter(r) for r in raw_params]
    seen: set[str] = set()
    for p in params:
        if p.name in seen:
            raise SchemaError(f"duplicate parameter name: {p.name}")
        seen.add(p.name)
    if expected_count is not None and len(params) != expected_count:
        raise SchemaError(f"expected {expected_count} parameters, found {len(params)}")
    return DesignSchema(tuple(params))


def load_schema(path: str | Path | None = None) -> DesignSchema:
    """Load a schema file; ``None`` loads the bundled default."""
    try:
        if path is None:
            text = resources.files("cycledesign.data").joinpath("schema.json").read_text()
        else:
            text = Path(path).read_text()
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"cannot parse schema: {exc}") from exc
    return schema_from_dict(doc)


_DEFAULT_SCHEMA: DesignSchema | None = None


def default_schema() -> DesignSchema:
    global _DEFAULT_SCHEMA
    if _DEFAULT_SCHEMA is None:
        _DEFAULT_SCHEMA = load_schema()
    return _DEFAULT_SCHEMA


# ---------------------------------------------------------------------------
# single-design operations


def validate(design: Mapping[str, Any], schema: DesignSchema) -> list[Violation]:
    """Return every invariant or bound violation; the design is not modified."""
    out: list[Violation] = []
    for p in schema.parameters:
        if p.name not in design:
            out.append(Violation(p.name, "missing"))
            continue
        v = design[p.name]
        if p.kind == "categorical":
            if str(v) not in p.categories:
                out.append(Violation(p.name, f"{v!r} is not one of {list(p.categories)}"))
        elif p.kind == "boolean":
            if not isinstance(v, (bool, np.bool_)):
                out.append(Violation(p.name, f"expected a boolean, got {v!r}"))
        else:
            if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, float, np.number)):
                out.append(Violation(p.name, f"expected a number, got {v!r}"))
                continue
            if not np.isfinite(v):
                out.append(Violation(p.name, "not finite"))
            elif v < p.lower or v > p.upper:
                out.append(Violation(p.name, f"{v} outside [{p.lower}, {p.upper}]"))
            elif p.kind == "integer" and float(v) != int(v):
                out.append(Violation(p.name, f"{v} is not an integer"))
    for extra in set(design) - set(schema.names):
        out.append(Violation(extra, "unknown parameter"))
    return out


def encode_continuous(design: Mapping[str, Any], schema: DesignSchema) -> np.ndarray:
    problems = validate(design, schema)
    if problems:
        raise ValueError(f"invalid design: {problems[0].name}: {problems[0].message}")
    return schema.mixed_to_continuous(schema.to_mixed([design]))[0]


def decode_continuous(vector: np.ndarray, schema: DesignSchema) -> Design:
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1:
        raise ValueError("decode_continuous expects a single vector")
    return schema.from_mixed(schema.continuous_to_mixed(vector[None, :]))[0]


def sample_mixed(schema: DesignSchema, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` designs uniformly and independently per parameter."""
    M = np.empty((n, len(schema)))
    for c, p in enumerate(schema.parameters):
        if p.kind == "continuous":
            M[:, c] = rng.uniform(p.lower, p.upper, n)
        elif p.kind == "integer":
            M[:, c] = rng.integers(int(p.lower), int(p.upper), n, endpoint=True)
        elif p.kind == "boolean":
            M[:, c] = rng.integers(0, 2, n)
        else:
            M[:, c] = rng.integers(0, len(p.categories), n)
    return M


def sample_uniform(schema: DesignSchema, seed: int) -> Design:
    return schema.from_mixed(sample_mixed(schema, 1, np.random.default_rng(seed)))[0]


def center_design(schema: DesignSchema) -> Design:
    """Design at the middle of every range (first category, booleans false)."""
    d: Design = {}
    for p in schema.parameters:
        if p.kind == "continuous":
            d[p.name] = (p.lower + p.upper) / 2
        elif p.kind == "integer":
            d[p.name] = int(round((p.lower + p.upper) / 2))
        elif p.kind == "boolean":
            d[p.name] = False
        else:
            d[p.name] = p.categories[0]
    return d


# ---------------------------------------------------------------------------
# batch view used by evaluators


class DesignBatch:
    """Named read access to a continuous (one-hot) design matrix.

    Categorical blocks are exposed as row-normalized weights so evaluators
    stay well defined on relaxed vectors: on a canonical one-hot row the
    weights are exactly the indicator.
    """

    def __init__(self, X: np.ndarray, schema: DesignSchema):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != schema.continuous_dim:
            raise ValueError(f"expected {schema.continuous_dim} columns, got {X.shape[1]}")
        self.X = X
        self.schema = schema

    @classmethod
    def from_designs(cls, designs: Iterable[Mapping[str, Any]], schema: DesignSchema) -> "DesignBatch":
        designs = list(designs)
        return cls(schema.mixed_to_continuous(schema.to_mixed(designs)), schema)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        s = self.schema.slot(name)
        if self.schema[name].kind == "categorical":
            raise KeyError(f"{name} is categorical; use weights()")
        return self.X[:, s.start]

    def weights(self, name: str) -> np.ndarray:
        w = np.clip(self.X[:, self.schema.slot(name)], 0.0, None)
        total = w.sum(axis=1, keepdims=True)
        k = w.shape[1]
        return np.where(total > 0, w / np.where(total > 0, total, 1.0), 1.0 / k)

    def replace(self, X: np.ndarray) -> "DesignBatch":
        return DesignBatch(X, self.schema)


# ---------------------------------------------------------------------------
# CSV


def _format_value(p: ParameterSpec, v: Any) -> str:
    if p.kind == "boolean":
        return "true" if v else "false"
    if p.kind == "categorical":
        return str(v)
    if p.kind == "integer":
        return str(int(v))
    return repr(float(v))


def _parse_value(p: ParameterSpec, text: str) -> Any:
    text = text.strip()
    if p.kind == "boolean":
        low = text.lower()
        if low in ("true", "1", "1.0"):
            return True
        if low in ("false", "0", "0.0"):
            return False
        raise ValueError(f"{p.name}: cannot parse boolean {text!r}")
    if p.kind == "categorical":
        # labels such as "0" may have been written as floats by other tools
        if text not in p.categories and text.endswith(".0") and text[:-2] in p.categories:
            return text[:-2]
        return text
    if p.kind == "integer":
        return int(round(float(text)))
    return float(text)


def write_designs_csv(path: str | Path, designs: Sequence[Mapping[str, Any]], schema: DesignSchema) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schema.names)
        for d in designs:
            w.writerow([_format_value(p, d[p.name]) for p in schema.parameters])


def read_designs_csv(path: str | Path, schema: DesignSchema) -> list[Design]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(schema.names) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"design CSV lacks columns: {sorted(missing)}")
        return [{p.name: _parse_value(p, row[p.name]) for p in schema.parameters} for row in reader]
