"""Analytic beam-theory substitute for the frame structural surrogate.

Every tube is a thin-walled circular section (outer diameter ``d``, wall
``t``; mm). Per tube:

    area   = pi/4 * (d^2 - (d - 2t)^2)
    I      = pi/64 * (d^4 - (d - 2t)^4)
    mass   = density * area * L
    bend   = lever * L^3 / (E * I)            (compliance contribution)
    stress = load * arm * (d / 2) / I         (arm = lever * L [+ offset])

Load paths:

* planar: in-plane load shared by the main triangle and both stay pairs;
* transverse: out-of-plane bending of chain and seat stays only;
* eccentric: saddle load with a lateral offset, carried by the main frame.

Safety-factor margins are ``required - yield / max_stress``, so a proxy
safety factor of exactly 1.5 sits on the constraint boundary.

Non-isotropic materials (carbon, bamboo, other) are evaluated as steel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .design_space import DesignBatch, DesignSchema, default_schema

# (tube, diameter parameter, wall parameter, count)
TUBES = (
    ("top_tube", "ttd", "Wall thickness Top tube", 1),
    ("down_tube", "dtd", "Wall thickness Down tube", 1),
    ("seat_tube", "Seat tube diameter", "Wall thickness Seat tube", 1),
    ("head_tube", "Head tube diameter", "Wall thickness Head tube", 1),
    ("chain_stay", "csd", "Wall thickness Chain stay", 2),
    ("seat_stay", "ssd", "Wall thickness Seat stay", 2),
)
STRUCTURAL_OUTPUTS = (
    "mass",
    "planar_compliance",
    "transverse_compliance",
    "eccentric_compliance",
    "planar_safety_factor",
    "eccentric_safety_factor",
)


class DegenerateTubeError(ValueError):
    """Raised when a wall is at least half the outer diameter."""


@dataclass(frozen=True)
class StructuralReport:
    mass: float
    planar_compliance: float
    transverse_compliance: float
    eccentric_compliance: float
    planar_sf_margin: float
    eccentric_sf_margin: float


def tube_area(d, t):
    return np.pi / 4 * (d**2 - np.maximum(d - 2 * t, 0.0) ** 2)


def tube_inertia(d, t):
    return np.pi / 64 * (d**4 - np.maximum(d - 2 * t, 0.0) ** 4)


def tube_shell_mass(d, t, length, density):
    """Mass in kg of a tube with mm dimensions and density in kg/m^3."""
    return density * tube_area(d, t) * length * 1e-9


def material_table(config: Mapping[str, Any], categories) -> np.ndarray:
    """Rows of (density, modulus, yield) per MATERIAL category."""
    props = config["materials"]["properties"]
    subs = set(config["materials"]["substitute_with_steel"])
    rows = []
    for c in categories:
        key = "STEEL" if c in subs or c not in props else c
        p = props[key]
        rows.append((p["density"], p["modulus"], p["yield"]))
    return np.array(rows, dtype=float)


def tube_lengths(batch: DesignBatch) -> dict[str, np.ndarray]:
    from .geometry import frame_geometry

    g = frame_geometry(batch)
    return {
        "top_tube": g.top_tube_length,
        "down_tube": batch["DT Length"],
        "seat_tube": batch["Seat tube length"],
        "head_tube": batch["Head tube length textfield"],
        "chain_stay": batch["CS textfield"],
        "seat_stay": g.seat_stay_length,
    }


def structural_batch(batch: DesignBatch, config: Mapping[str, Any]) -> dict[str, np.ndarray]:
    s = config["structure"]
    cats = batch.schema["MATERIAL"].categories
    props = batch.weights("MATERIAL") @ material_table(config, cats)
    density, modulus, yield_stress = props[:, 0], props[:, 1], props[:, 2]
    lengths = tube_lengths(batch)
    scale = s["compliance_scale"]

    mass = np.zeros(len(batch))
    planar = np.zeros(len(batch))
    transverse = np.zeros(len(batch))
    eccentric = np.zeros(len(batch))
    planar_stress = np.zeros(len(batch))
    eccentric_stress = np.zeros(len(batch))
    for tube, d_name, t_name, count in TUBES:
        d = batch[d_name]
        t = batch[t_name]
        L = lengths[tube]
        inertia = tube_inertia(d, t)
        mass += count * tube_shell_mass(d, t, L, density)
        bend = scale * L**3 / (modulus * inertia) / count
        lever = s["planar_lever"][tube]
        planar += lever * bend
        stress = s["planar_load"] / count * lever * L * (d / 2) / inertia
        planar_stress = np.maximum(planar_stress, stress)
        if tube in ("chain_stay", "seat_stay"):
            transverse += bend
        if tube in s["eccentric_lever"]:
            e_lever = s["eccentric_lever"][tube]
            eccentric += e_lever * bend
            arm = e_lever * L + s["eccentric_offset"]
            eccentric_stress = np.maximum(eccentric_stress, s["eccentric_load"] * arm * (d / 2) / inertia)

    req = s["required_safety_factor"]
    return {
        "mass": mass,
        "planar_compliance": planar,
        "transverse_compliance": transverse,
        "eccentric_compliance": eccentric,
        "planar_safety_factor": req - yield_stress / planar_stress,
        "eccentric_safety_factor": req - yield_stress / eccentric_stress,
    }


def structural_eval(
    design: Mapping[str, Any],
    schema: DesignSchema | None = None,
    config: Mapping[str, Any] | None = None,
) -> StructuralReport:
    if config is None:
        from .config import default_config

        config = default_config()
    for _, d_name, t_name, _ in TUBES:
        if float(design[t_name]) >= float(design[d_name]) / 2:
            raise DegenerateTubeError(f"{t_name} = {design[t_name]} is at least half of {d_name}")
    out = structural_batch(DesignBatch.from_designs([design], schema or default_schema()), config)
    return StructuralReport(
        mass=float(out["mass"][0]),
        planar_compliance=float(out["planar_compliance"][0]),
        transverse_compliance=float(out["transverse_compliance"][0]),
        eccentric_compliance=float(out["eccentric_compliance"][0]),
        planar_sf_margin=float(out["planar_safety_factor"][0]),
        eccentric_sf_margin=float(out["eccentric_safety_factor"][0]),
    )
