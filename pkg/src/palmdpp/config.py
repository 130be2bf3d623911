"""JSON run configuration: strict schema, loaders, and model serialization.

Unknown keys are rejected everywhere (additionalProperties: false), so a
typo in a config file fails fast instead of silently running defaults.
"""
from __future__ import annotations

import json

import jsonschema
import numpy as np

from .errors import ConfigError
from .functionals import (RadialRegion, RadiusSchedule, blaschke_modulus_sq,
                          rational_modulus_sq)
from .kernelspace import (BergmanClassical, Domain, FockGaussian, FockRadial,
                          KernelModel, QuadratureSpec, TabulatedRadial,
                          build_kernel, log_monomial_norms_sq)

_POINT = {"type": "array", "items": {"type": "number"},
          "minItems": 2, "maxItems": 2}

_WEIGHT = {"oneOf": [
    {"type": "object", "additionalProperties": False,
     "required": ["kind"],
     "properties": {"kind": {"const": "fock_gaussian"}}},
    {"type": "object", "additionalProperties": False,
     "required": ["kind", "alpha"],
     "properties": {"kind": {"const": "fock_radial"},
                    "alpha": {"type": "number", "exclusiveMinimum": 0}}},
    {"type": "object", "additionalProperties": False,
     "required": ["kind", "alpha"],
     "properties": {"kind": {"const": "bergman"},
                    "alpha": {"type": "number", "exclusiveMinimum": -1}}},
    {"type": "object", "additionalProperties": False,
     "required": ["kind", "radii", "log_weight"],
     "properties": {"kind": {"const": "tabulated"},
                    "radii": {"type": "array", "minItems": 2,
                              "items": {"type": "number"}},
                    "log_weight": {"type": "array", "minItems": 2,
                                   "items": {"type": "number"}},
                    "domain": {"enum": ["plane", "disc"]}}},
]}

_QUADRATURE = {"type": "object", "additionalProperties": False,
               "properties": {
                   "radial_nodes": {"type": "integer", "minimum": 8},
                   "angular_nodes": {"type": "integer", "minimum": 8},
                   "outer_radius": {"type": "number", "exclusiveMinimum": 0}}}

MODEL_SCHEMA = {"type": "object", "additionalProperties": False,
                "required": ["domain", "weight", "rank"],
                "properties": {
                    "domain": {"enum": ["plane", "disc"]},
                    "weight": _WEIGHT,
                    "rank": {"type": "integer", "minimum": 1},
                    "quadrature": _QUADRATURE}}

_GSPEC = {"type": "object", "additionalProperties": False,
          "required": ["kind"],
          "properties": {"kind": {"enum": ["rational", "blaschke"]},
                         "p": {"type": "array", "items": _POINT},
                         "q": {"type": "array", "items": _POINT}}}

_SCHEDULE = {"oneOf": [
    {"type": "object", "additionalProperties": False, "required": ["radii"],
     "properties": {"radii": {"type": "array", "minItems": 3,
                              "items": {"type": "number"}}}},
    {"type": "object", "additionalProperties": False, "required": ["kind"],
     "properties": {"kind": {"enum": ["plane_geometric", "disc_dyadic"]},
                    "first": {"type": "number", "exclusiveMinimum": 0},
                    "ratio": {"type": "number", "exclusiveMinimum": 1},
                    "count": {"type": "integer", "minimum": 3}}},
]}

_WINDOW = {"type": "object", "additionalProperties": False,
           "required": ["r_lo", "r_hi"],
           "properties": {"r_lo": {"type": "number", "minimum": 0},
                          "r_hi": {"type": "number", "exclusiveMinimum": 0}}}

_EXPERIMENT = {"type": "object", "additionalProperties": False,
               "properties": {
                   "epsilons": {"type": "array", "minItems": 1,
                                "items": {"type": "number",
                                          "exclusiveMinimum": 0,
                                          "exclusiveMaximum": 1}},
                   "r0": {"type": "number", "exclusiveMinimum": 0},
                   "k_values": {"type": "array", "minItems": 1,
                                "items": {"type": "integer", "minimum": 10}},
                   "moduli_rank": {"type": "integer", "minimum": 1},
                   "window": _WINDOW,
                   "pairs": {"type": "array", "items": {
                       "type": "array", "minItems": 2, "maxItems": 2}},
                   "stability": {"type": "boolean"},
                   "stability_fraction": {"type": "integer", "minimum": 1}}}

CONFIG_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "model": MODEL_SCHEMA,
        "anchor": {"type": "array", "items": _POINT},
        "anchor_q": {"type": "array", "items": _POINT},
        "gspec": _GSPEC,
        "schedule": _SCHEDULE,
        "replicas": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "thresholds": {"type": "object", "additionalProperties": False,
                       "properties": {
                           "z": {"type": "number", "exclusiveMinimum": 0},
                           "p_value": {"type": "number",
                                       "exclusiveMinimum": 0, "maximum": 1}}},
        "experiment": _EXPERIMENT,
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"path": {"type": "string"},
                                  "csv": {"type": "string"}}},
    },
}


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return validate_config(cfg)


def weight_from_config(spec: dict):
    kind = spec["kind"]
    if kind == "fock_gaussian":
        return FockGaussian()
    if kind == "fock_radial":
        return FockRadial(spec["alpha"])
    if kind == "bergman":
        return BergmanClassical(spec["alpha"])
    if kind == "tabulated":
        return TabulatedRadial(spec["radii"], spec["log_weight"],
                               Domain(spec.get("domain", "plane")))
    raise ConfigError(f"unknown weight kind {kind!r}")


def weight_to_config(weight) -> dict:
    if isinstance(weight, FockGaussian):
        return {"kind": "fock_gaussian"}
    if isinstance(weight, FockRadial):
        return {"kind": "fock_radial", "alpha": weight.alpha}
    if isinstance(weight, BergmanClassical):
        return {"kind": "bergman", "alpha": weight.alpha}
    if isinstance(weight, TabulatedRadial):
        return {"kind": "tabulated", "radii": weight.radii.tolist(),
                "log_weight": weight.log_weight.tolist(),
                "domain": weight.domain.value}
    raise ConfigError(f"unknown weight {weight!r}")


def model_from_config(cfg: dict) -> KernelModel:
    if "model" not in cfg:
        raise ConfigError("config needs a 'model' section for this command")
    spec = cfg["model"]
    weight = weight_from_config(spec["weight"])
    q = spec.get("quadrature", {})
    quadrature = QuadratureSpec(q.get("radial_nodes"), q.get("angular_nodes"),
                                q.get("outer_radius"))
    return build_kernel(Domain(spec["domain"]), weight, spec["rank"],
                        quadrature)


def points_from_config(pairs) -> tuple:
    return tuple(complex(re, im) for re, im in (pairs or ()))


def gspec_from_config(cfg: dict):
    spec = cfg.get("gspec")
    if spec is None:
        return None
    p = points_from_config(spec.get("p"))
    q = points_from_config(spec.get("q"))
    if spec["kind"] == "rational":
        return rational_modulus_sq(p, q)
    return blaschke_modulus_sq(p, q)


def schedule_from_config(cfg: dict):
    spec = cfg.get("schedule")
    if spec is None:
        return None
    if "radii" in spec:
        return RadiusSchedule(tuple(spec["radii"]))
    if spec["kind"] == "plane_geometric":
        return RadiusSchedule.plane_geometric(spec.get("first", 3.0),
                                              spec.get("ratio", 1.5),
                                              spec.get("count", 6))
    return RadiusSchedule.disc_dyadic(spec.get("count", 16))


def window_from_config(cfg: dict):
    spec = (cfg.get("experiment") or {}).get("window")
    if spec is None:
        return None
    return RadialRegion(spec["r_lo"], spec["r_hi"])


def pairs_from_config(cfg: dict):
    spec = (cfg.get("experiment") or {}).get("pairs")
    if spec is None:
        return None
    out = []
    for gval, region in spec:
        if not isinstance(region, (list, tuple)) or len(region) != 2:
            raise ConfigError("each pair is [g_value, [r_lo, r_hi]]")
        out.append((float(gval), RadialRegion(float(region[0]),
                                              float(region[1]))))
    return out


# -- model serialization (palm command output) ---------------------------------

def model_to_json(model: KernelModel) -> dict:
    """Serializable model: weight/rank/quadrature plus the coefficient matrix
    (row-major, [re, im] pairs over normalized monomials)."""
    coeffs = np.asarray(model.coeffs)
    return {
        "domain": model.domain.value,
        "weight": weight_to_config(model.weight),
        "rank": int(model.rank),
        "monomials": int(model.monomial_count),
        "quadrature": {
            "radial_nodes": model.quadrature.radial_nodes,
            "angular_nodes": model.quadrature.angular_nodes,
            "outer_radius": model.quadrature.outer_radius,
        },
        "coefficients": [
            [[float(c.real), float(c.imag)] for c in row] for row in coeffs
        ],
    }


def model_from_json(data: dict) -> KernelModel:
    weight = weight_from_config(data["weight"])
    domain = Domain(data["domain"])
    monomials = int(data["monomials"])
    rank = int(data["rank"])
    rows = data["coefficients"]
    if len(rows) != rank or any(len(r) != monomials for r in rows):
        raise ConfigError("coefficient matrix shape mismatch")
    coeffs = np.array([[complex(re, im) for re, im in row] for row in rows],
                      dtype=np.complex128)
    if rank == 0:
        coeffs = coeffs.reshape(0, monomials)
    q = data["quadrature"]
    spec = QuadratureSpec(q["radial_nodes"], q["angular_nodes"],
                          q["outer_radius"]).resolve(domain, weight, monomials)
    log_norms = log_monomial_norms_sq(weight, monomials)
    return KernelModel(domain, weight, rank, log_norms, coeffs, spec)
