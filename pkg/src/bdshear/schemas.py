"""JSON schemas for CLI configuration files."""
from __future__ import annotations

NUMBER_LIST = {"type": "array", "items": {"type": "number"}}

GRAPH_FUNCTION = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["poly", "trig", "arc"]},
        "coeffs": NUMBER_LIST,
        "a": NUMBER_LIST,
        "b": NUMBER_LIST,
        "freq": {"type": "number"},
        "center_t": {"type": "number"},
        "center_v": {"type": "number"},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "sign": {"type": "number"},
    },
}

DOMAIN = {
    "type": "object",
    "required": ["kind", "nu"],
    "properties": {
        "kind": {"enum": ["star", "piecewise"]},
        "nu": {"type": "number", "minimum": 0},
        "rho0": {"type": ["number", "null"]},
        "a": {**NUMBER_LIST, "minItems": 1},
        "b": NUMBER_LIST,
        "translate": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "pieces": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["over", "start", "end", "func"],
                "properties": {
                    "over": {"enum": ["x1", "x2"]},
                    "start": {"type": "number"},
                    "end": {"type": "number"},
                    "func": GRAPH_FUNCTION,
                },
            },
        },
    },
    "allOf": [
        {"if": {"properties": {"kind": {"const": "star"}}}, "then": {"required": ["a"]}},
        {"if": {"properties": {"kind": {"const": "piecewise"}}}, "then": {"required": ["pieces"]}},
    ],
}

PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

BUMP = {
    "type": "object",
    "required": ["amplitude", "center", "radius"],
    "properties": {
        "amplitude": {"type": "number"},
        "center": PAIR,
        # null marks an infinite radius, i.e. a constant factor
        "radius": {
            "type": "array",
            "items": {"anyOf": [{"type": "number", "exclusiveMinimum": 0}, {"type": "null"}]},
            "minItems": 2,
            "maxItems": 2,
        },
    },
}

CARTOON = {
    "type": "object",
    "required": ["omega"],
    "properties": {
        "omega": DOMAIN,
        "B": {"anyOf": [DOMAIN, {"type": "null"}]},
        "f0": {"type": "array", "items": BUMP},
        "f1": {"type": "array", "items": BUMP},
    },
}

POWER_OF_TWO = {"type": "integer", "enum": [2**i for i in range(3, 13)]}

SYSTEM = {
    "type": "object",
    "properties": {
        "n": POWER_OF_TWO,
        "j_max": {"type": "integer", "minimum": 0, "maximum": 10},
        "c": {"type": "number", "exclusiveMinimum": 0},
        "m_flat": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 12}, "minItems": 2, "maxItems": 2},
        "r": {"type": "integer", "minimum": 8, "maximum": 14},
        "extent": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "generator_cache": {"type": ["string", "null"]},
    },
}

SOURCE = {
    "cartoon": CARTOON,
    "cartoon_file": {"type": "string"},
    "grid": {"type": "string"},
}

COMMON = {
    "out": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    "system": SYSTEM,
    "domain": DOMAIN,
    "domain_file": {"type": "string"},
    "supersample": {"enum": [1, 2, 4, 8, 16]},
}


def _command(required: list[str], extra: dict, one_of_source: bool = False) -> dict:
    schema = {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": required,
        "properties": {**COMMON, **SOURCE, **extra},
        "additionalProperties": False,
    }
    if one_of_source:
        schema["oneOf"] = [{"required": [key]} for key in SOURCE]
    return schema


SCHEMAS = {
    "synth": {
        **_command([], {"n": POWER_OF_TWO}),
        "oneOf": [{"required": ["cartoon"]}, {"required": ["cartoon_file"]}],
    },
    "transform": _command(["system"], {}, one_of_source=True),
    "bounds": _command(
        ["system"],
        {"tol": {"type": "number", "exclusiveMinimum": 0}, "trials": {"type": "integer", "minimum": 1}},
    ),
    "bench": _command(
        ["system"],
        {
            "N_list": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "N_range": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
            "per_octave": {"type": "integer", "minimum": 1, "maximum": 16},
            "fit_range": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2},
            "tol_cg": {"type": "number", "exclusiveMinimum": 0},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "bounds_file": {"type": "string"},
            "reconstruct": {"type": "boolean"},
            "project": {"type": "boolean"},
        },
        one_of_source=True,
    ),
    "check": {
        **_command(
            ["system"],
            {
                "j_range": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2},
                "eps_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
                "cross_shear_scale": {"type": "integer", "minimum": 0},
            },
        ),
        "oneOf": [{"required": ["cartoon"]}, {"required": ["cartoon_file"]}],
    },
    "export": _command(
        [],
        {
            "pgm": {"type": "string"},
            "schemas": {"type": "string"},
            "generators": {"type": "string"},
        },
    ),
}
