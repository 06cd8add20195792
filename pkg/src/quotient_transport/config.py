"""Run-configuration schema and builders.

A run config is one JSON object. Every section is optional at the schema
level; each subcommand then demands the sections it needs. Unknown keys
are rejected everywhere.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import jsonschema
import numpy as np

from .cost import make_cost
from .errors import ConfigError
from .geometry import disc, make_domain
from .solver.problem import WHITELIST, Inhomogeneity, ProblemSpec
from .symfun import QuotientParams

_DOMAIN = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["disc", "ellipse", "radial-fourier"]},
        "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "semiaxes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                     "minItems": 2, "maxItems": 2},
        "a0": {"type": "number", "exclusiveMinimum": 0},
        "cos": {"type": "array", "items": {"type": "number"}},
        "sin": {"type": "array", "items": {"type": "number"}},
        "resolution": {"type": "integer", "minimum": 16},
    },
}

_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "quotient": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "l"],
            "properties": {"n": {"type": "integer", "minimum": 2, "maximum": 12},
                           "l": {"type": "integer", "minimum": 0}},
        },
        "cost": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": ["quadratic", "perturbed"]}, "epsilon": {"type": "number"}},
        },
        "domains": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"source": _DOMAIN, "target": _DOMAIN},
        },
        "B": {
            "type": "object",
            "additionalProperties": False,
            "required": ["factors"],
            "properties": {
                "coefficient": _POS_NUM,
                "factors": {"type": "array", "items": {"enum": list(WHITELIST)}, "minItems": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"nr": {"type": "integer", "minimum": 4},
                           "nt": {"type": "integer", "minimum": 8, "multipleOf": 2}},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol_newton": _POS_NUM,
                "max_newton": _POS_INT,
                "admissibility_floor": {"type": "number", "minimum": 0},
                "seed": {"enum": ["quadratic", "c-transform"]},
                "shrink": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "dt_initial": _POS_NUM,
                "dt_min": _POS_NUM,
                "dt_max": _POS_NUM,
                "check_jacobian": {"type": "boolean"},
            },
        },
        "exact": {"enum": ["|x|^2"]},
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "object", "additionalProperties": _POS_INT},
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 2, "maximum": 12},
                         "minItems": 1},
                "suites": {"type": "array", "items": {"type": "string"}},
            },
        },
        "classify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"samples": _POS_INT, "tolerance": _POS_NUM},
        },
        "transform": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "center": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "radius": _POS_NUM,
                "n_rad": {"type": "integer", "minimum": 2},
                "n_ang": {"type": "integer", "minimum": 3},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "obliqueness_min": {"type": "number"},
                "urbas_residual_max": _POS_NUM,
                "image_hausdorff": _POS_NUM,
                "c2_ratio": _POS_NUM,
            },
        },
    },
}

EXACT = {"|x|^2": lambda x: np.sum(np.asarray(x) ** 2, axis=-1)}

_GRID_RE = re.compile(r"^(\d+)x(\d+)$")


def load(path) -> dict:
    """Read and schema-validate a config file; raises :class:`ConfigError`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from exc
    q = cfg.get("quotient")
    if q and not q["l"] < q["n"]:
        raise ConfigError("quotient.l must be smaller than quotient.n")


def parse_grid(text: str):
    m = _GRID_RE.match(text or "")
    if not m:
        raise ConfigError(f"--grid expects NRxNT, got {text!r}")
    nr, nt = int(m.group(1)), int(m.group(2))
    if nr < 4 or nt < 8 or nt % 2:
        raise ConfigError("--grid needs NR >= 4 and an even NT >= 8")
    return nr, nt


def require(cfg: dict, *sections):
    missing = [s for s in sections if s not in cfg]
    if missing:
        raise ConfigError(f"config is missing required section(s): {', '.join(missing)}")


def domains(cfg: dict):
    d = cfg.get("domains", {})
    src = make_domain(d["source"]) if "source" in d else disc()
    tgt = make_domain(d["target"]) if "target" in d else disc()
    return src, tgt


def cost(cfg: dict):
    require(cfg, "cost")
    return make_cost(cfg["cost"])


def params(cfg: dict) -> QuotientParams:
    q = cfg.get("quotient", {"n": 2, "l": 1})
    return QuotientParams(q["n"], q["l"])


def problem(cfg: dict, grid=None) -> ProblemSpec:
    """ProblemSpec for ``solve``/``diagnose`` (``grid`` overrides the config)."""
    require(cfg, "cost", "B")
    src, tgt = domains(cfg)
    b = cfg["B"]
    nr, nt = grid or (cfg.get("grid", {}).get("nr", 33), cfg.get("grid", {}).get("nt", 64))
    s = cfg.get("solver", {})
    spec = ProblemSpec(
        cost=cost(cfg),
        source=src,
        target=tgt,
        B=Inhomogeneity(b.get("coefficient", 1.0), tuple(b["factors"])),
        params=params(cfg),
        nr=nr,
        nt=nt,
        tol_newton=s.get("tol_newton", 1e-9),
        max_newton=s.get("max_newton", 30),
        admissibility_floor=s.get("admissibility_floor", 1e-8),
        seed_kind=s.get("seed", "quadratic" if cfg["cost"]["kind"] == "quadratic" else "c-transform"),
        shrink=s.get("shrink", 0.5),
        dt_initial=s.get("dt_initial", 0.25),
        dt_min=s.get("dt_min", 1e-3),
        dt_max=s.get("dt_max", 0.25),
        exact=EXACT.get(cfg.get("exact")),
    )
    spec.validate()
    return spec
