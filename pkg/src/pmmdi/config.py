"""JSON scenario files for the command line.

A document has up to three sections, ``model``, ``sweep`` and ``sim``; every
key is optional and unknown keys are rejected. Missing values take the
realistic defaults of ``ModelTemplate`` (detector efficiency 14.5 %, dark
counts 8e-8, visibility 0.95, phase mismatch pi/60, f_EC 1.15).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import jsonschema

from .sweep import ModelTemplate, SweepConfig

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eta_d": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "V": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "delta": _NUM,
                "p_d": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "f_EC": {"type": "number", "minimum": 1},
                "mu": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "L": {"type": "number", "minimum": 0},
                "attenuation": {"type": "number", "minimum": 0},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "L_start": {"type": "number", "minimum": 0},
                "L_end": _NUM,
                "L_step": {"type": "number", "exclusiveMinimum": 0},
                "mu_lo": {"type": "number", "exclusiveMinimum": 0},
                "mu_hi": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "workers": _POS_INT,
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rounds": _POS_INT,
                "p_A": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "p_B": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "chunk_size": _POS_INT,
                "workers": _POS_INT,
                "test_grid": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "prefixItems": [{"type": "number", "minimum": 0}, _POS_INT],
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CliConfig:
    template: ModelTemplate = field(default_factory=ModelTemplate)
    mu: Optional[float] = None
    L: float = 100.0
    attenuation: float = 0.2
    sweep: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)

    def loss_only(self) -> "CliConfig":
        return replace(self, template=ModelTemplate.loss_only())

    def sweep_config(self) -> SweepConfig:
        try:
            return SweepConfig(template=self.template, attenuation=self.attenuation, **self.sweep)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def parse_config(doc: Any) -> CliConfig:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    model = dict(doc.get("model", {}))
    mu = model.pop("mu", None)
    L = model.pop("L", 100.0)
    att = model.pop("attenuation", 0.2)
    if "delta" in model and not math.isfinite(model["delta"]):
        raise ConfigError("model/delta must be finite")
    sim = dict(doc.get("sim", {}))
    if "test_grid" in sim:
        sim["test_grid"] = tuple((float(a), int(b)) for a, b in sim["test_grid"])
    return CliConfig(
        template=ModelTemplate(**model),
        mu=mu,
        L=float(L),
        attenuation=float(att),
        sweep=dict(doc.get("sweep", {})),
        sim=sim,
    )


def load_config(path: Optional[str]) -> CliConfig:
    """Read and validate ``path``; ``None`` gives the defaults.

    OSError propagates so the caller can tell I/O failures from bad content.
    """
    if path is None:
        return CliConfig()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(doc)
