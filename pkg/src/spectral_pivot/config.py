"""JSON run-configuration schema and loader for the command line front end."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import jsonschema

from .simulation import CovarianceModel, Thresholds, TrialConfig

__all__ = ["ConfigError", "RunConfig", "RUN_CONFIG_SCHEMA", "load_run_config"]


class ConfigError(ValueError):
    """Malformed, schema-invalid, or semantically invalid run configuration."""


RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "n", "trials", "master_seed"],
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "dim"],
            "properties": {
                "kind": {"enum": ["spiked", "geometric", "explicit"]},
                "dim": {"type": "integer", "minimum": 1},
                "spikes": {"type": "array", "items": {"type": "number"}},
                "sigma2": {"type": "number", "exclusiveMinimum": 0},
                "top": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "eigenvalues": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "target_index": {"type": "integer", "minimum": 0},
                "rotate": {"type": "boolean"},
            },
        },
        "n": {"type": "integer", "minimum": 2},
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "oracle_reps": {"type": "integer", "minimum": 2},
        "workers": {"type": "integer", "minimum": 1},
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ks_normal": {"type": "number", "exclusiveMinimum": 0},
                "ks_cauchy": {"type": "number", "exclusiveMinimum": 0},
                "moment_rel": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output_path": {"type": "string"},
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated CLI run configuration."""

    trial: TrialConfig
    thresholds: Thresholds
    workers: int = 1
    output_path: Optional[str] = None


def parse_run_config(raw: dict) -> RunConfig:
    """Validate a decoded JSON object against the schema and build configs."""
    try:
        jsonschema.validate(raw, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc.message}") from exc

    model_raw = dict(raw["model"])
    try:
        model = CovarianceModel(
            kind=model_raw["kind"],
            dim=model_raw["dim"],
            spikes=tuple(model_raw.get("spikes", ())),
            sigma2=model_raw.get("sigma2", 1.0),
            top=model_raw.get("top", 1.0),
            ratio=model_raw.get("ratio", 0.5),
            eigenvalues=tuple(model_raw.get("eigenvalues", ())),
            target_index=model_raw.get("target_index", 0),
            rotate=model_raw.get("rotate", False),
        )
        trial = TrialConfig(
            model=model,
            n=raw["n"],
            trials=raw["trials"],
            master_seed=raw["master_seed"],
            oracle_reps=raw.get("oracle_reps", 100_000),
        )
        thresholds = Thresholds(**raw.get("thresholds", {}))
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return RunConfig(
        trial=trial,
        thresholds=thresholds,
        workers=raw.get("workers", 1),
        output_path=raw.get("output_path"),
    )


def load_run_config(path: str) -> RunConfig:
    """Read and validate a JSON run configuration from ``path``.

    Raises :class:`ConfigError` for malformed or invalid content; I/O
    failures propagate as :class:`OSError`.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    return parse_run_config(raw)
