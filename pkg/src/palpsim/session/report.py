"""Assessment report: canonical serialization and schema validation.

Reports are a pure function of the session inputs, so the serialization is
made byte-stable: keys are sorted and every float is rounded to 9
significant digits before encoding.
"""

from __future__ import annotations

import hashlib
import json

import jsonschema

SCHEMA_VERSION = "palpsim-report/1"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "session_id", "seed", "scenarios", "calibration", "config"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "session_id": {"type": "string"},
        "seed": {"type": "integer"},
        "student": {"type": ["string", "null"]},
        "calibration": {
            "type": "object",
            "required": ["passed"],
            "properties": {
                "passed": {"type": "boolean"},
                "skipped": {"type": "boolean"},
                "attempts": {"type": "integer", "minimum": 0},
            },
        },
        "scenarios": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind", "order_index", "peaks", "warning_count",
                             "failed", "diagnosis_chosen", "correct", "elapsed_s",
                             "score"],
                "properties": {
                    "kind": {"type": "string"},
                    "order_index": {"type": "integer", "minimum": 0},
                    "peaks": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["t", "force_n", "prominence_n", "position_mm"],
                        },
                    },
                    "warning_count": {"type": "integer", "minimum": 0},
                    "failed": {"type": "boolean"},
                    "diagnosis_chosen": {"type": ["integer", "null"]},
                    "correct": {"type": "boolean"},
                    "elapsed_s": {"type": "number", "minimum": 0},
                    "answer_elapsed_s": {"type": ["number", "null"]},
                    "score": {"type": "number", "minimum": 0, "maximum": 10},
                    "trace_50hz": {"type": "array"},
                },
            },
        },
        "config": {"type": "object"},
    },
}


def round_floats(value, digits: int = 9):
    """Recursively round floats to ``digits`` significant decimal digits.

    The rounded double re-serializes to at most 9 significant digits, which
    keeps report files byte-identical across replays.
    """
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: round_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_floats(v, digits) for v in value]
    return value


def canonical_json(document: dict) -> str:
    return json.dumps(round_floats(document), sort_keys=True, indent=2) + "\n"


def validate_report(document: dict) -> None:
    """Raise jsonschema.ValidationError if the document is not a valid report."""
    jsonschema.validate(document, REPORT_SCHEMA)


def session_id_for(seed: int, config_echo: dict) -> str:
    """Deterministic session id derived from the seed and configuration."""
    payload = canonical_json({"seed": seed, "config": config_echo})
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
