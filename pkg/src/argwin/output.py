"""Output writing and validation.

Writes the JSON and CSV files every command emits, the run manifest that
sits next to them, and validates JSON documents against the schemas below.
CSV numbers are locale-independent with 12 significant digits so reruns
produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from argwin import __version__

logger = logging.getLogger(__name__)

UTC = timezone.utc

MANIFEST_NAME = "manifest.json"

_NUMBER = {"type": "number"}
_NULLABLE_NUMBER = {"type": ["number", "null"]}

STATS_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["rule", "min_tree_threshold", "n_trees", "levels"],
    "properties": {
        "rule": {"type": "string"},
        "min_tree_threshold": {"type": "integer", "minimum": 1},
        "n_trees": {"type": "integer", "minimum": 1},
        "levels": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "distance_from_max",
                    "n_trees",
                    "n_nodes",
                    "p_win",
                    "p_leaf",
                    "p_win_no_leaves",
                    "mean_in_degree",
                ],
                "properties": {
                    "distance_from_max": {"type": "integer", "minimum": 0},
                    "n_trees": {"type": "integer", "minimum": 1},
                    "n_nodes": {"type": "integer", "minimum": 1},
                    "p_win": {"type": "number", "minimum": 0, "maximum": 1},
                    "p_leaf": {"type": "number", "minimum": 0, "maximum": 1},
                    "p_win_no_leaves": _NULLABLE_NUMBER,
                    "mean_in_degree": _NUMBER,
                    "signed_mean": _NUMBER,
                    "p_win_se": _NUMBER,
                },
            },
        },
    },
}

POWERLAW_FIT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "oneOf": [
        {
            "required": ["alpha", "k_min", "ks_distance", "n_tail"],
            "properties": {
                "alpha": {"type": "number", "exclusiveMinimum": 1},
                "k_min": {"type": "integer", "minimum": 1},
                "ks_distance": {"type": "number", "minimum": 0, "maximum": 1},
                "n_tail": {"type": "integer", "minimum": 1},
            },
        },
        {"required": ["error", "message"]},
    ],
}

RECOMMENDATION_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["q", "regime", "recommended_order"],
    "properties": {
        "q": {"type": "number", "minimum": 0, "maximum": 1},
        "regime": {"enum": ["oscillatory", "flat", "monotone-decay"]},
        "recommended_order": {"type": "array", "items": {"type": "integer"}},
    },
}

CLEANING_REPORT_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["trees_in", "removed_small", "removed_malformed", "trees_out", "q_hat"],
    "properties": {
        "trees_in": {"type": "integer", "minimum": 0},
        "removed_small": {"type": "integer", "minimum": 0},
        "removed_malformed": {"type": "integer", "minimum": 0},
        "trees_out": {"type": "integer", "minimum": 0},
        "q_hat": {"type": "object"},
    },
}

MANIFEST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["command", "params", "seed", "version", "outputs", "duration_seconds"],
    "properties": {
        "command": {"type": "string"},
        "params": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "version": {"type": "string"},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "duration_seconds": {"type": "number", "minimum": 0},
    },
}


def validate_document(doc: Any, schema: Mapping[str, Any], name: str = "document") -> bool:
    """Validate a written document against a schema.

    Args:
        doc: Parsed JSON document.
        schema: JSON schema to check against.
        name: Label used in log messages.

    Returns:
        True if valid, False otherwise.
    """
    errors = sorted(Draft202012Validator(schema).iter_errors(doc), key=lambda e: e.path)
    if not errors:
        return True
    for exc in errors[:5]:
        path_str = " > ".join(str(p) for p in exc.absolute_path)
        logger.error("%s validation failed at %s: %s", name, path_str or "<root>", exc.message)
    return False


def format_value(value: Any) -> str:
    """Render a CSV cell: empty for None, 12 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_json(data: Any, path: str | Path) -> Path:
    """Write ``data`` as indented UTF-8 JSON, creating parent directories."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(data, f, ensure_ascii=False, indent=2)
        f.write("\n")
    logger.debug("Wrote %s", file_path)
    return file_path


def write_csv(
    rows: Iterable[Mapping[str, Any]], columns: Sequence[str], path: str | Path
) -> Path:
    """Write rows with a fixed column order and ``\\n`` line endings."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    logger.debug("Wrote %s", file_path)
    return file_path


@dataclass
class RunManifest:
    """Parameters and outputs of one CLI run."""

    command: str
    params: dict[str, Any]
    seed: int | None = None
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    started: float = field(default_factory=time.monotonic)
    started_at: str = field(default_factory=lambda: datetime.now(UTC).isoformat())
    duration_seconds: float = 0.0

    def add(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path

    def to_dict(self) -> dict[str, Any]:
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": self.version,
            "outputs": sorted(self.outputs),
            "started_at": self.started_at,
            "duration_seconds": self.duration_seconds,
        }


def write_manifest(manifest: RunManifest, out_dir: str | Path) -> Path:
    """Finish the manifest clock and write ``manifest.json`` into ``out_dir``."""
    manifest.duration_seconds = round(time.monotonic() - manifest.started, 6)
    path = write_json(manifest.to_dict(), Path(out_dir) / MANIFEST_NAME)
    logger.info("Wrote %d output(s) and manifest to %s", len(manifest.outputs), out_dir)
    return path
