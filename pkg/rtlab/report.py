"""Experiment reports for rtlab."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
from collections.abc import Iterable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .const import REPORT_SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION
from .core.exceptions import ReportSchemaError
from .core.graph_io import atomic_write_text
from .core.models import format_fraction
from .generators import GenKind, GenSpec

_LOGGER = logging.getLogger(__name__)

_RATIONAL = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}
_VERTEX_SET = {"type": "array", "items": {"type": "integer", "minimum": 0}, "uniqueItems": True}
_SET_NAMES = ("b0", "b1", "a0", "a1", "a2", "a2_prime", "b2", "b3", "a_prime", "b_prime", "a", "b")

REPORT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {
        "rational": _RATIONAL,
        "vertex_set": _VERTEX_SET,
        "claim": {
            "type": "object",
            "required": ["holds", "applicable", "informational", "detail"],
            "properties": {
                "holds": {"type": "boolean"},
                "applicable": {"type": "boolean"},
                "informational": {"type": "boolean"},
                "detail": {"type": "object"},
            },
        },
        "certificate": {
            "type": "object",
            "required": [*_SET_NAMES, "k", "ties", "alpha_count", "claim_results"],
            "properties": {
                **{name: {"$ref": "#/$defs/vertex_set"} for name in _SET_NAMES},
                "k": {"$ref": "#/$defs/rational"},
                "ties": {"$ref": "#/$defs/vertex_set"},
                "alpha_count": {"type": "integer", "minimum": 0},
                "claim_results": {
                    "type": "object",
                    "additionalProperties": {"$ref": "#/$defs/claim"},
                },
            },
        },
        "bound": {
            "type": "object",
            "required": [
                "n", "k", "alpha_count", "fa_at_max", "fb_at_max", "final_bound", "threshold"
            ],
            "properties": {
                "n": {"type": "integer", "minimum": 0},
                "k": {"$ref": "#/$defs/rational"},
                "alpha_count": {"type": "integer", "minimum": 0},
                "fa_at_max": {"$ref": "#/$defs/rational"},
                "fb_at_max": {"$ref": "#/$defs/rational"},
                "final_bound": {"$ref": "#/$defs/rational"},
                "threshold": {"$ref": "#/$defs/rational"},
                "verdict": {"enum": ["bound_holds", "bound_fails", None]},
            },
        },
    },
    "type": "object",
    "required": [
        "schema_version",
        "tool",
        "tool_version",
        "command",
        "config",
        "results",
        "wall_times",
    ],
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "tool": {"const": TOOL_NAME},
        "tool_version": {"type": "string"},
        "command": {"type": "string", "minLength": 1},
        "gen_spec": {
            "type": ["object", "null"],
            "required": ["kind", "params", "seed"],
            "properties": {
                "kind": {"enum": [kind.value for kind in GenKind]},
                "params": {"type": "object"},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "input_hash": {"type": ["string", "null"], "pattern": "^[0-9a-f]{64}$"},
        "config": {"type": "object"},
        "results": {
            "type": "object",
            "properties": {
                "certificate": {"$ref": "#/$defs/certificate"},
                "bound": {"$ref": "#/$defs/bound"},
            },
        },
        "wall_times": {
            "type": "object",
            "additionalProperties": {"type": "number", "minimum": 0},
        },
    },
    "additionalProperties": False,
}

_VALIDATOR = Draft202012Validator(REPORT_SCHEMA)

CSV_FIELDS = (
    "instance",
    "n",
    "nu",
    "alpha",
    "e_g",
    "e_gprime",
    "final_bound",
    "verdict",
    "claims_passed",
    "claims_failed",
)


@dataclass
class ExperimentReport:
    """Everything needed to re-run and audit one command."""

    command: str
    config: dict[str, Any] = field(default_factory=dict)
    results: dict[str, Any] = field(default_factory=dict)
    gen_spec: GenSpec | None = None
    input_hash: str | None = None
    wall_times: dict[str, float] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentReport:
        """Create from a validated mapping."""
        gen_spec = data.get("gen_spec")
        return cls(
            command=data["command"],
            config=dict(data.get("config", {})),
            results=dict(data.get("results", {})),
            gen_spec=GenSpec.from_dict(gen_spec) if gen_spec else None,
            input_hash=data.get("input_hash"),
            wall_times=dict(data.get("wall_times", {})),
            tool_version=data.get("tool_version", TOOL_VERSION),
        )

    def to_dict(self) -> dict[str, Any]:
        """Serialize for JSON output."""
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool": TOOL_NAME,
            "tool_version": self.tool_version,
            "command": self.command,
            "gen_spec": self.gen_spec.to_dict() if self.gen_spec else None,
            "input_hash": self.input_hash,
            "config": self.config,
            "results": self.results,
            "wall_times": self.wall_times,
        }

    @contextmanager
    def timed(self, stage: str) -> Iterator[None]:
        """Record the wall time of a block under stage."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.wall_times[stage] = time.perf_counter() - start


def validate_report(data: dict[str, Any]) -> None:
    """Raise ReportSchemaError unless data matches REPORT_SCHEMA."""
    error = best_match(_VALIDATOR.iter_errors(data))
    if error is not None:
        path = "/".join(str(part) for part in error.absolute_path) or "<root>"
        raise ReportSchemaError(
            f"Report invalid at {path}: {error.message}",
            detail={"path": path, "validator": error.validator},
        )


def canonical_json(data: Any) -> str:
    """Return sorted, compact JSON."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def report_digest(report: ExperimentReport | dict[str, Any]) -> str:
    """Return the sha256 of the canonical report without its wall times."""
    data = report.to_dict() if isinstance(report, ExperimentReport) else dict(report)
    data.pop("wall_times", None)
    return "sha256:" + hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def dump_report(report: ExperimentReport) -> str:
    """Validate and render a report as indented JSON."""
    data = report.to_dict()
    validate_report(data)
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(report: ExperimentReport, path: str | Path) -> None:
    """Validate and write a report atomically."""
    atomic_write_text(path, dump_report(report))
    _LOGGER.debug("Wrote %s report to %s", report.command, path)


def load_report(path: str | Path) -> ExperimentReport:
    """Read a report, validating it against the schema."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ReportSchemaError(f"{path}: not JSON ({err.msg})") from err
    if not isinstance(data, dict):
        raise ReportSchemaError(f"{path}: report must be a JSON object")
    validate_report(data)
    return ExperimentReport.from_dict(data)


def csv_row(instance: str, run: Any) -> dict[str, Any]:
    """Return the sweep row for one pipeline run."""
    return {
        "instance": instance,
        "n": run.n,
        "nu": format_fraction(run.config.nu),
        "alpha": run.alpha_count,
        "e_g": run.bound.e_g,
        "e_gprime": run.bound.e_gprime,
        "final_bound": format_fraction(run.bound.final_bound),
        "verdict": run.bound.verdict.value if run.bound.verdict else "",
        "claims_passed": run.claims.passed,
        "claims_failed": run.claims.failed,
    }


def format_csv(rows: Iterable[dict[str, Any]]) -> str:
    """Render rows with a header line."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def write_csv(rows: Iterable[dict[str, Any]], path: str | Path) -> None:
    """Write sweep rows atomically."""
    atomic_write_text(path, format_csv(rows))
