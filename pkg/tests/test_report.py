"""Tests for rtlab experiment reports."""
import json
from fractions import Fraction

import pytest

from rtlab.const import REPORT_SCHEMA_VERSION, TOOL_NAME
from rtlab.core.exceptions import ReportSchemaError
from rtlab.core.models import Graph
from rtlab.generators import GenKind, GenSpec
from rtlab.pipeline import PipelineConfig, edge_bound, run_pipeline
from rtlab.report import (
    CSV_FIELDS,
    ExperimentReport,
    csv_row,
    dump_report,
    format_csv,
    load_report,
    report_digest,
    validate_report,
    write_csv,
    write_report,
)

from .conftest import complete_bipartite


def bound_report() -> ExperimentReport:
    """Return a small valid report."""
    return ExperimentReport(
        "bound",
        config={"n": 40, "k": "0", "alpha_count": 20},
        results={"bound": edge_bound(40, 0, 20, e_g=400).to_dict()},
        gen_spec=GenSpec(GenKind.GNP, {"n": 40, "p": "1/2"}, 3),
        input_hash=Graph.complete(4).digest(),
    )


class TestSchema:
    """Tests for report validation."""

    def test_valid_report(self):
        """Test a built report passes and carries the header fields."""
        data = bound_report().to_dict()
        validate_report(data)
        assert data["schema_version"] == REPORT_SCHEMA_VERSION
        assert data["tool"] == TOOL_NAME

    def test_missing_field(self):
        """Test a report without its command."""
        data = bound_report().to_dict()
        del data["command"]
        with pytest.raises(ReportSchemaError) as err:
            validate_report(data)
        assert err.value.detail["path"] == "<root>"

    def test_unknown_field(self):
        """Test extra top-level keys are rejected."""
        data = bound_report().to_dict()
        data["extra"] = 1
        with pytest.raises(ReportSchemaError):
            validate_report(data)

    def test_bad_rational(self):
        """Test rationals must be "num/den" strings."""
        data = bound_report().to_dict()
        data["results"]["bound"]["final_bound"] = 400.0
        with pytest.raises(ReportSchemaError) as err:
            validate_report(data)
        assert "final_bound" in err.value.detail["path"]

    def test_bad_hash(self):
        """Test the input hash must be a sha256 hex digest."""
        data = bound_report().to_dict()
        data["input_hash"] = "abc"
        with pytest.raises(ReportSchemaError):
            validate_report(data)

    def test_pipeline_results_validate(self):
        """Test a full pipeline run fits the certificate and bound schema."""
        g = complete_bipartite(20, 20)
        cfg = PipelineConfig(nu=Fraction(1, 20), seed=1)
        run = run_pipeline(g, cfg)
        report = ExperimentReport("pipeline run", config=cfg.to_dict(), results=run.to_dict())
        validate_report(report.to_dict())


class TestFiles:
    """Tests for writing and reading reports."""

    def test_write_then_load(self, tmp_path):
        """Test a written report reads back equal."""
        report = bound_report()
        path = tmp_path / "reports" / "bound.json"
        write_report(report, path)
        loaded = load_report(path)
        assert loaded.to_dict() == report.to_dict()
        assert loaded.gen_spec.kind == GenKind.GNP

    def test_dump_is_sorted_json(self):
        """Test the rendered text is indented JSON ending in a newline."""
        text = dump_report(bound_report())
        assert text.endswith("}\n")
        assert json.loads(text)["command"] == "bound"

    def test_not_json(self, tmp_path):
        """Test a file that is not JSON."""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ReportSchemaError):
            load_report(path)

    def test_not_an_object(self, tmp_path):
        """Test a JSON array is not a report."""
        path = tmp_path / "list.json"
        path.write_text("[]", encoding="utf-8")
        with pytest.raises(ReportSchemaError):
            load_report(path)

    def test_invalid_report_is_not_written(self, tmp_path):
        """Test validation happens before the file is created."""
        report = ExperimentReport("")
        path = tmp_path / "empty.json"
        with pytest.raises(ReportSchemaError):
            write_report(report, path)
        assert not path.exists()


class TestDigest:
    """Tests for report digests."""

    def test_wall_times_are_ignored(self):
        """Test timing differences do not change the digest."""
        first = bound_report()
        second = bound_report()
        with second.timed("bound"):
            pass
        assert "bound" in second.wall_times
        assert report_digest(first) == report_digest(second)

    def test_results_change_digest(self):
        """Test a different result changes the digest."""
        first = bound_report()
        second = bound_report()
        second.results["bound"]["e_g"] = 401
        assert report_digest(first) != report_digest(second)

    def test_digest_of_mapping(self):
        """Test a dict and its report give the same digest."""
        report = bound_report()
        digest = report_digest(report)
        assert digest.startswith("sha256:")
        assert report_digest(report.to_dict()) == digest


class TestCsv:
    """Tests for sweep CSV output."""

    def test_header_only(self):
        """Test no rows still writes the header."""
        assert format_csv([]) == ",".join(CSV_FIELDS) + "\n"

    def test_pipeline_row(self, tmp_path):
        """Test a run becomes one row after the header."""
        run = run_pipeline(complete_bipartite(20, 20), PipelineConfig(nu=Fraction(1, 20), seed=1))
        path = tmp_path / "sweep.csv"
        write_csv([csv_row("k2020", run)], path)
        header, row = path.read_text(encoding="utf-8").splitlines()
        assert header.split(",") == list(CSV_FIELDS)
        values = dict(zip(CSV_FIELDS, row.split(",")))
        assert values["instance"] == "k2020"
        assert values["nu"] == "1/20"
        assert values["final_bound"] == "400/1"
        assert values["verdict"] == "bound_holds"
