"""Command dispatch, exit codes, and atomic output writing."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from micromap.cli import main

FIGURES = Path(__file__).parent.parent / "src" / "micromap" / "data" / "figures"


class TestLq:
    def test_prints_expected_quotient(self, capsys):
        assert main(["lq", "50", "1000", "200", "10000"]) == 0
        assert capsys.readouterr().out.strip() == "2.5"

    def test_zero_national_category_is_validation_error(self, capsys):
        assert main(["lq", "50", "1000", "0", "10000"]) == 1
        assert "undefined LQ" in capsys.readouterr().err

    def test_non_numeric_argument_is_usage_error(self, capsys):
        assert main(["lq", "fifty", "1000", "200", "10000"]) == 2


class TestUsage:
    def test_unknown_flag_exits_2(self, capsys):
        assert main(["datasets", "--frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self, capsys):
        assert main(["explode"]) == 2

    def test_no_arguments_exits_2(self, capsys):
        assert main([]) == 2


class TestDatasets:
    def test_lists_bundled_ids_sorted(self, capsys):
        assert main(["datasets"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        ids = [line.split("\t")[0] for line in lines]
        assert len(ids) >= 6
        assert ids == sorted(ids)
        assert "oews-software-dev" in ids

    def test_empty_root_prints_nothing(self, capsys, tmp_path):
        assert main(["datasets", "--root", str(tmp_path)]) == 0
        assert capsys.readouterr().out == ""

    def test_env_var_sets_default_root(self, capsys, monkeypatch, tmp_path):
        monkeypatch.setenv("MICROMAP_DATA_ROOT", str(tmp_path))
        assert main(["datasets"]) == 0
        assert capsys.readouterr().out == ""

    def test_error_entries_reported(self, capsys, tmp_path):
        bad = tmp_path / "broken"
        bad.mkdir()
        (bad / "manifest.json").write_text("{oops", encoding="utf-8")
        assert main(["datasets", "--root", str(tmp_path)]) == 0
        assert "ERROR" in capsys.readouterr().out


class TestRender:
    def test_bundled_recipe_renders(self, tmp_path):
        out = tmp_path / "fig.svg"
        assert main(["render", "--spec", "fig2_3", "--out", str(out)]) == 0
        text = out.read_text(encoding="utf-8")
        assert text.startswith('<?xml version="1.0"')
        assert "<svg" in text.partition("\n")[2][:80]
        assert text.rstrip().endswith("</svg>")

    def test_same_argv_same_bytes(self, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert main(["render", "--spec", "fig3_3", "--out", str(a)]) == 0
        assert main(["render", "--spec", "fig3_3", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_report_flag_writes_layout_report(self, tmp_path):
        out = tmp_path / "fig.svg"
        assert main(["render", "--spec", "fig3_4", "--out", str(out), "--report"]) == 0
        report = json.loads((tmp_path / "fig.svg.report.json").read_text(encoding="utf-8"))
        assert len(report["rows"]) == 51
        assert len(report["panels"]) == 11

    def test_no_temp_files_left_behind(self, tmp_path):
        out = tmp_path / "fig.svg"
        assert main(["render", "--spec", "fig1_1", "--out", str(out)]) == 0
        assert [p.name for p in tmp_path.iterdir()] == ["fig.svg"]

    def test_creates_parent_directories(self, tmp_path):
        out = tmp_path / "deep" / "nested" / "fig.svg"
        assert main(["render", "--spec", "fig2_1", "--out", str(out)]) == 0
        assert out.is_file()

    def test_explicit_flags_override_recipe(self, tmp_path, capsys):
        # NY spec against the states atlas: every key unmatched, exit 1
        rc = main(
            ["render", "--spec", "fig2_3", "--atlas", "us-states-dc", "--out", str(tmp_path / "x.svg")]
        )
        assert rc == 1
        assert "unmatched region key" in capsys.readouterr().err
        assert not (tmp_path / "x.svg").exists()

    def test_unknown_spec_exits_2(self, capsys, tmp_path):
        assert main(["render", "--spec", "fig9_9", "--out", str(tmp_path / "x.svg")]) == 2
        assert "spec not found" in capsys.readouterr().err

    def test_unknown_dataset_exits_2(self, capsys, tmp_path):
        doc = json.loads((FIGURES / "fig3_4.json").read_text(encoding="utf-8"))
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(doc["spec"]), encoding="utf-8")
        rc = main(
            ["render", "--spec", str(spec_path), "--dataset", "nope",
             "--atlas", "us-states-dc", "--out", str(tmp_path / "x.svg")]
        )
        assert rc == 2
        assert "dataset not found" in capsys.readouterr().err

    def test_plain_spec_needs_dataset_flag(self, capsys, tmp_path):
        doc = json.loads((FIGURES / "fig3_4.json").read_text(encoding="utf-8"))
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(doc["spec"]), encoding="utf-8")
        rc = main(["render", "--spec", str(spec_path), "--out", str(tmp_path / "x.svg")])
        assert rc == 2
        assert "no dataset given" in capsys.readouterr().err

    def test_malformed_spec_file_exits_2(self, capsys, tmp_path):
        spec_path = tmp_path / "spec.json"
        spec_path.write_text("{broken", encoding="utf-8")
        rc = main(["render", "--spec", str(spec_path), "--out", str(tmp_path / "x.svg")])
        assert rc == 2


class TestValidate:
    def test_bundled_recipe_is_valid(self, capsys):
        assert main(["validate", "--spec", "fig3_1"]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_bad_binding_lists_issue_on_stderr(self, capsys, tmp_path):
        spec = {
            "sort": {"column": "lq"},
            "columns": [{"glyph": "dot", "bindings": {"value": "nonesuch"}}],
        }
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec), encoding="utf-8")
        rc = main(
            ["validate", "--spec", str(spec_path),
             "--dataset", "oews-software-dev", "--atlas", "us-states-dc"]
        )
        assert rc == 1
        err = capsys.readouterr().err
        assert "unresolved binding nonesuch" in err


class TestEntryPoint:
    def test_module_invocation_matches_in_process(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "micromap.cli", "lq", "50", "1000", "200", "10000"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "2.5"

    def test_module_invocation_render(self, tmp_path):
        out = tmp_path / "fig.svg"
        proc = subprocess.run(
            [sys.executable, "-m", "micromap.cli", "render", "--spec", "fig2_2",
             "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.is_file()

    def test_usage_text_on_unknown_flag(self):
        proc = subprocess.run(
            [sys.executable, "-m", "micromap.cli", "render", "--bogus"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
        assert "usage" in proc.stderr
