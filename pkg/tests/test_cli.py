"""Command line interface tests.

Everything runs through click's CliRunner, so no subprocesses are spawned
and coverage is attributed normally.  Error paths assert on the exit code
contract: 0 ok, 2 usage, 3 spec/input errors, 4 solver failures, 5 a
comparison that did not pass.
"""

import json
import os

import pytest
from click.testing import CliRunner

from pcbafpm import load_spec, write_spec
from pcbafpm.cli import main
from pcbafpm.model import spec_to_tree


@pytest.fixture
def runner():
    return CliRunner()


def test_analyze_prints_headline_numbers(runner, prototype_path):
    result = runner.invoke(main, ["analyze", str(prototype_path), "--resolution", "32x32"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "motor: prototype_19mm"
    assert "  kt_mnm_per_a: 32" in lines
    assert "  speed_constant_rpm_per_v: 298.416" in lines
    assert "  torque_mnm: 158.228" in result.output
    # sections arrive in reading order
    assert result.output.index("[constants]") < result.output.index("[stall]")
    assert result.output.index("[stall]") < result.output.index("[volumes]")


def test_analyze_out_writes_report_directory(runner, prototype_path, tmp_path):
    out = tmp_path / "report"
    result = runner.invoke(
        main, ["analyze", str(prototype_path), "--out", str(out), "--resolution", "16x16"]
    )
    assert result.exit_code == 0
    assert sorted(os.listdir(out)) == ["datasheet.json", "datasheet.txt"]
    sheet = json.loads((out / "datasheet.json").read_text())
    assert sheet["constants"]["kt_mnm_per_a"] == pytest.approx(32.0, rel=5e-3)
    text = (out / "datasheet.txt").read_text()
    assert text.startswith("motor: prototype_19mm")


def test_no_arguments_is_a_usage_error(runner):
    result = runner.invoke(main, [])
    assert result.exit_code == 2


def test_missing_spec_file_exits_3_with_json_error(runner):
    result = runner.invoke(main, ["analyze", "/no/such/file.spec"])
    assert result.exit_code == 3
    err = json.loads(result.stderr)
    assert err["error"]["type"] == "SpecFormatError"
    assert "not found" in err["error"]["message"]


def test_malformed_spec_file_exits_3(runner, tmp_path):
    bad = tmp_path / "bad.spec"
    bad.write_text("geometry: [this, is, not, a, mapping]\n")
    result = runner.invoke(main, ["analyze", str(bad)])
    assert result.exit_code == 3
    err = json.loads(result.stderr)
    assert "Error" in err["error"]["type"]


def test_thermal_summary_line(runner, prototype_path):
    result = runner.invoke(
        main, ["thermal", str(prototype_path), "--power", "8", "--resolution", "64x64"]
    )
    assert result.exit_code == 0
    assert result.output.startswith("peak 143.0")
    assert "(winding)" in result.output
    assert "rise 118.0" in result.output
    assert "at 8 W" in result.output


def test_thermal_out_directory_artifacts(runner, prototype_path, tmp_path):
    out = tmp_path / "thermal"
    result = runner.invoke(
        main,
        ["thermal", str(prototype_path), "--power", "8", "--resolution", "16x16", "--out", str(out)],
    )
    assert result.exit_code == 0
    field_lines = (out / "thermal_field.csv").read_text().strip().splitlines()
    assert len(field_lines) == 1 + 16 * 16
    summary = json.loads((out / "thermal_summary.json").read_text())
    assert summary["resolution"] == [16, 16]
    assert summary["peak_c"] > summary["ambient_c"]
    assert summary["peak_region"] == "winding"


def test_thermal_rejects_garbled_resolution(runner, prototype_path):
    result = runner.invoke(
        main, ["thermal", str(prototype_path), "--power", "8", "--resolution", "banana"]
    )
    assert result.exit_code == 2
    assert "expected <nr>x<nz>" in result.stderr


def test_all_adiabatic_spec_exits_4(runner, prototype, tmp_path):
    tree = spec_to_tree(prototype)
    tree["thermal_model"]["boundary_h_w_m2k"] = 0.0
    path = tmp_path / "adiabatic.spec"
    write_spec(load_spec(tree), path)
    result = runner.invoke(main, ["thermal", str(path), "--power", "8", "--resolution", "16x16"])
    assert result.exit_code == 4
    err = json.loads(result.stderr)
    assert err["error"]["type"] == "ConvergenceError"


def test_curves_csv_table_and_summary(runner, prototype_path):
    result = runner.invoke(
        main, ["curves", str(prototype_path), "--voltage", "12", "--points", "5"]
    )
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    header, rows, summary = lines[0], lines[1:-1], lines[-1]
    assert header.split(",") == [
        "torque_mnm",
        "speed_rpm",
        "current_a",
        "input_power_w",
        "output_power_w",
        "efficiency",
    ]
    assert len(rows) == 5
    # first row is no-load, last is stall (shaft torque = ideal minus friction)
    first, last = rows[0].split(","), rows[-1].split(",")
    assert float(first[0]) == 0.0
    assert float(first[1]) == pytest.approx(3399.09, rel=1e-3)
    assert float(last[1]) == 0.0
    assert float(last[0]) == pytest.approx(81.70 - 4.15, rel=1e-3)
    assert "no-load" in summary and "stall" in summary and "max efficiency" in summary


def test_curves_json_artifact(runner, prototype_path, tmp_path):
    out = tmp_path / "curves"
    result = runner.invoke(
        main,
        [
            "curves",
            str(prototype_path),
            "--voltage",
            "12",
            "--points",
            "7",
            "--format",
            "json",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0
    payload = json.loads((out / "curve_12v.json").read_text())
    assert payload["voltage_v"] == 12.0
    for column in ("torque_mnm", "speed_rpm", "current_a", "efficiency"):
        assert len(payload[column]) == 7


def test_curves_artifacts_are_byte_identical_across_runs(runner, prototype_path, tmp_path):
    blobs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = runner.invoke(
            main,
            ["curves", str(prototype_path), "--voltage", "12", "--points", "9", "--out", str(out)],
        )
        assert result.exit_code == 0
        blobs.append((out / "curve_12v.csv").read_bytes())
    assert blobs[0] == blobs[1]


def test_sweep_artifacts_and_candidate_reload(runner, prototype_path, tmp_path):
    out = tmp_path / "sweep"
    result = runner.invoke(
        main,
        [
            "sweep",
            str(prototype_path),
            "--axis",
            "winding.trace_width_mm=0.3:0.42:3",
            "--resolution",
            "8x8",
            "--top",
            "2",
            "--out",
            str(out),
        ],
    )
    assert result.exit_code == 0
    assert "3 candidates" in result.output
    names = sorted(os.listdir(out))
    assert names == ["candidate_01.spec", "candidate_02.spec", "sweep.csv", "sweep.json"]
    # widest trace wins: lowest resistance, best stall torque per volume
    best = load_spec(out / "candidate_01.spec")
    assert best.winding.trace_width * 1e3 == pytest.approx(0.42)
    report = json.loads((out / "sweep.json").read_text())
    assert len(report["candidates"]) == 3


def test_sweep_rejects_malformed_axis(runner, prototype_path):
    result = runner.invoke(main, ["sweep", str(prototype_path), "--axis", "not-an-axis"])
    assert result.exit_code == 3
    err = json.loads(result.stderr)
    assert err["error"]["type"] == "SpecFormatError"


def test_compare_against_bench_data_passes(runner, prototype_path, dyno_csv_path, emf_csv_path):
    result = runner.invoke(
        main,
        [
            "compare",
            str(prototype_path),
            "--data",
            str(dyno_csv_path),
            "--emf-csv",
            str(emf_csv_path),
            "--emf-speed",
            "3000",
            "--thermal-power",
            "8",
            "--thermal-peak",
            "148",
            "--resolution",
            "32x32",
        ],
    )
    assert result.exit_code == 0
    assert result.output.strip().endswith("overall: pass")
    assert "emf_peak_v" in result.output
    assert "FAIL" not in result.output


def test_compare_failing_row_exits_5(runner, prototype_path, dyno_csv_path):
    result = runner.invoke(
        main,
        [
            "compare",
            str(prototype_path),
            "--data",
            str(dyno_csv_path),
            "--phase-r",
            "1.0,1.0,1.0",
            "--resolution",
            "16x16",
        ],
    )
    assert result.exit_code == 5
    assert "overall: FAIL" in result.output
    assert "phase_resistance_ohm" in result.output


def test_datasheet_roundtrip_through_compare_against(runner, prototype_path, tmp_path):
    sheet = tmp_path / "sheet.json"
    result = runner.invoke(
        main, ["datasheet", str(prototype_path), "--out", str(sheet), "--resolution", "32x32"]
    )
    assert result.exit_code == 0
    assert sheet.is_file()
    result = runner.invoke(
        main,
        ["compare", str(prototype_path), "--against", str(sheet), "--resolution", "32x32"],
    )
    assert result.exit_code == 0
    rows = [line for line in result.output.splitlines() if "model" in line]
    assert len(rows) > 40
    assert all("error 0 %" in row for row in rows)


def test_help_lists_every_subcommand(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for name in ("analyze", "curves", "thermal", "sweep", "compare", "datasheet", "serve"):
        assert name in result.output
