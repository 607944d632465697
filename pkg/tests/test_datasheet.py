import dataclasses
import json

import pytest

from pcbafpm.datasheet import (
    build_datasheet,
    compare_to_measurements,
    flatten_numeric,
    render_datasheet,
    torque_density_comparison,
    write_datasheet_json,
)
from pcbafpm.measurements import ThermalObservation, compare, ingest_emf_waveform, ingest_measurements


@pytest.fixture(scope="module")
def sheet(prototype):
    return build_datasheet(prototype, thermal_resolution=(64, 64))


def test_headline_constants(sheet):
    assert sheet["constants"]["kt_mnm_per_a"] == pytest.approx(32.0, rel=0.005)
    assert sheet["constants"]["speed_constant_rpm_per_v"] == pytest.approx(298.0, rel=0.005)
    assert sheet["winding"]["terminal_resistance_ohm"] == pytest.approx(4.70, rel=0.02)
    assert sheet["winding"]["fill_factor"] >= 0.45
    assert sheet["magnetics"]["emf_peak_v"] == pytest.approx(9.97, rel=0.005)


def test_stall_and_efficiency_sections(sheet):
    assert sheet["stall"]["torque_mnm"] == pytest.approx(158.0, rel=0.005)
    assert sheet["stall"]["current_a"] == pytest.approx(5.95, rel=0.005)
    assert sheet["efficiency"]["max_efficiency_pct"] == pytest.approx(60.0, abs=3.0)
    assert sheet["ripple"]["ripple_pct_at_nominal"] < 6.0
    assert sheet["ripple"]["cogging_periods_per_rev"] == 90
    assert sheet["ripple"]["cogging_amplitude_is_input"] is True


def test_thermal_sections(sheet):
    assert sheet["thermal"]["peak_temperature_c"] == pytest.approx(143.0, abs=5.0)
    assert sheet["continuous_stall"]["material_limit_torque_mnm"] > 0
    assert sheet["continuous_stall"]["current_a"] == pytest.approx(0.86, rel=0.10)
    assert sheet["hot"]["kt_hot_mnm_per_a"] == pytest.approx(27.7, rel=0.05)


def test_volume_section_records_convention(sheet):
    assert sheet["torque_density"]["volume_convention"] == "envelope-cylinder"
    assert sheet["volumes"]["envelope_cm3"] == pytest.approx(3.97, abs=0.01)
    assert sheet["volumes"]["stator_stack_cm3"] < sheet["volumes"]["envelope_cm3"]
    density = sheet["torque_density"]["stall_torque_density_mnm_per_cm3"]
    assert density == pytest.approx(
        sheet["stall"]["torque_mnm"] / sheet["volumes"]["envelope_cm3"], rel=1e-9
    )


def test_render_is_terse_and_ordered(sheet):
    text = render_datasheet(sheet)
    lines = text.splitlines()
    assert lines[0] == "motor: prototype_19mm"
    sections = [l[1:-1] for l in lines if l.startswith("[")]
    assert sections.index("constants") < sections.index("stall")
    assert sections.index("stall") < sections.index("volumes")
    kt_line = next(l for l in lines if "kt_mnm_per_a" in l)
    assert "32" in kt_line and "31.9999" not in kt_line


def test_json_round_trip(sheet, tmp_path):
    out = tmp_path / "sheet.json"
    write_datasheet_json(sheet, out)
    again = json.loads(out.read_text())
    assert again["constants"]["kt_mnm_per_a"] == sheet["constants"]["kt_mnm_per_a"]


def test_flatten_skips_non_numeric():
    flat = flatten_numeric(
        {"a": {"b": 1.5, "flag": True, "name": "x", "items": [1, 2]}, "c": 2}
    )
    assert flat == {"a.b": 1.5, "c": 2.0}


def test_datasheet_self_comparison_is_exact(sheet):
    flat = flatten_numeric(sheet)
    report = compare(flat, flat, tolerances=0.0)
    assert report.passed
    assert len(report.rows) > 40
    assert all(r.relative_error == 0.0 for r in report.rows)


def test_density_ratio_reproduces_claim():
    result = torque_density_comparison(
        stall_torque_mnm=158.0,
        envelope_cm3=3.9694,
        reference_torque_mnm=126.0,
        reference_volume_cm3=5.291,
    )
    assert result["ratio"] == pytest.approx(1.617, rel=0.05)
    assert result["increase_pct"] == pytest.approx(61.7, abs=6.0)
    assert result["unit_flags"] == []


def test_density_stated_absolutes_flagged_when_inconsistent():
    result = torque_density_comparison(
        stall_torque_mnm=158.0,
        envelope_cm3=3.9694,
        reference_torque_mnm=126.0,
        reference_volume_cm3=5.291,
        stated_density_ours=5.32,
        stated_density_reference=3.29,
    )
    assert len(result["unit_flags"]) == 2
    assert all("unit-inconsistent" in flag for flag in result["unit_flags"])
    # the ratio claim survives the flagging untouched
    assert result["ratio"] == pytest.approx(1.617, rel=0.05)


def test_density_consistent_statement_not_flagged():
    result = torque_density_comparison(158.0, 3.9694, 126.0, 5.291, stated_density_ours=39.8)
    assert result["unit_flags"] == []


def test_compare_against_fixture_passes(prototype, dyno_csv_path, emf_csv_path):
    data = ingest_measurements(dyno_csv_path)
    capture = ingest_emf_waveform(emf_csv_path, speed_rpm=3000.0)
    data = dataclasses.replace(
        data, emf=capture, thermal=ThermalObservation(dissipation_w=8.0, peak_temp_c=148.0)
    )
    report = compare_to_measurements(prototype, data)
    rows = {r.quantity: r for r in report.rows}
    assert report.passed

    assert rows["kt_mnm_per_a"].passed
    assert rows["terminal_resistance_ohm"].passed
    assert rows["speed_constant_rpm_per_v"].passed

    emf_row = rows["emf_peak_v"]
    assert emf_row.basis == "model"
    assert emf_row.relative_error == pytest.approx(0.049, abs=0.002)
    assert emf_row.passed

    rise = rows["thermal_rise_k"]
    assert rise.relative_error == pytest.approx(0.040, abs=0.005)
    assert rise.passed and not rise.informational

    peak = rows["peak_temperature_c"]
    assert peak.informational
    assert peak.relative_error == pytest.approx(0.034, abs=0.005)


def test_compare_without_thermal_has_no_thermal_rows(prototype, dyno_csv_path):
    report = compare_to_measurements(prototype, ingest_measurements(dyno_csv_path))
    names = {r.quantity for r in report.rows}
    assert "thermal_rise_k" not in names
    assert "kt_mnm_per_a" in names
