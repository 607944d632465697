"""Derived datasheet assembly and model-vs-measurement comparison.

build_datasheet runs every analysis a spec supports and collects the
results into one nested dict with stable keys, suitable for JSON emission,
text rendering, and round-trip comparison. Conventions baked in here:

- torque density uses the envelope cylinder pi*(OD/2)^2 * overall length;
- the efficiency block is evaluated at a low-duty characterization voltage
  (default 12 V) with the spec's loss model;
- the EMF peak is quoted at a reference speed (default 3000 rpm);
- the cogging amplitude bound is a calibration input carried through from
  the spec, not a model prediction, and is labeled as such.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .electromech import (
    build_constants,
    cogging_orders,
    performance_curve,
    ripple_for_spec,
    stall_analysis_for_spec,
    winding_resistance,
)
from .errors import SolverError
from .explorer import voltage_headroom
from .magnetics import emf_peak, flux_linkage_constant, solve_magnetic_circuit
from .measurements import ComparisonReport, MeasurementSet, compare, fit_constants
from .model import MotorSpec, active_volume, atomic_write_text, copper_fill_factor
from .thermal import build_grid, continuous_stall_torque, steady_state_solve

EMF_REFERENCE_RPM = 3000.0
EFFICIENCY_REFERENCE_V = 12.0


def build_datasheet(
    spec: MotorSpec,
    thermal_resolution: tuple[int, int] = (64, 64),
    efficiency_voltage: float = EFFICIENCY_REFERENCE_V,
    emf_reference_rpm: float = EMF_REFERENCE_RPM,
) -> dict:
    """Full derived characterization of one motor spec."""
    g = spec.geometry
    m = spec.materials
    circuit = solve_magnetic_circuit(spec)
    emf = flux_linkage_constant(spec, circuit)
    constants = build_constants(spec, emf, temperature_c=20.0)
    res20 = winding_resistance(spec, 20.0)
    fill = copper_fill_factor(spec)
    volumes = active_volume(spec)

    sheet: dict = {
        "name": spec.name,
        "geometry": {
            "outer_diameter_mm": g.outer_diameter * 1e3,
            "inner_diameter_mm": g.inner_diameter * 1e3,
            "overall_axial_length_mm": g.overall_axial_length * 1e3,
            "air_gap_mm": g.air_gap * 1e3,
            "pole_pairs": g.pole_pairs,
            "virtual_slots": g.virtual_slots,
            "stator_count": g.stator_count,
        },
        "constants": {
            "kt_mnm_per_a": constants.kt_mnm_per_a,
            "ke_v_per_rad_s": constants.ke,
            "speed_constant_rpm_per_v": constants.speed_constant_rpm_per_v,
        },
        "winding": {
            "terminal_resistance_ohm": res20.terminal,
            "phase_resistance_ohm": res20.phase,
            "fill_factor": fill,
            "turn_length_mm": res20.turn_length * 1e3,
            "trace_cross_section_mm2": res20.trace_cross_section * 1e6,
            "terminal_inductance_mh": (
                spec.electrical.terminal_inductance * 1e3
                if spec.electrical.terminal_inductance is not None
                else None
            ),
        },
        "magnetics": {
            "airgap_flux_density_t": circuit.airgap_flux_density,
            "teeth_flux_density_t": circuit.core_flux_density_teeth,
            "yoke_flux_density_t": circuit.core_flux_density_yoke,
            "saturation_margin_t": circuit.saturation_margin,
            "saturated": circuit.saturated,
            "emf_reference_rpm": emf_reference_rpm,
            "emf_peak_v": emf_peak(emf, emf_reference_rpm),
        },
    }

    e = spec.electrical
    nominal_torque = constants.kt * e.nominal_current
    sheet["nominal"] = {
        "voltage_min_v": e.nominal_voltage_min,
        "voltage_max_v": e.nominal_voltage_max,
        "current_a": e.nominal_current,
        "speed_rpm": e.nominal_speed_rpm,
        "torque_mnm": nominal_torque * 1e3,
        "voltage_headroom_v": voltage_headroom(
            constants, e.nominal_speed_rpm, e.nominal_current, e.nominal_voltage_min
        ),
    }

    stall = stall_analysis_for_spec(spec, constants)
    sheet["stall"] = {
        "reference_voltage_v": stall.voltage,
        "current_a": stall.stall_current,
        "torque_mnm": stall.torque_cold * 1e3,
        "ideal_torque_mnm": stall.ideal_torque_cold * 1e3,
        "derating_factor": stall.derating_factor_applied,
    }

    curve = performance_curve(constants, efficiency_voltage, loss=spec.losses)
    sheet["efficiency"] = {
        "reference_voltage_v": efficiency_voltage,
        "max_efficiency_pct": curve.max_efficiency * 100.0,
        "no_load_speed_rpm": float(curve.speed_rpm[0]),
        "friction_torque_mnm": spec.losses.friction_torque * 1e3,
        "fixed_loss_w": spec.losses.fixed_loss,
    }

    cog = cogging_orders(g)
    ripple_pct = (
        ripple_for_spec(spec, nominal_torque).ripple_fraction * 100.0
        if spec.ripple.harmonics
        else 0.0
    )
    sheet["ripple"] = {
        "cogging_periods_per_rev": cog.periods_per_rev,
        "cogging_period_deg": cog.period_deg,
        "cogging_amplitude_bound_mnm": spec.ripple.cogging_bound * 1e3,
        "cogging_amplitude_is_input": True,
        "ripple_pct_at_nominal": ripple_pct,
    }

    sheet["volumes"] = {
        "envelope_cm3": volumes.envelope_cm3,
        "active_annulus_cm3": volumes.active_annulus_cm3,
        "stator_stack_cm3": volumes.stator_stack_cm3,
        "winding_stack_cm3": volumes.winding_stack_cm3,
        "copper_cm3": volumes.copper_cm3,
        "mass_estimate_g": volumes.mass_g,
    }
    sheet["torque_density"] = {
        "stall_torque_density_mnm_per_cm3": (stall.torque_cold * 1e3) / volumes.envelope_cm3,
        "volume_convention": volumes.convention,
    }

    # thermal characterization; skipped quietly when the spec carries no
    # rated dissipation (nothing to anchor the solve to)
    t = spec.thermal
    if t.rated_dissipation > 0:
        try:
            grid = build_grid(spec, thermal_resolution)
            field = steady_state_solve(grid, t.rated_dissipation)
            rise = field.peak_c - t.ambient_c
            hot_c = field.peak_c
            res_hot = winding_resistance(spec, hot_c)
            kt_hot = constants.kt * (1.0 + m.magnet_temp_coeff * (hot_c - 20.0))
            sheet["thermal"] = {
                "rated_dissipation_w": t.rated_dissipation,
                "ambient_c": t.ambient_c,
                "peak_temperature_c": hot_c,
                "rise_k": rise,
                "thermal_resistance_k_per_w": rise / t.rated_dissipation,
                "resolution": list(thermal_resolution),
            }
            sheet["hot"] = {
                "reference_temperature_c": hot_c,
                "terminal_resistance_hot_ohm": res_hot.terminal,
                "kt_hot_mnm_per_a": kt_hot * 1e3,
            }

            cs: dict = {
                "material_limit_c": min(m.insulation_rating_c, m.magnet_rating_c) - t.rating_margin_k
            }
            material = continuous_stall_torque(spec, emf, grid=grid)
            cs["material_limit_current_a"] = material.current
            cs["material_limit_torque_mnm"] = material.torque * 1e3
            cs["material_limit_peak_c"] = material.peak_temperature_c
            if t.continuous_rating_limit_c > t.ambient_c:
                rated = continuous_stall_torque(
                    spec, emf, grid=grid, temp_limit_c=t.continuous_rating_limit_c
                )
                cs["rating_limit_c"] = t.continuous_rating_limit_c
                cs["current_a"] = rated.current
                cs["torque_mnm"] = rated.torque * 1e3
                cs["peak_temperature_c"] = rated.peak_temperature_c
                cs["dissipation_w"] = rated.dissipation
            sheet["continuous_stall"] = cs
        except SolverError as exc:
            sheet["thermal"] = {"error": str(exc)}
    return sheet


def torque_density_comparison(
    stall_torque_mnm: float,
    envelope_cm3: float,
    reference_torque_mnm: float,
    reference_volume_cm3: float,
    stated_density_ours: float | None = None,
    stated_density_reference: float | None = None,
) -> dict:
    """Torque-density ratio against a reference motor from raw inputs.

    The ratio of torque/volume quotients is the robust quantity; any stated
    absolute densities are cross-checked against the computed mNm/cm3 values
    and flagged when they disagree with the inputs under every plausible
    unit reading, instead of being asserted.
    """
    if min(stall_torque_mnm, envelope_cm3, reference_torque_mnm, reference_volume_cm3) <= 0:
        raise SolverError("density comparison needs positive torques and volumes")
    ours = stall_torque_mnm / envelope_cm3
    ref = reference_torque_mnm / reference_volume_cm3
    out = {
        "density_ours_mnm_per_cm3": ours,
        "density_reference_mnm_per_cm3": ref,
        "ratio": ours / ref,
        "increase_pct": (ours / ref - 1.0) * 100.0,
    }
    flags = []
    for label, stated, computed in (
        ("ours", stated_density_ours, ours),
        ("reference", stated_density_reference, ref),
    ):
        if stated is None:
            continue
        readings = {
            "mnm_per_cm3": stated,
            "nm_per_cm3": stated * 1e3,
            "mnm_per_mm3": stated * 1e3,
        }
        if not any(math.isclose(v, computed, rel_tol=0.05) for v in readings.values()):
            flags.append(
                f"stated absolute density for {label} ({stated:g}) is unit-inconsistent "
                f"with torque/volume ({computed:.3g} mNm/cm3); ratio retained, absolute ignored"
            )
    out["unit_flags"] = flags
    return out


def flatten_numeric(tree: dict, prefix: str = "") -> dict[str, float]:
    """Dotted-key view of every numeric leaf; bools/strings/lists drop out."""
    flat: dict[str, float] = {}
    for key in sorted(tree):
        value = tree[key]
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_numeric(value, prefix=f"{dotted}."))
        elif isinstance(value, bool) or value is None:
            continue
        elif isinstance(value, (int, float)):
            flat[dotted] = float(value)
    return flat


def write_datasheet_json(sheet: dict, path: str | Path) -> None:
    atomic_write_text(path, json.dumps(sheet, indent=2, sort_keys=True) + "\n")


def render_datasheet(sheet: dict) -> str:
    """Fixed-order human-readable rendering for terminal output.

    Text output rounds to 6 significant digits for readability; the JSON
    artifact keeps the full-precision values.
    """
    lines = [f"motor: {sheet['name']}"]
    order = [
        "geometry",
        "constants",
        "winding",
        "magnetics",
        "nominal",
        "stall",
        "continuous_stall",
        "efficiency",
        "ripple",
        "thermal",
        "hot",
        "volumes",
        "torque_density",
    ]
    for section in order:
        if section not in sheet:
            continue
        lines.append(f"[{section}]")
        body = sheet[section]
        for key in sorted(body):
            value = body[key]
            if isinstance(value, bool):
                text = "yes" if value else "no"
            elif isinstance(value, float):
                text = f"{value:.6g}"
            elif value is None:
                text = "-"
            else:
                text = str(value)
            lines.append(f"  {key}: {text}")
    return "\n".join(lines) + "\n"


def compare_to_measurements(
    spec: MotorSpec,
    data: MeasurementSet,
    tolerances: float | dict[str, float] = 0.05,
    thermal_resolution: tuple[int, int] = (64, 64),
) -> ComparisonReport:
    """Model-vs-bench report over whatever the measurement set contains.

    Constant rows need >= 2 dyno records; the EMF row appears when a
    waveform capture exists and is scored against the model value (the
    published acceptance phrasing is 'within x% of the simulated value');
    the thermal pairing is scored on kelvin rise above ambient, with the
    raw Celsius row carried informationally.
    """
    circuit = solve_magnetic_circuit(spec)
    emf = flux_linkage_constant(spec, circuit)
    constants = build_constants(spec, emf, temperature_c=20.0)

    model: dict[str, float] = {}
    measured: dict[str, float] = {}
    bases: dict[str, str] = {}
    informational: set[str] = set()

    if len(data.records) >= 2:
        fit = fit_constants(data)
        model["kt_mnm_per_a"] = constants.kt_mnm_per_a
        measured["kt_mnm_per_a"] = fit.kt_mnm_per_a
        model["terminal_resistance_ohm"] = winding_resistance(spec, 20.0).terminal
        measured["terminal_resistance_ohm"] = fit.terminal_resistance
        model["speed_constant_rpm_per_v"] = constants.speed_constant_rpm_per_v
        measured["speed_constant_rpm_per_v"] = 60.0 / (2.0 * math.pi * fit.ke_records)

    if data.emf is not None:
        model["emf_peak_v"] = emf_peak(emf, data.emf.speed_rpm)
        measured["emf_peak_v"] = data.emf.peak
        bases["emf_peak_v"] = "model"

    if data.per_phase_resistances is not None:
        phases = data.per_phase_resistances
        model["phase_resistance_ohm"] = winding_resistance(spec, 20.0).phase
        measured["phase_resistance_ohm"] = sum(phases) / len(phases)

    if data.thermal is not None:
        obs = data.thermal
        grid = build_grid(spec, thermal_resolution)
        field = steady_state_solve(grid, obs.dissipation_w)
        model["thermal_rise_k"] = field.peak_c - spec.thermal.ambient_c
        measured["thermal_rise_k"] = obs.peak_temp_c - obs.ambient_c
        model["peak_temperature_c"] = field.peak_c
        measured["peak_temperature_c"] = obs.peak_temp_c
        informational.add("peak_temperature_c")

    return compare(model, measured, tolerances, bases=bases, informational=informational)
