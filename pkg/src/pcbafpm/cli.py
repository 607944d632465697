"""Command-line front end.

Thin client over the analysis modules: every subcommand loads a spec file,
runs the relevant pipeline in-process, prints a summary, and optionally
exports artifacts. Exit codes: 0 success, 2 usage, 3 spec validation,
4 solver non-convergence, 5 comparison failure. Errors are emitted to
stderr as one JSON object per failure so scripts can parse them.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import __version__
from .datasheet import (
    build_datasheet,
    compare_to_measurements,
    flatten_numeric,
    render_datasheet,
    write_datasheet_json,
)
from .electromech import build_constants, performance_curve
from .errors import SolverError, SpecError
from .explorer import ConstraintSet, parse_axis, sweep as run_sweep
from .magnetics import flux_linkage_constant, solve_magnetic_circuit
from .measurements import (
    MeasurementSet,
    ThermalObservation,
    compare as compare_dicts,
    ingest_emf_waveform,
    ingest_measurements,
)
from .model import atomic_write_text, load_spec
from .thermal import build_grid, steady_state_solve
from .units import fmt_float

EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_COMPARISON = 5


def _fail(code: int, exc: BaseException) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(payload), err=True)
    sys.exit(code)


def _mapped_errors(fn):
    """Translate module errors into documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SpecError as exc:
            _fail(EXIT_VALIDATION, exc)
        except SolverError as exc:
            _fail(EXIT_SOLVER, exc)
        except OSError as exc:
            _fail(EXIT_VALIDATION, exc)

    return wrapper


def _parse_resolution(_ctx, _param, value):
    if value is None:
        return None
    try:
        nr, _, nz = value.lower().partition("x")
        res = (int(nr), int(nz))
        if res[0] < 1 or res[1] < 1:
            raise ValueError
        return res
    except ValueError:
        raise click.BadParameter(f"expected <nr>x<nz>, got {value!r}")


def _resolve_spec_path(spec_arg: str | None, spec_opt: str | None) -> Path:
    path = spec_arg or spec_opt
    if path is None:
        raise click.UsageError("a spec file is required (positional or --spec)")
    return Path(path)


spec_argument = click.argument("spec_arg", metavar="[SPEC]", required=False)
spec_option = click.option("--spec", "spec_opt", type=click.Path(), help="Motor spec file.")
out_option = click.option("--out", type=click.Path(), default=None, help="Output directory.")
format_option = click.option(
    "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True
)


@click.group()
@click.version_option(version=__version__, prog_name="pcbafpm")
def main():
    """Design and verification toolkit for PCB-stator axial-flux motors."""


@main.command()
@spec_argument
@spec_option
@out_option
@click.option("--resolution", callback=_parse_resolution, default="64x64", show_default=True,
              help="Thermal grid <nr>x<nz> for the datasheet's thermal rows.")
@_mapped_errors
def analyze(spec_arg, spec_opt, out, resolution):
    """Print the full derived datasheet; optionally export it."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    sheet = build_datasheet(spec, thermal_resolution=resolution)
    click.echo(render_datasheet(sheet), nl=False)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_datasheet_json(sheet, out_dir / "datasheet.json")
        atomic_write_text(out_dir / "datasheet.txt", render_datasheet(sheet))
        click.echo(f"wrote {out_dir / 'datasheet.json'}", err=True)


@main.command()
@spec_argument
@spec_option
@out_option
@format_option
@click.option("--voltage", type=float, required=True, help="Supply voltage, V.")
@click.option("--duty", type=float, default=1.0, show_default=True, help="PWM duty 0..1.")
@click.option("--points", type=int, default=200, show_default=True)
@_mapped_errors
def curves(spec_arg, spec_opt, out, fmt, voltage, duty, points):
    """Emit the speed/current/efficiency-vs-torque curve at one voltage."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    emf = flux_linkage_constant(spec, solve_magnetic_circuit(spec))
    constants = build_constants(spec, emf, temperature_c=20.0)
    curve = performance_curve(constants, voltage, duty=duty, n_points=points, loss=spec.losses)
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        tag = fmt_float(voltage * duty).replace(".", "p")
        if fmt == "csv":
            target = out_dir / f"curve_{tag}v.csv"
            curve.to_csv(target)
        else:
            target = out_dir / f"curve_{tag}v.json"
            payload = {
                "voltage_v": curve.voltage,
                "torque_mnm": [float(x) * 1e3 for x in curve.torque],
                "speed_rpm": [float(x) for x in curve.speed_rpm],
                "current_a": [float(x) for x in curve.current],
                "efficiency": [float(x) for x in curve.efficiency],
            }
            atomic_write_text(target, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        click.echo(f"wrote {target}")
    else:
        rows = ["torque_mnm,speed_rpm,current_a,input_power_w,output_power_w,efficiency"]
        rpm = curve.speed_rpm
        for i in range(len(curve.torque)):
            rows.append(",".join(fmt_float(v) for v in (
                float(curve.torque[i] * 1e3), float(rpm[i]), float(curve.current[i]),
                float(curve.input_power[i]), float(curve.output_power[i]), float(curve.efficiency[i]))))
        click.echo("\n".join(rows))
    click.echo(
        f"no-load {fmt_float(float(curve.speed_rpm[0]))} rpm, stall {fmt_float(curve.stall_torque * 1e3)} mNm, "
        f"max efficiency {fmt_float(curve.max_efficiency * 100)} %",
        err=True,
    )


@main.command()
@spec_argument
@spec_option
@out_option
@click.option("--power", type=float, default=None, help="Dissipation, W (default: spec's rated).")
@click.option("--resolution", callback=_parse_resolution, default="128x128", show_default=True)
@_mapped_errors
def thermal(spec_arg, spec_opt, out, power, resolution):
    """Steady locked-rotor thermal solve; prints the peak, exports the field."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    if power is None:
        power = spec.thermal.rated_dissipation
    if power <= 0:
        raise SpecError("no dissipation given: pass --power or set a rated dissipation in the spec")
    grid = build_grid(spec, resolution)
    field = steady_state_solve(grid, power)
    click.echo(
        f"peak {fmt_float(field.peak_c)} C at r={fmt_float(field.peak_r * 1e3)} mm "
        f"z={fmt_float(field.peak_z * 1e3)} mm ({field.peak_region}), "
        f"rise {fmt_float(field.peak_c - spec.thermal.ambient_c)} K at {fmt_float(power)} W"
    )
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        field.to_csv(out_dir / "thermal_field.csv")
        summary = {
            "power_w": power,
            "peak_c": field.peak_c,
            "peak_r_mm": field.peak_r * 1e3,
            "peak_z_mm": field.peak_z * 1e3,
            "peak_region": field.peak_region,
            "ambient_c": spec.thermal.ambient_c,
            "rise_k": field.peak_c - spec.thermal.ambient_c,
            "residual": field.residual,
            "boundary_flux_w": field.boundary_flux,
            "resolution": list(resolution),
        }
        atomic_write_text(out_dir / "thermal_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
        click.echo(f"wrote {out_dir / 'thermal_field.csv'}", err=True)


@main.command(name="sweep")
@spec_argument
@spec_option
@out_option
@click.option("--axis", "axes", multiple=True,
              help="Swept parameter, path=start:stop:steps or path=v1,v2,... (repeatable, max 4).")
@click.option("--resolution", callback=_parse_resolution, default="16x16", show_default=True,
              help="Coarse thermal grid used per candidate.")
@click.option("--top", type=int, default=3, show_default=True, help="Top-k specs to export.")
@_mapped_errors
def sweep_cmd(spec_arg, spec_opt, out, axes, resolution, top):
    """Factorial design sweep; ranks candidates by stall torque density."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    axis_objs = [parse_axis(a) for a in axes]
    result = run_sweep(spec, axis_objs, ConstraintSet(), thermal_resolution=resolution)
    feasible = result.feasible
    click.echo(f"{len(result.candidates)} candidates, {len(feasible)} feasible")
    for cand in feasible[:top]:
        params = ", ".join(f"{k}={fmt_float(v)}" for k, v in sorted(cand.parameters.items()))
        flag = " (marginal)" if cand.marginal else ""
        click.echo(f"  {fmt_float(cand.objective)} mNm/cm3  [{params}]{flag}")
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.to_csv(out_dir / "sweep.csv")
        result.to_json(out_dir / "sweep.json")
        written = result.write_top_specs(out_dir, k=top)
        click.echo(f"wrote {out_dir / 'sweep.csv'} and {len(written)} candidate specs", err=True)


@main.command()
@spec_argument
@spec_option
@out_option
@click.option("--data", type=click.Path(), default=None, help="Dyno CSV (afpm-bench-csv v1).")
@click.option("--emf-csv", type=click.Path(), default=None, help="Back-EMF capture CSV (afpm-bench-emf v1).")
@click.option("--emf-speed", type=float, default=None, help="Shaft speed of the EMF capture, rpm.")
@click.option("--thermal-power", type=float, default=None, help="Measured dissipation, W.")
@click.option("--thermal-peak", type=float, default=None, help="Measured peak temperature, C.")
@click.option("--thermal-ambient", type=float, default=25.0, show_default=True)
@click.option("--phase-r", default=None, help="Per-phase resistances, ohm, as r1,r2,r3.")
@click.option("--against", type=click.Path(), default=None,
              help="Compare the model against a previously exported datasheet JSON.")
@click.option("--tolerance", type=float, default=5.0, show_default=True, help="Pass tolerance, percent.")
@click.option("--lenient", is_flag=True, help="Skip malformed CSV rows instead of failing.")
@click.option("--resolution", callback=_parse_resolution, default="64x64", show_default=True)
@_mapped_errors
def compare(spec_arg, spec_opt, out, data, emf_csv, emf_speed, thermal_power, thermal_peak,
            thermal_ambient, phase_r, against, tolerance, lenient, resolution):
    """Model-vs-measurement report; exits 5 when any physics row fails."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    tol = tolerance / 100.0

    if against is not None:
        sheet = build_datasheet(spec, thermal_resolution=resolution)
        try:
            stored = json.loads(Path(against).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{against}: not valid JSON ({exc})")
        report = compare_dicts(flatten_numeric(sheet), flatten_numeric(stored), tol)
    else:
        if data is None:
            raise click.UsageError("pass --data (and friends) or --against")
        mset = ingest_measurements(data, lenient=lenient)
        extras = {}
        if emf_csv is not None:
            if emf_speed is None:
                raise click.UsageError("--emf-csv needs --emf-speed")
            extras["emf"] = ingest_emf_waveform(emf_csv, emf_speed, lenient=lenient)
        if thermal_power is not None or thermal_peak is not None:
            if thermal_power is None or thermal_peak is None:
                raise click.UsageError("--thermal-power and --thermal-peak go together")
            extras["thermal"] = ThermalObservation(
                dissipation_w=thermal_power, peak_temp_c=thermal_peak, ambient_c=thermal_ambient
            )
        if phase_r is not None:
            try:
                phases = tuple(float(p) for p in phase_r.split(","))
            except ValueError:
                raise click.UsageError("--phase-r wants three comma-separated numbers")
            if len(phases) != 3:
                raise click.UsageError("--phase-r wants exactly three values")
            extras["per_phase_resistances"] = phases
        if extras:
            mset = MeasurementSet(
                records=mset.records, skipped_lines=mset.skipped_lines, source=mset.source, **extras
            )
        if mset.skipped_lines:
            click.echo(f"skipped malformed lines: {', '.join(map(str, mset.skipped_lines))}", err=True)
        report = compare_to_measurements(spec, mset, tolerances=tol, thermal_resolution=resolution)

    width = max(len(r.quantity) for r in report.rows)
    for r in report.rows:
        verdict = "pass" if r.passed else "FAIL"
        note = " (informational)" if r.informational else ""
        click.echo(
            f"{r.quantity.ljust(width)}  model {fmt_float(r.model_value)}  "
            f"measured {fmt_float(r.measured_value)}  error {fmt_float(r.relative_error * 100)} %  "
            f"{verdict}{note}"
        )
    click.echo(f"overall: {'pass' if report.passed else 'FAIL'}")
    if out:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report.to_csv(out_dir / "comparison.csv")
        report.to_json(out_dir / "comparison.json")
        click.echo(f"wrote {out_dir / 'comparison.csv'}", err=True)
    if not report.passed:
        sys.exit(EXIT_COMPARISON)


@main.command()
@spec_argument
@spec_option
@click.option("--out", type=click.Path(), default=None, help="Output file (default: stdout).")
@click.option("--resolution", callback=_parse_resolution, default="64x64", show_default=True)
@_mapped_errors
def datasheet(spec_arg, spec_opt, out, resolution):
    """Emit the datasheet as JSON."""
    spec = load_spec(_resolve_spec_path(spec_arg, spec_opt))
    sheet = build_datasheet(spec, thermal_resolution=resolution)
    text = json.dumps(sheet, indent=2, sort_keys=True) + "\n"
    if out:
        atomic_write_text(Path(out), text)
        click.echo(f"wrote {out}", err=True)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service (FastAPI/uvicorn) exposing the same pipelines."""
    import uvicorn

    uvicorn.run("pcbafpm.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
