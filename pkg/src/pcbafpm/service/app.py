"""FastAPI application exposing the analysis pipelines over HTTP.

Stateless: every request carries its spec. Spec/validation problems map to
422 with a structured error body; solver non-convergence maps to 502 since
the request was well-formed but the computation could not be completed.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..datasheet import build_datasheet, compare_to_measurements
from ..electromech import build_constants, performance_curve
from ..errors import SolverError, SpecError
from ..explorer import ConstraintSet, SweepAxis, sweep as run_sweep
from ..magnetics import flux_linkage_constant, solve_magnetic_circuit
from ..measurements import (
    EmfCapture,
    MeasurementRecord,
    MeasurementSet,
    ThermalObservation,
)
from ..model import MotorSpec, load_spec
from ..thermal import build_grid, steady_state_solve
from . import schemas

app = FastAPI(
    title="pcbafpm",
    version=__version__,
    description="Design and verification service for PCB-stator axial-flux motors.",
)


@app.exception_handler(SpecError)
async def _spec_error(_request: Request, exc: SpecError) -> JSONResponse:
    detail = schemas.ErrorDetail(type=type(exc).__name__, message=str(exc))
    return JSONResponse(status_code=422, content={"error": detail.model_dump()})


@app.exception_handler(SolverError)
async def _solver_error(_request: Request, exc: SolverError) -> JSONResponse:
    detail = schemas.ErrorDetail(type=type(exc).__name__, message=str(exc))
    return JSONResponse(status_code=502, content={"error": detail.model_dump()})


def _load(payload: schemas.SpecPayload) -> MotorSpec:
    return load_spec(payload)


@app.get("/health", response_model=schemas.HealthResponse)
async def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/analyze")
async def analyze(req: schemas.AnalyzeRequest) -> dict:
    spec = _load(req.spec)
    return build_datasheet(spec, thermal_resolution=req.resolution.pair())


@app.post("/datasheet")
async def datasheet(req: schemas.AnalyzeRequest) -> dict:
    return await analyze(req)


@app.post("/curves", response_model=schemas.CurvesResponse)
async def curves(req: schemas.CurvesRequest) -> schemas.CurvesResponse:
    spec = _load(req.spec)
    emf = flux_linkage_constant(spec, solve_magnetic_circuit(spec))
    constants = build_constants(spec, emf, temperature_c=20.0)
    curve = performance_curve(
        constants, req.voltage, duty=req.duty, n_points=req.points, loss=spec.losses
    )
    return schemas.CurvesResponse(
        voltage_v=curve.voltage,
        torque_mnm=(curve.torque * 1e3).tolist(),
        speed_rpm=curve.speed_rpm.tolist(),
        current_a=curve.current.tolist(),
        input_power_w=curve.input_power.tolist(),
        output_power_w=curve.output_power.tolist(),
        efficiency=curve.efficiency.tolist(),
        no_load_speed_rpm=float(curve.speed_rpm[0]),
        stall_torque_mnm=curve.stall_torque * 1e3,
        max_efficiency=curve.max_efficiency,
    )


@app.post("/thermal", response_model=schemas.ThermalResponse, response_model_exclude_none=True)
async def thermal(req: schemas.ThermalRequest) -> schemas.ThermalResponse:
    spec = _load(req.spec)
    power = req.power if req.power is not None else spec.thermal.rated_dissipation
    if power <= 0:
        raise SpecError("no dissipation given: set power or the spec's rated dissipation")
    grid = build_grid(spec, req.resolution.pair())
    field = steady_state_solve(grid, power)
    body = schemas.ThermalResponse(
        power_w=power,
        peak_c=field.peak_c,
        peak_r_mm=field.peak_r * 1e3,
        peak_z_mm=field.peak_z * 1e3,
        peak_region=field.peak_region,
        rise_k=field.peak_c - spec.thermal.ambient_c,
        ambient_c=spec.thermal.ambient_c,
        residual=field.residual,
        boundary_flux_w=field.boundary_flux,
        resolution=list(req.resolution.pair()),
    )
    if req.include_field:
        body = body.model_copy(
            update={
                "r_mm": (grid.r_centers * 1e3).tolist(),
                "z_mm": (grid.z_centers * 1e3).tolist(),
                "temperature_c": field.temperature.tolist(),
            }
        )
    return body


@app.post("/sweep", response_model=schemas.SweepResponse)
async def sweep(req: schemas.SweepRequest) -> schemas.SweepResponse:
    spec = _load(req.spec)
    axes = []
    for a in req.axes:
        if a.values:
            axes.append(SweepAxis(parameter=a.parameter, values=tuple(a.values)))
        else:
            axes.append(
                SweepAxis(
                    parameter=a.parameter,
                    start=a.start if a.start is not None else 0.0,
                    stop=a.stop if a.stop is not None else 0.0,
                    steps=a.steps,
                )
            )
    kwargs = {}
    if req.constraints is not None:
        c = req.constraints
        if c.outer_diameter_limit_mm is not None:
            kwargs["outer_diameter_limit"] = c.outer_diameter_limit_mm * 1e-3
        if c.ripple_limit is not None:
            kwargs["ripple_limit"] = c.ripple_limit
        if c.rating_margin_k is not None:
            kwargs["rating_margin_k"] = c.rating_margin_k
    result = run_sweep(spec, axes, ConstraintSet(**kwargs), thermal_resolution=req.resolution.pair())
    rows = [
        schemas.CandidateRow(
            parameters={k: float(v) for k, v in c.parameters.items()},
            objective_mnm_per_cm3=c.objective,
            feasible=c.feasible,
            marginal=c.marginal,
            constraints=[
                schemas.ConstraintRow(name=r.name, margin=r.margin, unit=r.unit, passed=r.passed)
                for r in c.constraints
            ],
            diagnostic=c.diagnostic or None,
        )
        for c in result.candidates
    ]
    return schemas.SweepResponse(candidates=rows, feasible_count=len(result.feasible))


@app.post("/compare", response_model=schemas.CompareResponse)
async def compare(req: schemas.CompareRequest) -> schemas.CompareResponse:
    spec = _load(req.spec)
    records = tuple(
        MeasurementRecord(
            voltage=r.voltage_v,
            current=r.current_a,
            speed_rpm=r.speed_rpm,
            torque=r.torque_mnm * 1e-3,
        )
        for r in req.records
    )
    emf = None
    if req.emf is not None:
        emf = EmfCapture(
            time_s=np.asarray(req.emf.time_s),
            volts=np.asarray(req.emf.volts),
            speed_rpm=req.emf.speed_rpm,
        )
    thermal_obs = None
    if req.thermal is not None:
        thermal_obs = ThermalObservation(
            dissipation_w=req.thermal.dissipation_w,
            peak_temp_c=req.thermal.peak_temp_c,
            ambient_c=req.thermal.ambient_c,
        )
    per_phase = tuple(req.per_phase_resistances) if req.per_phase_resistances else None
    mset = MeasurementSet(
        records=records,
        emf=emf,
        thermal=thermal_obs,
        per_phase_resistances=per_phase,
        source="http",
    )
    report = compare_to_measurements(
        spec, mset, tolerances=req.tolerance, thermal_resolution=req.resolution.pair()
    )
    rows = [
        schemas.ComparisonRowOut(
            quantity=r.quantity,
            model_value=r.model_value,
            measured_value=r.measured_value,
            relative_error=r.relative_error,
            tolerance=r.tolerance,
            basis=r.basis,  # type: ignore[arg-type]
            informational=r.informational,
            verdict="pass" if r.passed else "fail",
        )
        for r in report.rows
    ]
    return schemas.CompareResponse(passed=report.passed, rows=rows)
