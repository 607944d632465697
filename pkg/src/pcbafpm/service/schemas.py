"""Request/response models for the HTTP service.

Requests carry the motor spec inline, either as the parsed tree (dict) or
as the spec file text, so the service stays stateless. Response models
mirror the library's report dataclasses closely enough for clients to
consume without knowing the Python API.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


SpecPayload = dict[str, Any] | str


class Resolution(_Strict):
    nr: int = Field(64, ge=3, le=1024)
    nz: int = Field(64, ge=3, le=1024)

    def pair(self) -> tuple[int, int]:
        return (self.nr, self.nz)


class AnalyzeRequest(_Strict):
    spec: SpecPayload
    resolution: Resolution = Resolution()


class CurvesRequest(_Strict):
    spec: SpecPayload
    voltage: float = Field(gt=0)
    duty: float = Field(1.0, gt=0, le=1.0)
    points: int = Field(200, ge=2, le=100_000)


class CurvesResponse(_Strict):
    voltage_v: float
    torque_mnm: list[float]
    speed_rpm: list[float]
    current_a: list[float]
    input_power_w: list[float]
    output_power_w: list[float]
    efficiency: list[float]
    no_load_speed_rpm: float
    stall_torque_mnm: float
    max_efficiency: float


class ThermalRequest(_Strict):
    spec: SpecPayload
    power: float | None = Field(None, gt=0)
    resolution: Resolution = Resolution(nr=128, nz=128)
    include_field: bool = False


class ThermalResponse(_Strict):
    power_w: float
    peak_c: float
    peak_r_mm: float
    peak_z_mm: float
    peak_region: str
    rise_k: float
    ambient_c: float
    residual: float
    boundary_flux_w: float
    resolution: list[int]
    r_mm: list[float] | None = None
    z_mm: list[float] | None = None
    temperature_c: list[list[float]] | None = None


class SweepAxisSpec(_Strict):
    parameter: str
    start: float | None = None
    stop: float | None = None
    steps: int = 0
    values: list[float] | None = None


class ConstraintOverrides(_Strict):
    outer_diameter_limit_mm: float | None = Field(None, gt=0)
    ripple_limit: float | None = Field(None, gt=0)
    rating_margin_k: float | None = None


class SweepRequest(_Strict):
    spec: SpecPayload
    axes: list[SweepAxisSpec] = Field(default_factory=list, max_length=4)
    constraints: ConstraintOverrides | None = None
    resolution: Resolution = Resolution(nr=16, nz=16)


class ConstraintRow(_Strict):
    name: str
    margin: float
    unit: str
    passed: bool


class CandidateRow(_Strict):
    parameters: dict[str, float]
    objective_mnm_per_cm3: float
    feasible: bool
    marginal: bool
    constraints: list[ConstraintRow]
    diagnostic: str | None = None


class SweepResponse(_Strict):
    candidates: list[CandidateRow]
    feasible_count: int


class MeasurementRecordIn(_Strict):
    voltage_v: float
    current_a: float = Field(ge=0)
    speed_rpm: float
    torque_mnm: float


class EmfCaptureIn(_Strict):
    time_s: list[float]
    volts: list[float]
    speed_rpm: float = Field(gt=0)


class ThermalObservationIn(_Strict):
    dissipation_w: float = Field(gt=0)
    peak_temp_c: float
    ambient_c: float = 25.0


class CompareRequest(_Strict):
    spec: SpecPayload
    records: list[MeasurementRecordIn] = Field(default_factory=list)
    emf: EmfCaptureIn | None = None
    thermal: ThermalObservationIn | None = None
    per_phase_resistances: list[float] | None = Field(None, min_length=3, max_length=3)
    tolerance: float = Field(0.05, gt=0)
    resolution: Resolution = Resolution()


class ComparisonRowOut(_Strict):
    quantity: str
    model_value: float
    measured_value: float
    relative_error: float
    tolerance: float
    basis: Literal["measured", "model"]
    informational: bool
    verdict: Literal["pass", "fail"]


class CompareResponse(_Strict):
    passed: bool
    rows: list[ComparisonRowOut]


class HealthResponse(_Strict):
    status: Literal["ok"]
    version: str


class ErrorDetail(_Strict):
    type: str
    message: str
