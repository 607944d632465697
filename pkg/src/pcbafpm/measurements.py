"""Dynamometer data ingestion, constant fitting, and model-vs-test reports.

CSV schema (documented here and in the README): the first line is the
versioned unit declaration `# afpm-bench-csv v1`, the second the header
`voltage_v,current_a,speed_rpm,torque_mnm` (an optional trailing
`timestamp_s` column is accepted). Every later non-empty line is one
operating-point record. Back-EMF captures use `# afpm-bench-emf v1` with
columns `time_s,volts`. Malformed rows raise with their 1-based line
number; under the lenient flag they are skipped and reported instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import MeasurementFormatError, SpecInvariantError
from .model import atomic_write_text
from .units import fmt_float, rpm_to_rad_s

CSV_MAGIC = "# afpm-bench-csv v1"
EMF_MAGIC = "# afpm-bench-emf v1"
RECORD_COLUMNS = ("voltage_v", "current_a", "speed_rpm", "torque_mnm")
OPTIONAL_COLUMNS = ("timestamp_s",)


@dataclass(frozen=True)
class MeasurementRecord:
    """One steady operating point off the dyno."""

    voltage: float
    current: float
    speed_rpm: float
    torque: float  # N*m
    timestamp: float | None = None

    def __post_init__(self):
        for name in ("voltage", "current", "speed_rpm", "torque"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise SpecInvariantError("record-finite", f"{name} must be finite, got {v}")
        if self.current < 0:
            raise SpecInvariantError("record-current", "current must be >= 0")


@dataclass(frozen=True)
class EmfCapture:
    """Sampled line-to-line back-EMF at a stated shaft speed."""

    time_s: np.ndarray
    volts: np.ndarray
    speed_rpm: float

    def __post_init__(self):
        if len(self.time_s) != len(self.volts):
            raise SpecInvariantError("emf-shape", "time and voltage arrays differ in length")
        if len(self.time_s) < 8:
            raise SpecInvariantError("emf-samples", "need at least 8 samples")
        if self.speed_rpm <= 0:
            raise SpecInvariantError("emf-speed", "capture speed must be positive")

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.volts)))


@dataclass(frozen=True)
class ThermalObservation:
    dissipation_w: float
    peak_temp_c: float
    ambient_c: float = 25.0

    def __post_init__(self):
        if self.dissipation_w <= 0:
            raise SpecInvariantError("thermal-obs", "dissipation must be positive")


@dataclass(frozen=True)
class MeasurementSet:
    """Everything one bench session produced."""

    records: tuple[MeasurementRecord, ...]
    per_phase_resistances: tuple[float, float, float] | None = None
    per_phase_inductances: tuple[float, float, float] | None = None
    emf: EmfCapture | None = None
    thermal: ThermalObservation | None = None
    skipped_lines: tuple[int, ...] = ()
    source: str = ""

    def __post_init__(self):
        if self.per_phase_resistances is not None and len(self.per_phase_resistances) != 3:
            raise SpecInvariantError("per-phase", "expected exactly 3 phase resistances")
        if self.per_phase_inductances is not None and len(self.per_phase_inductances) != 3:
            raise SpecInvariantError("per-phase", "expected exactly 3 phase inductances")

    @property
    def stall_records(self) -> tuple[MeasurementRecord, ...]:
        return tuple(r for r in self.records if r.speed_rpm == 0.0)


def _read_lines(path: str | Path) -> list[str]:
    text = Path(path).read_text()
    if not text.strip():
        raise MeasurementFormatError(None, f"{path}: file is empty")
    return text.splitlines()


def _parse_header(lines: list[str], magic: str, path: str | Path) -> tuple[list[str], int]:
    """Validate magic + header lines; return (columns, first data line index)."""
    if not lines or lines[0].strip() != magic:
        raise MeasurementFormatError(
            1, f"{path}: missing unit declaration; first line must be exactly {magic!r}"
        )
    if len(lines) < 2 or not lines[1].strip():
        raise MeasurementFormatError(2, f"{path}: missing column header line")
    columns = [c.strip() for c in lines[1].split(",")]
    return columns, 2


def ingest_measurements(path: str | Path, lenient: bool = False) -> MeasurementSet:
    """Load a dyno CSV into a validated MeasurementSet.

    Strict by default: any malformed row aborts with its line number.
    lenient=True records the bad line numbers in skipped_lines and keeps
    going. Header problems are never lenient-skippable.
    """
    lines = _read_lines(path)
    columns, start = _parse_header(lines, CSV_MAGIC, path)

    missing = [c for c in RECORD_COLUMNS if c not in columns]
    if missing:
        raise MeasurementFormatError(2, f"{path}: missing required columns: {', '.join(missing)}")
    unknown = [c for c in columns if c not in RECORD_COLUMNS + OPTIONAL_COLUMNS]
    if unknown:
        raise MeasurementFormatError(2, f"{path}: unknown columns: {', '.join(unknown)}")
    col_index = {c: i for i, c in enumerate(columns)}

    records: list[MeasurementRecord] = []
    skipped: list[int] = []
    for offset, raw in enumerate(lines[start:], start=start + 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) != len(columns):
                raise ValueError(f"expected {len(columns)} fields, got {len(parts)}")
            values = {c: float(parts[i]) for c, i in col_index.items()}
            record = MeasurementRecord(
                voltage=values["voltage_v"],
                current=values["current_a"],
                speed_rpm=values["speed_rpm"],
                torque=values["torque_mnm"] * 1e-3,
                timestamp=values.get("timestamp_s"),
            )
        except (ValueError, SpecInvariantError) as exc:
            if lenient:
                skipped.append(offset)
                continue
            raise MeasurementFormatError(offset, f"{path}: {exc}")
        records.append(record)

    if not records:
        raise MeasurementFormatError(None, f"{path}: no measurement records")
    return MeasurementSet(records=tuple(records), skipped_lines=tuple(skipped), source=str(path))


def ingest_emf_waveform(path: str | Path, speed_rpm: float, lenient: bool = False) -> EmfCapture:
    """Load a sampled back-EMF trace taken at a known shaft speed."""
    lines = _read_lines(path)
    columns, start = _parse_header(lines, EMF_MAGIC, path)
    if columns != ["time_s", "volts"]:
        raise MeasurementFormatError(2, f"{path}: header must be exactly time_s,volts")
    times: list[float] = []
    volts: list[float] = []
    skipped = 0
    for offset, raw in enumerate(lines[start:], start=start + 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            if len(parts) != 2:
                raise ValueError(f"expected 2 fields, got {len(parts)}")
            times.append(float(parts[0]))
            volts.append(float(parts[1]))
        except ValueError as exc:
            if lenient:
                skipped += 1
                continue
            raise MeasurementFormatError(offset, f"{path}: {exc}")
    if len(times) < 8:
        raise MeasurementFormatError(None, f"{path}: need at least 8 samples, got {len(times)}")
    return EmfCapture(time_s=np.array(times), volts=np.array(volts), speed_rpm=speed_rpm)


# --------------------------------------------------------------------------
# Constant fitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Motor constants recovered from bench records.

    kt comes from the least-squares torque/current slope; the intercept is
    the friction torque estimate (shaft torque = kt*I - T_friction). ke uses
    the EMF capture when one exists, else the electrical model V = ke*w + R*I
    fitted jointly. R prefers locked-rotor rows.
    """

    kt: float
    ke: float             # best estimate; an EMF capture wins when present
    ke_records: float     # the dyno-records route, kept for speed-constant rows
    terminal_resistance: float
    friction_torque: float
    residual_norm: float
    n_records: int
    r_source: str  # "stall-rows" | "joint-fit"
    ke_source: str  # "emf-capture" | "speed-voltage" | "joint-fit" | "torque-slope"

    @property
    def kt_mnm_per_a(self) -> float:
        return self.kt * 1e3


def fit_constants(data: MeasurementSet) -> FitResult:
    """Invert bench records into kt, ke, R and a friction estimate."""
    records = data.records
    if len(records) < 2:
        raise SpecInvariantError("fit-records", f"need at least 2 records, got {len(records)}")
    currents = np.array([r.current for r in records])
    torques = np.array([r.torque for r in records])
    volts = np.array([r.voltage for r in records])
    speeds = np.array([rpm_to_rad_s(r.speed_rpm) for r in records])

    if np.ptp(currents) <= 0:
        raise SpecInvariantError("fit-rank", "all records share one current; torque slope is undetermined")
    kt, neg_friction = np.polyfit(currents, torques, 1)
    kt = float(kt)
    friction = float(-neg_friction)
    residual = float(np.linalg.norm(torques - (kt * currents - friction)))
    if kt <= 0:
        raise SpecInvariantError("fit-slope", f"torque/current slope must be positive, got {kt:.3e}")

    stall = [r for r in records if r.speed_rpm == 0.0 and r.current > 0]
    r_source = "stall-rows"
    if stall:
        terminal_r = float(np.mean([r.voltage / r.current for r in stall]))
        ke = kt
        ke_source = "torque-slope"
        moving = [(rpm_to_rad_s(r.speed_rpm), r.voltage, r.current) for r in records if r.speed_rpm > 0]
        if moving:
            w = np.array([m[0] for m in moving])
            v = np.array([m[1] for m in moving])
            i = np.array([m[2] for m in moving])
            ke = float(np.mean((v - i * terminal_r) / w))
            ke_source = "speed-voltage"
    else:
        # V = ke*w + R*I solved jointly over all records
        design = np.column_stack([speeds, currents])
        if np.linalg.matrix_rank(design) < 2:
            raise SpecInvariantError("fit-rank", "records cannot separate ke from R (need speed and current variation)")
        coef, *_ = np.linalg.lstsq(design, volts, rcond=None)
        ke, terminal_r = float(coef[0]), float(coef[1])
        r_source = "joint-fit"
        ke_source = "joint-fit"
    if terminal_r <= 0:
        raise SpecInvariantError("fit-resistance", f"fitted resistance must be positive, got {terminal_r:.3e}")

    ke_records = float(ke)
    if data.emf is not None:
        ke = data.emf.peak / rpm_to_rad_s(data.emf.speed_rpm)
        ke_source = "emf-capture"

    return FitResult(
        kt=kt,
        ke=float(ke),
        ke_records=ke_records,
        terminal_resistance=terminal_r,
        friction_torque=friction,
        residual_norm=residual,
        n_records=len(records),
        r_source=r_source,
        ke_source=ke_source,
    )


# --------------------------------------------------------------------------
# Comparison reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    model_value: float
    measured_value: float
    relative_error: float
    tolerance: float
    passed: bool
    basis: str = "measured"       # denominator choice for the relative error
    informational: bool = False   # excluded from the overall verdict


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows if not r.informational)

    def row(self, quantity: str) -> ComparisonRow:
        for r in self.rows:
            if r.quantity == quantity:
                return r
        raise KeyError(quantity)

    def to_csv(self, path: str | Path) -> None:
        lines = ["quantity,model_value,measured_value,relative_error,tolerance,basis,informational,verdict"]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        r.quantity,
                        fmt_float(r.model_value),
                        fmt_float(r.measured_value),
                        fmt_float(r.relative_error),
                        fmt_float(r.tolerance),
                        r.basis,
                        str(r.informational).lower(),
                        "pass" if r.passed else "fail",
                    ]
                )
            )
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "rows": [
                {
                    "quantity": r.quantity,
                    "model_value": r.model_value,
                    "measured_value": r.measured_value,
                    "relative_error": r.relative_error,
                    "tolerance": r.tolerance,
                    "basis": r.basis,
                    "informational": r.informational,
                    "verdict": "pass" if r.passed else "fail",
                }
                for r in self.rows
            ],
        }

    def to_json(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")


def relative_error(model: float, measured: float, basis: str = "measured") -> float:
    """|model - measured| over the chosen denominator.

    The default measured basis suits ordinary rows; quantities whose
    published tolerance is phrased against the prediction (the EMF check)
    use the model basis. Zero denominators fall back to the other side, and
    0/0 is a clean 0.
    """
    if basis not in ("measured", "model"):
        raise SpecInvariantError("error-basis", f"unknown basis {basis!r}")
    diff = abs(model - measured)
    denom = abs(measured) if basis == "measured" else abs(model)
    if denom == 0.0:
        denom = abs(model) if basis == "measured" else abs(measured)
    if denom == 0.0:
        return 0.0
    return diff / denom


def compare(
    model: Mapping[str, float],
    measured: Mapping[str, float],
    tolerances: float | Mapping[str, float] = 0.05,
    bases: Mapping[str, str] | None = None,
    informational: frozenset[str] | set[str] = frozenset(),
) -> ComparisonReport:
    """Per-quantity relative errors over the overlapping keys of two dicts.

    tolerances may be a single fraction or a per-quantity map; bases
    overrides the denominator convention per quantity.
    """
    bases = dict(bases or {})
    shared = sorted(set(model) & set(measured))
    if not shared:
        raise SpecInvariantError("compare-overlap", "model and measurement share no quantities")
    rows = []
    for key in shared:
        tol = tolerances[key] if isinstance(tolerances, Mapping) else float(tolerances)
        basis = bases.get(key, "measured")
        err = relative_error(float(model[key]), float(measured[key]), basis)
        rows.append(
            ComparisonRow(
                quantity=key,
                model_value=float(model[key]),
                measured_value=float(measured[key]),
                relative_error=err,
                tolerance=tol,
                passed=err <= tol,
                basis=basis,
                informational=key in informational,
            )
        )
    return ComparisonReport(rows=tuple(rows))
