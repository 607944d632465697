"""Constraint-based design evaluation and factorial parameter sweeps.

A candidate is a full motor spec; evaluation runs the magnetic circuit,
constants, a coarse thermal solve, and the ripple synthesis, then scores
stall torque density against the envelope cylinder (pi * (OD/2)^2 * overall
length). Constraints report signed margins in their native units; ranking
and the "marginal" flag use margins normalized by their constraint scale so
different units are comparable.
"""

from __future__ import annotations

import copy
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .electromech import (
    MotorConstants,
    build_constants,
    ripple_for_spec,
    stall_analysis_for_spec,
)
from .errors import SolverError, SpecError, SpecFormatError, SpecInvariantError
from .magnetics import MagneticCircuitResult, flux_linkage_constant, solve_magnetic_circuit
from .model import MotorSpec, active_volume, atomic_write_text, load_spec, spec_to_tree, write_spec
from .thermal import build_grid, steady_state_solve
from .units import fmt_float, rpm_to_rad_s

SWEEP_CANDIDATE_CAP = 10_000
MAX_SWEEP_AXES = 4


@dataclass(frozen=True)
class ConstraintSet:
    """Feasibility bounds applied to every candidate.

    outer_diameter_limit and ripple_limit are absolute bounds; the voltage
    check uses the candidate's own low-end nominal voltage at its nominal
    operating point; the thermal check compares the steady peak at the
    candidate's rated dissipation against the cooler material rating minus
    rating_margin_k (None defers to the spec's own margin).
    """

    outer_diameter_limit: float = 20.0e-3
    ripple_limit: float = 0.06
    rating_margin_k: float | None = None
    marginal_epsilon: float = 0.02

    def __post_init__(self):
        if self.outer_diameter_limit <= 0:
            raise SpecInvariantError("constraint-od", "outer diameter limit must be positive")
        if self.ripple_limit <= 0:
            raise SpecInvariantError("constraint-ripple", "ripple limit must be positive")
        if not 0 < self.marginal_epsilon < 1:
            raise SpecInvariantError("constraint-epsilon", "marginal epsilon must be in (0, 1)")


@dataclass(frozen=True)
class ConstraintResult:
    name: str
    margin: float       # signed, native unit
    normalized: float   # margin / constraint scale
    unit: str
    passed: bool


@dataclass(frozen=True)
class DesignCandidate:
    """One evaluated point of the design space."""

    spec: MotorSpec | None
    parameters: dict[str, float]
    objective: float  # stall torque density, mNm/cm^3
    constraints: tuple[ConstraintResult, ...]
    feasible: bool
    marginal: bool
    constants: MotorConstants | None = None
    circuit: MagneticCircuitResult | None = None
    thermal_summary: dict | None = None
    diagnostic: str = ""

    @property
    def min_normalized_margin(self) -> float:
        if not self.constraints:
            return -math.inf
        return min(c.normalized for c in self.constraints)


def voltage_headroom(
    constants: MotorConstants, speed_rpm: float, current: float, v_nominal: float
) -> float:
    """Volts to spare after back-EMF and resistive drop at an operating point.

    margin = v_nominal - (ke*w + I*R). Strictly decreasing in both speed and
    current; equals v_nominal at standstill with no current.
    """
    if speed_rpm < 0 or current < 0:
        raise SpecInvariantError("headroom-operating", "operating point must be nonnegative")
    w = rpm_to_rad_s(speed_rpm)
    return v_nominal - (constants.ke * w + current * constants.terminal_resistance)


def _thermal_limit_c(spec: MotorSpec, constraints: ConstraintSet) -> float:
    margin = constraints.rating_margin_k
    if margin is None:
        margin = spec.thermal.rating_margin_k
    m = spec.materials
    return min(m.insulation_rating_c, m.magnet_rating_c) - margin


def evaluate_candidate(
    spec: MotorSpec,
    constraints: ConstraintSet | None = None,
    thermal_resolution: tuple[int, int] = (16, 16),
    parameters: dict[str, float] | None = None,
) -> DesignCandidate:
    """Score one spec against the constraint set.

    Solver non-convergence is folded into the result as an infeasible
    candidate carrying the diagnostic, so sweeps survive bad corners of the
    space. The coarse thermal resolution trades accuracy for speed; the
    resolution used is recorded in thermal_summary and near-zero margins are
    flagged marginal instead of silently trusted.
    """
    constraints = constraints or ConstraintSet()
    parameters = dict(parameters or {})
    try:
        circuit = solve_magnetic_circuit(spec)
        emf = flux_linkage_constant(spec, circuit)
        constants = build_constants(spec, emf, temperature_c=20.0)

        results: list[ConstraintResult] = []

        b_core = max(circuit.core_flux_density_teeth, circuit.core_flux_density_yoke)
        b_sat = spec.materials.core_saturation
        results.append(
            ConstraintResult("saturation", b_sat - b_core, (b_sat - b_core) / b_sat, "T", b_core <= b_sat)
        )

        v_nom = spec.electrical.nominal_voltage_min
        head = voltage_headroom(
            constants, spec.electrical.nominal_speed_rpm, spec.electrical.nominal_current, v_nom
        )
        results.append(ConstraintResult("voltage_headroom", head, head / v_nom, "V", head >= 0))

        limit_c = _thermal_limit_c(spec, constraints)
        ambient = spec.thermal.ambient_c
        power = spec.thermal.rated_dissipation
        if power > 0:
            grid = build_grid(spec, thermal_resolution)
            field_ = steady_state_solve(grid, power)
            peak_c = field_.peak_c
        else:
            peak_c = ambient
        t_scale = max(limit_c - ambient, 1e-9)
        results.append(
            ConstraintResult(
                "thermal", limit_c - peak_c, (limit_c - peak_c) / t_scale, "K", peak_c <= limit_c
            )
        )
        thermal_summary = {
            "peak_c": peak_c,
            "power_w": power,
            "limit_c": limit_c,
            "resolution": list(thermal_resolution),
        }

        nominal_torque = constants.kt * spec.electrical.nominal_current
        if spec.ripple.harmonics:
            ripple = ripple_for_spec(spec, nominal_torque).ripple_fraction
        else:
            ripple = 0.0
        results.append(
            ConstraintResult(
                "ripple",
                constraints.ripple_limit - ripple,
                (constraints.ripple_limit - ripple) / constraints.ripple_limit,
                "fraction",
                ripple <= constraints.ripple_limit,
            )
        )

        od = spec.geometry.outer_diameter
        od_lim = constraints.outer_diameter_limit
        results.append(
            ConstraintResult("outer_diameter", od_lim - od, (od_lim - od) / od_lim, "m", od <= od_lim)
        )

        stall = stall_analysis_for_spec(spec, constants)
        envelope_cm3 = active_volume(spec).envelope_cm3
        objective = (stall.torque_cold * 1e3) / envelope_cm3  # mNm per cm^3

        feasible = all(r.passed for r in results)
        min_norm = min(r.normalized for r in results)
        marginal = feasible and min_norm < constraints.marginal_epsilon
        return DesignCandidate(
            spec=spec,
            parameters=parameters,
            objective=objective,
            constraints=tuple(results),
            feasible=feasible,
            marginal=marginal,
            constants=constants,
            circuit=circuit,
            thermal_summary=thermal_summary,
        )
    except SolverError as exc:
        return DesignCandidate(
            spec=spec,
            parameters=parameters,
            objective=0.0,
            constraints=(),
            feasible=False,
            marginal=False,
            diagnostic=f"solver: {exc}",
        )


def thermal_resolution_delta(
    spec: MotorSpec,
    power: float | None = None,
    coarse: tuple[int, int] = (16, 16),
    fine: tuple[int, int] = (64, 64),
) -> float:
    """Peak-temperature gap between the sweep resolution and a fine solve.

    Quantifies what the coarse feasibility check is giving up; sweeps use it
    to justify the marginal-candidate flag.
    """
    if power is None:
        power = spec.thermal.rated_dissipation
    if power <= 0:
        return 0.0
    peak_coarse = steady_state_solve(build_grid(spec, coarse), power).peak_c
    peak_fine = steady_state_solve(build_grid(spec, fine), power).peak_c
    return abs(peak_fine - peak_coarse)


# --------------------------------------------------------------------------
# Factorial sweep
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: a dotted path into the spec file tree, in file
    units (e.g. "winding.trace_width_mm"). steps = 0 keeps the base value."""

    parameter: str
    start: float = 0.0
    stop: float = 0.0
    steps: int = 0
    values: tuple[float, ...] = field(default=())

    def resolve(self, base_value: float) -> tuple[float, ...]:
        if self.values:
            return self.values
        if self.steps <= 0:
            return (base_value,)
        if self.steps == 1:
            return (self.start,)
        return tuple(np.linspace(self.start, self.stop, self.steps).tolist())


def parse_axis(text: str) -> SweepAxis:
    """Parse "path=start:stop:steps" or "path=v1,v2,v3" axis syntax."""
    if "=" not in text:
        raise SpecFormatError("axis must look like path=start:stop:steps or path=v1,v2,...", path=text)
    path, _, rhs = text.partition("=")
    path = path.strip()
    rhs = rhs.strip()
    if not path or not rhs:
        raise SpecFormatError("axis needs both a parameter path and values", path=text)
    try:
        if ":" in rhs:
            parts = rhs.split(":")
            if len(parts) != 3:
                raise ValueError("range form needs start:stop:steps")
            start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
            if steps < 0:
                raise ValueError("steps must be >= 0")
            return SweepAxis(parameter=path, start=start, stop=stop, steps=steps)
        values = tuple(float(v) for v in rhs.split(",") if v.strip())
        if not values:
            raise ValueError("no values given")
        return SweepAxis(parameter=path, values=values)
    except ValueError as exc:
        raise SpecFormatError(f"bad axis values: {exc}", path=text)


def _tree_get(tree: dict, path: str) -> float:
    node = tree
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise SpecFormatError("parameter path not found in spec tree", path=path)
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SpecFormatError("parameter path must point at a number", path=path)
    return float(node)


def _tree_set(tree: dict, path: str, value: float) -> None:
    parts = path.split(".")
    node = tree
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise SpecFormatError("parameter path not found in spec tree", path=path)
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise SpecFormatError("parameter path not found in spec tree", path=path)
    # integer-typed fields (layer counts, pole pairs) stay integers
    if isinstance(node[leaf], int) and not isinstance(node[leaf], bool):
        if abs(value - round(value)) > 1e-9:
            raise SpecFormatError(f"parameter takes integers, got {value}", path=path)
        node[leaf] = int(round(value))
    else:
        node[leaf] = float(value)


@dataclass(frozen=True)
class SweepResult:
    """Ranked factorial sweep output."""

    axes: tuple[SweepAxis, ...]
    candidates: tuple[DesignCandidate, ...]

    @property
    def feasible(self) -> tuple[DesignCandidate, ...]:
        return tuple(c for c in self.candidates if c.feasible)

    @property
    def best(self) -> DesignCandidate | None:
        feas = self.feasible
        return feas[0] if feas else None

    def _constraint_names(self) -> list[str]:
        for c in self.candidates:
            if c.constraints:
                return [r.name for r in c.constraints]
        return []

    def to_csv(self, path: str | Path) -> None:
        names = self._constraint_names()
        header = (
            [a.parameter for a in self.axes]
            + ["objective_mnm_per_cm3", "feasible", "marginal"]
            + [f"margin_{n}" for n in names]
            + ["diagnostic"]
        )
        lines = [",".join(header)]
        for c in self.candidates:
            row = [fmt_float(c.parameters[a.parameter]) for a in self.axes]
            row += [fmt_float(c.objective), str(c.feasible).lower(), str(c.marginal).lower()]
            by_name = {r.name: r for r in c.constraints}
            for n in names:
                row.append(fmt_float(by_name[n].margin) if n in by_name else "")
            row.append(c.diagnostic.replace(",", ";"))
            lines.append(",".join(row))
        atomic_write_text(path, "\n".join(lines) + "\n")

    def to_json_dict(self) -> dict:
        return {
            "axes": [
                {"parameter": a.parameter, "values": [float(v) for v in a.resolve(math.nan)]}
                if a.values
                else {"parameter": a.parameter, "start": a.start, "stop": a.stop, "steps": a.steps}
                for a in self.axes
            ],
            "candidates": [
                {
                    "parameters": {k: float(v) for k, v in c.parameters.items()},
                    "objective_mnm_per_cm3": c.objective,
                    "feasible": c.feasible,
                    "marginal": c.marginal,
                    "constraints": [
                        {
                            "name": r.name,
                            "margin": r.margin,
                            "unit": r.unit,
                            "passed": r.passed,
                        }
                        for r in c.constraints
                    ],
                    "diagnostic": c.diagnostic or None,
                }
                for c in self.candidates
            ],
        }

    def to_json(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    def write_top_specs(self, out_dir: str | Path, k: int = 3) -> list[Path]:
        """Emit the top-k feasible candidates as full spec files."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for rank, cand in enumerate(self.feasible[:k], start=1):
            path = out / f"candidate_{rank:02d}.spec"
            write_spec(cand.spec, path)
            written.append(path)
        return written


def _rank_key(axes: tuple[SweepAxis, ...]):
    def key(cand: DesignCandidate):
        lex = tuple(cand.parameters[a.parameter] for a in axes)
        return (
            0 if cand.feasible else 1,
            -cand.objective,
            -cand.min_normalized_margin,
            lex,
        )

    return key


def sweep(
    base: MotorSpec,
    axes: list[SweepAxis],
    constraints: ConstraintSet | None = None,
    thermal_resolution: tuple[int, int] = (16, 16),
    candidate_cap: int = SWEEP_CANDIDATE_CAP,
    workers: int | None = None,
) -> SweepResult:
    """Full factorial sweep over up to 4 spec-tree parameters.

    Candidates evaluate independently (thread pool) and are then ranked
    deterministically: feasible first by objective descending, ties broken
    by larger minimum normalized margin, then by lexicographic parameter
    order. Candidates whose spec fails validation at a grid point become
    infeasible rows carrying the diagnostic. An empty feasible set is a
    valid result, not an error.
    """
    constraints = constraints or ConstraintSet()
    if len(axes) > MAX_SWEEP_AXES:
        raise SpecInvariantError("sweep-axes", f"at most {MAX_SWEEP_AXES} axes, got {len(axes)}")
    base_tree = spec_to_tree(base)

    resolved: list[tuple[str, tuple[float, ...]]] = []
    for axis in axes:
        base_value = _tree_get(base_tree, axis.parameter)
        resolved.append((axis.parameter, axis.resolve(base_value)))

    total = math.prod(len(v) for _, v in resolved) if resolved else 1
    if total > candidate_cap:
        raise SpecInvariantError(
            "sweep-cap", f"sweep would evaluate {total} candidates, cap is {candidate_cap}"
        )

    combos: list[dict[str, float]] = [{}]
    for parameter, values in resolved:
        combos = [dict(c, **{parameter: v}) for c in combos for v in values]

    def build_and_eval(params: dict[str, float]) -> DesignCandidate:
        tree = copy.deepcopy(base_tree)
        for p, v in params.items():
            _tree_set(tree, p, v)
        try:
            spec = load_spec(tree)
        except SpecError as exc:
            return DesignCandidate(
                spec=None,
                parameters=params,
                objective=0.0,
                constraints=(),
                feasible=False,
                marginal=False,
                diagnostic=f"spec: {exc}",
            )
        return evaluate_candidate(
            spec, constraints, thermal_resolution=thermal_resolution, parameters=params
        )

    if workers is None:
        workers = min(8, len(combos)) or 1
    if workers <= 1 or len(combos) <= 1:
        evaluated = [build_and_eval(c) for c in combos]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(build_and_eval, combos))

    ranked = tuple(sorted(evaluated, key=_rank_key(tuple(axes))))
    return SweepResult(axes=tuple(axes), candidates=ranked)
