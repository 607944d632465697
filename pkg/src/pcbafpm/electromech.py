"""DC-equivalent machine constants, winding resistance, performance curves,
stall behavior, torque ripple, and phase unbalance.

The steady model is the classic pair V = ke*w + I*R, T_em = kt*I with
kt = ke in SI. Shaft parasitics are a constant friction torque plus an
optional constant-power drag (active at w > 0), so the power accounting

    V*I - T*w = I^2*R + T_friction*w + P_fixed

holds exactly at every generated curve point (the fixed term vanishes at
standstill by convention: constant-power parasitics are rotational).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SpecInvariantError
from .magnetics import BackEmfModel
from .model import LossModel, MotorGeometry, MotorSpec, atomic_write_text
from .units import fmt_float, rad_s_to_rpm

REFERENCE_TEMPERATURE_C = 20.0


@dataclass(frozen=True)
class WindingResistance:
    """Resistance composition at one temperature (ohms, meters)."""

    phase: float
    terminal: float
    turn_length: float
    branch_length: float
    trace_cross_section: float
    temperature_c: float


def copper_resistivity(spec: MotorSpec, temperature_c: float) -> float:
    m = spec.materials
    return m.copper_resistivity_20c * (1.0 + m.copper_alpha * (temperature_c - REFERENCE_TEMPERATURE_C))


def winding_resistance(spec: MotorSpec, temperature_c: float = REFERENCE_TEMPERATURE_C) -> WindingResistance:
    """Compose trace resistance from the spiral-turn mean perimeter.

    One turn is a racetrack around a virtual slot at mean radius: two radial
    legs plus two circumferential ends of one slot pitch, scaled by the
    end-connection allowance. A coil stacks turns_per_layer over the layers
    of one module; one branch strings modules_in_series coils; branches sit
    in parallel; the wye terminal pair sees two phases in series.
    """
    g = spec.geometry
    w = spec.winding
    slot_pitch_arc = 2.0 * math.pi * g.mean_radius / g.virtual_slots
    turn_length = w.end_allowance * 2.0 * (g.radial_band + slot_pitch_arc)
    cross_section = w.trace_width * w.copper_thickness
    turns_per_branch = w.turns_per_layer_per_coil * w.layers_per_module * w.modules_in_series
    branch_length = turn_length * turns_per_branch
    rho = copper_resistivity(spec, temperature_c)
    r_branch = rho * branch_length / cross_section
    r_phase = r_branch / w.parallel_branches
    return WindingResistance(
        phase=r_phase,
        terminal=2.0 * r_phase,
        turn_length=turn_length,
        branch_length=branch_length,
        trace_cross_section=cross_section,
        temperature_c=temperature_c,
    )


@dataclass(frozen=True)
class MotorConstants:
    """DC-equivalent constants at one temperature.

    kt (Nm/A) and ke (V*s/rad) are the same number in SI; the speed constant
    (rpm/V) is its reciprocal in workshop units. terminal_inductance may be
    None when the source (e.g. a bench fit) cannot provide it.
    """

    kt: float
    ke: float
    terminal_resistance: float
    temperature_c: float
    terminal_inductance: float | None = None

    def __post_init__(self):
        if self.kt <= 0 or self.ke <= 0:
            raise SpecInvariantError("constants-positive", "kt and ke must be positive")
        if abs(self.kt - self.ke) > 1e-9 * max(self.kt, self.ke):
            raise SpecInvariantError("kt-ke-reciprocity", "kt and ke must agree in SI units")
        if self.terminal_resistance <= 0:
            raise SpecInvariantError("resistance-positive", "terminal resistance must be positive")
        if self.terminal_inductance is not None and self.terminal_inductance <= 0:
            raise SpecInvariantError("inductance-positive", "terminal inductance must be positive")

    @property
    def speed_constant_rpm_per_v(self) -> float:
        return 60.0 / (2.0 * math.pi * self.ke)

    @property
    def kt_mnm_per_a(self) -> float:
        return self.kt * 1e3


def build_constants(
    spec: MotorSpec,
    emf: BackEmfModel,
    temperature_c: float = REFERENCE_TEMPERATURE_C,
) -> MotorConstants:
    """Constants at temperature: magnet tempco scales ke/kt, resistivity law
    scales resistance. dc_link_factor maps the waveform constant to the
    dynamometer-equivalent value."""
    m = spec.materials
    ke20 = emf.ke_phase * spec.magnetics.dc_link_factor
    scale = 1.0 + m.magnet_temp_coeff * (temperature_c - REFERENCE_TEMPERATURE_C)
    if scale <= 0:
        raise SpecInvariantError("magnet-derate", "magnet temperature coefficient drives ke to zero")
    ke = ke20 * scale
    r = winding_resistance(spec, temperature_c).terminal
    return MotorConstants(
        kt=ke,
        ke=ke,
        terminal_resistance=r,
        temperature_c=temperature_c,
        terminal_inductance=spec.electrical.terminal_inductance,
    )


@dataclass(frozen=True)
class PerformanceCurve:
    """Steady operating points from no load to stall at one effective voltage.

    Arrays are index-aligned; torque ascends strictly, speed never increases.
    Efficiency is 0 at both endpoints by convention (no output power).
    """

    voltage: float
    torque: np.ndarray        # Nm, shaft
    speed: np.ndarray         # rad/s
    current: np.ndarray       # A
    input_power: np.ndarray   # W, V*I
    output_power: np.ndarray  # W, T*w
    efficiency: np.ndarray
    loss: LossModel

    @property
    def speed_rpm(self) -> np.ndarray:
        return self.speed * (60.0 / (2.0 * math.pi))

    @property
    def no_load_speed(self) -> float:
        return float(self.speed[0])

    @property
    def stall_torque(self) -> float:
        return float(self.torque[-1])

    @property
    def stall_current(self) -> float:
        return float(self.current[-1])

    @property
    def max_efficiency(self) -> float:
        return float(np.max(self.efficiency))

    @property
    def max_efficiency_torque(self) -> float:
        return float(self.torque[int(np.argmax(self.efficiency))])

    def to_csv(self, path: str | Path) -> None:
        rows = ["torque_mnm,speed_rpm,current_a,input_power_w,output_power_w,efficiency"]
        rpm = self.speed_rpm
        for i in range(len(self.torque)):
            rows.append(
                ",".join(
                    fmt_float(v)
                    for v in (
                        float(self.torque[i] * 1e3),
                        float(rpm[i]),
                        float(self.current[i]),
                        float(self.input_power[i]),
                        float(self.output_power[i]),
                        float(self.efficiency[i]),
                    )
                )
            )
        atomic_write_text(path, "\n".join(rows) + "\n")


def performance_curve(
    constants: MotorConstants,
    supply_voltage: float,
    duty: float = 1.0,
    n_points: int = 200,
    loss: LossModel | None = None,
) -> PerformanceCurve:
    """Generate the torque-indexed steady curve at V_eff = supply * duty.

    With a constant-power drag the steady branch ends where the drag can no
    longer be delivered; the final grid point is always the true stall point
    (w = 0, I = V/R) where rotational parasitics vanish.
    """
    if supply_voltage <= 0:
        raise SpecInvariantError("voltage-positive", "supply voltage must be positive")
    if not 0 < duty <= 1.0:
        raise SpecInvariantError("duty-range", "duty must be in (0, 1]")
    if n_points < 2:
        raise SpecInvariantError("points", "need at least 2 curve points")
    loss = loss or LossModel()
    v = supply_voltage * duty
    kt = constants.kt
    ke = constants.ke
    r = constants.terminal_resistance

    i_stall = v / r
    t_stall = kt * i_stall - loss.friction_torque
    if t_stall <= 0:
        raise SpecInvariantError("friction-vs-stall", "friction torque exceeds stall capability")

    if loss.fixed_loss > 0:
        # Steady branch exists while the discriminant of
        # ke*w^2 - b*w + R*Pf/kt = 0 stays positive (b = V - R*(T+Tf)/kt).
        b_min = 2.0 * math.sqrt(ke * r * loss.fixed_loss / kt)
        t_branch_end = kt * (v - b_min) / r - loss.friction_torque
        if t_branch_end <= 0:
            raise SpecInvariantError("fixed-loss", "fixed loss exceeds deliverable power at every speed")
        interior = np.linspace(0.0, t_branch_end, n_points - 1, endpoint=False)
    else:
        interior = np.linspace(0.0, t_stall, n_points)[:-1]

    torque = np.append(interior, t_stall)
    speed = np.empty_like(torque)
    current = np.empty_like(torque)
    for idx, t_shaft in enumerate(torque[:-1]):
        b = v - r * (t_shaft + loss.friction_torque) / kt
        if loss.fixed_loss > 0:
            disc = b * b - 4.0 * ke * r * loss.fixed_loss / kt
            w = (b + math.sqrt(max(disc, 0.0))) / (2.0 * ke)
        else:
            w = b / ke
        w = max(w, 0.0)
        speed[idx] = w
        drag = loss.fixed_loss / w if (loss.fixed_loss > 0 and w > 0) else 0.0
        current[idx] = (t_shaft + loss.friction_torque + drag) / kt
    speed[-1] = 0.0
    current[-1] = i_stall

    input_power = v * current
    output_power = torque * speed
    with np.errstate(divide="ignore", invalid="ignore"):
        efficiency = np.where(input_power > 0, output_power / input_power, 0.0)
    efficiency = np.where(output_power <= 0, 0.0, efficiency)
    return PerformanceCurve(
        voltage=v,
        torque=torque,
        speed=speed,
        current=current,
        input_power=input_power,
        output_power=output_power,
        efficiency=efficiency,
        loss=loss,
    )


@dataclass(frozen=True)
class StallReport:
    """Locked-rotor behavior at one drive voltage.

    ideal torque is kt*I; above the saturation current threshold the core
    no longer carries the full armature flux and the explicit derating
    factor applies. The factor is surfaced, never silently folded in.
    """

    voltage: float
    stall_current: float
    ideal_torque_cold: float
    torque_cold: float
    derating_factor_applied: float
    stall_current_hot: float | None = None
    torque_hot: float | None = None
    hot_temperature_c: float | None = None


def stall_analysis(
    constants_cold: MotorConstants,
    voltage: float,
    derating_factor: float = 1.0,
    derating_threshold: float = math.inf,
    constants_hot: MotorConstants | None = None,
) -> StallReport:
    """Locked-rotor currents and torques, cold and optionally hot."""
    if voltage < 0:
        raise SpecInvariantError("voltage-range", "voltage must be >= 0")
    i_stall = voltage / constants_cold.terminal_resistance
    ideal = constants_cold.kt * i_stall
    factor = derating_factor if i_stall > derating_threshold else 1.0
    report = {
        "voltage": voltage,
        "stall_current": i_stall,
        "ideal_torque_cold": ideal,
        "torque_cold": ideal * factor,
        "derating_factor_applied": factor,
    }
    if constants_hot is not None:
        i_hot = voltage / constants_hot.terminal_resistance
        factor_hot = derating_factor if i_hot > derating_threshold else 1.0
        report.update(
            stall_current_hot=i_hot,
            torque_hot=constants_hot.kt * i_hot * factor_hot,
            hot_temperature_c=constants_hot.temperature_c,
        )
    return StallReport(**report)


def stall_analysis_for_spec(
    spec: MotorSpec,
    constants_cold: MotorConstants,
    voltage: float | None = None,
    constants_hot: MotorConstants | None = None,
) -> StallReport:
    """stall_analysis wired to the spec's derating parameters and reference voltage."""
    v = spec.electrical.stall_reference_voltage if voltage is None else voltage
    return stall_analysis(
        constants_cold,
        v,
        derating_factor=spec.magnetics.saturation_derating,
        derating_threshold=spec.magnetics.saturation_current_threshold,
        constants_hot=constants_hot,
    )


# --------------------------------------------------------------------------
# Ripple, cogging, unbalance
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RippleAnalysis:
    """Peak-to-peak torque ripple of a sampled waveform."""

    mean: float
    minimum: float
    maximum: float
    ripple_fraction: float


def torque_ripple(torque: Sequence[float] | np.ndarray) -> RippleAnalysis:
    """(max - min) / mean of a torque waveform sampled over full periods."""
    arr = np.asarray(torque, dtype=float)
    if arr.size < 2:
        raise SpecInvariantError("ripple-samples", "need at least 2 samples")
    mean = float(np.mean(arr))
    if mean <= 0:
        raise SpecInvariantError("ripple-mean", "mean torque must be positive")
    mx = float(np.max(arr))
    mn = float(np.min(arr))
    return RippleAnalysis(mean=mean, minimum=mn, maximum=mx, ripple_fraction=(mx - mn) / mean)


def synthesize_torque_waveform(
    mean_torque: float,
    harmonics: Sequence[tuple[int, float]],
    n_samples: int = 3600,
) -> tuple[np.ndarray, np.ndarray]:
    """T(theta) = mean * (1 + sum_k a_k sin(k*theta)) over one revolution.

    Orders are mechanical periods per revolution (slot-interaction order and
    the drive's sixth electrical harmonic in the usual set).
    """
    if mean_torque <= 0:
        raise SpecInvariantError("ripple-mean", "mean torque must be positive")
    theta = np.arange(n_samples) * (2.0 * math.pi / n_samples)
    wave = np.ones_like(theta)
    for order, amp in harmonics:
        wave = wave + amp * np.sin(order * theta)
    return theta, mean_torque * wave


def ripple_for_spec(spec: MotorSpec, mean_torque: float, n_samples: int = 3600) -> RippleAnalysis:
    """Synthesize the spec's ripple harmonic set at mean_torque and analyze it."""
    _, wave = synthesize_torque_waveform(mean_torque, spec.ripple.harmonics, n_samples)
    return torque_ripple(wave)


@dataclass(frozen=True)
class CoggingOrders:
    """Cogging periodicity from slot/pole interaction."""

    periods_per_rev: int
    period_deg: float


def cogging_orders(geometry: MotorGeometry) -> CoggingOrders:
    """Fundamental cogging count = lcm(pole count, slot count)."""
    n = math.lcm(2 * geometry.pole_pairs, geometry.virtual_slots)
    return CoggingOrders(periods_per_rev=n, period_deg=360.0 / n)


def unbalance_metric(per_phase: Sequence[float]) -> float:
    """Phase unbalance in percent: (max - min) / mean * 100."""
    values = [float(v) for v in per_phase]
    if len(values) < 2:
        raise SpecInvariantError("unbalance-phases", "need at least 2 phase values")
    if min(values) <= 0:
        raise SpecInvariantError("unbalance-positive", "phase values must be positive")
    mean = sum(values) / len(values)
    return (max(values) - min(values)) / mean * 100.0
