"""Lumped magnetic circuit and back-EMF model.

Topology: two stators with soft-magnetic return cores, axially magnetized
magnets in an internal rotor with no rotor back-iron. Each flux loop runs
magnet -> air gap -> stator core -> circumferential return -> air gap ->
adjacent magnet, i.e. two gap crossings per stator loop. A 1D reluctance
network over the magnet footprint gives the gap flux density

    B_gap = leakage * Br * l_m / (l_m + 2 * mu_r * g)

Gap reluctance uses the geometric magnet area; there is no Carter-style
fringing correction, the EMF calibration factor absorbs it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpecInvariantError
from .model import MotorSpec, atomic_write_text
from .units import fmt_float, rpm_to_rad_s

MU0 = 4.0e-7 * math.pi


@dataclass(frozen=True)
class MagneticCircuitResult:
    """Open-circuit flux solution for one pole.

    Flux densities in tesla, flux in weber, areas in m^2, reluctances in
    A-turns/Wb. pole_area is the magnet footprint the gap flux crosses;
    flux_per_pole = airgap_flux_density * pole_area by construction.
    """

    airgap_flux_density: float
    flux_per_pole: float
    pole_area: float
    core_flux_density_teeth: float
    core_flux_density_yoke: float
    saturated: bool
    saturation_margin: float
    reluctances: dict[str, float]


def flux_density(flux: float, area: float) -> float:
    """B = Phi / A for a series-path cross-section."""
    if area <= 0:
        raise SpecInvariantError("flux-area", "cross-section area must be positive")
    return flux / area


def solve_magnetic_circuit(spec: MotorSpec) -> MagneticCircuitResult:
    """Solve the per-pole reluctance network at remanence temperature.

    The tooth cross-section is the magnet footprint (the core face area that
    collects one pole's flux before it turns circumferential); the yoke
    carries half the pole flux each way through stator_core_thickness x
    radial band. Saturation compares the larger of the two against the core
    material's saturation flux density.
    """
    g = spec.geometry
    m = spec.materials
    mag = spec.magnetics

    magnet_length = g.rotor_axial_length
    pole_area = mag.pole_arc_ratio * g.annulus_area / (2 * g.pole_pairs)

    # Reluctances over one stator loop (per magnet footprint).
    r_magnet = magnet_length / (MU0 * m.magnet_mu_r * pole_area)
    r_gap = g.air_gap / (MU0 * pole_area)

    b_gap = (
        mag.leakage_coefficient
        * m.magnet_remanence
        * magnet_length
        / (magnet_length + 2.0 * m.magnet_mu_r * g.air_gap)
    )
    flux = b_gap * pole_area

    tooth_area = pole_area
    yoke_area = spec.stator_core_thickness * g.radial_band
    b_teeth = flux_density(flux, tooth_area)
    b_yoke = flux_density(0.5 * flux, yoke_area)

    b_core_max = max(b_teeth, b_yoke)
    return MagneticCircuitResult(
        airgap_flux_density=b_gap,
        flux_per_pole=flux,
        pole_area=pole_area,
        core_flux_density_teeth=b_teeth,
        core_flux_density_yoke=b_yoke,
        saturated=b_core_max > m.core_saturation,
        saturation_margin=m.core_saturation - b_core_max,
        reluctances={"magnet": r_magnet, "air_gap": r_gap},
    )


def saturation_check(circuit: MagneticCircuitResult, core_saturation: float) -> tuple[bool, float]:
    """Re-evaluate the saturation flag against an arbitrary material limit.

    Returns (saturated, margin) where margin = limit - max core density.
    """
    b_core_max = max(circuit.core_flux_density_teeth, circuit.core_flux_density_yoke)
    margin = core_saturation - b_core_max
    return margin < 0, margin


@dataclass(frozen=True)
class BackEmfModel:
    """Per-phase back-EMF synthesis constants.

    ke_phase is the peak phase EMF per mechanical rad/s; harmonics are
    (electrical order, amplitude relative to the fundamental). The waveform
    is e(t) = ke_phase * w * sum_k a_k sin(k * p * w * t) with a_1 = 1.
    """

    ke_phase: float
    pole_pairs: int
    harmonics: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.ke_phase <= 0:
            raise SpecInvariantError("ke-positive", "ke_phase must be positive")
        if self.pole_pairs < 1:
            raise SpecInvariantError("pole-pairs", "pole_pairs must be >= 1")
        seen = {1}
        for order, amp in self.harmonics:
            if order in seen:
                raise SpecInvariantError("emf-harmonics", f"duplicate harmonic order {order}")
            if order < 2:
                raise SpecInvariantError("emf-harmonics", "harmonic orders start at 2")
            if amp < 0:
                raise SpecInvariantError("emf-harmonics", "harmonic amplitude must be >= 0")
            seen.add(order)


def effective_series_turns(spec: MotorSpec) -> float:
    """Per-phase effective series turns:
    turns_per_layer * layers_per_module * modules_in_series / parallel_branches.
    """
    w = spec.winding
    return (
        w.turns_per_layer_per_coil
        * w.layers_per_module
        * w.modules_in_series
        / w.parallel_branches
    )


def flux_linkage_constant(spec: MotorSpec, circuit: MagneticCircuitResult) -> BackEmfModel:
    """Build the EMF model from the flux solution and winding bookkeeping.

    Each turn contributes B * (Ro^2 - Ri^2) peak volts per mechanical rad/s
    (two radial conductors at mean radius); a phase strings virtual_slots/3
    coils of effective_series_turns each. ke_calibration absorbs winding
    factor, fringing, and the phase/terminal convention of the bench data
    it was calibrated against.
    """
    g = spec.geometry
    if circuit.flux_per_pole <= 0:
        raise SpecInvariantError("zero-flux", "magnetic circuit yields no flux; check remanence")
    n_eff = effective_series_turns(spec)
    if n_eff <= 0:
        raise SpecInvariantError("zero-turns", "winding has no effective turns")
    coils_per_phase = g.virtual_slots / 3.0
    ke_structural = (
        coils_per_phase
        * n_eff
        * circuit.airgap_flux_density
        * (g.outer_radius**2 - g.inner_radius**2)
    )
    ke_phase = spec.magnetics.ke_calibration * ke_structural
    return BackEmfModel(
        ke_phase=ke_phase,
        pole_pairs=g.pole_pairs,
        harmonics=spec.magnetics.emf_harmonics,
    )


@dataclass(frozen=True)
class EmfWaveform:
    """One electrical period of phase EMF at a fixed mechanical speed."""

    time_s: np.ndarray
    volts: np.ndarray
    speed_rpm: float

    @property
    def peak(self) -> float:
        return float(np.max(np.abs(self.volts)))

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.volts**2)))

    def to_csv(self, path: str | Path) -> None:
        rows = ["time_s,volts"]
        for t, v in zip(self.time_s, self.volts):
            rows.append(f"{fmt_float(float(t))},{fmt_float(float(v))}")
        atomic_write_text(path, "\n".join(rows) + "\n")


def back_emf_waveform(model: BackEmfModel, speed_rpm: float, n_samples: int = 720) -> EmfWaveform:
    """Synthesize one electrical period of phase EMF at speed_rpm.

    Samples are uniform over [0, T_e) so the waveform mean is zero to
    roundoff and peak/RMS relations hold discretely. At standstill the
    electrical period is undefined; a zero waveform over a nominal 1 s
    window is returned.
    """
    if speed_rpm < 0:
        raise SpecInvariantError("speed-positive", "speed must be >= 0")
    if n_samples < 16:
        raise SpecInvariantError("samples", "need at least 16 samples per period")
    if speed_rpm == 0:
        t = np.arange(n_samples) * (1.0 / n_samples)
        return EmfWaveform(time_s=t, volts=np.zeros(n_samples), speed_rpm=0.0)
    w = rpm_to_rad_s(speed_rpm)
    t_period = 2.0 * math.pi / (model.pole_pairs * w)
    t = np.arange(n_samples) * (t_period / n_samples)
    phase = model.pole_pairs * w * t
    e = np.sin(phase)
    for order, amp in model.harmonics:
        e = e + amp * np.sin(order * phase)
    e = model.ke_phase * w * e
    return EmfWaveform(time_s=t, volts=e, speed_rpm=speed_rpm)


def emf_peak(model: BackEmfModel, speed_rpm: float) -> float:
    """Analytic peak of the synthesized waveform (sampled maximum)."""
    return back_emf_waveform(model, speed_rpm, n_samples=4096).peak
