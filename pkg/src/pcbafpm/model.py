"""Motor description: domain types, spec-file IO, and geometry-level summaries.

A motor spec is a declarative YAML tree whose leaf keys carry explicit unit
suffixes (outer_diameter_mm, friction_torque_mnm, ...). Values are converted
to SI on load and held in frozen dataclasses; serialization reproduces the
document deterministically (fixed key order, 9 significant digits), so
load -> serialize -> load is an identity and serialize output is byte-stable.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import MISSING as _DC_MISSING
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import SpecFormatError, SpecInvariantError
from .units import MM, MNM, MH, fmt_value

SPEC_FORMAT_VERSION = 1

# Region names used for material lookup and thermal grids.
REGION_WINDING = "winding"
REGION_CORE = "core"
REGION_MAGNET = "magnet"
REGION_AIR_GAP = "air_gap"
REGION_HOUSING = "housing"


def _require(cond: bool, rule: str, msg: str) -> None:
    if not cond:
        raise SpecInvariantError(rule, msg)


@dataclass(frozen=True)
class MotorGeometry:
    """Envelope and magnetic-circuit geometry. Lengths in meters."""

    pole_pairs: int
    outer_diameter: float
    inner_diameter: float
    air_gap: float
    stator_axial_length: float
    rotor_axial_length: float
    overall_axial_length: float
    virtual_slots: int
    stator_count: int = 2

    def __post_init__(self):
        _require(self.pole_pairs >= 1, "pole-pairs", "pole_pairs must be >= 1")
        _require(self.virtual_slots >= 3, "virtual-slots", "virtual_slots must be >= 3")
        _require(self.stator_count in (1, 2), "stator-count", "stator_count must be 1 or 2")
        _require(self.inner_diameter > 0, "radial-order", "inner diameter must be positive")
        _require(
            self.outer_diameter > self.inner_diameter,
            "radial-order",
            f"outer diameter {self.outer_diameter} must exceed inner {self.inner_diameter}",
        )
        for name in ("air_gap", "stator_axial_length", "rotor_axial_length", "overall_axial_length"):
            _require(getattr(self, name) > 0, "positive-length", f"{name} must be positive")
        stack = (
            self.stator_count * (self.stator_axial_length + self.air_gap)
            + self.rotor_axial_length
        )
        _require(
            self.overall_axial_length >= stack - 1e-12,
            "axial-closure",
            f"overall axial length {self.overall_axial_length*1e3:.3f} mm shorter than "
            f"stator/gap/rotor stack {stack*1e3:.3f} mm",
        )

    @property
    def outer_radius(self) -> float:
        return 0.5 * self.outer_diameter

    @property
    def inner_radius(self) -> float:
        return 0.5 * self.inner_diameter

    @property
    def mean_radius(self) -> float:
        return 0.25 * (self.outer_diameter + self.inner_diameter)

    @property
    def radial_band(self) -> float:
        """Radial depth of the active annulus."""
        return self.outer_radius - self.inner_radius

    @property
    def annulus_area(self) -> float:
        """Face area of the active annulus (one side)."""
        return math.pi * (self.outer_radius**2 - self.inner_radius**2)


@dataclass(frozen=True)
class PcbWindingStack:
    """Stacked-PCB winding build. Lengths in meters.

    total_layers counts single copper layers across the whole machine;
    layers_per_module is the HDI module build, so the physical module count
    is total_layers / layers_per_module. modules_in_series and
    parallel_branches describe the electrical composition per phase.
    end_allowance scales the mean-turn length for end connections and vias;
    it is calibrated once against a measured terminal resistance.
    """

    total_layers: int
    layers_per_module: int
    layer_pitch: float
    copper_thickness: float
    trace_width: float
    trace_clearance: float
    turns_per_layer_per_coil: int
    modules_in_series: int
    parallel_branches: int
    end_allowance: float = 1.15

    def __post_init__(self):
        _require(self.total_layers >= 1, "layer-count", "total_layers must be >= 1")
        _require(self.layers_per_module >= 1, "layer-count", "layers_per_module must be >= 1")
        _require(
            self.total_layers % self.layers_per_module == 0,
            "module-build",
            f"total_layers {self.total_layers} not divisible by layers_per_module "
            f"{self.layers_per_module}",
        )
        _require(self.layer_pitch > 0, "positive-length", "layer_pitch must be positive")
        _require(self.copper_thickness > 0, "positive-length", "copper_thickness must be positive")
        _require(
            self.copper_thickness < self.layer_pitch,
            "copper-vs-pitch",
            f"copper thickness {self.copper_thickness*1e3:.3f} mm must be below the "
            f"layer pitch {self.layer_pitch*1e3:.3f} mm",
        )
        _require(self.trace_width > 0, "positive-length", "trace_width must be positive")
        _require(self.trace_clearance >= 0, "positive-length", "trace_clearance must be >= 0")
        _require(self.turns_per_layer_per_coil >= 1, "turns", "turns_per_layer_per_coil must be >= 1")
        _require(self.modules_in_series >= 1, "series-modules", "modules_in_series must be >= 1")
        _require(self.parallel_branches >= 1, "parallel-branches", "parallel_branches must be >= 1")
        _require(self.end_allowance >= 1.0, "end-allowance", "end_allowance must be >= 1")

    @property
    def module_count(self) -> int:
        return self.total_layers // self.layers_per_module

    @property
    def stack_height(self) -> float:
        """Total axial build of all winding layers (whole machine)."""
        return self.total_layers * self.layer_pitch

    @property
    def in_plane_coverage(self) -> float:
        """Fraction of a layer's surface occupied by copper traces."""
        return self.trace_width / (self.trace_width + self.trace_clearance)


@dataclass(frozen=True)
class RegionThermal:
    """Bulk thermal properties of one solid region (SI)."""

    density: float
    specific_heat: float
    conductivity: float

    def __post_init__(self):
        for name in ("density", "specific_heat", "conductivity"):
            _require(getattr(self, name) > 0, "thermal-props", f"{name} must be positive")


@dataclass(frozen=True)
class MaterialSet:
    """Electromagnetic and thermal material data.

    The winding entry's conductivity is the dielectric/prepreg value; the
    copper/dielectric composite is mixed by fill factor when a thermal grid
    is built. Temperature coefficients are per kelvin about 20 C.
    """

    copper_resistivity_20c: float
    copper_alpha: float
    magnet_remanence: float
    magnet_mu_r: float
    magnet_temp_coeff: float
    core_saturation: float
    insulation_rating_c: float
    magnet_rating_c: float
    winding_thermal: RegionThermal
    core_thermal: RegionThermal
    magnet_thermal: RegionThermal
    housing_thermal: RegionThermal

    def __post_init__(self):
        _require(self.copper_resistivity_20c > 0, "resistivity", "copper resistivity must be positive")
        _require(self.copper_alpha >= 0, "resistivity", "copper temperature coefficient must be >= 0")
        _require(self.magnet_remanence >= 0, "remanence", "magnet remanence must be >= 0")
        _require(self.magnet_mu_r >= 1.0, "permeability", "magnet relative permeability must be >= 1")
        _require(self.core_saturation > 0, "saturation", "core saturation flux density must be positive")
        _require(self.insulation_rating_c > 0, "ratings", "insulation rating must be positive")
        _require(self.magnet_rating_c > 0, "ratings", "magnet rating must be positive")

    def region_thermal(self, region: str) -> RegionThermal:
        return {
            REGION_WINDING: self.winding_thermal,
            REGION_CORE: self.core_thermal,
            REGION_MAGNET: self.magnet_thermal,
            REGION_HOUSING: self.housing_thermal,
        }[region]


@dataclass(frozen=True)
class ElectricalRatings:
    """Nameplate electrical inputs (SI: V, A, rpm kept as rpm, H)."""

    nominal_voltage_min: float
    nominal_voltage_max: float
    nominal_current: float
    nominal_speed_rpm: float
    terminal_inductance: float
    stall_reference_voltage: float

    def __post_init__(self):
        _require(self.nominal_voltage_min > 0, "voltage-range", "nominal voltage must be positive")
        _require(
            self.nominal_voltage_max >= self.nominal_voltage_min,
            "voltage-range",
            "nominal_voltage_max must be >= nominal_voltage_min",
        )
        _require(self.nominal_current > 0, "nominal-current", "nominal current must be positive")
        _require(self.nominal_speed_rpm > 0, "nominal-speed", "nominal speed must be positive")
        _require(self.terminal_inductance > 0, "inductance", "terminal inductance must be positive")
        _require(self.stall_reference_voltage > 0, "stall-voltage", "stall reference voltage must be positive")


@dataclass(frozen=True)
class MagneticsSettings:
    """Magnetic-circuit and EMF model parameters.

    leakage_coefficient scales pole flux for paths that close without
    crossing the gap. pole_arc_ratio is magnet arc / pole pitch.
    ke_calibration is the single dimensionless factor that absorbs winding
    factor, fringing, and phase/terminal convention; dc_link_factor maps the
    waveform constant to the dynamometer-equivalent kt = ke pair.
    emf_harmonics lists (order, relative amplitude) beyond the fundamental.
    """

    leakage_coefficient: float = 0.95
    pole_arc_ratio: float = 0.85
    ke_calibration: float = 1.0
    dc_link_factor: float = 1.0
    emf_harmonics: tuple[tuple[int, float], ...] = ()
    saturation_derating: float = 0.83
    saturation_current_threshold: float = 3.0

    def __post_init__(self):
        _require(0 < self.leakage_coefficient <= 1.0, "leakage", "leakage coefficient must be in (0, 1]")
        _require(0 < self.pole_arc_ratio <= 1.0, "pole-arc", "pole arc ratio must be in (0, 1]")
        _require(self.ke_calibration > 0, "ke-calibration", "ke calibration must be positive")
        _require(self.dc_link_factor > 0, "dc-link", "dc link factor must be positive")
        _require(0 < self.saturation_derating <= 1.0, "derating", "saturation derating must be in (0, 1]")
        _require(self.saturation_current_threshold > 0, "derating", "saturation threshold must be positive")
        seen = set()
        for order, amp in self.emf_harmonics:
            _require(order >= 2, "emf-harmonics", f"harmonic order {order} must be >= 2")
            _require(order not in seen, "emf-harmonics", f"duplicate harmonic order {order}")
            _require(amp >= 0, "emf-harmonics", "harmonic amplitude must be >= 0")
            seen.add(order)


@dataclass(frozen=True)
class RippleSettings:
    """Torque ripple synthesis amplitudes and the cogging bound.

    harmonics lists (mechanical order per revolution, relative amplitude);
    cogging_bound is a measured bound carried to reports, not a prediction.
    """

    harmonics: tuple[tuple[int, float], ...] = ()
    cogging_bound: float = 0.0  # Nm

    def __post_init__(self):
        seen = set()
        for order, amp in self.harmonics:
            _require(order >= 1, "ripple-harmonics", f"ripple order {order} must be >= 1")
            _require(order not in seen, "ripple-harmonics", f"duplicate ripple order {order}")
            _require(amp >= 0, "ripple-harmonics", "ripple amplitude must be >= 0")
            seen.add(order)
        _require(self.cogging_bound >= 0, "cogging-bound", "cogging bound must be >= 0")


@dataclass(frozen=True)
class LossModel:
    """Shaft-referenced parasitics: constant friction torque (Nm) plus a
    constant-power drag (W) active at nonzero speed."""

    friction_torque: float = 0.0
    fixed_loss: float = 0.0

    def __post_init__(self):
        _require(self.friction_torque >= 0, "losses", "friction torque must be >= 0")
        _require(self.fixed_loss >= 0, "losses", "fixed loss must be >= 0")


@dataclass(frozen=True)
class ThermalSettings:
    """Thermal model boundary and rating inputs.

    boundary_h is the effective exterior film coefficient (calibrated once
    against a measured steady dissipation point). continuous_rating_limit_c
    is the winding temperature the factory continuous rating corresponds to;
    rating_margin_k is subtracted from material ratings for the
    material-limit case.
    """

    housing_thickness: float = 0.5e-3
    boundary_h: float = 25.0
    ambient_c: float = 25.0
    rated_dissipation: float = 0.0
    continuous_rating_limit_c: float = 0.0
    rating_margin_k: float = 10.0

    def __post_init__(self):
        _require(self.housing_thickness > 0, "housing", "housing thickness must be positive")
        _require(self.boundary_h >= 0, "boundary", "boundary film coefficient must be >= 0")
        _require(self.rated_dissipation >= 0, "dissipation", "rated dissipation must be >= 0")
        _require(self.rating_margin_k >= 0, "rating-margin", "rating margin must be >= 0")


@dataclass(frozen=True)
class MotorSpec:
    """Complete motor description, the root object of the toolkit."""

    name: str
    geometry: MotorGeometry
    winding: PcbWindingStack
    materials: MaterialSet
    electrical: ElectricalRatings
    magnetics: MagneticsSettings = MagneticsSettings()
    ripple: RippleSettings = RippleSettings()
    losses: LossModel = LossModel()
    thermal: ThermalSettings = ThermalSettings()

    @property
    def stator_core_thickness(self) -> float:
        """Axial core build per stator: stator length minus its winding share."""
        per_stator_stack = self.winding.stack_height / self.geometry.stator_count
        t = self.geometry.stator_axial_length - per_stator_stack
        _require(
            t > 0,
            "core-thickness",
            "winding stack does not fit inside the stator axial length",
        )
        return t


# --------------------------------------------------------------------------
# Field tables: (yaml key, dataclass attr, python type, SI scale factor)
# The table order is the serialization order.
# --------------------------------------------------------------------------

_GEOMETRY_FIELDS = [
    ("pole_pairs", "pole_pairs", int, None),
    ("stator_count", "stator_count", int, None),
    ("outer_diameter_mm", "outer_diameter", float, MM),
    ("inner_diameter_mm", "inner_diameter", float, MM),
    ("air_gap_mm", "air_gap", float, MM),
    ("stator_axial_length_mm", "stator_axial_length", float, MM),
    ("rotor_axial_length_mm", "rotor_axial_length", float, MM),
    ("overall_axial_length_mm", "overall_axial_length", float, MM),
    ("virtual_slots", "virtual_slots", int, None),
]

_WINDING_FIELDS = [
    ("total_layers", "total_layers", int, None),
    ("layers_per_module", "layers_per_module", int, None),
    ("layer_pitch_mm", "layer_pitch", float, MM),
    ("copper_thickness_mm", "copper_thickness", float, MM),
    ("trace_width_mm", "trace_width", float, MM),
    ("trace_clearance_mm", "trace_clearance", float, MM),
    ("turns_per_layer_per_coil", "turns_per_layer_per_coil", int, None),
    ("modules_in_series", "modules_in_series", int, None),
    ("parallel_branches", "parallel_branches", int, None),
    ("end_allowance", "end_allowance", float, 1.0),
]

_MATERIAL_FIELDS = [
    ("copper_resistivity_20c_ohm_m", "copper_resistivity_20c", float, 1.0),
    ("copper_alpha_per_k", "copper_alpha", float, 1.0),
    ("magnet_remanence_t", "magnet_remanence", float, 1.0),
    ("magnet_relative_permeability", "magnet_mu_r", float, 1.0),
    ("magnet_temp_coeff_per_k", "magnet_temp_coeff", float, 1.0),
    ("core_saturation_t", "core_saturation", float, 1.0),
    ("insulation_rating_c", "insulation_rating_c", float, 1.0),
    ("magnet_rating_c", "magnet_rating_c", float, 1.0),
]

_REGION_THERMAL_FIELDS = [
    ("density_kg_m3", "density", float, 1.0),
    ("specific_heat_j_kgk", "specific_heat", float, 1.0),
    ("conductivity_w_mk", "conductivity", float, 1.0),
]

_THERMAL_REGION_KEYS = ["winding", "core", "magnet", "housing"]

_ELECTRICAL_FIELDS = [
    ("nominal_voltage_min_v", "nominal_voltage_min", float, 1.0),
    ("nominal_voltage_max_v", "nominal_voltage_max", float, 1.0),
    ("nominal_current_a", "nominal_current", float, 1.0),
    ("nominal_speed_rpm", "nominal_speed_rpm", float, 1.0),
    ("terminal_inductance_mh", "terminal_inductance", float, MH),
    ("stall_reference_voltage_v", "stall_reference_voltage", float, 1.0),
]

_MAGNETICS_FIELDS = [
    ("leakage_coefficient", "leakage_coefficient", float, 1.0),
    ("pole_arc_ratio", "pole_arc_ratio", float, 1.0),
    ("ke_calibration", "ke_calibration", float, 1.0),
    ("dc_link_factor", "dc_link_factor", float, 1.0),
    ("emf_harmonics", "emf_harmonics", "pairs", None),
    ("saturation_derating", "saturation_derating", float, 1.0),
    ("saturation_current_threshold_a", "saturation_current_threshold", float, 1.0),
]

_RIPPLE_FIELDS = [
    ("harmonics", "harmonics", "pairs", None),
    ("cogging_bound_mnm", "cogging_bound", float, MNM),
]

_LOSS_FIELDS = [
    ("friction_torque_mnm", "friction_torque", float, MNM),
    ("fixed_w", "fixed_loss", float, 1.0),
]

_THERMAL_FIELDS = [
    ("housing_thickness_mm", "housing_thickness", float, MM),
    ("boundary_h_w_m2k", "boundary_h", float, 1.0),
    ("ambient_c", "ambient_c", float, 1.0),
    ("rated_dissipation_w", "rated_dissipation", float, 1.0),
    ("continuous_rating_limit_c", "continuous_rating_limit_c", float, 1.0),
    ("rating_margin_k", "rating_margin_k", float, 1.0),
]

_SECTIONS = [
    ("geometry", MotorGeometry, _GEOMETRY_FIELDS, True),
    ("winding", PcbWindingStack, _WINDING_FIELDS, True),
    ("materials", MaterialSet, _MATERIAL_FIELDS, True),
    ("electrical", ElectricalRatings, _ELECTRICAL_FIELDS, True),
    ("magnetics", MagneticsSettings, _MAGNETICS_FIELDS, False),
    ("ripple", RippleSettings, _RIPPLE_FIELDS, False),
    ("losses", LossModel, _LOSS_FIELDS, False),
    ("thermal_model", ThermalSettings, _THERMAL_FIELDS, False),
]


def _known_keys_hint(key: str, known: list[str]) -> str:
    import difflib

    close = difflib.get_close_matches(key, known, n=1)
    if close:
        return f"unknown field (did you mean '{close[0]}'?)"
    return "unknown field"


def _coerce(value: Any, typ, path: str):
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecFormatError(f"expected an integer, got {value!r}", path)
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecFormatError(f"expected a number, got {value!r}", path)
        return float(value)
    if typ == "pairs":
        if not isinstance(value, list):
            raise SpecFormatError(f"expected a list of [order, amplitude] pairs, got {value!r}", path)
        out = []
        for i, item in enumerate(value):
            if not (isinstance(item, list) and len(item) == 2):
                raise SpecFormatError(f"entry {i} must be a [order, amplitude] pair", path)
            order, amp = item
            if isinstance(order, bool) or not isinstance(order, int):
                raise SpecFormatError(f"entry {i}: order must be an integer", path)
            if isinstance(amp, bool) or not isinstance(amp, (int, float)):
                raise SpecFormatError(f"entry {i}: amplitude must be a number", path)
            out.append((order, float(amp)))
        return tuple(out)
    raise AssertionError(typ)


def _dc_defaults(cls) -> dict:
    out = {}
    for f in dc_fields(cls):
        if f.default is not _DC_MISSING:
            out[f.name] = f.default
        elif f.default_factory is not _DC_MISSING:  # type: ignore[misc]
            out[f.name] = f.default_factory()  # type: ignore[misc]
    return out


def load_spec(source: str | Path | Mapping[str, Any]) -> MotorSpec:
    """Load a motor spec from a YAML file path, YAML text, or a parsed tree.

    Raises SpecFormatError for parse/field problems (with the offending key
    path) and SpecInvariantError for rule violations.
    """
    tree = _read_tree(source)
    if not isinstance(tree, Mapping):
        raise SpecFormatError("spec document root must be a mapping")

    version = tree.get("format_version")
    if version is None:
        raise SpecFormatError("missing required field", "format_version")
    if version != SPEC_FORMAT_VERSION:
        raise SpecFormatError(
            f"unsupported format_version {version!r} (this build reads version {SPEC_FORMAT_VERSION})",
            "format_version",
        )
    name = tree.get("name", "unnamed")
    if not isinstance(name, str):
        raise SpecFormatError("expected a string", "name")

    root_known = {"format_version", "name"} | {s[0] for s in _SECTIONS}
    for key in tree:
        if key not in root_known:
            raise SpecFormatError(_known_keys_hint(key, sorted(root_known)), key)

    parsed: dict[str, Any] = {}
    for section_key, cls, fields, required in _SECTIONS:
        if section_key not in tree:
            if required:
                raise SpecFormatError("missing required section", section_key)
            parsed[_SECTION_ATTR[section_key]] = cls()
            continue
        sub = tree[section_key]
        if section_key == "materials":
            parsed["materials"] = _parse_materials(sub)
        else:
            parsed[_SECTION_ATTR[section_key]] = _parse_plain_section(sub, fields, cls, section_key)
    return MotorSpec(name=name, **parsed)


_SECTION_ATTR = {
    "geometry": "geometry",
    "winding": "winding",
    "materials": "materials",
    "electrical": "electrical",
    "magnetics": "magnetics",
    "ripple": "ripple",
    "losses": "losses",
    "thermal_model": "thermal",
}


def _parse_plain_section(tree, fields, cls, path: str):
    if not isinstance(tree, Mapping):
        raise SpecFormatError("expected a mapping", path)
    known = [k for k, *_ in fields]
    for key in tree:
        if key not in known:
            raise SpecFormatError(_known_keys_hint(key, known), f"{path}.{key}")
    defaults = _dc_defaults(cls)
    kwargs = {}
    for key, attr, typ, scale in fields:
        if key in tree:
            raw = _coerce(tree[key], typ, f"{path}.{key}")
            kwargs[attr] = raw * scale if typ is float else raw
        elif attr in defaults:
            kwargs[attr] = defaults[attr]
        else:
            raise SpecFormatError("missing required field", f"{path}.{key}")
    return cls(**kwargs)


def _parse_materials(tree) -> MaterialSet:
    if not isinstance(tree, Mapping):
        raise SpecFormatError("expected a mapping", "materials")
    known = [k for k, *_ in _MATERIAL_FIELDS] + ["thermal"]
    for key in tree:
        if key not in known:
            raise SpecFormatError(_known_keys_hint(key, known), f"materials.{key}")
    kwargs = {}
    for key, attr, typ, scale in _MATERIAL_FIELDS:
        if key not in tree:
            raise SpecFormatError("missing required field", f"materials.{key}")
        raw = _coerce(tree[key], typ, f"materials.{key}")
        kwargs[attr] = raw * scale if typ is float else raw
    thermal = tree.get("thermal")
    if thermal is None:
        raise SpecFormatError("missing required section", "materials.thermal")
    if not isinstance(thermal, Mapping):
        raise SpecFormatError("expected a mapping", "materials.thermal")
    for key in thermal:
        if key not in _THERMAL_REGION_KEYS:
            raise SpecFormatError(_known_keys_hint(key, _THERMAL_REGION_KEYS), f"materials.thermal.{key}")
    for region in _THERMAL_REGION_KEYS:
        if region not in thermal:
            raise SpecFormatError("missing required section", f"materials.thermal.{region}")
        kwargs[f"{region}_thermal"] = _parse_plain_section(
            thermal[region], _REGION_THERMAL_FIELDS, RegionThermal, f"materials.thermal.{region}"
        )
    return MaterialSet(**kwargs)


def _read_tree(source) -> Any:
    if isinstance(source, Mapping):
        return source
    text: str
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith((".spec", ".yaml", ".yml"))):
        p = Path(source)
        if not p.exists():
            raise SpecFormatError(f"spec file not found: {p}")
        text = p.read_text()
    else:
        text = str(source)
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SpecFormatError(f"YAML parse error{where}: {getattr(exc, 'problem', exc)}")


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------


def _emit_pairs(pairs) -> list[str]:
    return ["[%d, %s]" % (order, fmt_value(amp)) for order, amp in pairs]


def _emit_section(lines: list[str], name: str, obj, fields, indent: str = "") -> None:
    lines.append(f"{indent}{name}:")
    for key, attr, typ, scale in fields:
        value = getattr(obj, attr)
        if typ == "pairs":
            if not value:
                lines.append(f"{indent}  {key}: []")
            else:
                lines.append(f"{indent}  {key}:")
                for item in _emit_pairs(value):
                    lines.append(f"{indent}  - {item}")
        elif typ is float:
            lines.append(f"{indent}  {key}: {fmt_value(value / scale)}")
        else:
            lines.append(f"{indent}  {key}: {fmt_value(value)}")


def serialize_spec(spec: MotorSpec) -> str:
    """Render a spec back to its document form, deterministically."""
    lines: list[str] = []
    lines.append(f"format_version: {SPEC_FORMAT_VERSION}")
    lines.append(f"name: {spec.name}")
    _emit_section(lines, "geometry", spec.geometry, _GEOMETRY_FIELDS)
    _emit_section(lines, "winding", spec.winding, _WINDING_FIELDS)
    _emit_section(lines, "materials", spec.materials, _MATERIAL_FIELDS)
    lines.append("  thermal:")
    for region in _THERMAL_REGION_KEYS:
        _emit_section(lines, region, getattr(spec.materials, f"{region}_thermal"), _REGION_THERMAL_FIELDS, indent="    ")
    _emit_section(lines, "electrical", spec.electrical, _ELECTRICAL_FIELDS)
    _emit_section(lines, "magnetics", spec.magnetics, _MAGNETICS_FIELDS)
    _emit_section(lines, "ripple", spec.ripple, _RIPPLE_FIELDS)
    _emit_section(lines, "losses", spec.losses, _LOSS_FIELDS)
    _emit_section(lines, "thermal_model", spec.thermal, _THERMAL_FIELDS)
    return "\n".join(lines) + "\n"


def write_spec(spec: MotorSpec, path: str | Path) -> None:
    """Serialize to path atomically (temp file then rename)."""
    atomic_write_text(path, serialize_spec(spec))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def spec_to_tree(spec: MotorSpec) -> dict:
    """Spec as a plain document tree (the YAML form, file units)."""
    return yaml.safe_load(serialize_spec(spec))


# --------------------------------------------------------------------------
# Geometry-level summaries
# --------------------------------------------------------------------------


def copper_fill_factor(spec: MotorSpec | PcbWindingStack) -> float:
    """Copper fraction of the winding window.

    Window convention (fixed, documented): the winding stack build
    (total_layers x layer_pitch) times the radial conductor band. Copper in
    that window is total_layers x copper_thickness x in-plane coverage over
    the same band, so the band cancels and:

        fill = (copper_thickness / layer_pitch) * width / (width + clearance)
    """
    w = spec.winding if isinstance(spec, MotorSpec) else spec
    return (w.copper_thickness / w.layer_pitch) * w.in_plane_coverage


VOLUME_CONVENTIONS = ("envelope-cylinder", "stator-stack-only")


@dataclass(frozen=True)
class VolumeSummary:
    """Volume/mass bookkeeping. Volumes in m^3, mass in kg.

    envelope uses the cylinder pi*(OD/2)^2 * overall length convention;
    torque-density figures elsewhere in the toolkit divide by it. The
    convention the caller asked for is recorded and selects selected_cm3.
    """

    envelope: float
    active_annulus: float
    winding_stack: float
    copper: float
    mass_estimate: float
    stator_stack: float = 0.0
    convention: str = "envelope-cylinder"

    @property
    def selected(self) -> float:
        """Volume under the recorded convention (m^3)."""
        if self.convention == "stator-stack-only":
            return self.stator_stack
        return self.envelope

    @property
    def selected_cm3(self) -> float:
        return self.selected * 1e6

    @property
    def stator_stack_cm3(self) -> float:
        return self.stator_stack * 1e6

    @property
    def envelope_cm3(self) -> float:
        return self.envelope * 1e6

    @property
    def active_annulus_cm3(self) -> float:
        return self.active_annulus * 1e6

    @property
    def winding_stack_cm3(self) -> float:
        return self.winding_stack * 1e6

    @property
    def copper_cm3(self) -> float:
        return self.copper * 1e6

    @property
    def mass_g(self) -> float:
        return self.mass_estimate * 1e3


def active_volume(spec: MotorSpec, definition: str = "envelope-cylinder") -> VolumeSummary:
    """Envelope/active volumes and a bulk mass estimate from region densities.

    definition picks which volume `selected` reports: "envelope-cylinder"
    (bounding cylinder over the full axial build, the default used for
    torque-density figures) or "stator-stack-only" (annulus area times the
    stator builds alone, excluding rotor and air gaps). The choice is
    recorded on the summary so downstream artifacts can state it.
    """
    if definition not in VOLUME_CONVENTIONS:
        raise SpecInvariantError(
            "volume-convention",
            f"unknown volume convention {definition!r}; expected one of {VOLUME_CONVENTIONS}",
        )
    g = spec.geometry
    envelope = math.pi * g.outer_radius**2 * g.overall_axial_length
    annulus = g.annulus_area * g.overall_axial_length
    stack = g.annulus_area * spec.winding.stack_height
    copper = stack * copper_fill_factor(spec)
    stator_stack = g.annulus_area * g.stator_axial_length * g.stator_count

    m = spec.materials
    core_volume = g.annulus_area * spec.stator_core_thickness * g.stator_count
    magnet_volume = g.annulus_area * g.rotor_axial_length * spec.magnetics.pole_arc_ratio
    hub_volume = math.pi * g.inner_radius**2 * g.overall_axial_length
    shell_outer = g.outer_radius + spec.thermal.housing_thickness
    shell_volume = math.pi * (shell_outer**2 - g.outer_radius**2) * g.overall_axial_length
    mass = (
        stack * m.winding_thermal.density
        + core_volume * m.core_thermal.density
        + magnet_volume * m.magnet_thermal.density
        + (hub_volume + shell_volume) * m.housing_thermal.density
    )
    return VolumeSummary(
        envelope=envelope,
        active_annulus=annulus,
        winding_stack=stack,
        copper=copper,
        mass_estimate=mass,
        stator_stack=stator_stack,
        convention=definition,
    )
