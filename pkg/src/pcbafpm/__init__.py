"""pcbafpm: design and verification toolkit for PCB-stator axial-flux
permanent-magnet micro motors.

Core entry points re-exported here; the CLI lives in pcbafpm.cli and the
HTTP service in pcbafpm.service.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    MotorGeometry,
    PcbWindingStack,
    MaterialSet,
    ElectricalRatings,
    MotorSpec,
    load_spec,
    serialize_spec,
    write_spec,
    copper_fill_factor,
    active_volume,
    VOLUME_CONVENTIONS,
)
from .magnetics import (  # noqa: F401
    MagneticCircuitResult,
    BackEmfModel,
    solve_magnetic_circuit,
    saturation_check,
    flux_linkage_constant,
    back_emf_waveform,
)
from .electromech import (  # noqa: F401
    MotorConstants,
    PerformanceCurve,
    RippleAnalysis,
    winding_resistance,
    build_constants,
    performance_curve,
    stall_analysis,
    torque_ripple,
    cogging_orders,
    unbalance_metric,
)
from .thermal import (  # noqa: F401
    ThermalGrid,
    ThermalField,
    build_grid,
    steady_state_solve,
    transient_solve,
    continuous_stall_torque,
)
from .explorer import (  # noqa: F401
    ConstraintSet,
    DesignCandidate,
    evaluate_candidate,
    voltage_headroom,
    sweep,
)
from .measurements import (  # noqa: F401
    MeasurementSet,
    ComparisonReport,
    ingest_measurements,
    fit_constants,
    compare,
)
from .datasheet import (  # noqa: F401
    build_datasheet,
    compare_to_measurements,
    render_datasheet,
    write_datasheet_json,
)

from importlib import resources as _resources


def data_path(name: str):
    """Path to a packaged data file (reference spec, bench fixtures)."""
    return _resources.files(__package__).joinpath("data", name)
