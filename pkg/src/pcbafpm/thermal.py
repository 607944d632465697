"""Axisymmetric steady/transient heat conduction for the motor cross-section.

Finite-volume discretization on an (r, z) grid: cell volumes pi*(re^2-rw^2)*dz,
face conductances from harmonic means of half-cell resistances, convective or
fixed-temperature boundary faces, uniform volumetric source over the winding
region. The steady problem rho*cp*dT/dt = div(k grad T) + q with dT/dt = 0 is
a sparse SPD system solved by LU factorization; the relative residual of the
returned field is checked against the 1e-8 criterion (direct solves land far
below it). Properties are temperature independent, so fields are linear in
the injected power; the continuous-stall search exploits that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix, csc_matrix
from scipy.sparse.linalg import splu

from .errors import ConvergenceError, SpecInvariantError
from .magnetics import BackEmfModel
from .model import (
    REGION_AIR_GAP,
    REGION_CORE,
    REGION_HOUSING,
    REGION_MAGNET,
    REGION_WINDING,
    MotorSpec,
    atomic_write_text,
    copper_fill_factor,
)
from .units import fmt_float

K_COPPER = 385.0      # W/m-K, trace metal for the winding composite
K_AIR = 0.026         # W/m-K, stagnant air in the gap
RHO_CP_AIR = 1.2 * 1005.0

REGION_CODES = {
    REGION_WINDING: 1,
    REGION_CORE: 2,
    REGION_MAGNET: 3,
    REGION_AIR_GAP: 4,
    REGION_HOUSING: 5,
}
REGION_NAMES = {v: k for k, v in REGION_CODES.items()}

RESIDUAL_LIMIT = 1e-8


@dataclass(frozen=True)
class BoundaryCondition:
    """One exterior face: convective film to an ambient, or a fixed wall
    temperature. h = 0 makes a convective face adiabatic."""

    kind: str = "convective"  # "convective" | "fixed"
    h: float = 0.0
    temperature_c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("convective", "fixed"):
            raise SpecInvariantError("boundary-kind", f"unknown boundary kind {self.kind!r}")
        if self.h < 0:
            raise SpecInvariantError("boundary-h", "film coefficient must be >= 0")


def convective(h: float, temperature_c: float) -> BoundaryCondition:
    return BoundaryCondition(kind="convective", h=h, temperature_c=temperature_c)


def fixed(temperature_c: float) -> BoundaryCondition:
    return BoundaryCondition(kind="fixed", temperature_c=temperature_c)


def adiabatic() -> BoundaryCondition:
    return BoundaryCondition(kind="convective", h=0.0)


@dataclass(frozen=True)
class ThermalGrid:
    """Discretized axisymmetric cross-section.

    Arrays are (nr, nz) cell-centered; edges are the r/z cell boundaries.
    kr/kz allow anisotropic regions (the winding stack conducts far better
    in-plane than through-plane). source_mask marks cells sharing the
    injected power uniformly by volume.
    """

    r_edges: np.ndarray
    z_edges: np.ndarray
    region: np.ndarray
    kr: np.ndarray
    kz: np.ndarray
    rho_cp: np.ndarray
    source_mask: np.ndarray
    boundary_outer: BoundaryCondition
    boundary_top: BoundaryCondition
    boundary_bottom: BoundaryCondition

    @property
    def nr(self) -> int:
        return len(self.r_edges) - 1

    @property
    def nz(self) -> int:
        return len(self.z_edges) - 1

    @property
    def cell_volumes(self) -> np.ndarray:
        r2 = self.r_edges**2
        ring = math.pi * (r2[1:] - r2[:-1])
        dz = np.diff(self.z_edges)
        return ring[:, None] * dz[None, :]

    @property
    def r_centers(self) -> np.ndarray:
        return 0.5 * (self.r_edges[:-1] + self.r_edges[1:])

    @property
    def z_centers(self) -> np.ndarray:
        return 0.5 * (self.z_edges[:-1] + self.z_edges[1:])


def _allocate_cells(thicknesses: list[float], n_total: int, what: str) -> list[int]:
    """Split n_total cells across bands proportionally, >= 1 per band."""
    n_bands = len(thicknesses)
    if n_total < n_bands:
        raise SpecInvariantError(
            "grid-resolution",
            f"{what}: geometry has {n_bands} layers but only {n_total} cells requested",
        )
    total = sum(thicknesses)
    counts = [max(1, int(round(n_total * t / total))) for t in thicknesses]
    # repair rounding so the counts sum exactly to n_total; shrink the most
    # over-resolved band that still has cells to give
    while sum(counts) > n_total:
        candidates = [i for i in range(n_bands) if counts[i] > 1]
        idx = max(candidates, key=lambda i: counts[i] / thicknesses[i])
        counts[idx] -= 1
    while sum(counts) < n_total:
        idx = min(range(n_bands), key=lambda i: counts[i] / thicknesses[i])
        counts[idx] += 1
    return counts


def _band_edges(origin: float, thicknesses: list[float], counts: list[int]) -> np.ndarray:
    edges = [origin]
    pos = origin
    for t, n in zip(thicknesses, counts):
        step = t / n
        for _ in range(n):
            pos += step
            edges.append(pos)
    return np.array(edges)


def build_grid(spec: MotorSpec, resolution: tuple[int, int] = (64, 64)) -> ThermalGrid:
    """Motor cross-section grid: hub | active annulus | housing shell radially;
    core/winding/gap/rotor stack axially, with housing end caps absorbing any
    axial slack. Winding conductivity mixes copper and dielectric by fill
    factor (arithmetic in-plane, harmonic through-plane).
    """
    nr, nz = resolution
    if nr < 3 or nz < 3:
        raise SpecInvariantError("grid-resolution", "resolution must be at least 3x3")
    g = spec.geometry
    m = spec.materials
    t_core = spec.stator_core_thickness
    t_wind = spec.winding.stack_height / g.stator_count

    r_bands = [
        (g.inner_radius, REGION_HOUSING),
        (g.radial_band, None),  # filled per z band
        (spec.thermal.housing_thickness, REGION_HOUSING),
    ]
    z_stack: list[tuple[float, str]] = [
        (t_core, REGION_CORE),
        (t_wind, REGION_WINDING),
        (g.air_gap, REGION_AIR_GAP),
        (g.rotor_axial_length, REGION_MAGNET),
    ]
    if g.stator_count == 2:
        z_stack += [
            (g.air_gap, REGION_AIR_GAP),
            (t_wind, REGION_WINDING),
            (t_core, REGION_CORE),
        ]
    slack = g.overall_axial_length - sum(t for t, _ in z_stack)
    if slack > 1e-9:
        z_stack = [(slack / 2, REGION_HOUSING)] + z_stack + [(slack / 2, REGION_HOUSING)]

    r_thick = [t for t, _ in r_bands]
    z_thick = [t for t, _ in z_stack]
    r_counts = _allocate_cells(r_thick, nr, "radial")
    z_counts = _allocate_cells(z_thick, nz, "axial")
    r_edges = _band_edges(0.0, r_thick, r_counts)
    z_edges = _band_edges(0.0, z_thick, z_counts)

    region = np.zeros((nr, nz), dtype=np.int8)
    # radial band index per cell row
    r_band_of_cell = np.concatenate([[bi] * c for bi, c in enumerate(r_counts)])
    z_band_of_cell = np.concatenate([[bi] * c for bi, c in enumerate(z_counts)])
    for i in range(nr):
        for j in range(nz):
            rb = r_band_of_cell[i]
            if rb == 0 or rb == 2:
                region[i, j] = REGION_CODES[REGION_HOUSING]
            else:
                region[i, j] = REGION_CODES[z_stack[z_band_of_cell[j]][1]]

    fill = copper_fill_factor(spec)
    k_diel = m.winding_thermal.conductivity
    k_wind_r = fill * K_COPPER + (1.0 - fill) * k_diel
    k_wind_z = 1.0 / (fill / K_COPPER + (1.0 - fill) / k_diel)

    kr = np.zeros((nr, nz))
    kz = np.zeros((nr, nz))
    rho_cp = np.zeros((nr, nz))
    props = {
        REGION_CODES[REGION_WINDING]: (k_wind_r, k_wind_z, m.winding_thermal.density * m.winding_thermal.specific_heat),
        REGION_CODES[REGION_CORE]: (m.core_thermal.conductivity, m.core_thermal.conductivity, m.core_thermal.density * m.core_thermal.specific_heat),
        REGION_CODES[REGION_MAGNET]: (m.magnet_thermal.conductivity, m.magnet_thermal.conductivity, m.magnet_thermal.density * m.magnet_thermal.specific_heat),
        REGION_CODES[REGION_AIR_GAP]: (K_AIR, K_AIR, RHO_CP_AIR),
        REGION_CODES[REGION_HOUSING]: (m.housing_thermal.conductivity, m.housing_thermal.conductivity, m.housing_thermal.density * m.housing_thermal.specific_heat),
    }
    for code, (k_r, k_z, rc) in props.items():
        mask = region == code
        kr[mask] = k_r
        kz[mask] = k_z
        rho_cp[mask] = rc

    bc = convective(spec.thermal.boundary_h, spec.thermal.ambient_c)
    return ThermalGrid(
        r_edges=r_edges,
        z_edges=z_edges,
        region=region,
        kr=kr,
        kz=kz,
        rho_cp=rho_cp,
        source_mask=region == REGION_CODES[REGION_WINDING],
        boundary_outer=bc,
        boundary_top=bc,
        boundary_bottom=bc,
    )


def make_slab_grid(
    thickness: float,
    conductivity: float,
    nr: int = 3,
    nz: int = 64,
    radius: float = 0.05,
    rho_cp: float = 1.0e6,
    boundary_bottom: BoundaryCondition | None = None,
    boundary_top: BoundaryCondition | None = None,
    boundary_outer: BoundaryCondition | None = None,
    source: str = "top_layer",
) -> ThermalGrid:
    """Uniform-material axial slab for verification against 1D analytics.

    With an adiabatic outer face the radial direction is inert and the grid
    behaves as a 1D slab. source="top_layer" confines the power to the
    top cell row; "uniform" spreads it over the whole slab.
    """
    if source not in ("top_layer", "uniform"):
        raise SpecInvariantError("slab-source", f"unknown source placement {source!r}")
    r_edges = np.linspace(0.0, radius, nr + 1)
    z_edges = np.linspace(0.0, thickness, nz + 1)
    shape = (nr, nz)
    mask = np.zeros(shape, dtype=bool)
    if source == "top_layer":
        mask[:, -1] = True
    else:
        mask[:, :] = True
    return ThermalGrid(
        r_edges=r_edges,
        z_edges=z_edges,
        region=np.full(shape, REGION_CODES[REGION_WINDING], dtype=np.int8),
        kr=np.full(shape, conductivity),
        kz=np.full(shape, conductivity),
        rho_cp=np.full(shape, rho_cp),
        source_mask=mask,
        boundary_outer=boundary_outer or adiabatic(),
        boundary_top=boundary_top or adiabatic(),
        boundary_bottom=boundary_bottom or fixed(0.0),
    )


@dataclass(frozen=True)
class ThermalField:
    """Steady temperature solution on a grid."""

    grid: ThermalGrid
    temperature: np.ndarray
    power: float
    peak_c: float
    peak_r: float
    peak_z: float
    residual: float
    boundary_flux: float

    @property
    def peak_region(self) -> str:
        i = int(np.argmin(np.abs(self.grid.r_centers - self.peak_r)))
        j = int(np.argmin(np.abs(self.grid.z_centers - self.peak_z)))
        return REGION_NAMES[int(self.grid.region[i, j])]

    def region_peak(self, region_name: str) -> float:
        mask = self.grid.region == REGION_CODES[region_name]
        if not mask.any():
            raise SpecInvariantError("region-missing", f"grid has no {region_name} cells")
        return float(self.temperature[mask].max())

    def to_csv(self, path: str | Path) -> None:
        rows = ["r_mm,z_mm,temperature_c"]
        rc = self.grid.r_centers
        zc = self.grid.z_centers
        for i in range(self.grid.nr):
            for j in range(self.grid.nz):
                rows.append(
                    f"{fmt_float(rc[i] * 1e3)},{fmt_float(zc[j] * 1e3)},{fmt_float(float(self.temperature[i, j]))}"
                )
        atomic_write_text(path, "\n".join(rows) + "\n")


def _boundary_conductance(bc: BoundaryCondition, area: np.ndarray, half_path: np.ndarray, k: np.ndarray):
    """Series half-cell conduction plus film; returns (G, T_b) arrays."""
    if bc.kind == "fixed":
        g = k * area / half_path
    else:
        if bc.h == 0.0:
            g = np.zeros_like(area)
        else:
            g = 1.0 / (half_path / (k * area) + 1.0 / (bc.h * area))
    return g, bc.temperature_c


def _assemble(grid: ThermalGrid):
    """Sparse conduction operator A and boundary coupling (diag add + rhs)."""
    nr, nz = grid.nr, grid.nz
    n = nr * nz
    dz = np.diff(grid.z_edges)
    rc = grid.r_centers
    re = grid.r_edges

    def idx(i, j):
        return i * nz + j

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    data: list[np.ndarray] = []
    diag = np.zeros((nr, nz))
    rhs = np.zeros((nr, nz))

    # radial internal faces between rows i and i+1
    if nr > 1:
        r_face = re[1:-1]
        area = 2.0 * math.pi * r_face[:, None] * dz[None, :]
        d_lo = (r_face - rc[:-1])[:, None]
        d_hi = (rc[1:] - r_face)[:, None]
        g = area / (d_lo / grid.kr[:-1, :] + d_hi / grid.kr[1:, :])
        ii, jj = np.meshgrid(np.arange(nr - 1), np.arange(nz), indexing="ij")
        a = idx(ii, jj).ravel()
        b = idx(ii + 1, jj).ravel()
        gv = g.ravel()
        rows += [a, b]
        cols += [b, a]
        data += [-gv, -gv]
        np.add.at(diag, (ii.ravel(), jj.ravel()), gv)
        np.add.at(diag, (ii.ravel() + 1, jj.ravel()), gv)

    # axial internal faces between columns j and j+1
    if nz > 1:
        ring = math.pi * (re[1:] ** 2 - re[:-1] ** 2)
        area = ring[:, None] * np.ones((1, nz - 1))
        d_lo = (0.5 * dz[:-1])[None, :]
        d_hi = (0.5 * dz[1:])[None, :]
        g = area / (d_lo / grid.kz[:, :-1] + d_hi / grid.kz[:, 1:])
        ii, jj = np.meshgrid(np.arange(nr), np.arange(nz - 1), indexing="ij")
        a = idx(ii, jj).ravel()
        b = idx(ii, jj + 1).ravel()
        gv = g.ravel()
        rows += [a, b]
        cols += [b, a]
        data += [-gv, -gv]
        np.add.at(diag, (ii.ravel(), jj.ravel()), gv)
        np.add.at(diag, (ii.ravel(), jj.ravel() + 1), gv)

    boundary_terms = []  # (flat indices, G, T_b) for flux accounting

    # outer radial face (axis face at r=0 has zero area: natural symmetry)
    area = 2.0 * math.pi * re[-1] * dz
    half = re[-1] - rc[-1]
    g, tb = _boundary_conductance(grid.boundary_outer, area, np.full(nz, half), grid.kr[-1, :])
    diag[-1, :] += g
    rhs[-1, :] += g * tb
    boundary_terms.append((idx(np.full(nz, nr - 1), np.arange(nz)), g, tb))

    ring = math.pi * (re[1:] ** 2 - re[:-1] ** 2)
    for side, j_cell in (("bottom", 0), ("top", nz - 1)):
        bc = grid.boundary_bottom if side == "bottom" else grid.boundary_top
        half = 0.5 * dz[j_cell]
        g, tb = _boundary_conductance(bc, ring, np.full(nr, half), grid.kz[:, j_cell])
        diag[:, j_cell] += g
        rhs[:, j_cell] += g * tb
        boundary_terms.append((idx(np.arange(nr), np.full(nr, j_cell)), g, tb))

    all_rows = np.concatenate(rows + [np.arange(n)])
    all_cols = np.concatenate(cols + [np.arange(n)])
    all_data = np.concatenate(data + [diag.ravel()])
    a_mat = coo_matrix((all_data, (all_rows, all_cols)), shape=(n, n)).tocsc()
    return a_mat, rhs.ravel(), boundary_terms


def _source_vector(grid: ThermalGrid, power: float) -> np.ndarray:
    if power == 0:
        return np.zeros(grid.nr * grid.nz)
    vols = grid.cell_volumes
    src_vol = float(vols[grid.source_mask].sum())
    if src_vol <= 0:
        raise SpecInvariantError("source-region", "grid has no source cells")
    q = np.zeros((grid.nr, grid.nz))
    q[grid.source_mask] = power / src_vol
    return (q * vols).ravel()


def steady_state_solve(grid: ThermalGrid, power: float) -> ThermalField:
    """Steady field for the given injected power (W).

    Raises ConvergenceError when the problem is singular (all boundaries
    adiabatic) or the residual criterion cannot be met.
    """
    if power < 0:
        raise SpecInvariantError("power-positive", "power must be >= 0")
    a_mat, b_boundary, boundary_terms = _assemble(grid)
    b = b_boundary + _source_vector(grid, power)

    total_g = sum(float(g.sum()) for _, g, _ in boundary_terms)
    if total_g <= 0:
        raise ConvergenceError("all boundaries adiabatic: steady problem is singular")

    try:
        lu = splu(csc_matrix(a_mat))
        t = lu.solve(b)
    except RuntimeError as exc:
        raise ConvergenceError(f"sparse factorization failed: {exc}")

    b_norm = float(np.linalg.norm(b))
    residual = float(np.linalg.norm(a_mat @ t - b)) / b_norm if b_norm > 0 else 0.0
    if not math.isfinite(residual) or residual > RESIDUAL_LIMIT:
        raise ConvergenceError(
            f"steady solve residual {residual:.3e} exceeds {RESIDUAL_LIMIT:.1e}", residual=residual
        )

    temp = t.reshape(grid.nr, grid.nz)
    flat_peak = int(np.argmax(temp))
    pi_, pj_ = np.unravel_index(flat_peak, temp.shape)
    flux = 0.0
    for flat_idx, g, tb in boundary_terms:
        flux += float(np.sum(g * (t[flat_idx] - tb)))
    return ThermalField(
        grid=grid,
        temperature=temp,
        power=power,
        peak_c=float(temp[pi_, pj_]),
        peak_r=float(grid.r_centers[pi_]),
        peak_z=float(grid.z_centers[pj_]),
        residual=residual,
        boundary_flux=flux,
    )


@dataclass(frozen=True)
class ThermalTransient:
    """Implicit time march toward the steady field."""

    times: np.ndarray
    peak_trace: np.ndarray
    temperature: np.ndarray
    grid: ThermalGrid


def explicit_stability_limit(grid: ThermalGrid) -> float:
    """Largest stable explicit step: min over cells of (rho*cp*V) / a_ii."""
    a_mat, _, _ = _assemble(grid)
    m = (grid.rho_cp * grid.cell_volumes).ravel()
    diag = a_mat.diagonal()
    return float(np.min(m / diag))


def transient_solve(
    grid: ThermalGrid,
    power: float,
    t_end: float,
    dt: float = 1.0,
    initial_c: float | None = None,
    scheme: str = "implicit",
    dt_growth: float = 1.2,
) -> ThermalTransient:
    """March rho*cp*dT/dt = div(k grad T) + q from a uniform start.

    The implicit (backward Euler) scheme is unconditionally stable and the
    step grows geometrically to reach steady state cheaply. The explicit
    scheme enforces its documented stability bound and keeps dt fixed.
    """
    if scheme not in ("implicit", "explicit"):
        raise SpecInvariantError("scheme", f"unknown scheme {scheme!r}")
    if t_end <= 0 or dt <= 0:
        raise SpecInvariantError("time-step", "t_end and dt must be positive")
    a_mat, b_boundary, boundary_terms = _assemble(grid)
    b = b_boundary + _source_vector(grid, power)
    m = (grid.rho_cp * grid.cell_volumes).ravel()

    if initial_c is None:
        # start from the coldest boundary reference; fall back to 0
        temps = [bc.temperature_c for bc in (grid.boundary_outer, grid.boundary_top, grid.boundary_bottom)]
        initial_c = min(temps)
    t_vec = np.full(grid.nr * grid.nz, float(initial_c))

    if scheme == "explicit":
        dt_max = float(np.min(m / a_mat.diagonal()))
        if dt > dt_max:
            raise ConvergenceError(
                f"explicit step {dt:.3e} s exceeds stability bound {dt_max:.3e} s"
            )

    times = [0.0]
    peaks = [float(t_vec.max())]
    t_now = 0.0
    step = dt
    while t_now < t_end:
        step = min(step, t_end - t_now)
        if scheme == "implicit":
            lhs = csc_matrix(a_mat + coo_matrix((m / step, (range(len(m)), range(len(m)))), shape=a_mat.shape))
            rhs = b + (m / step) * t_vec
            t_vec = splu(lhs).solve(rhs)
            step_next = step * dt_growth
        else:
            t_vec = t_vec + (step / m) * (b - a_mat @ t_vec)
            step_next = step
        t_now += step
        step = step_next
        times.append(t_now)
        peaks.append(float(t_vec.max()))
    return ThermalTransient(
        times=np.array(times),
        peak_trace=np.array(peaks),
        temperature=t_vec.reshape(grid.nr, grid.nz),
        grid=grid,
    )


# --------------------------------------------------------------------------
# Coupled electro-thermal continuous stall search
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuousStallReport:
    """Largest sustainable locked-rotor operating point."""

    current: float
    torque: float
    peak_temperature_c: float
    dissipation: float
    temp_limit_c: float
    thermal_resistance_k_per_w: float
    fixed_point_iterations: int


def continuous_stall_torque(
    spec: MotorSpec,
    emf: BackEmfModel,
    grid: ThermalGrid | None = None,
    temp_limit_c: float | None = None,
    resolution: tuple[int, int] = (64, 64),
    temperature_tol: float = 0.1,
    relaxation: float = 0.5,
) -> ContinuousStallReport:
    """Bisect on current for the hottest steady point at or under the limit.

    Dissipation couples to temperature through the winding resistivity law;
    each candidate current runs a relaxed fixed-point iteration between
    I^2*R(T_peak) and the (linear) thermal solution until the peak moves
    less than temperature_tol. The default limit is the material rating
    minimum less the rating margin.
    """
    from .electromech import winding_resistance  # local import avoids a cycle

    m = spec.materials
    if temp_limit_c is None:
        temp_limit_c = min(m.insulation_rating_c, m.magnet_rating_c) - spec.thermal.rating_margin_k
    if grid is None:
        grid = build_grid(spec, resolution)
    ambient = grid.boundary_outer.temperature_c
    if temp_limit_c < ambient:
        raise SpecInvariantError("temp-limit", "temperature limit must not be below ambient")
    if temp_limit_c == ambient:
        # no rise allowed: the only admissible operating point is zero current
        return ContinuousStallReport(
            current=0.0,
            torque=0.0,
            peak_temperature_c=ambient,
            dissipation=0.0,
            temp_limit_c=temp_limit_c,
            thermal_resistance_k_per_w=math.nan,
            fixed_point_iterations=0,
        )

    # properties are temperature independent: one unit solve gives K/W
    unit = steady_state_solve(grid, 1.0)
    r_th = unit.peak_c - ambient
    if r_th <= 0:
        raise ConvergenceError("thermal model yields nonpositive thermal resistance")

    ke20 = emf.ke_phase * spec.magnetics.dc_link_factor
    r20 = winding_resistance(spec, 20.0).terminal
    alpha = m.copper_alpha

    iterations = 0

    def peak_for(current: float) -> tuple[float, float]:
        nonlocal iterations
        t_peak = ambient
        for _ in range(500):
            iterations += 1
            r_hot = r20 * (1.0 + alpha * (t_peak - 20.0))
            q = current * current * r_hot
            t_new = ambient + q * r_th
            if t_new > 5000.0:
                return math.inf, q  # thermal runaway for this current
            if abs(t_new - t_peak) < temperature_tol:
                return t_new, q
            t_peak = (1.0 - relaxation) * t_peak + relaxation * t_new
        raise ConvergenceError("resistance-temperature fixed point did not settle")

    lo, hi = 0.0, 0.25
    for _ in range(64):
        peak, _ = peak_for(hi)
        if peak > temp_limit_c:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise ConvergenceError("temperature limit not reachable at any practical current")

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        peak, _ = peak_for(mid)
        if peak <= temp_limit_c:
            lo = mid
        else:
            hi = mid

    current = lo
    peak, dissipation = peak_for(current)
    kt_hot = ke20 * (1.0 + m.magnet_temp_coeff * (peak - 20.0))
    if kt_hot <= 0:
        raise SpecInvariantError("magnet-derate", "magnet derating drives kt to zero at the limit")
    return ContinuousStallReport(
        current=current,
        torque=kt_hot * current,
        peak_temperature_c=peak,
        dissipation=dissipation,
        temp_limit_c=temp_limit_c,
        thermal_resistance_k_per_w=r_th,
        fixed_point_iterations=iterations,
    )
