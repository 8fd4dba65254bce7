"""
Brute-force check of the wheel constructions on a polar finite-volume grid.

A rasterized wheel (finite spikes, finite contrast for the ideal phase) fills
the unit disk; the candidate effective medium fills 1 < r <= R_out and the
linear potential is imposed on the outer rim. When the candidate is right,
the cos(theta) part of the potential outside the wheel has no dipole term.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import root_scalar
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg, splu

from wheelbounds.cond_bounds import DetCondition, FieldSpec, dual_resistivity_bound, lower_bound
from wheelbounds.errors import (
    BadContrastError,
    IllConditionedFitError,
    NoConvergenceError,
    ValidationError,
)
from wheelbounds.phases import ConductorSet, Fractions, ResistorSet
from wheelbounds.wheel_geometry import PHASE_K2, PhaseMap, build_wheel, rasterize_sector

logger = logging.getLogger("wheelbounds")

CG_RTOL = 1e-10
SECANT_RTOL = 1e-8
SECANT_MAXITER = 50
DEFAULT_R_OUT = 4.0
DET_TOL = 0.05
MAX_CONDITION = 1e12
ISLAND_CONTRAST = 10.0


@dataclass(frozen=True)
class PolarGrid:
    """
    Rings ``edges[i] <= r <= edges[i + 1]``, uniform inside the unit disk and
    geometric outside it, each split into ``ntheta`` equal sectors.
    """

    edges: np.ndarray
    n_inner: int
    ntheta: int

    @property
    def n_rings(self) -> int:
        return self.edges.size - 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def dtheta(self) -> float:
        return 2.0 * math.pi / self.ntheta

    @property
    def theta(self) -> np.ndarray:
        return (np.arange(self.ntheta) + 0.5) * self.dtheta

    @property
    def size(self) -> int:
        """Unknowns: one centre node replacing ring 0, then one per cell."""
        return 1 + (self.n_rings - 1) * self.ntheta

    @property
    def r_out(self) -> float:
        return float(self.edges[-1])


def build_grid(nr: int, ntheta: int, r_out: float) -> PolarGrid:
    """Inner rings of width 1/nr, outer rings growing geometrically from about the same width."""
    n_ext = max(8, math.ceil(math.log(r_out) / math.log1p(1.0 / nr)))
    edges = np.concatenate([np.linspace(0.0, 1.0, nr + 1), np.geomspace(1.0, r_out, n_ext + 1)[1:]])
    return PolarGrid(edges=edges, n_inner=nr, ntheta=ntheta)


@dataclass
class _PolarSystem:
    grid: PolarGrid
    conductivity: np.ndarray
    matrix: sp.csr_matrix
    center_t: np.ndarray
    radial_t: np.ndarray
    angular_t: np.ndarray
    boundary_t: np.ndarray


def _assemble(grid: PolarGrid, conductivity: np.ndarray) -> _PolarSystem:
    """
    Two-point flux finite volumes with harmonic face conductances.

    Ring 0 collapses into a single centre node with the mean conductivity of
    its cells. The angular spacing is replaced by 2 (1 - cos dtheta) / dtheta,
    which makes the stencil exact for the cos(theta) mode.
    """
    nt, nrings = grid.ntheta, grid.n_rings
    edges, rc, dth = grid.edges, grid.centers, grid.dtheta
    k = conductivity
    index = 1 + np.arange((nrings - 1) * nt).reshape(nrings - 1, nt)

    k_center = float(np.mean(k[0]))
    r1 = edges[1]
    center_t = r1 * dth / (r1 / k_center + (rc[1] - r1) / k[1])

    rf = edges[2:-1, None]
    radial_t = rf * dth / ((rf - rc[1:-1, None]) / k[1:-1] + (rc[2:, None] - rf) / k[2:])

    spacing = 2.0 * (1.0 - math.cos(dth)) / dth
    width = np.diff(edges)[1:, None]
    k_ring = k[1:]
    angular_t = 2.0 * width / (rc[1:, None] * spacing * (1.0 / k_ring + 1.0 / np.roll(k_ring, -1, axis=1)))

    r_out = edges[-1]
    boundary_t = r_out * dth / ((r_out - rc[-1]) / k[-1])

    heads = [np.zeros(nt, dtype=int), index[:-1].ravel(), index.ravel()]
    tails = [index[0], index[1:].ravel(), np.roll(index, -1, axis=1).ravel()]
    weights = [center_t, radial_t.ravel(), angular_t.ravel()]
    a, b, t = (np.concatenate(x) for x in (heads, tails, weights))
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([t, t, -t, -t])
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(grid.size, grid.size)).tocsr()
    matrix = matrix + sp.diags(np.concatenate([np.zeros(grid.size - nt), boundary_t]), format="csr")
    return _PolarSystem(grid, conductivity, matrix, center_t, radial_t, angular_t, boundary_t)


def _mode(grid: PolarGrid, loading: str) -> np.ndarray:
    if loading == "x":
        return np.cos(grid.theta)
    if loading == "y":
        return np.sin(grid.theta)
    raise ValidationError(f"Loading must be 'x' or 'y', got {loading!r}.")


def _ring_of(grid: PolarGrid) -> np.ndarray:
    """Ring index of every unknown; the centre node forms its own ring -1."""
    return np.concatenate([[-1], np.repeat(np.arange(grid.n_rings - 1), grid.ntheta)])


def _islands(system: _PolarSystem) -> sp.csr_matrix:
    """
    Indicator columns of the connected clusters of highly conducting cells.

    A cell is highly conducting when it exceeds the median conductivity by
    ``ISLAND_CONTRAST``. Each cluster is nearly equipotential.
    """
    k = system.conductivity[1:].ravel()
    high = np.flatnonzero(k > ISLAND_CONTRAST * np.median(k)) + 1
    if high.size == 0:
        return sp.csr_matrix((system.grid.size, 0))
    n_islands, labels = connected_components(system.matrix[high][:, high], directed=False)
    return sp.csr_matrix((np.ones(high.size), (high, labels)), shape=(system.grid.size, n_islands))


def _preconditioner(system: _PolarSystem) -> LinearOperator:
    """
    Exact solves along each ring plus a coarse correction on the islands.

    The ring blocks are the periodic tridiagonal part of the matrix; the coarse
    matrix is its Galerkin projection on the island indicators. Both terms are
    symmetric and their sum is positive definite.
    """
    a = system.matrix.tocoo()
    ring = _ring_of(system.grid)
    same = ring[a.row] == ring[a.col]
    lines = splu(sp.csc_matrix((a.data[same], (a.row[same], a.col[same])), shape=a.shape), permc_spec="NATURAL")
    islands = _islands(system)
    if islands.shape[1] == 0:
        return LinearOperator(a.shape, matvec=lambda r: lines.solve(np.ravel(r)), dtype=float)

    coarse = cho_factor((islands.T @ system.matrix @ islands).toarray())

    def apply(r: np.ndarray) -> np.ndarray:
        r = np.ravel(r)
        return lines.solve(r) + islands @ cho_solve(coarse, islands.T @ r)

    logger.debug("preconditioner: %d rings, %d islands", system.grid.n_rings, islands.shape[1])
    return LinearOperator(a.shape, matvec=apply, dtype=float)


def _cg(system: _PolarSystem, rhs: np.ndarray, rtol: float, x0: Optional[np.ndarray]) -> tuple[np.ndarray, int]:
    iterations = 0

    def count(_: np.ndarray) -> None:
        nonlocal iterations
        iterations += 1

    maxiter = int(50 * math.sqrt(system.grid.size))
    preconditioner = _preconditioner(system)
    x, info = cg(system.matrix, rhs, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=preconditioner, callback=count)
    if info != 0:
        raise NoConvergenceError(f"Conjugate gradients stopped after {iterations} iterations (info={info}).")
    return x, iterations


@dataclass
class SectorField:
    """Converged potential of one loading on the embedded wheel."""

    grid: PolarGrid
    conductivity: np.ndarray
    potential: np.ndarray
    loading: str
    k_star: float
    dipole_amplitude: float
    residual_norm: float
    iterations: int
    energy: float
    boundary_work: float
    system: _PolarSystem = field(repr=False)
    solution: np.ndarray = field(repr=False)

    @property
    def r_out(self) -> float:
        return self.grid.r_out


def _solve(system: _PolarSystem, k_star: float, loading: str, rtol: float, x0: Optional[np.ndarray]) -> SectorField:
    grid = system.grid
    nt = grid.ntheta
    mode = _mode(grid, loading)
    u_rim = grid.r_out * mode
    rhs = np.zeros(grid.size)
    rhs[-nt:] = system.boundary_t * u_rim

    if x0 is None:
        x0 = np.concatenate([[0.0], (grid.centers[1:, None] * mode).ravel()])
    x, iterations = _cg(system, rhs, rtol, x0)
    residual = float(np.linalg.norm(rhs - system.matrix @ x) / np.linalg.norm(rhs))
    potential = np.vstack([np.full(nt, x[0]), x[1:].reshape(grid.n_rings - 1, nt)])

    mid_ring = grid.n_inner + int(np.argmin(np.abs(grid.centers[grid.n_inner :] - 0.5 * (1.0 + grid.r_out))))
    amplitude = 2.0 / nt * float(potential[mid_ring] @ mode) - grid.centers[mid_ring]

    jumps = [
        (system.center_t, potential[1] - x[0]),
        (system.radial_t, np.diff(potential[1:], axis=0)),
        (system.angular_t, np.roll(potential[1:], -1, axis=1) - potential[1:]),
        (system.boundary_t, u_rim - potential[-1]),
    ]
    energy = float(sum(np.sum(t * d * d) for t, d in jumps))
    work = float(np.sum(system.boundary_t * (u_rim - potential[-1]) * u_rim))
    logger.debug("CG: %d iterations, residual %.2e, dipole %.3e at k*=%.10g", iterations, residual, amplitude, k_star)
    return SectorField(
        grid=grid,
        conductivity=system.conductivity,
        potential=potential,
        loading=loading,
        k_star=k_star,
        dipole_amplitude=amplitude,
        residual_norm=residual,
        iterations=iterations,
        energy=energy,
        boundary_work=work,
        system=system,
        solution=x,
    )


def _raise_if_bad_embedding(k_star: float, r_out: float) -> None:
    if not math.isfinite(k_star) or k_star <= 0:
        raise ValidationError(f"k_star must be positive and finite, got {k_star!r}.")
    if r_out < 2:
        raise ValidationError(f"R_out must be at least 2, got {r_out!r}.")


def _embed(phase_map: PhaseMap, values: tuple[float, float, float], k_star: float, r_out: float) -> _PolarSystem:
    grid = build_grid(phase_map.nr, phase_map.ntheta, r_out)
    outside = np.full((grid.n_rings - grid.n_inner, grid.ntheta), k_star)
    return _assemble(grid, np.vstack([phase_map.conductivity(values), outside]))


def solve_embedded(
    phase_map: PhaseMap,
    c: ConductorSet,
    contrast: float,
    k_star: float,
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    loading: str = "x",
) -> SectorField:
    """
    Solve div(k grad u) = 0 with the wheel inside r <= 1 and ``k_star`` outside.

    :param contrast: Finite conductivity standing in for the ideal phase.
    :param loading: ``"x"`` imposes R_out cos(theta) on the rim, ``"y"`` R_out sin(theta).
    :raises BadContrastError: if contrast <= k2.
    :raises NoConvergenceError: if CG needs more than 50 sqrt(N) iterations.
    """
    if contrast <= c.k2:
        raise BadContrastError(f"contrast = {contrast!r} must exceed k2 = {c.k2!r}.")
    _raise_if_bad_embedding(k_star, r_out)
    system = _embed(phase_map, (c.k1, c.k2, contrast), k_star, r_out)
    return _solve(system, k_star, loading, rtol, None)


@dataclass(frozen=True)
class Measurement:
    k_num: float
    iterations: int
    secant_steps: int
    sector: SectorField = field(repr=False)


def measure(
    phase_map: PhaseMap,
    values: tuple[float, float, float],
    start: tuple[float, float],
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    secant_rtol: float = SECANT_RTOL,
) -> Measurement:
    """
    Secant iteration on k_star until the dipole amplitude vanishes.

    Every solve starts CG from the previous potential.

    :param values: Cell conductivities of phases (k1, k2, ideal).
    :param start: The two starting guesses of the secant iteration.
    """
    _raise_if_bad_embedding(start[0], r_out)
    last: dict[str, SectorField] = {}
    total = 0

    def dipole(k_star: float) -> float:
        nonlocal total
        if not math.isfinite(k_star) or k_star <= 0:
            raise NoConvergenceError(f"Secant iteration left the positive axis: k_star = {k_star!r}.")
        system = _embed(phase_map, values, k_star, r_out)
        previous = last.get("field")
        sector = _solve(system, k_star, "x", rtol, None if previous is None else previous.solution)
        last["field"] = sector
        total += sector.iterations
        return sector.dipole_amplitude

    result = root_scalar(
        dipole,
        x0=start[0],
        x1=start[1],
        method="secant",
        rtol=secant_rtol,
        xtol=secant_rtol * start[0],
        maxiter=SECANT_MAXITER,
    )
    if not result.converged:
        raise NoConvergenceError(f"Secant iteration on k_star stopped: {result.flag}.")
    logger.info("k_num=%.10g after %d secant steps, %d CG iterations", result.root, result.iterations, total)
    return Measurement(k_num=float(result.root), iterations=total, secant_steps=result.iterations, sector=last["field"])


def measure_effective(
    phase_map: PhaseMap,
    c: ConductorSet,
    contrast: float,
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    secant_rtol: float = SECANT_RTOL,
) -> float:
    """Effective conductivity of the rasterized wheel, started from k2 and 2 k2."""
    if contrast <= c.k2:
        raise BadContrastError(f"contrast = {contrast!r} must exceed k2 = {c.k2!r}.")
    values = (c.k1, c.k2, contrast)
    return measure(phase_map, values, (c.k2, 2.0 * c.k2), r_out, rtol, secant_rtol).k_num


def measure_dual_resistivity(
    phase_map: PhaseMap,
    r: ResistorSet,
    contrast: float,
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    secant_rtol: float = SECANT_RTOL,
) -> float:
    """
    Effective resistivity of a wheel built for resistors (rho1, rho2) with insulating trapezoids.

    The cells conduct with 1/rho1, 1/rho2 and 1/contrast; the result is 1/k_num.
    """
    if contrast <= r.rho2:
        raise BadContrastError(f"contrast = {contrast!r} must exceed rho2 = {r.rho2!r}.")
    values = (1.0 / r.rho1, 1.0 / r.rho2, 1.0 / contrast)
    k_num = measure(phase_map, values, (1.0 / r.rho2, 0.5 / r.rho2), r_out, rtol, secant_rtol).k_num
    return 1.0 / k_num


@dataclass(frozen=True)
class VerificationReport:
    k_num: float
    bound: float
    rel_err: float
    grid: tuple[int, int]
    n_spikes: int
    contrast: float
    iterations: int
    r_out: float = DEFAULT_R_OUT
    kind: str = "wheel"

    def as_dict(self) -> dict:
        data = asdict(self)
        data["grid"] = list(self.grid)
        return data


def report_schema() -> dict:
    """JSON schema shipped with the package that every verification report satisfies."""
    text = resources.files("wheelbounds").joinpath("schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def write_report(report: Union[VerificationReport, dict], path: Union[str, Path]) -> None:
    data = report.as_dict() if isinstance(report, VerificationReport) else report
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_report(path: Union[str, Path]) -> VerificationReport:
    """
    :raises ValidationError: if required keys are missing.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return VerificationReport(
            k_num=float(data["k_num"]),
            bound=float(data["bound"]),
            rel_err=float(data["rel_err"]),
            grid=tuple(int(v) for v in data["grid"]),
            n_spikes=int(data["n_spikes"]),
            contrast=float(data["contrast"]),
            iterations=int(data["iterations"]),
            r_out=float(data.get("r_out", DEFAULT_R_OUT)),
            kind=str(data.get("kind", "wheel")),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"{path}: not a verification report ({e}).") from e


def _report(
    measurement: Measurement,
    bound: float,
    phase_map: PhaseMap,
    n_spikes: int,
    contrast: float,
    r_out: float,
    kind: str,
    k_num: Optional[float] = None,
) -> VerificationReport:
    k_num = measurement.k_num if k_num is None else k_num
    return VerificationReport(
        k_num=k_num,
        bound=bound,
        rel_err=abs(k_num - bound) / bound,
        grid=(phase_map.nr, phase_map.ntheta),
        n_spikes=n_spikes,
        contrast=contrast,
        iterations=measurement.iterations,
        r_out=r_out,
        kind=kind,
    )


def verify_wheel(
    c: ConductorSet,
    f: Fractions,
    n_spikes: int,
    nr: int,
    ntheta: int,
    contrast: float,
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    secant_rtol: float = SECANT_RTOL,
    phase_map: Optional[PhaseMap] = None,
) -> tuple[VerificationReport, Measurement]:
    """Build, rasterize and measure the optimal wheel of ``f`` against the bound."""
    if contrast <= c.k2:
        raise BadContrastError(f"contrast = {contrast!r} must exceed k2 = {c.k2!r}.")
    wheel = build_wheel(c, f)
    phase_map = phase_map or rasterize_sector(wheel, c, n_spikes, nr, ntheta, contrast)
    measurement = measure(phase_map, (c.k1, c.k2, contrast), (c.k2, 2.0 * c.k2), r_out, rtol, secant_rtol)
    bound = lower_bound(c, f).value
    return _report(measurement, bound, phase_map, n_spikes, contrast, r_out, wheel.kind.value), measurement


def verify_dual(
    r: ResistorSet,
    f: Fractions,
    n_spikes: int,
    nr: int,
    ntheta: int,
    contrast: float,
    r_out: float = DEFAULT_R_OUT,
    rtol: float = CG_RTOL,
    secant_rtol: float = SECANT_RTOL,
) -> VerificationReport:
    """Measured effective resistivity of the dual wheel against the dual bound."""
    if contrast <= r.rho2:
        raise BadContrastError(f"contrast = {contrast!r} must exceed rho2 = {r.rho2!r}.")
    as_c = r.as_conductors()
    wheel = build_wheel(as_c, f)
    phase_map = rasterize_sector(wheel, as_c, n_spikes, nr, ntheta, contrast)
    values = (1.0 / r.rho1, 1.0 / r.rho2, 1.0 / contrast)
    measurement = measure(phase_map, values, (1.0 / r.rho2, 0.5 / r.rho2), r_out, rtol, secant_rtol)
    bound = dual_resistivity_bound(r, f).value
    return _report(measurement, bound, phase_map, n_spikes, contrast, r_out, "dual", k_num=1.0 / measurement.k_num)


def verify_homogeneous(
    c: ConductorSet, nr: int, ntheta: int, r_out: float = DEFAULT_R_OUT, rtol: float = CG_RTOL
) -> VerificationReport:
    """Sanity run: a disk of pure k2 must measure k2."""
    phase_map = PhaseMap(np.full((nr, ntheta), PHASE_K2, dtype=np.int8), {"k1": c.k1, "k2": c.k2})
    measurement = measure(phase_map, (c.k1, c.k2, c.k2), (c.k1, 2.0 * c.k2), r_out, rtol)
    return _report(measurement, c.k2, phase_map, 0, c.k2, r_out, "homogeneous")


@dataclass(frozen=True)
class VerificationRun:
    n_spikes: int
    contrast: float
    nr: int
    k_num: float


@dataclass(frozen=True)
class ExtrapolationReport:
    k_inf: float
    coefficients: dict[str, float]
    residual: float
    n_runs: int

    def as_dict(self) -> dict:
        return {
            "k_inf": self.k_inf,
            "coefficients": dict(self.coefficients),
            "residual": self.residual,
            "n_runs": self.n_runs,
        }


_TERMS: dict[str, Callable[[VerificationRun], float]] = {
    "per_spike": lambda run: 1.0 / run.n_spikes,
    "per_contrast": lambda run: 1.0 / run.contrast,
    "h_squared": lambda run: 1.0 / run.nr**2,
}


def extrapolate(runs: Sequence[VerificationRun]) -> ExtrapolationReport:
    """
    Fit k_num = k_inf + a / n_spikes + b / contrast + c h^2 by least squares.

    Only parameters that actually vary across ``runs`` enter the fit; a series
    where nothing varies returns the mean.

    :raises IllConditionedFitError: with fewer than 3 runs, fewer runs than
        unknowns, or a rank-deficient design matrix.
    """
    if len(runs) < 3:
        raise IllConditionedFitError(f"Extrapolation needs at least 3 runs, got {len(runs)}.")
    k = np.array([run.k_num for run in runs])
    names = [name for name, term in _TERMS.items() if len({term(run) for run in runs}) > 1]
    columns = [np.ones(len(runs))] + [np.array([_TERMS[name](run) for run in runs]) for name in names]
    design = np.column_stack(columns)
    if design.shape[1] > len(runs):
        raise IllConditionedFitError(f"{design.shape[1]} unknowns cannot be fitted from {len(runs)} runs.")

    scale = np.max(np.abs(design), axis=0)
    scaled = design / scale
    if np.linalg.matrix_rank(scaled) < scaled.shape[1] or np.linalg.cond(scaled) > MAX_CONDITION:
        raise IllConditionedFitError(f"Design matrix for terms {names} is ill conditioned.")
    solution, *_ = np.linalg.lstsq(scaled, k, rcond=None)
    solution = solution / scale
    residual = float(np.sqrt(np.mean((design @ solution - k) ** 2)))
    coefficients = {name: float(value) for name, value in zip(names, solution[1:])}
    logger.info("extrapolated k_inf=%.10g from %d runs (terms: %s)", solution[0], len(runs), ", ".join(names) or "none")
    return ExtrapolationReport(k_inf=float(solution[0]), coefficients=coefficients, residual=residual, n_runs=len(runs))


def cell_gradients(sector: SectorField) -> tuple[np.ndarray, np.ndarray]:
    """
    Cartesian gradient (d/dx, d/dy) in rings 1 .. n_inner - 1, from face currents.

    The current through each face is divided by the cell conductivity, so the
    gradient inside high-contrast cells is as small as it physically is.
    """
    system, grid, u = sector.system, sector.grid, sector.potential
    nt, dth, edges, k = grid.ntheta, grid.dtheta, grid.edges, system.conductivity
    mode_rim = grid.r_out * _mode(grid, sector.loading)

    # Radial current densities at edges[1] .. edges[-1].
    radial = np.vstack(
        [
            system.center_t * (u[1] - u[0]) / (edges[1] * dth),
            system.radial_t * np.diff(u[1:], axis=0) / (edges[2:-1, None] * dth),
            system.boundary_t * (mode_rim - u[-1]) / (edges[-1] * dth),
        ]
    )
    width = np.diff(edges)[1:, None]
    angular = system.angular_t * (np.roll(u[1:], -1, axis=1) - u[1:]) / width

    rings = slice(1, grid.n_inner)
    k_cells = k[rings]
    g_r = 0.5 * (radial[0 : grid.n_inner - 1] + radial[1 : grid.n_inner]) / k_cells
    ang = angular[0 : grid.n_inner - 1]
    g_t = 0.5 * (ang + np.roll(ang, 1, axis=1)) / k_cells

    cos_t, sin_t = np.cos(grid.theta), np.sin(grid.theta)
    return g_r * cos_t - g_t * sin_t, g_r * sin_t + g_t * cos_t


@dataclass(frozen=True)
class PhaseFieldStats:
    phase: int
    cells: int
    target_trace: float
    median_trace: float
    median_det_ratio: float
    det_violation_rate: float
    median_deviation: float
    median_norm: float


@dataclass(frozen=True)
class FieldReport:
    phases: tuple[PhaseFieldStats, ...]

    def for_phase(self, phase: int) -> PhaseFieldStats:
        return next(p for p in self.phases if p.phase == phase)

    def as_dict(self) -> dict:
        return {"phases": [asdict(p) for p in self.phases]}


def _interior_mask(codes: np.ndarray) -> np.ndarray:
    """Cells whose four neighbours carry the same phase; the outermost rings are excluded."""
    same = np.ones_like(codes, dtype=bool)
    same[1:-1] &= (codes[1:-1] == codes[:-2]) & (codes[1:-1] == codes[2:])
    same[[0, -1]] = False
    same &= (codes == np.roll(codes, 1, axis=1)) & (codes == np.roll(codes, -1, axis=1))
    return same


def field_conditions_check(
    sector: SectorField, specs: Sequence[FieldSpec], phase_codes: np.ndarray, rtol: float = CG_RTOL
) -> FieldReport:
    """
    Compare the local field with the optimality conditions of each phase.

    The 2x2 field E has the gradients of the x- and y-loaded potentials as
    columns, so the average field is the identity. Statistics are taken over
    cells away from phase boundaries.

    :param sector: A converged x-loaded field; the y-loaded one is solved here.
    :param phase_codes: The phase map codes (nr x ntheta) the field was solved on.
    """
    other = "y" if sector.loading == "x" else "x"
    partner = _solve(sector.system, sector.k_star, other, rtol, None)
    gx_a, gy_a = cell_gradients(sector)
    gx_b, gy_b = cell_gradients(partner)
    if sector.loading == "y":
        gx_a, gy_a, gx_b, gy_b = gx_b, gy_b, gx_a, gy_a

    e11, e21, e12, e22 = gx_a, gy_a, gx_b, gy_b
    trace = e11 + e22
    det = e11 * e22 - e12 * e21
    norm_sq = e11**2 + e12**2 + e21**2 + e22**2
    codes = phase_codes[1 : sector.grid.n_inner]
    interior = _interior_mask(codes)

    stats = []
    for spec in specs:
        mask = interior & (codes == spec.phase - 1)
        if not mask.any():
            continue
        half = 0.5 * norm_sq[mask]
        ratio = np.divide(det[mask], half, out=np.zeros_like(half), where=half > 0)
        if spec.det_condition is DetCondition.ZERO:
            violations = np.abs(ratio) > DET_TOL
        elif spec.det_condition is DetCondition.NON_NEGATIVE:
            violations = ratio < -DET_TOL
        else:
            violations = np.zeros_like(ratio, dtype=bool)

        tensor = np.stack([e11[mask], e12[mask], e21[mask], e22[mask]], axis=-1)
        if spec.matrix_value is not None and np.any(spec.matrix_value):
            target = spec.matrix_value.ravel()
            deviation = np.linalg.norm(tensor - target, axis=-1) / np.linalg.norm(target)
        elif spec.matrix_value is not None:
            deviation = np.linalg.norm(tensor, axis=-1)
        else:
            isotropic = 0.5 * trace[mask][:, None] * np.array([1.0, 0.0, 0.0, 1.0])
            deviation = np.linalg.norm(tensor - isotropic, axis=-1) / np.sqrt(norm_sq[mask])
        stats.append(
            PhaseFieldStats(
                phase=spec.phase,
                cells=int(mask.sum()),
                target_trace=spec.trace_value,
                median_trace=float(np.median(trace[mask])),
                median_det_ratio=float(np.median(ratio)),
                det_violation_rate=float(np.mean(violations)),
                median_deviation=float(np.median(deviation)),
                median_norm=float(np.median(np.sqrt(norm_sq[mask]))),
            )
        )
    return FieldReport(tuple(stats))
