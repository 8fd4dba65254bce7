"""
Axisymmetric conduction in a radial profile embedded in an effective medium.

The potential is U = u(r) cos(theta). With the radial current J = r K_r u'
the equation (r K_r u')' = K_theta u / r is integrated segment by segment
from the centre, where u(0) = 0, to r = 1. Outside, u = u0 (r + B / r) in the
medium k_star; the inclusion is invisible when the dipole coefficient B is 0.

Energies are per unit far-field amplitude and scaled so that a homogeneous
disk of conductivity k has energy k.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq, root_scalar

from wheelbounds.errors import NoConvergenceError, RegimeMismatchError, SingularProfileError
from wheelbounds.numerics import golden_section_minimize
from wheelbounds.phases import ConductorSet, Fractions, thresholds
from wheelbounds.wheel_geometry import Exterior, Isotropic, RadialProfile, Spiky

logger = logging.getLogger("wheelbounds")

SECANT_RTOL = 1e-12
SECANT_MAXITER = 100
R0_TOL = 1e-12


@dataclass(frozen=True)
class SegmentSolution:
    """
    Solution on one segment, scaled to unit far-field amplitude.

    Isotropic segments carry u = a r + c / r; spiky segments carry the
    constant ``a`` (and c = 0) with the radial current rising linearly.
    """

    segment: Isotropic | Spiky
    a: float
    c: float
    u_a: float
    j_a: float
    u_b: float
    j_b: float


@dataclass(frozen=True)
class RadialSolution:
    segments: tuple[SegmentSolution, ...]
    exterior: Exterior
    dipole_coefficient: float
    energy: float
    u_boundary: float
    flux_boundary: float


def _march(p: RadialProfile) -> list[tuple[Isotropic | Spiky, float, float, float, float, float, float]]:
    """
    Propagate (u, J) outwards from the centre with u = r in the central segment.

    :return: Per segment: (segment, a, c, u_a, J_a, u_b, J_b), unscaled.
    """
    rows = []
    first = p.segments[0]
    u, j = first.r_b, first.k * first.r_b
    rows.append((first, 1.0, 0.0, 0.0, 0.0, u, j))
    for seg in p.segments[1:]:
        if isinstance(seg, Spiky):
            u_b, j_b = u, j + seg.alpha * (seg.r_b - seg.r_a) * u
            rows.append((seg, u, 0.0, u, j, u_b, j_b))
        else:
            a = (u + j / seg.k) / (2.0 * seg.r_a)
            c = seg.r_a * (u - j / seg.k) / 2.0
            u_b = a * seg.r_b + c / seg.r_b
            j_b = seg.k * (a * seg.r_b - c / seg.r_b)
            rows.append((seg, a, c, u, j, u_b, j_b))
        u, j = rows[-1][5], rows[-1][6]
    return rows


def _dipole(u1: float, j1: float, k_star: float) -> float:
    return (k_star * u1 - j1) / (k_star * u1 + j1)


def _segment_energy(seg: Isotropic | Spiky, a: float, c: float) -> float:
    if isinstance(seg, Spiky):
        return seg.alpha * a * a * (seg.r_b - seg.r_a)
    inner = 0.0 if seg.r_a == 0 else c * c / seg.r_a**2
    return seg.k * (a * a * (seg.r_b**2 - seg.r_a**2) + inner - c * c / seg.r_b**2)


def solve_radial(p: RadialProfile, k_star: float) -> RadialSolution:
    """
    Transfer-matrix solution of the profile embedded in ``k_star``.

    Spiky segments keep u constant (infinite K_r) and add alpha (r_b - r_a) u
    to the radial current.

    :raises SingularProfileError: if ``k_star`` is not positive.
    """
    if not math.isfinite(k_star) or k_star <= 0:
        raise SingularProfileError(f"k_star must be positive and finite, got {k_star!r}.")
    rows = _march(p)
    u1, j1 = rows[-1][5], rows[-1][6]
    dipole = _dipole(u1, j1, k_star)
    far_field = (u1 + j1 / k_star) / 2.0

    segments = tuple(
        SegmentSolution(seg, *(value / far_field for value in values)) for seg, *values in rows
    )
    energy = sum(_segment_energy(seg, a, c) for seg, a, c, *_ in rows) / (u1 * u1)
    return RadialSolution(
        segments=segments,
        exterior=Exterior(k_star),
        dipole_coefficient=dipole,
        energy=energy,
        u_boundary=u1 / far_field,
        flux_boundary=j1 / far_field,
    )


def assemblage_energy(p: RadialProfile, sol: RadialSolution) -> float:
    """
    Energy of the coated inclusion, int_0^1 [K_r u'^2 + K_theta u^2 / r^2] r dr with u(1) = 1.

    Spiky segments have u' = 0 and contribute alpha u^2 (r_b - r_a).
    """
    if tuple(s.segment for s in sol.segments) != p.segments:
        raise SingularProfileError("Solution does not belong to this profile.")
    scale = sol.u_boundary
    return sum(_segment_energy(s.segment, s.a, s.c) for s in sol.segments) / (scale * scale)


def effective_conductivity(p: RadialProfile, rtol: float = SECANT_RTOL) -> float:
    """
    Conductivity of the medium in which the profile is invisible.

    The dipole vanishes where its numerator k_star u(1) - J(1) does. The secant
    runs on that numerator, which is linear in k_star, from the smallest and
    twice the largest coefficient of the profile.

    :raises SingularProfileError: if the boundary potential or current is not positive.
    :raises NoConvergenceError: if the secant iteration does not converge in 100 steps.
    """
    rows = _march(p)
    u1, j1 = rows[-1][5], rows[-1][6]
    if not (u1 > 0 and j1 > 0 and math.isfinite(u1) and math.isfinite(j1)):
        raise SingularProfileError(f"Boundary state u={u1!r}, J={j1!r} admits no positive k_star.")
    scales = [seg.k if isinstance(seg, Isotropic) else seg.alpha * seg.r_b for seg in p.segments]
    x0, x1 = min(p.conductivities), 2.0 * max(scales)

    result = root_scalar(
        lambda k: k * u1 - j1,
        x0=x0,
        x1=x1,
        method="secant",
        rtol=rtol,
        xtol=rtol * x0,
        maxiter=SECANT_MAXITER,
    )
    if not result.converged or result.root <= 0:
        raise NoConvergenceError(f"Secant iteration for k_star stopped: {result.flag}.")
    logger.debug("invisibility after %d secant steps: k_star=%.15g", result.iterations, result.root)
    return float(result.root)


def hub_field(sol: RadialSolution) -> float:
    """Amplitude of the uniform field in the central segment, per unit far field."""
    return sol.segments[0].a


def _small_m1_energy(c: ConductorSet, f: Fractions, r0: float) -> float:
    """Energy of the small-m1 wheel with hub radius r0: k2 + 2 (1 - r0)^2 / Q(r0)."""
    q = f.m1 / c.k1 + (f.m2 - r0 * r0) / c.k2
    if q <= 0:
        return math.inf
    return c.k2 + 2.0 * (1.0 - r0) ** 2 / q


def optimize_r0(c: ConductorSet, f: Fractions) -> float:
    """
    Hub radius minimizing the small-m1 wheel energy.

    The search runs over the radii for which the wheel exists: the hub must
    fit in m2 (r0 <= sqrt(m2)) and the spikes must fit around it
    (r0 >= 1 - sqrt(m3)). Golden-section search locates the minimum and a
    Brent root of the stationarity condition refines it.

    :raises RegimeMismatchError: if m1 > m12.
    """
    _, m12 = thresholds(c, f.m2)
    if f.m1 > m12:
        raise RegimeMismatchError(f"optimize_r0 needs the small-m1 regime: m1 = {f.m1!r} > m12 = {m12!r}.")
    lo, hi = 1.0 - math.sqrt(f.m3), math.sqrt(f.m2)
    if hi - lo <= R0_TOL:
        return hi

    r0, energy = golden_section_minimize(lambda r: _small_m1_energy(c, f, r), lo, hi, R0_TOL)

    # dW/dr0 vanishes where r0 (1 - r0) / k2 = Q(r0).
    def stationarity(r: float) -> float:
        return r * (1.0 - r) / c.k2 - (f.m1 / c.k1 + (f.m2 - r * r) / c.k2)

    g_lo, g_hi = stationarity(lo), stationarity(hi)
    # W decreases while the stationarity function is negative.
    if g_hi <= 0:
        r0 = hi
    elif g_lo >= 0:
        r0 = lo
    else:
        r0 = brentq(stationarity, lo, hi, xtol=R0_TOL * 1e-3, rtol=4 * np.finfo(float).eps)
    logger.debug("optimal hub radius %.15g, energy %.15g", r0, energy)
    return float(r0)


@dataclass(frozen=True)
class RadialGridSolution:
    nodes: np.ndarray
    potential: np.ndarray
    energy: float
    dipole_coefficient: float


def _segment_nodes(p: RadialProfile, n_per_segment: int) -> np.ndarray:
    parts = [np.linspace(seg.r_a, seg.r_b, n_per_segment + 1)[:-1] for seg in p.segments]
    return np.concatenate(parts + [np.array([1.0])])


def _segment_at(p: RadialProfile, r: float) -> Isotropic | Spiky:
    for seg in p.segments:
        if seg.r_a <= r <= seg.r_b:
            return seg
    return p.segments[-1]


def _theta_integral(p: RadialProfile, lo: float, hi: float) -> float:
    """int_lo^hi K_theta(r) dr across segment boundaries."""
    total = 0.0
    for seg in p.segments:
        a, b = max(lo, seg.r_a), min(hi, seg.r_b)
        if b <= a:
            continue
        total += seg.alpha * (b * b - a * a) / 2.0 if isinstance(seg, Spiky) else seg.k * (b - a)
    return total


def solve_radial_fd(
    p: RadialProfile, k_star: float, n_per_segment: int = 64, contrast: float = 1e8
) -> RadialGridSolution:
    """
    Finite-volume cross-check of :func:`solve_radial`.

    Nodes are uniform inside each segment and include every interface.
    Spiky segments get the large finite K_r = ``contrast``. Radial currents are
    taken at cell midpoints and the K_theta term is lumped at the nodes with
    u ~ r inside each dual cell. The energy is the conservative boundary
    current at r = 1 with u(0) = 0 and u(1) = 1.
    """
    if n_per_segment < 2:
        raise SingularProfileError(f"n_per_segment must be at least 2, got {n_per_segment!r}.")
    r = _segment_nodes(p, n_per_segment)
    n = r.size
    mid = 0.5 * (r[:-1] + r[1:])
    k_r = np.array([contrast if isinstance(s, Spiky) else s.k for s in (_segment_at(p, x) for x in mid)])
    conductance = mid * k_r / np.diff(r)

    dual = np.concatenate([[r[0]], mid, [r[-1]]])
    reaction = np.zeros(n)
    for i in range(1, n):
        reaction[i] = _theta_integral(p, dual[i], dual[i + 1]) / r[i]

    # Unknowns u_1..u_{n-2}; u_0 = 0 and u_{n-1} = 1.
    m = n - 2
    bands = np.zeros((3, m))
    bands[1] = conductance[:-1] + conductance[1:] + reaction[1:-1]
    bands[0, 1:] = -conductance[1:-1]
    bands[2, :-1] = -conductance[1:-1]
    rhs = np.zeros(m)
    rhs[-1] = conductance[-1]
    interior = solve_banded((1, 1), bands, rhs)
    u = np.concatenate([[0.0], interior, [1.0]])

    energy = conductance[-1] * (u[-1] - u[-2]) + reaction[-1] * u[-1]
    return RadialGridSolution(
        nodes=r, potential=u, energy=float(energy), dipole_coefficient=_dipole(1.0, float(energy), k_star)
    )
