"""
Wheel assemblages that attain the conductivity bound.

A wheel is a unit disk made of a k2 hub of radius r0, an annulus of
constant-width radial spikes (k1, and k2 for the small-m1 wheel) separated
by ideal-conductor trapezoids, and optionally an outer k1 envelope starting
at r_env. Areas are normalized by the area of the unit disk, so the ring
[r, r + dr] weighs 2r dr.
"""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.optimize import bisect

from wheelbounds.errors import (
    DegenerateFractionsError,
    InfeasibleFractionsError,
    ResolutionTooCoarseError,
    SingularProfileError,
    ValidationError,
)
from wheelbounds.phases import ConductorSet, Fractions, Regime, classify_regime, thresholds

logger = logging.getLogger("wheelbounds")

AREA_TOL = 1e-10
BISECT_XTOL = 1e-12
RASTER_AREA_TOL = 2e-3
MIN_SPIKES = 4

# Phase codes used by rasterized maps and PGM files.
PHASE_K1 = 0
PHASE_K2 = 1
PHASE_IDEAL = 2


class WheelKind(enum.Enum):
    W2_13 = "W2_13"
    W2_13_1 = "W2_13_1"
    W2_123 = "W2_123"

    @property
    def label(self) -> str:
        """Printed name, e.g. W(2,13,1)."""
        return "W(" + self.value[1:].replace("_", ",") + ")"


@dataclass(frozen=True)
class WheelSpec:
    """
    Geometry of an ideal wheel.

    The spike areas ``area_k1`` and ``area_k2`` are spread over the annulus
    (r0, r_env) with constant absolute width, so the angular fraction of a
    phase at radius r is area / (2 r (r_env - r0)).
    """

    kind: WheelKind
    r0: float
    r_env: float
    area_k1: float
    area_k2: float
    fractions: Fractions
    c_env: float = 0.0
    n_spikes: Optional[int] = None

    def spike_fraction_k1(self, r: float) -> float:
        return self._spike_fraction(self.area_k1, r)

    def spike_fraction_k2(self, r: float) -> float:
        return self._spike_fraction(self.area_k2, r)

    def _spike_fraction(self, area: float, r: float) -> float:
        if not self.r0 < r < self.r_env:
            return 0.0
        return area / (2.0 * r * (self.r_env - self.r0))

    @property
    def annulus_width(self) -> float:
        return self.r_env - self.r0

    def phase_areas(self) -> tuple[float, float, float]:
        """Closed-form areas (k1, k2, ideal) of the wheel, normalized by the disk area."""
        a1 = self.area_k1 + (1.0 - self.r_env**2)
        a2 = self.r0**2 + self.area_k2
        return a1, a2, 1.0 - a1 - a2

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "r0": self.r0,
            "r_env": self.r_env,
            "c_env": self.c_env,
            "f1_at_r0": self.spike_fraction_k1(math.nextafter(self.r0, math.inf)),
            "f2_at_r0": self.spike_fraction_k2(math.nextafter(self.r0, math.inf)),
            "area_k1": self.area_k1,
            "area_k2": self.area_k2,
        }


@dataclass(frozen=True)
class Isotropic:
    r_a: float
    r_b: float
    k: float


@dataclass(frozen=True)
class Spiky:
    """Homogenized spike annulus: K_r infinite, K_theta(r) = alpha * r."""

    r_a: float
    r_b: float
    alpha: float


@dataclass(frozen=True)
class Exterior:
    k_star: float


Segment = Union[Isotropic, Spiky]


@dataclass(frozen=True)
class RadialProfile:
    """Circumferentially homogenized wheel: segments partitioning (0, 1]."""

    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        _raise_if_bad_segments(self.segments)

    @property
    def conductivities(self) -> list[float]:
        return [s.k for s in self.segments if isinstance(s, Isotropic)]


def _raise_if_bad_segments(segments: tuple[Segment, ...]) -> None:
    """
    :raises SingularProfileError: on empty or zero-measure segments, gaps,
        non-positive coefficients, or a spiky segment touching the origin.
    """
    if not segments:
        raise SingularProfileError("A radial profile needs at least one segment.")
    if segments[0].r_a != 0.0:
        raise SingularProfileError(f"The first segment must start at r = 0, got {segments[0].r_a!r}.")
    if not isinstance(segments[0], Isotropic):
        raise SingularProfileError("The central segment must be isotropic.")
    if not math.isclose(segments[-1].r_b, 1.0, rel_tol=0, abs_tol=1e-14):
        raise SingularProfileError(f"The last segment must end at r = 1, got {segments[-1].r_b!r}.")
    previous_end = 0.0
    for seg in segments:
        if seg.r_b <= seg.r_a:
            raise SingularProfileError(f"Zero-measure segment [{seg.r_a!r}, {seg.r_b!r}].")
        if not math.isclose(seg.r_a, previous_end, rel_tol=0, abs_tol=1e-14):
            raise SingularProfileError(f"Segments are not contiguous at r = {previous_end!r}.")
        coefficient = seg.k if isinstance(seg, Isotropic) else seg.alpha
        if not math.isfinite(coefficient) or coefficient <= 0:
            raise SingularProfileError(f"Segment coefficient must be positive and finite, got {coefficient!r}.")
        previous_end = seg.r_b


def spike_parameters(c: ConductorSet, f: Fractions) -> tuple[float, float, float]:
    """
    Total spike thickness b = m1 / (sqrt(m2)(1 - sqrt(m2))) and its threshold values.

    The regimes read b >= b11 (large m1), b12 <= b < b11 (intermediate), b < b12 (small m1).

    :return: Tuple (b, b11, b12).
    """
    root = math.sqrt(f.m2)
    shape = root * (1.0 - root)
    if shape == 0:
        raise DegenerateFractionsError("Spike thickness is undefined when m2 is 0 or 1.")
    return f.m1 / shape, 2.0 * c.k1 / (c.k1 + c.k2), c.k1 / c.k2


def _envelope_residual(c: ConductorSet, f: Fractions, c_env: float) -> float:
    """Distance of the core inside the envelope from its own large-m1 threshold, scaled by (1 - c_env)."""
    core = f.scaled_interior(c_env)
    m11, _ = thresholds(c, core.m2)
    return (core.m1 - m11) * (1.0 - c_env)


def envelope_fraction(c: ConductorSet, f: Fractions) -> float:
    """
    Fraction c_env of the outer k1 annulus of the large-m1 wheel.

    The residual decreases strictly in c_env on [0, m1], which brackets the root.
    """
    lo, hi = 0.0, f.m1
    r_lo = _envelope_residual(c, f, lo)
    r_hi = _envelope_residual(c, f, hi)
    if r_lo <= 0:
        return 0.0
    if r_hi >= 0:
        return hi
    c_env = bisect(lambda x: _envelope_residual(c, f, x), lo, hi, xtol=BISECT_XTOL)
    logger.debug("envelope fraction %.12g, residual %.3g", c_env, _envelope_residual(c, f, c_env))
    return float(c_env)


def _default_kind(c: ConductorSet, f: Fractions) -> WheelKind:
    regime = classify_regime(c, f)
    if regime is Regime.LARGE_M1:
        return WheelKind.W2_13_1
    if regime is Regime.INTERMEDIATE:
        return WheelKind.W2_13
    return WheelKind.W2_123


def build_wheel(c: ConductorSet, f: Fractions, kind: Optional[WheelKind] = None) -> WheelSpec:
    """
    Construct the wheel of the regime of ``f``, or of an explicitly requested kind.

    :param c: Conductivities of the finite materials.
    :param f: Volume fractions, m2 > 0.
    :param kind: Override of the default construction for the regime.
    :raises DegenerateFractionsError: if m2 = 0 (no hub).
    :raises InfeasibleFractionsError: if the requested kind cannot carry the fractions.
    """
    if f.m2 <= 0:
        raise DegenerateFractionsError("m2 = 0 leaves no hub; the optimal structure is a coated circle.")
    kind = kind or _default_kind(c, f)
    c_env = 0.0
    r_env = 1.0
    if kind is WheelKind.W2_13:
        r0 = math.sqrt(f.m2)
        area_k1, area_k2 = f.m1, 0.0
    elif kind is WheelKind.W2_123:
        r0 = c.k2 * (f.m1 / c.k1 + f.m2 / c.k2)
        area_k1, area_k2 = f.m1, f.m2 - r0 * r0
    else:
        c_env = envelope_fraction(c, f)
        r0 = math.sqrt(f.m2)
        r_env = math.sqrt(1.0 - c_env)
        area_k1, area_k2 = f.m1 - c_env, 0.0

    wheel = WheelSpec(
        kind=kind, r0=r0, r_env=r_env, area_k1=max(area_k1, 0.0), area_k2=area_k2, fractions=f, c_env=c_env
    )
    _raise_if_infeasible(wheel)
    logger.info("built %s wheel: r0=%.12g r_env=%.12g c_env=%.12g", kind.value, r0, r_env, c_env)
    return wheel


def _raise_if_infeasible(w: WheelSpec) -> None:
    if not 0 < w.r0 <= w.r_env <= 1.0:
        raise InfeasibleFractionsError(f"{w.kind.value}: radii must satisfy 0 < r0 <= r_env <= 1, got {w.r0!r}.")
    if w.area_k2 < -AREA_TOL:
        raise InfeasibleFractionsError(f"{w.kind.value}: hub area {w.r0**2!r} exceeds m2 = {w.fractions.m2!r}.")
    spikes = w.area_k1 + max(w.area_k2, 0.0)
    if spikes > AREA_TOL and spikes > 2.0 * w.r0 * w.annulus_width * (1.0 + AREA_TOL):
        raise InfeasibleFractionsError(f"{w.kind.value}: spikes overfill the circumference at r0.")
    expected = (w.fractions.m1, w.fractions.m2, w.fractions.m3)
    for name, got, want in zip(("m1", "m2", "m3"), w.phase_areas(), expected):
        if abs(got - want) > AREA_TOL:
            raise InfeasibleFractionsError(f"{w.kind.value}: area of {name} is {got!r}, expected {want!r}.")


def limiting_structure(c: ConductorSet, f: Fractions) -> str:
    """Two-material structure that the optimal wheel degenerates into on the simplex edges."""
    if f.m3 == 0:
        return "W(2,1)"
    if f.m2 == 0:
        return "W(3,1)"
    if f.m1 == 0:
        return "W(2,23)"
    return _default_kind(c, f).label


def radial_profile(w: WheelSpec, c: ConductorSet) -> RadialProfile:
    """
    Homogenize the wheel around the circumference.

    In the annulus K_theta is the harmonic mean of the spike phases (the ideal
    trapezoids add no resistance) and K_r is their arithmetic mean, which is
    infinite.
    """
    segments: list[Segment] = [Isotropic(0.0, w.r0, c.k2)]
    if w.annulus_width > 0 and (w.area_k1 > 0 or w.area_k2 > 0):
        resistance = w.area_k1 / c.k1 + max(w.area_k2, 0.0) / c.k2
        alpha = 2.0 * w.annulus_width / resistance
        segments.append(Spiky(w.r0, w.r_env, alpha))
    if w.r_env < 1.0:
        segments.append(Isotropic(w.r_env, 1.0, c.k1))
    return RadialProfile(tuple(segments))


def envelop_profile(p: RadialProfile, k_env: float, c: float) -> RadialProfile:
    """Shrink ``p`` into the disk of area 1 - c and surround it with an annulus of ``k_env``."""
    if c <= 0:
        return p
    scale = math.sqrt(1.0 - c)
    shrunk: list[Segment] = []
    for seg in p.segments:
        if isinstance(seg, Spiky):
            # K_theta keeps its value at the scaled radius, so alpha grows by 1 / scale.
            shrunk.append(Spiky(seg.r_a * scale, seg.r_b * scale, seg.alpha / scale))
        else:
            shrunk.append(Isotropic(seg.r_a * scale, seg.r_b * scale, seg.k))
    shrunk.append(Isotropic(scale, 1.0, k_env))
    return RadialProfile(tuple(shrunk))


def coated_circles(k_env: float, k_nucl: float, c: float) -> float:
    """
    Effective conductivity of a nucleus ``k_nucl`` coated by ``k_env`` taking fraction ``c``.

    Solves 1/(k_cs + k_env) = c (1/(2 k_env) - 1/(k_nucl + k_env)) + 1/(k_nucl + k_env).
    ``k_nucl = math.inf`` is an ideal-conductor core.
    """
    core = 0.0 if math.isinf(k_nucl) else 1.0 / (k_nucl + k_env)
    rhs = c * (0.5 / k_env - core) + core
    return 1.0 / rhs - k_env


@dataclass
class PhaseMap:
    """
    Phase codes on a uniform polar grid of the unit disk.

    ``phases[i, j]`` is the phase of the cell r in [i, i + 1] / nr,
    theta in [j, j + 1] * 2 pi / ntheta.
    """

    phases: np.ndarray
    metadata: dict[str, float] = field(default_factory=dict)

    @property
    def nr(self) -> int:
        return self.phases.shape[0]

    @property
    def ntheta(self) -> int:
        return self.phases.shape[1]

    @property
    def r_edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nr + 1)

    def cell_areas(self) -> np.ndarray:
        """Ring weights (r_b^2 - r_a^2) / ntheta, one per ring."""
        edges = self.r_edges
        return (edges[1:] ** 2 - edges[:-1] ** 2) / self.ntheta

    def fractions(self) -> tuple[float, float, float]:
        weights = self.cell_areas()[:, None]
        return tuple(float(np.sum(weights * (self.phases == code))) for code in (PHASE_K1, PHASE_K2, PHASE_IDEAL))

    def conductivity(self, values: tuple[float, float, float]) -> np.ndarray:
        """Map phase codes to ``values`` (for k1, k2, ideal)."""
        return np.asarray(values, dtype=float)[self.phases]


def _ring_areas(w: WheelSpec, r_a: float, r_b: float) -> np.ndarray:
    """Exact areas (k1, k2, ideal) of the wheel inside the ring [r_a, r_b]."""

    def overlap(lo: float, hi: float) -> tuple[float, float]:
        return max(r_a, lo), min(r_b, hi)

    a1 = a2 = 0.0
    lo, hi = overlap(0.0, w.r0)
    if hi > lo:
        a2 += hi * hi - lo * lo
    lo, hi = overlap(w.r0, w.r_env)
    if hi > lo and w.annulus_width > 0:
        a1 += w.area_k1 * (hi - lo) / w.annulus_width
        a2 += max(w.area_k2, 0.0) * (hi - lo) / w.annulus_width
    lo, hi = overlap(w.r_env, 1.0)
    if hi > lo:
        a1 += hi * hi - lo * lo
    total = r_b * r_b - r_a * r_a
    return np.array([a1, a2, max(total - a1 - a2, 0.0)])


def _largest_remainder(targets: np.ndarray, total: int) -> np.ndarray:
    counts = np.floor(targets).astype(int)
    counts = np.clip(counts, 0, None)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(targets - counts), kind="stable")
        for idx in order[:short]:
            counts[idx] += 1
    elif short < 0:
        order = np.argsort(targets - counts, kind="stable")
        for idx in order:
            if short == 0:
                break
            if counts[idx] > 0:
                counts[idx] -= 1
                short += 1
    return counts


def _spread(count: int, n_spikes: int) -> np.ndarray:
    """Cells per spike; the remainder goes to the last spikes."""
    per_spike = np.full(n_spikes, count // n_spikes, dtype=int)
    remainder = count % n_spikes
    if remainder:
        per_spike[-remainder:] += 1
    return per_spike


def _spike_cells(n_k1: int, n_k2: int, n_spikes: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Split a ring's k1 and k2 cells over the spikes.

    The spike totals are spread first and k1 takes its share inside each one.
    Both remainders go to the last spikes, so k1 never exceeds a spike total.
    """
    total = _spread(n_k1 + n_k2, n_spikes)
    n1 = _spread(n_k1, n_spikes)
    return n1, total - n1


def rasterize_sector(
    w: WheelSpec, c: ConductorSet, n_spikes: int, nr: int, ntheta: int, contrast: float
) -> PhaseMap:
    """
    Rasterize a wheel with ``n_spikes`` spikes on an nr x ntheta polar grid.

    Per ring, the exact phase areas are rounded to whole cells (largest
    remainder) and the rounding error is carried into the next ring. Inside
    every spike period the cells are laid out as [k1][k2][ideal].

    :raises ValidationError: if n_spikes < 4 or ntheta is not a multiple of 2 n_spikes.
    :raises ResolutionTooCoarseError: if spikes overflow their period, a spike
        gets no cell in a ring of the annulus, or the measured fractions miss
        the prescribed ones by more than 2e-3.
    """
    if n_spikes < MIN_SPIKES:
        raise ValidationError(f"At least {MIN_SPIKES} spikes are required, got {n_spikes!r}.")
    if ntheta % (2 * n_spikes):
        raise ValidationError(f"ntheta = {ntheta!r} is not a multiple of 2 * n_spikes = {2 * n_spikes!r}.")
    if nr < 1:
        raise ValidationError(f"nr must be positive, got {nr!r}.")

    period = ntheta // n_spikes
    edges = np.linspace(0.0, 1.0, nr + 1)
    phases = np.full((nr, ntheta), PHASE_IDEAL, dtype=np.int8)
    carry = np.zeros(3)
    spiky = w.annulus_width > 0 and w.area_k1 + max(w.area_k2, 0.0) > 0
    for i in range(nr):
        cell_area = (edges[i + 1] ** 2 - edges[i] ** 2) / ntheta
        exact = _ring_areas(w, edges[i], edges[i + 1]) + carry
        counts = _largest_remainder(np.clip(exact, 0.0, None) / cell_area, ntheta)
        carry = exact - counts * cell_area
        n1, n2 = _spike_cells(int(counts[0]), int(counts[1]), n_spikes)
        if np.any(n1 + n2 > period):
            raise ResolutionTooCoarseError(f"Ring {i}: spikes overflow a period of {period} cells.")
        if spiky and min(edges[i + 1], w.r_env) > max(edges[i], w.r0) and np.any(n1 + n2 == 0):
            raise ResolutionTooCoarseError(
                f"Ring {i}: a spike gets no cell and the ideal phase closes the ring; use fewer spikes."
            )
        for s in range(n_spikes):
            start = s * period
            phases[i, start : start + n1[s]] = PHASE_K1
            phases[i, start + n1[s] : start + n1[s] + n2[s]] = PHASE_K2

    phase_map = PhaseMap(
        phases=phases,
        metadata={"k1": c.k1, "k2": c.k2, "contrast": contrast, "m1": w.fractions.m1, "m2": w.fractions.m2},
    )
    measured = phase_map.fractions()
    expected = (w.fractions.m1, w.fractions.m2, w.fractions.m3)
    error = max(abs(a - b) for a, b in zip(measured, expected))
    if error > RASTER_AREA_TOL:
        raise ResolutionTooCoarseError(f"Rasterized fractions {measured!r} miss {expected!r} by {error:.3g}.")
    logger.info("rasterized %s: %dx%d, %d spikes, area error %.2e", w.kind.value, nr, ntheta, n_spikes, error)
    return phase_map


def write_pgm(phase_map: PhaseMap, path: Union[str, Path]) -> None:
    """Write phase codes as a plain PGM (P2), one ring per row, metadata in a comment line."""
    comment = " ".join(f"{key}={value!r}" for key, value in sorted(phase_map.metadata.items()))
    lines = ["P2", f"# {comment}", f"{phase_map.ntheta} {phase_map.nr}", str(PHASE_IDEAL)]
    lines.extend(" ".join(str(int(v)) for v in row) for row in phase_map.phases)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_META_RE = re.compile(r"(\w+)=(\S+)")


def read_pgm(path: Union[str, Path]) -> PhaseMap:
    """
    Read a map written by :func:`write_pgm`.

    :raises ValidationError: if the file is not a P2 map with codes 0..2.
    """
    metadata: dict[str, float] = {}
    tokens: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            metadata.update({key: float(value) for key, value in _META_RE.findall(line)})
        else:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise ValidationError(f"{path}: not a plain PGM (P2) file.")
    width, height, max_value = (int(t) for t in tokens[1:4])
    values = np.array([int(t) for t in tokens[4:]], dtype=np.int8)
    if values.size != width * height:
        raise ValidationError(f"{path}: expected {width * height} values, found {values.size}.")
    if max_value != PHASE_IDEAL or values.min() < 0 or values.max() > PHASE_IDEAL:
        raise ValidationError(f"{path}: phase codes must lie in 0..{PHASE_IDEAL}.")
    return PhaseMap(phases=values.reshape(height, width), metadata=metadata)
