"""
Value types shared by every module: materials, volume fractions, regimes.

Material 3 is always the ideal phase (infinite conductivity in the primal
problem, infinite resistivity in the dual one) and is never stored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from wheelbounds.errors import (
    DegenerateFractionsError,
    NonPositiveError,
    OutOfSimplexError,
    UnorderedError,
)

SIMPLEX_TOL = 1e-12


class Regime(enum.Enum):
    """Branch of the bound, selected by the position of m1 relative to (m12, m11)."""

    LARGE_M1 = "B1"
    INTERMEDIATE = "B2"
    SMALL_M1 = "B3"

    @property
    def label(self) -> str:
        return self.value


def _raise_if_bad_pair(name: str, low: float, high: float) -> None:
    """
    Raise if a pair of moduli is not strictly positive and ascending.

    :raises NonPositiveError: if either value is not > 0 (or not finite).
    :raises UnorderedError: if low > high.
    """
    for suffix, value in (("1", low), ("2", high)):
        if not math.isfinite(value) or value <= 0:
            raise NonPositiveError(f"{name}{suffix} must be a positive finite number, got {value!r}.")
    if low > high:
        raise UnorderedError(f"Materials must be ordered: {name}1 = {low!r} > {name}2 = {high!r}.")


@dataclass(frozen=True)
class ConductorSet:
    """Conductivities 0 < k1 <= k2; k3 is the ideal conductor."""

    k1: float
    k2: float

    def __post_init__(self) -> None:
        _raise_if_bad_pair("k", self.k1, self.k2)


@dataclass(frozen=True)
class ResistorSet:
    """Resistivities 0 < rho1 <= rho2; rho3 is the ideal insulator."""

    rho1: float
    rho2: float

    def __post_init__(self) -> None:
        _raise_if_bad_pair("rho", self.rho1, self.rho2)

    def as_conductors(self) -> ConductorSet:
        """The same numbers read as conductivities; the dual bound reuses every primal formula."""
        return ConductorSet(self.rho1, self.rho2)


@dataclass(frozen=True)
class Fractions:
    """A point (m1, m2, m3) of the volume-fraction simplex with m1 + m2 > 0."""

    m1: float
    m2: float
    m3: float

    def __post_init__(self) -> None:
        values = (self.m1, self.m2, self.m3)
        if any(not math.isfinite(m) for m in values):
            raise OutOfSimplexError(f"Volume fractions must be finite, got {values!r}.")
        if any(m < 0 for m in values):
            raise OutOfSimplexError(f"Volume fractions must be non-negative, got {values!r}.")
        if abs(sum(values) - 1.0) > SIMPLEX_TOL:
            raise OutOfSimplexError(f"Volume fractions must sum to 1, got {sum(values)!r}.")
        if self.m1 + self.m2 <= 0:
            raise DegenerateFractionsError("m1 + m2 = 0: a pure ideal phase has an infinite bound.")

    def scaled_interior(self, c_env: float) -> Fractions:
        """
        Fractions of the core left after removing an outer fraction ``c_env`` of material 1.

        :param c_env: Fraction of the whole inclusion taken by the enveloping annulus.
        """
        rest = 1.0 - c_env
        m1 = max(self.m1 - c_env, 0.0) / rest
        m2 = min(self.m2 / rest, 1.0)
        return Fractions(m1, m2, max(1.0 - m1 - m2, 0.0))


def make_conductors(k1: float, k2: float) -> ConductorSet:
    """
    Build a validated conductor set.

    :raises NonPositiveError: if k1 or k2 is not positive.
    :raises UnorderedError: if k1 > k2.
    """
    return ConductorSet(float(k1), float(k2))


def make_resistors(rho1: float, rho2: float) -> ResistorSet:
    """Build a validated resistor set; errors as :func:`make_conductors`."""
    return ResistorSet(float(rho1), float(rho2))


def make_fractions(m1: float, m2: float) -> Fractions:
    """
    Build fractions from (m1, m2) with m3 = 1 - m1 - m2.

    Round-off below the simplex tolerance is clipped so that m3 never comes
    out as a tiny negative number.

    :raises OutOfSimplexError: if any fraction is negative or m1 + m2 > 1.
    :raises DegenerateFractionsError: if m1 + m2 = 0.
    """
    m1, m2 = float(m1), float(m2)
    if m1 < 0 or m2 < 0:
        raise OutOfSimplexError(f"Volume fractions must be non-negative, got m1={m1!r}, m2={m2!r}.")
    m3 = 1.0 - m1 - m2
    if m3 < -SIMPLEX_TOL:
        raise OutOfSimplexError(f"m1 + m2 = {m1 + m2!r} exceeds 1.")
    return Fractions(m1, m2, max(m3, 0.0))


def thresholds(c: ConductorSet, m2: float) -> tuple[float, float]:
    """
    Threshold values (m11, m12) of m1 that separate the three regimes.

    Both vanish when m2 is 0 or 1.
    """
    root = math.sqrt(m2)
    shape = root - m2
    m11 = 2.0 * c.k1 / (c.k1 + c.k2) * shape
    m12 = c.k1 / c.k2 * shape
    return m11, m12


def classify_regime(c: ConductorSet, f: Fractions) -> Regime:
    """
    Regime of the bound at ``f``.

    Ties go upwards: m1 == m11 is LARGE_M1 and m1 == m12 is INTERMEDIATE.
    """
    m11, m12 = thresholds(c, f.m2)
    if f.m1 >= m11:
        return Regime.LARGE_M1
    if f.m1 >= m12:
        return Regime.INTERMEDIATE
    return Regime.SMALL_M1
