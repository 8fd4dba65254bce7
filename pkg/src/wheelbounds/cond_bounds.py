"""
Closed-form lower bounds on the effective conductivity of a two-dimensional
composite of two isotropic conductors and an ideal conductor.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from wheelbounds.phases import (
    ConductorSet,
    Fractions,
    Regime,
    ResistorSet,
    classify_regime,
    thresholds,
)

logger = logging.getLogger("wheelbounds")


@dataclass(frozen=True)
class BoundResult:
    """Bound value with the regime, optimal translation parameter and thresholds behind it."""

    value: float
    regime: Regime
    t_opt: float
    m11: float
    m12: float

    def as_dict(self) -> dict:
        return {
            "B": self.value,
            "regime": self.regime.label,
            "t_opt": self.t_opt,
            "m11": self.m11,
            "m12": self.m12,
        }


class DetCondition(enum.Enum):
    ZERO = "zero"
    NON_NEGATIVE = "non_negative"
    UNCONSTRAINED = "unconstrained"


@dataclass(frozen=True)
class FieldSpec:
    """
    Optimality conditions on the 2x2 field E in one phase.

    :param phase: Phase index 1, 2 or 3.
    :param trace_value: Prescribed value of Tr E.
    :param det_condition: Constraint on det E.
    :param matrix_value: The full field when it is determined, otherwise None.
    """

    phase: int
    trace_value: float
    det_condition: DetCondition
    matrix_value: Optional[np.ndarray] = None

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "trace": self.trace_value,
            "det": self.det_condition.value,
            "matrix": None if self.matrix_value is None else self.matrix_value.tolist(),
        }


def _b1(c: ConductorSet, f: Fractions) -> float:
    return -c.k1 + 1.0 / (f.m1 / (2.0 * c.k1) + f.m2 / (c.k1 + c.k2))


def _b2(c: ConductorSet, f: Fractions) -> float:
    return c.k2 + 2.0 * c.k1 / f.m1 * (1.0 - math.sqrt(f.m2)) ** 2


def _b3(c: ConductorSet, f: Fractions) -> float:
    return -c.k2 + 1.0 / (f.m1 / (2.0 * c.k1) + f.m2 / (2.0 * c.k2))


def intermediate_t_opt(c: ConductorSet, f: Fractions) -> float:
    """Stationary point of B(t) = -t + (m1/(2 k1) + m2/(k2 + t))^-1 inside (k1, k2)."""
    return 2.0 * c.k1 * (math.sqrt(f.m2) - f.m2) / f.m1 - c.k2


def lower_bound(c: ConductorSet, f: Fractions) -> BoundResult:
    """
    Exact lower bound B(m1, m2) on the effective conductivity.

    m2 = 0 makes both thresholds vanish, so it always lands on the B1 branch and
    the empty intermediate interval is never evaluated.

    :param c: Conductivities of the two finite materials.
    :param f: Volume fractions (validated on construction, so m1 + m2 > 0).
    :return: The bound and the data that produced it.
    """
    m11, m12 = thresholds(c, f.m2)
    regime = classify_regime(c, f)
    if regime is Regime.LARGE_M1:
        value, t_opt = _b1(c, f), c.k1
    elif regime is Regime.INTERMEDIATE:
        value, t_opt = _b2(c, f), intermediate_t_opt(c, f)
    else:
        value, t_opt = _b3(c, f), c.k2
    logger.debug("lower_bound k=(%g, %g) m=(%g, %g): %s = %.12g", c.k1, c.k2, f.m1, f.m2, regime.label, value)
    return BoundResult(value=value, regime=regime, t_opt=t_opt, m11=m11, m12=m12)


def optimal_fields(c: ConductorSet, f: Fractions) -> list[FieldSpec]:
    """
    Fields in each phase of an optimal structure.

    The average field is the identity, so m1 Tr E1 + m2 Tr E2 = 2 in every regime.
    """
    regime = classify_regime(c, f)
    identity = np.eye(2)
    if regime is Regime.LARGE_M1:
        h1 = 1.0 / (f.m1 / (2.0 * c.k1) + f.m2 / (c.k1 + c.k2))
        amplitude = h1 / (c.k1 + c.k2)
        phase1 = FieldSpec(1, h1 / c.k1, DetCondition.NON_NEGATIVE)
        phase2 = FieldSpec(2, 2.0 * amplitude, DetCondition.NON_NEGATIVE, amplitude * identity)
    elif regime is Regime.INTERMEDIATE:
        root = math.sqrt(f.m2)
        phase1 = FieldSpec(1, 2.0 * (1.0 - root) / f.m1, DetCondition.ZERO)
        phase2 = FieldSpec(2, 2.0 / root, DetCondition.NON_NEGATIVE, identity / root)
    else:
        h2 = 1.0 / (f.m1 / c.k1 + f.m2 / c.k2)
        phase1 = FieldSpec(1, 2.0 * h2 / c.k1, DetCondition.ZERO)
        phase2 = FieldSpec(2, 2.0 * h2 / c.k2, DetCondition.UNCONSTRAINED)
    phase3 = FieldSpec(3, 0.0, DetCondition.ZERO, np.zeros((2, 2)))
    return [phase1, phase2, phase3]


def dual_resistivity_bound(r: ResistorSet, f: Fractions) -> BoundResult:
    """Lower bound on the effective resistivity of two resistors and an ideal insulator."""
    return lower_bound(r.as_conductors(), f)


def hashin_shtrikman_two_phase(k1: float, k2: float, m1: float) -> float:
    """Classical lower bound for a two-phase mixture with fraction m1 of the weaker conductor."""
    m2 = 1.0 - m1
    if k1 == k2:
        return k1
    return k1 + m2 / (1.0 / (k2 - k1) + m1 / (2.0 * k1))
