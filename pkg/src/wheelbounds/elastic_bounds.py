"""
Bounds on the plane bulk compliance of two elastic materials mixed with void.

Materials are described by kappa and eta, the reciprocals of the plane bulk
and shear moduli; kappa + eta = 1/E. The bound is a one-dimensional
maximization over the translation parameter t in [eta1, eta2]. The dual
problem (two materials plus a rigid phase) reuses every formula with kappa
replaced by the plane bulk modulus K and eta by the shear modulus mu.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from wheelbounds.cond_bounds import DetCondition
from wheelbounds.errors import BadModuliError, DegenerateFractionsError
from wheelbounds.numerics import golden_section_maximize
from wheelbounds.phases import Fractions, Regime, _raise_if_bad_pair

logger = logging.getLogger("wheelbounds")

T_TOL = 1e-12


@dataclass(frozen=True)
class ElasticSet:
    """Compliance parameters of materials 1 and 2; material 3 is void."""

    kappa1: float
    kappa2: float
    eta1: float
    eta2: float

    def __post_init__(self) -> None:
        _raise_if_bad_pair("kappa", self.kappa1, self.kappa2)
        _raise_if_bad_pair("eta", self.eta1, self.eta2)

    @property
    def inverse_young1(self) -> float:
        return self.kappa1 + self.eta1


@dataclass(frozen=True)
class StiffnessSet:
    """Plane bulk moduli K and shear moduli mu of materials 1 and 2; material 3 is rigid."""

    bulk1: float
    bulk2: float
    shear1: float
    shear2: float

    def __post_init__(self) -> None:
        _raise_if_bad_pair("K", self.bulk1, self.bulk2)
        _raise_if_bad_pair("mu", self.shear1, self.shear2)

    def renamed(self) -> ElasticSet:
        """The same numbers in the roles of (kappa, eta)."""
        return ElasticSet(self.bulk1, self.bulk2, self.shear1, self.shear2)


@dataclass(frozen=True)
class StressState:
    """
    Normalized trace and deviator magnitude of a 2x2 symmetric stress.

    Tr sigma^2 = 2 (sigma1^2 + sigma2^2).
    """

    sigma1: float
    sigma2: float

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise BadModuliError(f"sigma2 is a magnitude and cannot be negative, got {self.sigma2!r}.")

    @classmethod
    def from_tensor(cls, s11: float, s22: float, s12: float) -> StressState:
        return cls(0.5 * (s11 + s22), math.hypot(0.5 * (s11 - s22), s12))

    def energy(self, kappa: float, eta: float) -> float:
        """Complementary energy density ½ (kappa sigma1² + eta sigma2²)."""
        return 0.5 * (kappa * self.sigma1**2 + eta * self.sigma2**2)

    @property
    def determinant(self) -> float:
        return self.sigma1**2 - self.sigma2**2


@dataclass(frozen=True)
class ElasticBoundResult:
    value: float
    regime: Regime
    t_opt: float
    m11: float
    m12: float
    corrected_b2_flag: bool = False

    def as_dict(self) -> dict:
        return {
            "B": self.value,
            "regime": self.regime.label,
            "t_opt": self.t_opt,
            "m11": self.m11,
            "m12": self.m12,
            "corrected_b2": self.corrected_b2_flag,
        }


@dataclass(frozen=True)
class StressFieldSpec:
    """Optimality conditions on the stress in one phase."""

    phase: int
    det_condition: DetCondition
    hydrostatic: bool = False
    vanishing: bool = False

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "det": self.det_condition.value,
            "hydrostatic": self.hydrostatic,
            "zero": self.vanishing,
        }


def elastic_moduli(young: float, poisson: float) -> tuple[float, float]:
    """
    Convert (E, nu) to (kappa, eta) = ((1 - nu) / 2E, (1 + nu) / 2E).

    :raises BadModuliError: unless E > 0 and -1 < nu < 1.
    """
    if not math.isfinite(young) or young <= 0:
        raise BadModuliError(f"Young's modulus must be positive, got {young!r}.")
    if not -1.0 < poisson < 1.0:
        raise BadModuliError(f"Poisson's ratio must lie in (-1, 1), got {poisson!r}.")
    return (1.0 - poisson) / (2.0 * young), (1.0 + poisson) / (2.0 * young)


def engineering_moduli(kappa: float, eta: float) -> tuple[float, float]:
    """Inverse of :func:`elastic_moduli`: E = 1/(kappa + eta), nu = (eta - kappa)/(eta + kappa)."""
    if kappa <= 0 or eta <= 0:
        raise BadModuliError(f"kappa and eta must be positive, got {kappa!r}, {eta!r}.")
    return 1.0 / (kappa + eta), (eta - kappa) / (eta + kappa)


def elastic_thresholds(s: ElasticSet, m2: float) -> tuple[float, float]:
    root = math.sqrt(m2)
    shape = root * (1.0 - root) * s.inverse_young1
    return shape / (s.kappa2 + s.eta1), shape / (s.kappa2 + s.eta2)


def _objective(s: ElasticSet, f: Fractions, t: float) -> float:
    return -t + 1.0 / (f.m1 / s.inverse_young1 + f.m2 / (s.kappa2 + t))


def _slope(s: ElasticSet, f: Fractions, t: float) -> float:
    total = f.m1 / s.inverse_young1 + f.m2 / (s.kappa2 + t)
    return -1.0 + f.m2 / (s.kappa2 + t) ** 2 / total**2


def _regime(s: ElasticSet, f: Fractions) -> Regime:
    m11, m12 = elastic_thresholds(s, f.m2)
    if f.m1 >= m11:
        return Regime.LARGE_M1
    if f.m1 >= m12:
        return Regime.INTERMEDIATE
    return Regime.SMALL_M1


def intermediate_bound(s: ElasticSet, f: Fractions) -> tuple[float, float]:
    """Closed form of the interior maximum: (kappa2 + (1 - sqrt m2)^2 / (m1 E1), t_opt)."""
    root = math.sqrt(f.m2)
    value = s.kappa2 + (1.0 - root) ** 2 * s.inverse_young1 / f.m1
    t_opt = root * (1.0 - root) * s.inverse_young1 / f.m1 - s.kappa2
    return value, t_opt


def printed_intermediate_bound(s: ElasticSet, f: Fractions) -> tuple[float, float]:
    """
    Intermediate value and t_opt in their commonly printed form.

    Neither matches the direct maximization nor is continuous at the
    thresholds; kept so the discrepancy with :func:`intermediate_bound` can be checked.
    """
    root = math.sqrt(f.m2)
    shape = (1.0 - root) * s.inverse_young1 / f.m1
    return s.kappa2 + shape, shape - s.eta2


def bulk_bound(s: ElasticSet, f: Fractions) -> ElasticBoundResult:
    """
    Lower bound on the effective plane bulk compliance kappa_*.

    B = max over t in [eta1, eta2] of -t + (m1/(kappa1 + eta1) + m2/(kappa2 + t))^-1,
    found by golden-section search and refined by a root of the slope when
    the maximum is interior.

    :raises DegenerateFractionsError: if m1 + m2 = 0.
    """
    if f.m1 + f.m2 <= 0:
        raise DegenerateFractionsError("m1 + m2 = 0: a pure void has no finite compliance bound.")
    m11, m12 = elastic_thresholds(s, f.m2)
    t_opt, value = golden_section_maximize(lambda t: _objective(s, f, t), s.eta1, s.eta2, T_TOL)

    slope_lo, slope_hi = _slope(s, f, s.eta1), _slope(s, f, s.eta2)
    if slope_lo <= 0:
        t_opt = s.eta1
    elif slope_hi >= 0:
        t_opt = s.eta2
    else:
        t_opt = brentq(lambda t: _slope(s, f, t), s.eta1, s.eta2, xtol=T_TOL)
    value = max(value, _objective(s, f, t_opt))

    regime = _regime(s, f)
    corrected = regime is Regime.INTERMEDIATE
    if corrected:
        closed, _ = intermediate_bound(s, f)
        printed, _ = printed_intermediate_bound(s, f)
        logger.info("intermediate elastic bound %.12g (printed closed form gives %.12g)", closed, printed)
    return ElasticBoundResult(value, regime, float(t_opt), m11, m12, corrected_b2_flag=corrected)


def dual_rigid_bound(s: StiffnessSet, f: Fractions) -> ElasticBoundResult:
    """Bound for two materials plus a rigid phase, with K for kappa and mu for eta."""
    return bulk_bound(s.renamed(), f)


def elastic_field_spec(
    s: ElasticSet, f: Fractions, result: Optional[ElasticBoundResult] = None
) -> list[StressFieldSpec]:
    """
    Stress conditions in each phase of an optimal structure.

    Phase 1 is uniaxial (det sigma = 0) once t_opt leaves eta1; the hub stress
    is hydrostatic unless material 2 also fills spikes; the void carries no stress.
    """
    result = result or bulk_bound(s, f)
    uniaxial = result.t_opt > s.eta1 + 1e-9
    phase1 = StressFieldSpec(1, DetCondition.ZERO if uniaxial else DetCondition.NON_NEGATIVE)
    if result.regime is Regime.SMALL_M1:
        phase2 = StressFieldSpec(2, DetCondition.UNCONSTRAINED)
    else:
        phase2 = StressFieldSpec(2, DetCondition.NON_NEGATIVE, hydrostatic=True)
    phase3 = StressFieldSpec(3, DetCondition.ZERO, vanishing=True)
    return [phase1, phase2, phase3]


def wheel_energy_terms(s: ElasticSet, f: Fractions) -> tuple[float, float]:
    """
    Split of the intermediate bound into the hub term kappa2 and the spike term.

    The spike term (1 - sqrt m2)^2 (kappa1 + eta1) / m1 depends on material 1
    only through its Young's modulus.
    """
    value, _ = intermediate_bound(s, f)
    return s.kappa2, value - s.kappa2
