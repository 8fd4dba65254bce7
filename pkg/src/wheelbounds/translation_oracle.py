"""
Numerical reconstruction of the conductivity bound from translated wells.

Each finite phase i carries a state (s_i, d_i) with det E = (s^2 - d^2)/4 and
energy (k/4)(s^2 + d^2). Adding t det E gives the translated well; the
pointwise constraint det E >= 0 confines states to the cone |d| <= s. For a
fixed t the wells are replaced by their cone-restricted convex envelopes and
minimized under the average constraints; the bound is the maximum over t.

The average field is the identity: s0 = 2, d0 = 0, det E0 = 1.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull

from wheelbounds.errors import ConeViolationError, DegenerateFractionsError
from wheelbounds.numerics import golden_section_maximize
from wheelbounds.phases import ConductorSet, Fractions

logger = logging.getLogger("wheelbounds")

S_AVERAGE = 2.0
D_AVERAGE = 0.0
DET_AVERAGE = 1.0
T_TOL = 1e-10
CONE_BRANCHES = ("interior", "edge+", "edge-")


@dataclass(frozen=True)
class TranslationState:
    """Per-phase field variables at the minimizer; phase 3 is (0, 0) and not stored."""

    s: tuple[float, float]
    d: tuple[float, float]
    t: float
    gamma: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class OracleResult:
    bound_value: float
    t_opt: float
    minimizer: TranslationState
    # "well" or "envelope" for phases 1 and 2
    branch: tuple[str, str] = field(default=("well", "well"))

    def as_dict(self) -> dict:
        return {
            "B": self.bound_value,
            "t_opt": self.t_opt,
            "s": list(self.minimizer.s),
            "d": list(self.minimizer.d),
            "branch": list(self.branch),
        }


def _conductivity(i: int, c: ConductorSet) -> float:
    if i == 1:
        return c.k1
    if i == 2:
        return c.k2
    raise ValueError(f"Phase index must be 1, 2 or 3, got {i!r}.")


def translated_well(i: int, s: float, d: float, t: float, c: ConductorSet) -> float:
    """
    Translated energy of phase ``i`` restricted to the cone s^2 >= d^2.

    :return: ¼[(k_i + t)s² + (k_i − t)d²] inside the cone, ``math.inf`` outside.
        Phase 3 is 0 at the origin and infinite elsewhere.
    """
    if i == 3:
        return 0.0 if s == 0 and d == 0 else math.inf
    if s * s < d * d:
        return math.inf
    k = _conductivity(i, c)
    return 0.25 * ((k + t) * s * s + (k - t) * d * d)


def envelope_well(i: int, s: float, d: float, t: float, c: ConductorSet) -> float:
    """
    Convex envelope of :func:`translated_well` on the cone.

    For t > k_i the well is concave in d, so its envelope is the value on the
    cone edge d = ±s, namely ½ k_i s².

    :raises ConeViolationError: if s² < d².
    """
    if s * s < d * d:
        raise ConeViolationError(f"State (s={s!r}, d={d!r}) is outside the cone s^2 >= d^2.")
    if i == 3:
        return translated_well(i, s, d, t, c)
    k = _conductivity(i, c)
    if t <= k:
        return translated_well(i, s, d, t, c)
    return 0.5 * k * s * s


def _s_coefficient(k: float, t: float) -> float:
    """Coefficient a of the envelope written as a·s² on the line d = 0."""
    return 0.25 * (k + min(t, k))


def _d_coefficient(k: float, t: float) -> float:
    """Coefficient of d² inside the cone; the envelope is flat in d once t > k."""
    return 0.25 * (k - min(t, k))


def branch_min(
    c: ConductorSet, f: Fractions, t: float, branch: tuple[str, str]
) -> Optional[tuple[float, TranslationState]]:
    """
    Minimum of Σ m_i·envelope_well_i with each finite phase held on one part of the cone.

    An ``"interior"`` phase keeps a free d_i weighted by the d² coefficient of
    its envelope. An ``"edge+"`` or ``"edge-"`` phase sits on d_i = ±s_i, where
    the envelope is ½ k_i s_i². Both averages are imposed through one KKT system.

    :param branch: Cone part of phases 1 and 2; ignored for a phase of zero fraction.
    :return: The value and state, or None if the branch cannot meet the averages
        or its interior states leave the cone.
    """
    fractions = (f.m1, f.m2)
    ks = (c.k1, c.k2)
    active = [i for i in range(2) if fractions[i] > 0]
    interior = [i for i in active if branch[i] == "interior"]
    n = len(active) + len(interior)

    hessian = np.zeros((n, n))
    constraints = np.zeros((2, n))
    for col, i in enumerate(active):
        constraints[0, col] = fractions[i]
        if branch[i] == "interior":
            hessian[col, col] = 2.0 * fractions[i] * _s_coefficient(ks[i], t)
        else:
            hessian[col, col] = fractions[i] * ks[i]
            constraints[1, col] = fractions[i] * (1.0 if branch[i] == "edge+" else -1.0)
    for j, i in enumerate(interior):
        col = len(active) + j
        hessian[col, col] = 2.0 * fractions[i] * _d_coefficient(ks[i], t)
        constraints[1, col] = fractions[i]

    kkt = np.block([[hessian, -constraints.T], [constraints, np.zeros((2, 2))]])
    rhs = np.concatenate([np.zeros(n), [S_AVERAGE, D_AVERAGE]])
    solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    if np.linalg.norm(kkt @ solution - rhs) > 1e-9 * (1.0 + np.linalg.norm(rhs)):
        return None

    s, d = [0.0, 0.0], [0.0, 0.0]
    for col, i in enumerate(active):
        s[i] = float(solution[col])
        if branch[i] != "interior":
            d[i] = s[i] if branch[i] == "edge+" else -s[i]
    for j, i in enumerate(interior):
        d[i] = float(solution[len(active) + j])
        if d[i] * d[i] > s[i] * s[i] * (1.0 + 1e-12):
            return None
    x = solution[:n]
    value = 0.5 * float(x @ hessian @ x)
    return value, TranslationState(s=(s[0], s[1]), d=(d[0], d[1]), t=t)


def constrained_min(c: ConductorSet, f: Fractions, t: float) -> tuple[float, TranslationState]:
    """
    Minimize Σ m_i·envelope_well_i subject to Σ m_i s_i = 2 and Σ m_i d_i = 0.

    Every combination of interior and edge branches for the two finite phases
    is solved by :func:`branch_min` and the smallest value wins. Ties keep the
    earlier branch, so the interior solution d = 0 is reported when an edge
    branch only matches it.

    :raises DegenerateFractionsError: if m1 = m2 = 0.
    """
    if f.m1 + f.m2 <= 0:
        raise DegenerateFractionsError("No finite phase to carry the average field.")
    best: Optional[tuple[float, TranslationState]] = None
    best_branch: tuple[str, str] = ("interior", "interior")
    for branch in itertools.product(CONE_BRANCHES, repeat=2):
        if (f.m1 == 0 and branch[0] != "interior") or (f.m2 == 0 and branch[1] != "interior"):
            continue
        candidate = branch_min(c, f, t, branch)
        if candidate is None:
            continue
        if best is None or candidate[0] < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best, best_branch = candidate, branch
    if best is None:
        raise DegenerateFractionsError(f"No cone branch carries the average field at t = {t!r}.")
    logger.debug("constrained minimum %.12g on cone branch %s at t=%.12g", best[0], best_branch, t)
    return best


def _branch(c: ConductorSet, t: float) -> tuple[str, str]:
    return tuple("envelope" if t > k + T_TOL else "well" for k in (c.k1, c.k2))


def translation_objective(c: ConductorSet, f: Fractions, t: float) -> float:
    """Lower bound delivered by a single translation parameter: constrained_min(t) - t·det E0."""
    value, _ = constrained_min(c, f, t)
    return value - t * DET_AVERAGE


def maximize_over_t(c: ConductorSet, f: Fractions, tol: float = T_TOL) -> OracleResult:
    """
    Bound as the maximum of :func:`translation_objective` over t in [0, 2 k2].

    The objective is concave in t, so golden-section search applies.
    """
    return _maximize(c, f, 0.0, 2.0 * c.k2, tol)


def classical_translation_bound(c: ConductorSet, f: Fractions, tol: float = T_TOL) -> OracleResult:
    """
    Translation bound without the pointwise det constraint.

    Without the cone the well of material 1 is unbounded below once t > k1,
    so t is confined to [0, k1]; the result equals the B1 formula at every
    fraction and is not sharp for small m1.
    """
    return _maximize(c, f, 0.0, c.k1, tol)


def _maximize(c: ConductorSet, f: Fractions, lo: float, hi: float, tol: float) -> OracleResult:
    t_opt, value = golden_section_maximize(lambda t: translation_objective(c, f, t), lo, hi, tol)
    _, state = constrained_min(c, f, t_opt)
    logger.debug("translation maximum on [%g, %g]: t_opt=%.12g B=%.12g", lo, hi, t_opt, value)
    return OracleResult(bound_value=value, t_opt=t_opt, minimizer=state, branch=_branch(c, t_opt))


def split_objective(
    c: ConductorSet,
    f: Fractions,
    t: float,
    states: np.ndarray,
    weights: np.ndarray,
) -> float:
    """
    Objective when every finite phase is split into two sub-states.

    :param states: Array of shape (2, 2, 2): phase, sub-state, (s, d).
    :param weights: Array of shape (2,): share of sub-state "a" inside each phase.
    :return: Σ_i m_i [w_i F_i(a) + (1 - w_i) F_i(b)] - t, with F the envelope well.
        Infinite if a sub-state leaves the cone.
    """
    total = 0.0
    for idx, m in enumerate((f.m1, f.m2)):
        if m == 0:
            continue
        w = weights[idx]
        for share, (s, d) in ((w, states[idx, 0]), (1.0 - w, states[idx, 1])):
            if s * s < d * d:
                return math.inf
            total += m * share * envelope_well(idx + 1, float(s), float(d), t, c)
    return total - t * DET_AVERAGE


def grid_envelope(
    i: int, t: float, c: ConductorSet, h: float = 1e-2, s_max: float = 8.0
) -> Callable[[float, float], float]:
    """
    Lower convex hull of :func:`translated_well` sampled on the cone grid.

    The grid holds all (s, d) with s, d multiples of ``h``, |d| <= s <= s_max.
    The returned callable evaluates the piecewise-linear hull as the maximum
    of the planes carried by its lower facets.
    """
    s_axis = np.arange(0.0, s_max + 0.5 * h, h)
    ss, dd = np.meshgrid(s_axis, np.concatenate([-s_axis[:0:-1], s_axis]), indexing="ij")
    inside = dd * dd <= ss * ss + 1e-15
    s_pts, d_pts = ss[inside], dd[inside]
    k = _conductivity(i, c)
    w_pts = 0.25 * ((k + t) * s_pts**2 + (k - t) * d_pts**2)

    hull = ConvexHull(np.column_stack([s_pts, d_pts, w_pts]))
    eq = hull.equations
    lower = eq[eq[:, 2] < -1e-12]
    slope_s = -lower[:, 0] / lower[:, 2]
    slope_d = -lower[:, 1] / lower[:, 2]
    offset = -lower[:, 3] / lower[:, 2]

    def evaluate(s: float, d: float) -> float:
        if s * s < d * d - 1e-15 or s > s_max:
            return math.inf
        return float(np.max(slope_s * s + slope_d * d + offset))

    return evaluate
