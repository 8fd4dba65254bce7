"""Golden-section search on a closed interval."""

from __future__ import annotations

import math
from collections.abc import Callable

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2


def golden_section_maximize(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-10
) -> tuple[float, float]:
    """
    Derivative-free maximization of a unimodal function on [a, b].

    Unlike a bracketing search the function is never evaluated outside [a, b],
    and the interval endpoints are compared against the interior estimate so
    that maxima sitting exactly on an endpoint are returned exactly.

    :param f: Objective to maximize.
    :param a: Lower end of the interval.
    :param b: Upper end of the interval.
    :param tol: Width of the final bracket.
    :return: Tuple of (argmax, max value).
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    fc = f(c)
    fd = f(d)
    lo, hi = a, b
    for _ in range(n):
        if fc > fd:
            b, d, fd = d, c, fc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = INV_PHI * h
            d = a + INV_PHI * h
            fd = f(d)

    x_opt = 0.5 * (a + b)
    best = (x_opt, f(x_opt))
    for x_end in (lo, hi):
        if abs(x_opt - x_end) <= 2 * tol:
            f_end = f(x_end)
            if f_end >= best[1]:
                best = (x_end, f_end)
    return best


def golden_section_minimize(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Minimize ``f`` on [a, b]; see :func:`golden_section_maximize`."""
    x_opt, neg = golden_section_maximize(lambda x: -f(x), a, b, tol)
    return x_opt, -neg
