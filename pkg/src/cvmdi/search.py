"""One-dimensional search utilities: golden-section maximization and the
scan-then-bisect positivity-edge finder used for maximal distances."""

from __future__ import annotations

import math
from typing import Callable

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       tol: float) -> tuple[float, float]:
    """Maximize a unimodal f on [lo, hi]; returns (argmax, f(argmax)).

    Interval shrinks to tol; the returned value is the best of every point
    actually evaluated (including both edges), so a boundary maximum is
    never missed.
    """
    if hi <= lo:
        raise ValueError(f"empty bracket [{lo}, {hi}]")
    best_x, best_f = lo, f(lo)
    for x in (hi,):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INVPHI * (hi - lo)
            f1 = f(x1)
    for x, fx in ((x1, f1), (x2, f2)):
        if fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def positive_edge(f: Callable[[float], float], step: float, tol: float,
                  cap: float) -> tuple[float, bool]:
    """Largest L with f(L) > 0, assuming f(0) > 0.

    Coarse forward scan in `step` increments locates the last positive
    point, then bisection tightens the edge to `tol`.  Returns (edge,
    capped): capped is True when f stayed positive all the way to `cap`.
    """
    last_pos = 0.0
    level = step
    while level <= cap:
        if f(level) > 0.0:
            last_pos = level
            level += step
        else:
            break
    else:
        return cap, True
    lo, hi = last_pos, level
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo, False
