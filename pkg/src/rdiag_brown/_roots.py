"""Scalar root finding for monotone functions.

All inversions in the package reduce to a strictly increasing function of one
real variable, usually written in a logarithmic coordinate so that the bracket
can be grown geometrically in both directions.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple, Optional

from .errors import NoConvergence

MAX_ITER = 200


class Root(NamedTuple):
    x: float
    fx: float
    iterations: int


def expand_bracket(
    f: Callable[[float], float],
    x0: float,
    step: float = 2.0,
    max_steps: int = 800,
    lower: float = -math.inf,
    upper: float = math.inf,
):
    """Grow ``[lo, hi]`` around ``x0`` until an increasing ``f`` changes sign.

    Returns ``(lo, f_lo, hi, f_hi)``.  Either end may be ``None`` when the
    sign change could not be reached before ``lower``/``upper`` or the step
    budget ran out; the caller decides what that means.
    """
    f0 = f(x0)
    if f0 == 0.0:
        return x0, f0, x0, f0
    lo = hi = x0
    f_lo = f_hi = f0
    if f0 > 0:
        for _ in range(max_steps):
            nxt = lo - step
            if nxt <= lower:
                return None, None, hi, f_hi
            f_n = f(nxt)
            hi, f_hi = lo, f_lo
            lo, f_lo = nxt, f_n
            if f_n <= 0:
                return lo, f_lo, hi, f_hi
        return None, None, hi, f_hi
    for _ in range(max_steps):
        nxt = hi + step
        if nxt >= upper:
            return lo, f_lo, None, None
        f_n = f(nxt)
        lo, f_lo = hi, f_hi
        hi, f_hi = nxt, f_n
        if f_n >= 0:
            return lo, f_lo, hi, f_hi
    return lo, f_lo, None, None


def newton_bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    fprime: Optional[Callable[[float], float]] = None,
    *,
    f_lo: Optional[float] = None,
    f_hi: Optional[float] = None,
    ftol: float = 1e-14,
    xtol: float = 1e-15,
    maxiter: int = MAX_ITER,
) -> Root:
    """Root of an increasing ``f`` on ``[lo, hi]`` with ``f(lo) <= 0 <= f(hi)``.

    Newton steps are taken from the current iterate when they stay inside the
    bracket and shrink it fast enough; otherwise the step is a bisection (or a
    secant step on the bracket when no derivative is given).
    """
    if f_lo is None:
        f_lo = f(lo)
    if f_hi is None:
        f_hi = f(hi)
    if f_lo > 0 or f_hi < 0:
        raise NoConvergence("root not bracketed", lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi)
    if f_lo == 0:
        return Root(lo, 0.0, 0)
    if f_hi == 0:
        return Root(hi, 0.0, 0)

    x = 0.5 * (lo + hi)
    fx = f(x)
    step_old = hi - lo
    step = step_old
    for it in range(1, maxiter + 1):
        if abs(fx) <= ftol:
            return Root(x, fx, it)
        if fx < 0:
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        if hi - lo <= xtol * max(1.0, abs(x)):
            return Root(x, fx, it)

        cand = None
        if fprime is not None:
            d = fprime(x)
            if d > 0 and math.isfinite(d):
                cand = x - fx / d
        elif f_hi != f_lo:
            cand = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        # rtsafe rule: bisect when the step leaves the bracket or is not
        # shrinking at least geometrically
        if cand is None or not (lo < cand < hi) or abs(cand - x) > 0.5 * abs(step_old):
            cand = 0.5 * (lo + hi)
        step_old, step = step, cand - x
        if cand == x:
            return Root(x, fx, it)
        x = cand
        fx = f(x)
    if abs(fx) <= 1e3 * ftol:
        return Root(x, fx, maxiter)
    raise NoConvergence("iteration cap reached", x=x, fx=fx, maxiter=maxiter)
