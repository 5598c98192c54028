"""Subordination for ``mu ~ (delta_{-r} + delta_r)/2`` on the imaginary axis.

Here ``mu`` is the symmetrized law of ``|T|``.  On ``z = it`` both subordination
functions are purely imaginary: ``omega1(it) = i s(r, t)`` where ``s`` solves

    k(s, t) = (s - t) (1/h(s) - s + t) = r**2,      s > t,

and ``omega2(it) = i r**2 / (s - t)``.  At ``t = 0`` the boundary value
``s(r, 0)`` is 0, finite, or infinite according to where ``r`` sits relative to
the radii ``lambda1 < lambda2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ._roots import expand_bracket, newton_bisect
from .errors import DiracMeasure, DomainError, NoConvergence, RegimeError
from .measures import LambdaBounds, MeasureRPlus, SymmetricMeasure, lambda_bounds, symmetrize

# relative width of the seams r = lambda1, r = lambda2 inside which r is
# treated as sitting exactly on the seam
SEAM_RTOL = 1e-12
FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAXITER = 100_000


class Unbounded(enum.Enum):
    """Tagged infinities; never fed into arithmetic."""

    POS = "+inf"
    NEG = "-inf"

    def __float__(self):
        return math.inf if self is Unbounded.POS else -math.inf

    def __repr__(self):
        return self.value


INFINITE = Unbounded.POS
NEG_INFINITE = Unbounded.NEG


class Regime(enum.Enum):
    INNER = "inner"  # 0 < r <= lambda1
    ANNULUS = "annulus"  # lambda1 < r < lambda2
    OUTER = "outer"  # r >= lambda2


def classify(r: float, bounds: LambdaBounds) -> Regime:
    lam1, lam2 = bounds.lambda1, bounds.lambda2
    if r <= lam1 * (1 + SEAM_RTOL):
        return Regime.INNER
    if math.isfinite(lam2) and r >= lam2 * (1 - SEAM_RTOL):
        return Regime.OUTER
    return Regime.ANNULUS


@dataclass(frozen=True)
class SubordinationResult:
    r: float
    t: float
    s: float
    residual: float
    omega1: complex
    omega2: complex
    iterations: int = 0
    gap: float = math.nan  # s - t, kept exactly since it is the solve variable


class KFunction:
    """``k(s, t)`` and its level sets for one half-line measure.

    ``k(s, 0) = n(s)/d(s)`` with ``n = int u^2/(s^2+u^2)`` and ``d = int 1/(s^2+u^2)``;
    the general form is evaluated as ``(s - t)(n/(s d) + t)`` which avoids the
    cancellation in ``1/h(s) - s`` for large ``s``.
    """

    def __init__(self, mu: Union[SymmetricMeasure, MeasureRPlus]):
        if isinstance(mu, MeasureRPlus):
            mu = symmetrize(mu)
        self.mu = mu
        base = mu.base
        self._u2 = base.nodes * base.nodes
        self._w = np.asarray(base.weights)
        self._za = base.zero_atom
        self.bounds = lambda_bounds(base)
        # radii of the stored rule itself; they differ from ``bounds`` only when
        # a divergent moment has been detected for a density
        m_neg = base.raw_moment(-2)
        self.discrete_radii = (0.0 if math.isinf(m_neg) else m_neg ** -0.5, math.sqrt(base.raw_moment(2)))

    @property
    def base(self) -> MeasureRPlus:
        return self.mu.base

    def require_non_dirac(self):
        if self.bounds.dirac:
            raise DiracMeasure("operation needs a non-Dirac measure")

    # -- primitives -------------------------------------------------------

    def h(self, s: float) -> float:
        val = s * float(np.dot(self._w, 1.0 / (s * s + self._u2)))
        if self._za:
            val += self._za / s
        return val

    def _nd(self, s: float):
        q = 1.0 / (s * s + self._u2)
        n = float(np.dot(self._w, self._u2 * q))
        d = float(np.dot(self._w, q))
        if self._za:
            d += self._za / (s * s)
        return n, d, q

    def k0(self, s: float) -> float:
        n, d, _ = self._nd(s)
        return n / d

    def k(self, s: float, t: float) -> float:
        if not s > 0:
            raise DomainError("k needs s > 0", s=s)
        if t == 0:
            return self.k0(s)
        n, d, _ = self._nd(s)
        return (s - t) * (n / (s * d) + t)

    def _q_and_dq(self, s: float):
        """``q(s) = 1/h(s) - s = n/(s d)`` and ``dq/ds``."""
        n, d, q = self._nd(s)
        q2 = q * q
        dn = -2.0 * s * float(np.dot(self._w, self._u2 * q2))
        dd = -2.0 * s * float(np.dot(self._w, q2))
        if self._za:
            dd -= 2.0 * self._za / s ** 3
        sd = s * d
        return n / sd, (dn * sd - n * (d + s * dd)) / (sd * sd)

    def dk_ds(self, s: float, t: float) -> float:
        qv, dq = self._q_and_dq(s)
        return qv + t + (s - t) * dq

    # -- level sets -------------------------------------------------------

    def solve(self, r: float, t: float) -> SubordinationResult:
        """``s(r, t)``: the unique root of ``k(s, t) = r**2`` on ``(t, inf)``."""
        if not (r > 0 and t > 0):
            raise DomainError("solve needs r > 0 and t > 0", r=r, t=t)
        self.require_non_dirac()
        log_r2 = 2.0 * math.log(r)

        # y = log(s - t); log k(t + e^y, t) is increasing in y
        def f(y):
            x = math.exp(y)
            qv, _ = self._q_and_dq(t + x)
            return y + math.log(qv + t) - log_r2

        def fp(y):
            x = math.exp(y)
            qv, dq = self._q_and_dq(t + x)
            return 1.0 + x * dq / (qv + t)

        y0 = log_r2 - math.log(max(t, 1.0) + 1.0)
        lo, f_lo, hi, f_hi = expand_bracket(f, y0, step=math.log(2.0), lower=-740.0, upper=700.0)
        if lo is None or hi is None:
            raise NoConvergence("could not bracket s(r, t)", r=r, t=t)
        root = newton_bisect(f, lo, hi, fp, f_lo=f_lo, f_hi=f_hi, ftol=1e-15, xtol=1e-16)
        x = math.exp(root.x)
        s = t + x
        # from the gap itself; re-forming s - t would add the rounding of s
        residual = abs(x * (self._q_and_dq(s)[0] + t) - r * r)
        return SubordinationResult(
            r=r,
            t=t,
            s=s,
            residual=residual,
            omega1=complex(0.0, s),
            omega2=complex(0.0, r * r / x),
            iterations=root.iterations,
            gap=x,
        )

    def s_at_zero(self, r: float):
        """``s(r, 0)``: 0 on the inner disc, finite in the annulus, :data:`INFINITE` outside."""
        if not r > 0:
            raise DomainError("r must be > 0", r=r)
        self.require_non_dirac()
        regime = classify(r, self.bounds)
        if regime is Regime.INNER:
            return 0.0
        if regime is Regime.OUTER:
            return INFINITE
        log_r2 = 2.0 * math.log(r)

        def f(x):
            return math.log(self.k0(math.exp(x))) - log_r2

        def fp(x):
            s = math.exp(x)
            qv, dq = self._q_and_dq(s)
            # k0 = s q, d log k0 / d log s = 1 + s q'/q
            return 1.0 + s * dq / qv

        lo, f_lo, hi, f_hi = expand_bracket(f, 0.0, step=math.log(2.0), lower=-700.0, upper=700.0)
        # a discretized measure has finite inner/outer radii even when the
        # underlying density does not; outside them the level set is empty
        if lo is None:
            return 0.0
        if hi is None:
            return INFINITE
        root = newton_bisect(f, lo, hi, fp, f_lo=f_lo, f_hi=f_hi, ftol=1e-15, xtol=1e-16)
        return math.exp(root.x)


def _kf(mu) -> KFunction:
    return mu if isinstance(mu, KFunction) else KFunction(mu)


def k_eval(kf, s: float, t: float) -> float:
    return _kf(kf).k(s, t)


def solve_s(kf, r: float, t: float) -> SubordinationResult:
    return _kf(kf).solve(r, t)


def s_at_zero(kf, r: float):
    return _kf(kf).s_at_zero(r)


def omega2_eval(kf, r: float, t: float) -> complex:
    return _kf(kf).solve(r, t).omega2


def fixed_point_omega1(
    mu,
    r: float,
    t: float,
    tol: float = FIXED_POINT_TOL,
    maxiter: int = FIXED_POINT_MAXITER,
) -> complex:
    """``omega1(it)`` by iterating ``w <- z + H2(z + H1(w))`` in complex arithmetic.

    ``H1 = F_mu - id`` uses the full complex Cauchy transform of the symmetric
    law and ``H2(z) = -r**2/z`` is the Bernoulli part.  Starts from ``w = it``.
    """
    if not (r > 0 and t > 0):
        raise DomainError("fixed point needs r > 0 and t > 0", r=r, t=t)
    if isinstance(mu, KFunction):
        mu = mu.mu
    if isinstance(mu, MeasureRPlus):
        mu = symmetrize(mu)
    base = mu.base
    u2 = base.nodes * base.nodes
    w8 = base.weights
    za = base.zero_atom
    z = complex(0.0, t)
    r2 = r * r

    def H1(w):
        # F(w) - w = (1 - w G(w)) / G(w) with 1 - w G(w) = -int u^2/(w^2 - u^2),
        # written so that no large terms cancel when |w| >> support
        inv = 1.0 / (w * w - u2)
        g = complex(np.dot(w8, w * inv))
        if za:
            g += za / w
        return -complex(np.dot(w8, u2 * inv)) / g

    def step(w):
        return z - r2 / (z + H1(w))

    # Steffensen (Aitken delta-squared) acceleration of the plain iteration;
    # the plain two-step iterate is kept whenever the extrapolation leaves
    # the upper half-plane or degenerates
    omega = z
    for it in range(1, maxiter + 1):
        w1 = step(omega)
        w2 = step(w1)
        denom = w2 - 2.0 * w1 + omega
        new = w2
        if denom != 0:
            acc = omega - (w1 - omega) ** 2 / denom
            if acc.imag > t and math.isfinite(acc.imag):
                new = acc
        if abs(new - omega) < tol * max(1.0, abs(new)):
            return step(new)
        omega = new
    raise NoConvergence("fixed-point iteration did not settle", r=r, t=t, maxiter=maxiter)


# ---------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class BoundaryDiagnostics:
    r: float
    regime: Regime
    quantity: str  # "t/s" or "s*t"
    ts: tuple
    values: tuple
    extrapolated: float
    closed_form: float

    @property
    def deviation(self) -> float:
        return abs(self.extrapolated - self.closed_form)


DEFAULT_T_LADDER = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


def richardson(values: Sequence[float], ratio: float, levels: int = 2) -> float:
    """Extrapolate ``g(t_j)``, ``t_{j+1} = t_j/ratio``, assuming ``g = L + c1 t + c2 t^2 + ...``."""
    table = list(values)
    for level in range(1, levels + 1):
        fac = ratio ** level
        table = [(fac * table[j + 1] - table[j]) / (fac - 1.0) for j in range(len(table) - 1)]
    return table[-1]


def boundary_diagnostics(kf, r: float, ts: Sequence[float] = DEFAULT_T_LADDER) -> BoundaryDiagnostics:
    """Small-``t`` limits of ``t/s(r,t)`` (inner regime) or ``s(r,t) t`` (outer regime)."""
    kf = _kf(kf)
    kf.require_non_dirac()
    regime = classify(r, kf.bounds)
    lam1, lam2 = kf.bounds.lambda1, kf.bounds.lambda2
    if regime is Regime.ANNULUS:
        raise RegimeError("no closed-form limit inside the annulus", r=r, lambda1=lam1, lambda2=lam2)
    ts = tuple(sorted(ts, reverse=True))
    sols = [kf.solve(r, t).s for t in ts]
    if regime is Regime.INNER:
        quantity = "t/s"
        values = tuple(t / s for t, s in zip(ts, sols))
        closed = (kf.bounds.inner_sq - r * r) / kf.bounds.inner_sq if lam1 > 0 else 0.0
    else:
        quantity = "s*t"
        values = tuple(t * s for t, s in zip(ts, sols))
        closed = r * r - kf.bounds.outer_sq
    ratio = ts[0] / ts[1]
    extrap = richardson(values, ratio, levels=min(2, len(values) - 1))
    return BoundaryDiagnostics(r, regime, quantity, ts, values, extrap, closed)


@dataclass(frozen=True)
class GrowthBounds:
    c1: float
    c2: float


def subordination_growth_bounds(kf, r: float, t_grid: Sequence[float]) -> GrowthBounds:
    """Empirical constants in ``C1 min(1, 1/t) <= s(r,t) - t <= C2 min(1, 1/t)``."""
    kf = _kf(kf)
    kf.require_non_dirac()
    if classify(r, kf.bounds) is not Regime.ANNULUS:
        raise RegimeError("growth bounds are stated for annulus radii", r=r)
    ratios = [kf.solve(r, t).gap / min(1.0, 1.0 / t) for t in t_grid]
    return GrowthBounds(float(min(ratios)), float(max(ratios)))


@dataclass(frozen=True)
class LargeTBranch:
    """Where ``s - t = (1 - sqrt(1 - 4 r^2 h(s)^2)) / (2 h(s))`` holds on a grid."""

    t_lambda: Optional[float]
    ts: tuple
    branch_error: tuple
    lower_ok: tuple  # r^2 h(s) < s - t
    upper_ok: tuple  # s - t < 2 r^2 h(s)


def large_t_branch(kf, r: float, t_grid: Sequence[float], rtol: float = 1e-9) -> LargeTBranch:
    """Scan ``t`` downwards and report the smallest ``t`` above which the minus branch holds."""
    kf = _kf(kf)
    ts = tuple(sorted(t_grid, reverse=True))
    errs, low, up = [], [], []
    t_lam = None
    holding = True
    for t in ts:
        res = kf.solve(r, t)
        x = res.gap
        hs = kf.h(res.s)
        disc = max(0.0, 1.0 - 4.0 * r * r * hs * hs)
        branch = 2.0 * r * r * hs / (1.0 + math.sqrt(disc))
        err = abs(branch - x) / x
        errs.append(err)
        low.append(r * r * hs < x)
        up.append(x < 2.0 * r * r * hs)
        if holding and err <= rtol:
            t_lam = t
        else:
            holding = False
    return LargeTBranch(t_lam, ts, tuple(errs), tuple(low), tuple(up))
