"""Brown measure, Fuglede-Kadison determinants and resolvent traces of an R-diagonal T.

Everything is a function of the law of ``|T|`` and depends on ``lambda`` only
through ``r = |lambda|`` and an explicit phase.  Two independent routes to the
radial distribution function are provided:

* ``s(r,0)**2 / (s(r,0)**2 + r**2)`` from the subordination boundary value;
* ``1 + S^{-1}(r**-2)`` from the S-transform of the law of ``T*T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .errors import DiracMeasure, DomainError, RegimeError
from .measures import LambdaBounds, MeasureRPlus, pushforward_square
from .subordination import (
    INFINITE,
    NEG_INFINITE,
    KFunction,
    Regime,
    Unbounded,
    classify,
    richardson,
)
from .transforms import one_plus_s_inverse, s_inverse_derivative

MeasureLike = Union[MeasureRPlus, KFunction]


def _kf(mu: MeasureLike) -> KFunction:
    return mu if isinstance(mu, KFunction) else KFunction(mu)


def _non_dirac(kf: KFunction) -> KFunction:
    if kf.bounds.dirac:
        raise DiracMeasure("the Brown measure formulas exclude Dirac laws of |T|")
    return kf


def _radius(lam) -> float:
    r = abs(complex(lam))
    if r == 0:
        raise DomainError("lambda must be non-zero")
    return r


# ------------------------------------------------------------ radial law


def _discrete_regime(kf: KFunction, r: float) -> Regime:
    """Regime of ``r`` for the stored quadrature rule.

    A density whose inner radius is 0 is stored as a rule with a tiny positive
    one; between the two the Brown measure of the rule vanishes.
    """
    regime = classify(r, kf.bounds)
    d1, d2 = kf.discrete_radii
    if regime is Regime.ANNULUS:
        if r <= d1:
            return Regime.INNER
        if r >= d2:
            return Regime.OUTER
    return regime


def radial_cdf(mu: MeasureLike, r: float) -> float:
    """``mu_T({|z| <= r})``."""
    kf = _non_dirac(_kf(mu))
    if r <= 0:
        return 0.0 if r < 0 else kf.base.zero_atom
    s0 = kf.s_at_zero(r)
    if s0 is INFINITE:
        return 1.0
    if s0 == 0.0:
        return kf.base.zero_atom
    # s^2/(s^2 + r^2) written to stay accurate when s << r
    return 1.0 / (1.0 + (r / s0) ** 2)


def radial_cdf_via_s_transform(mu: MeasureLike, r: float, mu_sq: Optional[MeasureRPlus] = None) -> float:
    """``1 + S^{-1}_{mu_{T*T}}(r**-2)`` in the annulus, 0 / 1 outside it."""
    kf = _non_dirac(_kf(mu))
    if r <= 0:
        return 0.0 if r < 0 else kf.base.zero_atom
    regime = _discrete_regime(kf, r)
    if regime is Regime.INNER:
        return kf.base.zero_atom
    if regime is Regime.OUTER:
        return 1.0
    if mu_sq is None:
        mu_sq = pushforward_square(kf.base)
    return one_plus_s_inverse(mu_sq, r ** -2)


def radial_density(mu: MeasureLike, r: float, mu_sq: Optional[MeasureRPlus] = None) -> float:
    """Planar Brown density at ``|lambda| = r`` for ``lambda1 < r < lambda2``.

    ``-(S^{-1})'(r**-2) / (pi r**4)``; the radial CDF derivative is
    ``2 pi r`` times this.
    """
    kf = _non_dirac(_kf(mu))
    if classify(r, kf.bounds) is not Regime.ANNULUS:
        raise RegimeError("density is defined inside the annulus", r=r,
                          lambda1=kf.bounds.lambda1, lambda2=kf.bounds.lambda2)
    if _discrete_regime(kf, r) is not Regime.ANNULUS:
        return 0.0
    if mu_sq is None:
        mu_sq = pushforward_square(kf.base)
    return -s_inverse_derivative(mu_sq, r ** -2) / (math.pi * r ** 4)


@dataclass(frozen=True)
class RadialBrownMeasure:
    lambda1: float
    lambda2: Union[float, Unbounded]
    zero_mass: float
    r: np.ndarray
    cdf: np.ndarray
    density: np.ndarray  # dCDF/dr


def default_r_grid(mu: MeasureLike, n_points: int = 200) -> np.ndarray:
    kf = _non_dirac(_kf(mu))
    lam1, lam2 = kf.bounds.lambda1, kf.bounds.lambda2
    if math.isinf(lam2):
        # cap where the CDF passes 1 - 1e-6
        hi = max(1.0, 2 * lam1)
        while radial_cdf(kf, hi) < 1 - 1e-6 and hi < 1e150:
            hi *= 2.0
    else:
        hi = lam2
    lo = lam1 if lam1 > 0 else hi * 1e-3
    return np.linspace(lo, hi, n_points + 2)[1:-1]


def radial_brown_measure(mu: MeasureLike, r_grid: Optional[Sequence[float]] = None) -> RadialBrownMeasure:
    kf = _non_dirac(_kf(mu))
    r = np.asarray(default_r_grid(kf) if r_grid is None else r_grid, dtype=float)
    mu_sq = pushforward_square(kf.base)
    cdf = np.array([radial_cdf(kf, x) for x in r])
    dens = np.array([
        2 * math.pi * x * radial_density(kf, x, mu_sq) if classify(x, kf.bounds) is Regime.ANNULUS else 0.0
        for x in r
    ])
    lam2 = INFINITE if math.isinf(kf.bounds.lambda2) else kf.bounds.lambda2
    return RadialBrownMeasure(kf.bounds.lambda1, lam2, kf.base.zero_atom, r, cdf, dens)


# ---------------------------------------------------------- determinants


@dataclass(frozen=True)
class DeterminantValue:
    lam: complex
    t: float
    log_delta: Union[float, Unbounded]
    regime: Optional[str] = None


def log_det_shifted_square(mu: MeasureRPlus, s: float) -> float:
    """``log Delta(T*T + s**2) = int log(u**2 + s**2) dmu_{|T|}``."""
    return float(np.dot(mu.weights, np.log(mu.nodes ** 2 + s * s))) + mu.zero_atom * 2.0 * math.log(s)


def log_det_T(mu: MeasureRPlus) -> Union[float, Unbounded]:
    """``log Delta(T) = int log u dmu_{|T|}``; tagged ``-inf`` when there is an atom at 0."""
    if mu.zero_atom > 0:
        return NEG_INFINITE
    return float(np.dot(mu.weights, np.log(mu.nodes)))


def fk_det_regularized(mu: MeasureLike, lam, t: float) -> DeterminantValue:
    """``log Delta((T - lambda)*(T - lambda) + t**2)`` for ``t > 0``."""
    if not t > 0:
        raise DomainError("t must be > 0", t=t)
    kf = _non_dirac(_kf(mu))
    r = _radius(lam)
    res = kf.solve(r, t)
    s, x = res.s, res.gap
    val = math.log(r * r) - math.log(r * r + x * x) + log_det_shifted_square(kf.base, s)
    return DeterminantValue(complex(lam), t, val)


def fk_det(mu: MeasureLike, lam) -> DeterminantValue:
    """``log Delta(T - lambda)`` by regime."""
    kf = _non_dirac(_kf(mu))
    r = _radius(lam)
    regime = classify(r, kf.bounds)
    if regime is Regime.OUTER:
        val = math.log(r)
    elif regime is Regime.INNER:
        val = log_det_T(kf.base)
    else:
        s0 = kf.s_at_zero(r)
        if s0 is INFINITE:
            val = math.log(r)
        elif s0 == 0.0:
            val = log_det_T(kf.base)
        else:
            val = 0.5 * (math.log(r * r) - math.log(r * r + s0 * s0) + log_det_shifted_square(kf.base, s0))
    return DeterminantValue(complex(lam), 0.0, val, regime.value)


# ------------------------------------------------------------ traces


def resolvent_traces(mu: MeasureLike, lam, t: float):
    """``tau((lambda-T)[|lambda-T|^2 + t^2]^-1)`` and its adjoint counterpart."""
    kf = _non_dirac(_kf(mu))
    lam = complex(lam)
    r = _radius(lam)
    x = kf.solve(r, t).gap
    frac = x * x / (r * r + x * x)
    return lam / (r * r) * frac, lam.conjugate() / (r * r) * frac


def resolvent_traces_limit(mu: MeasureLike, lam):
    """``t -> 0`` limits of :func:`resolvent_traces`."""
    kf = _non_dirac(_kf(mu))
    lam = complex(lam)
    r = _radius(lam)
    frac = radial_cdf(kf, r) if classify(r, kf.bounds) is not Regime.INNER else 0.0
    return lam / (r * r) * frac, lam.conjugate() / (r * r) * frac


def negative_moment_first(mu: MeasureLike, lam) -> Union[float, Unbounded]:
    """``tau([(T - lambda)*(T - lambda)]^-1)``."""
    kf = _non_dirac(_kf(mu))
    r = _radius(lam)
    in_sq, out_sq = kf.bounds.inner_sq, kf.bounds.outer_sq
    regime = classify(r, kf.bounds)
    if regime is Regime.INNER:
        gap = in_sq - r * r
        return INFINITE if gap <= in_sq * 2e-12 else 1.0 / gap
    if regime is Regime.OUTER:
        gap = r * r - out_sq
        return INFINITE if gap <= out_sq * 2e-12 else 1.0 / gap
    return INFINITE


def negative_moment_numeric(mu: MeasureLike, lam, t: float = 1e-6) -> float:
    """``h(s(|lambda|, t)) / t`` at small ``t``; approaches :func:`negative_moment_first`."""
    kf = _non_dirac(_kf(mu))
    s = kf.solve(_radius(lam), t).s
    return kf.h(s) / t


def shifted_modulus_bounds(mu: MeasureLike, lam, t0_small: float = 1e-4, t0_large: Optional[float] = None) -> LambdaBounds:
    """Single-ring radii of the law of ``|T - lambda|`` from its imaginary-axis data.

    With ``g(t) = h(s(|lambda|, t))``, ``int u^-2 = lim_{t->0} g(t)/t`` and
    ``int u^2 = lim_{t->inf} t^2 (1 - t g(t))``; both limits are Richardson
    extrapolated along a doubling ladder.  The large-``t`` ladder starts at 20
    times the scale ``sqrt(lambda2**2 + |lambda|**2)``, balancing truncation
    against cancellation in ``1 - t g``.  A divergent negative moment gives
    ``lambda1 = 0``.
    """
    kf = _non_dirac(_kf(mu))
    r = _radius(lam)

    def g(t):
        return kf.h(kf.solve(r, t).s)

    if t0_large is None:
        t0_large = 20.0 * math.sqrt(kf.bounds.lambda2 ** 2 + r * r)
    small = [t0_small / 2 ** j for j in range(4)]
    large = [t0_large * 2 ** j for j in range(4)]
    m2 = richardson([t * t * (1.0 - t * g(t)) for t in large], 4.0, levels=3)
    if negative_moment_first(kf, r) is INFINITE:
        lam1 = 0.0
    else:
        m_neg = richardson([g(t) / t for t in small], 2.0, levels=3)
        lam1 = m_neg ** -0.5
    return LambdaBounds(lam1, math.sqrt(m2))


# ------------------------------------------------------- log potential


def log_potential(mu: MeasureLike, r: float, epsabs: float = 1e-11) -> float:
    """``int log|lambda - z| dmu_T(z)`` at ``|lambda| = r`` from the radial CDF alone.

    Rotation invariance collapses the angular average to ``log max(r, |z|)``,
    giving ``log r + int_r^inf (1 - F(rho))/rho drho``.
    """
    kf = _non_dirac(_kf(mu))
    lam1, lam2 = kf.bounds.lambda1, kf.bounds.lambda2
    if math.isinf(lam2):
        raise DomainError("log potential route needs a compactly supported |T|")
    if r >= lam2:
        return math.log(r)
    lo = max(r, lam1)
    val = math.log(lo)

    def g(rho):
        return (1.0 - radial_cdf(kf, rho)) / rho

    part, _ = integrate.quad(g, lo, lam2, epsabs=epsabs, epsrel=1e-12, limit=200)
    return val + part


def log_potential_consistency(rbm: Optional[RadialBrownMeasure], mu: MeasureLike, lambda_grid) -> float:
    """Max ``|log-potential - log Delta(T - lambda)|`` over ``lambda_grid``."""
    kf = _non_dirac(_kf(mu))
    worst = 0.0
    for lam in lambda_grid:
        r = _radius(lam)
        det = fk_det(kf, lam).log_delta
        if isinstance(det, Unbounded):
            continue
        pot = log_potential(kf, r)
        worst = max(worst, abs(pot - det))
    return worst


def regime_spanning_grid(mu: MeasureLike, n: int = 16, phase: bool = True) -> list:
    """``n`` values of lambda covering inner disc, annulus and outside."""
    kf = _non_dirac(_kf(mu))
    lam1, lam2 = kf.bounds.lambda1, kf.bounds.lambda2
    n_in = n // 4 if lam1 > 0 else 0
    n_out = n // 4
    n_ann = n - n_in - n_out
    radii = []
    if n_in:
        radii += list(np.linspace(0.2, 0.95, n_in) * lam1)
    lo = lam1 if lam1 > 0 else 0.0
    radii += list(lo + (lam2 - lo) * (np.arange(1, n_ann + 1) / (n_ann + 1)))
    radii += list(np.linspace(1.05, 2.0, n_out) * lam2)
    if not phase:
        return [complex(x) for x in radii]
    angles = np.linspace(0, 2 * np.pi, len(radii), endpoint=False)
    return [complex(x * np.exp(1j * a)) for x, a in zip(radii, angles)]


# ------------------------------------------------- Hermitian reduction


def hermitian_reduction_delta(mu: MeasureLike, lam, eps: float) -> float:
    """``delta(lambda, eps) = Im omega2(i eps) = |lambda|^2 / (s(|lambda|, eps) - eps)``."""
    if not eps > 0:
        raise DomainError("eps must be > 0", eps=eps)
    kf = _non_dirac(_kf(mu))
    r = _radius(lam)
    return r * r / kf.solve(r, eps).gap


@dataclass(frozen=True)
class HermitianReduction:
    delta: float
    entries: np.ndarray  # 2x2, E[(Lambda_eps - X)^-1]
    resolvent_entry: float  # eps tau([(lambda-T)(lambda-T)* + eps^2]^-1) = h(s)
    identity_residual: float  # |delta/(delta^2+r^2) - resolvent_entry|


def hermitian_reduction(mu: MeasureLike, lam, eps: float) -> HermitianReduction:
    """Analytic 2x2 block resolvent entries from the scalar subordination ``delta``."""
    kf = _non_dirac(_kf(mu))
    lam = complex(lam)
    r = _radius(lam)
    res = kf.solve(r, eps)
    delta = r * r / res.gap
    den = delta * delta + r * r
    entries = np.array([[-1j * delta / den, lam / den], [lam.conjugate() / den, -1j * delta / den]])
    rhs = kf.h(res.s)
    return HermitianReduction(delta, entries, rhs, abs(delta / den - rhs))
