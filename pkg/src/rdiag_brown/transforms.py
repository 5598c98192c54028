"""Imaginary-axis Cauchy data and the psi / chi / S transforms.

``h`` is evaluated for the symmetrized law of ``|T|``; ``psi``, ``chi`` and ``S``
act on a measure on ``[0, inf)`` that plays the role of the law of ``T*T``.
Only the negative real branch of ``psi`` is implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from ._roots import expand_bracket, newton_bisect
from .errors import DomainError, NoConvergence, OutOfRange, OutOfWindow
from .measures import MeasureRPlus, SymmetricMeasure, moment

INVERSION_TOL = 1e-12


def _base(mu: Union[MeasureRPlus, SymmetricMeasure]) -> MeasureRPlus:
    return mu.base if isinstance(mu, SymmetricMeasure) else mu


def h_eval(mu: Union[SymmetricMeasure, MeasureRPlus], s: float) -> float:
    """``h(s) = int s / (s**2 + u**2) dmu(u)``, the same on the half line or symmetrized."""
    if not s > 0:
        raise DomainError("h needs s > 0", s=s)
    b = _base(mu)
    val = float(np.dot(b.weights, s / (s * s + b.nodes * b.nodes)))
    if b.zero_atom:
        val += b.zero_atom / s
    return val


def h_prime(mu: Union[SymmetricMeasure, MeasureRPlus], s: float) -> float:
    b = _base(mu)
    u2 = b.nodes * b.nodes
    s2 = s * s
    val = float(np.dot(b.weights, (u2 - s2) / (s2 + u2) ** 2))
    if b.zero_atom:
        val -= b.zero_atom / s2
    return val


def cauchy_on_imaginary_axis(mu: Union[SymmetricMeasure, MeasureRPlus], t: float) -> complex:
    """``G(it) = -i h(t)`` for a symmetric law."""
    if not t > 0:
        raise DomainError("t must be > 0", t=t)
    return complex(0.0, -h_eval(mu, t))


def _check_negative(z):
    if not z < 0:
        raise DomainError("psi is only evaluated on z < 0", z=z)


def psi_eval(mu_sq: MeasureRPlus, z: float) -> float:
    """``psi(z) = int z t / (1 - z t) dmu(t)`` for ``z < 0``."""
    _check_negative(z)
    t = mu_sq.nodes
    return float(np.dot(mu_sq.weights, z * t / (1.0 - z * t)))


def psi_prime(mu_sq: MeasureRPlus, z: float) -> float:
    _check_negative(z)
    t = mu_sq.nodes
    return float(np.dot(mu_sq.weights, t / (1.0 - z * t) ** 2))


def _one_plus_psi(mu_sq: MeasureRPlus, z: float) -> float:
    # 1 + psi(z) = int 1/(1 - z t) dmu, free of cancellation
    return float(np.dot(mu_sq.weights, 1.0 / (1.0 - z * mu_sq.nodes))) + mu_sq.zero_atom


def _psi_over_z(mu_sq: MeasureRPlus, z: float) -> float:
    t = mu_sq.nodes
    return float(np.dot(mu_sq.weights, t / (1.0 - z * t)))


@dataclass(frozen=True)
class STransformWindow:
    """Domain ``(delta - 1, 0)`` and range ``(1/b, 1/a)`` of ``S`` for ``mu_sq``."""

    source: MeasureRPlus
    delta: float
    lower_range: float  # 1/b
    upper_range: float  # 1/a, may be inf

    @property
    def domain(self):
        return (self.delta - 1.0, 0.0)


def s_window(mu_sq: MeasureRPlus) -> STransformWindow:
    b = moment(mu_sq, 1)
    inv_a = moment(mu_sq, -1)
    return STransformWindow(mu_sq, mu_sq.zero_atom, 0.0 if math.isinf(b) else 1.0 / b, inv_a)


def chi_eval(mu_sq: MeasureRPlus, w: float) -> float:
    """Inverse of ``psi`` on the negative axis: the ``z < 0`` with ``psi(z) = w``."""
    delta = mu_sq.zero_atom
    if not (delta - 1.0 < w < 0.0):
        raise OutOfWindow("w outside (delta - 1, 0)", w=w, delta=delta)

    # x = log(-z); psi(-e^x) decreases in x, so w - psi(-e^x) increases
    def f(x):
        return w - psi_eval(mu_sq, -math.exp(x))

    def fp(x):
        z = -math.exp(x)
        return -psi_prime(mu_sq, z) * z

    lo, f_lo, hi, f_hi = expand_bracket(f, 0.0, step=math.log(2.0), lower=-745.0, upper=709.0)
    if lo is None or hi is None:
        raise NoConvergence("could not bracket chi", w=w)
    root = newton_bisect(f, lo, hi, fp, f_lo=f_lo, f_hi=f_hi, ftol=INVERSION_TOL)
    return -math.exp(root.x)


def s_transform(mu_sq: MeasureRPlus, w: float) -> float:
    """``S(w) = (w + 1)/w * chi(w)`` on ``(delta - 1, 0)``."""
    z = chi_eval(mu_sq, w)
    return (w + 1.0) / w * z


def _s_of_z(mu_sq: MeasureRPlus, z: float) -> float:
    # S(psi(z)) = z (1 + psi(z)) / psi(z)
    return _one_plus_psi(mu_sq, z) / _psi_over_z(mu_sq, z)


def _solve_s_inverse(mu_sq: MeasureRPlus, y: float) -> float:
    """The ``z < 0`` with ``S(psi(z)) = y``."""
    win = s_window(mu_sq)
    if not (win.lower_range < y < win.upper_range):
        raise OutOfRange("y outside the range of S", y=y, range=(win.lower_range, win.upper_range))
    lo_d, hi_d = 1.0 / mu_sq.raw_moment(1), mu_sq.raw_moment(-1)
    if not (lo_d < y < hi_d):
        raise OutOfRange("y beyond the resolution of the quadrature rule", y=y, range=(lo_d, hi_d))
    log_y = math.log(y)

    # S(psi(-e^x)) increases with x
    def f(x):
        return math.log(_s_of_z(mu_sq, -math.exp(x))) - log_y

    def fp(x):
        z = -math.exp(x)
        t = mu_sq.nodes
        w = mu_sq.weights
        q = 1.0 / (1.0 - z * t)
        B = float(np.dot(w, q)) + mu_sq.zero_atom
        A = float(np.dot(w, t * q))
        dB = float(np.dot(w, t * q * q))
        dA = float(np.dot(w, t * t * q * q))
        return (dB / B - dA / A) * z

    lo, f_lo, hi, f_hi = expand_bracket(f, 0.0, step=math.log(2.0), lower=-745.0, upper=709.0)
    if lo is None or hi is None:
        raise NoConvergence("could not bracket the S inverse", y=y)
    root = newton_bisect(f, lo, hi, fp, f_lo=f_lo, f_hi=f_hi, ftol=1e-15)
    return -math.exp(root.x)


def s_transform_inverse(mu_sq: MeasureRPlus, y: float) -> float:
    """The unique ``w`` in ``(delta - 1, 0)`` with ``S(w) = y``.

    Solved as a single monotone equation in ``z = chi(w)``, then ``w = psi(z)``.
    """
    z = _solve_s_inverse(mu_sq, y)
    return _one_plus_psi(mu_sq, z) - 1.0


def one_plus_s_inverse(mu_sq: MeasureRPlus, y: float) -> float:
    """``1 + S^{-1}(y)`` evaluated without the subtraction."""
    return _one_plus_psi(mu_sq, _solve_s_inverse(mu_sq, y))


def s_inverse_derivative(mu_sq: MeasureRPlus, y: float) -> float:
    """``d S^{-1}/dy`` by implicit differentiation through ``psi`` and ``chi``."""
    z = _solve_s_inverse(mu_sq, y)
    t = mu_sq.nodes
    w = mu_sq.weights
    q = 1.0 / (1.0 - z * t)
    B = float(np.dot(w, q)) + mu_sq.zero_atom  # 1 + psi
    A = float(np.dot(w, t * q))  # psi / z
    dpsi = float(np.dot(w, t * q * q))
    dA = float(np.dot(w, t * t * q * q))
    # y = B/A, dy/dz = (dpsi*A - B*dA)/A**2, dw/dz = dpsi
    return dpsi * A * A / (dpsi * A - B * dA)
