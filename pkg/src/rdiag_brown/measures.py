"""Probability measures on the half line ``[0, inf)`` and their symmetrizations.

A :class:`MeasureRPlus` is always stored as a weighted point set (positions
``nodes`` with ``weights``) plus an explicit atom at the origin.  Atomic and
empirical inputs are literally that; density inputs are discretized once into
a Gauss-Legendre rule, so every integral downstream is a weighted sum.
"""

from __future__ import annotations

import json
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    InputError,
    NegativeDensity,
    NegativeSupport,
    NonIntegrable,
    NonNormalized,
)

MASS_TOL = 1e-12
POSITION_TOL = 1e-12
# relative change of a moment under node doubling beyond which it is
# declared divergent
DIVERGENCE_RTOL = 1e-6
# mass stability under node doubling required by make_density
MASS_STABILITY_TOL = 1e-8
DEFAULT_NODES = 256


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MeasureRPlus:
    """A probability measure on ``[0, inf)``.

    ``kind`` is ``"atomic"``, ``"density"`` or ``"empirical"``.  Mass at the
    origin lives in ``zero_atom`` and never appears among ``nodes``.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    zero_atom: float = 0.0
    support: Optional[tuple] = None
    density: Optional[Callable] = field(default=None, repr=False)
    renormalization: float = 1.0
    samples: Optional[np.ndarray] = field(default=None, repr=False)
    rebuild: Optional[Callable[[int], "MeasureRPlus"]] = field(default=None, repr=False)

    @property
    def mass(self) -> float:
        return float(self.weights.sum() + self.zero_atom)

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], at_zero: Optional[float] = None) -> float:
        """Integrate a vectorized ``f``.  ``at_zero`` overrides ``f(0)``."""
        total = float(np.dot(self.weights, f(self.nodes)))
        if self.zero_atom > 0:
            f0 = float(f(np.zeros(1))[0]) if at_zero is None else at_zero
            total += self.zero_atom * f0
        return total

    def raw_moment(self, p: float) -> float:
        """``sum w u**p`` over the stored rule, with ``inf`` for ``p < 0`` and an atom at 0."""
        if p < 0 and self.zero_atom > 0:
            return math.inf
        val = float(np.dot(self.weights, self.nodes ** p))
        if p == 0:
            val += self.zero_atom
        return val

    def cdf(self, x):
        """Distribution function ``mu([0, x])``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "density":
            grid, cum = _density_table(self)
            out = np.interp(x, grid, cum, left=0.0, right=1.0)
            out = np.where(x >= 0, np.maximum(out, self.zero_atom), 0.0)
            return out
        order = np.argsort(self.nodes, kind="stable")
        pos = self.nodes[order]
        cum = self.zero_atom + np.cumsum(self.weights[order])
        idx = np.searchsorted(pos, x, side="right")
        out = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], self.zero_atom)
        return np.where(x >= 0, out, 0.0)

    def quantile(self, p):
        """Left-continuous inverse of :meth:`cdf`."""
        p = np.asarray(p, dtype=float)
        if self.kind == "density":
            grid, cum = _density_table(self)
            q = np.interp(p, cum, grid)
            return np.where(p <= self.zero_atom, 0.0, q)
        order = np.argsort(self.nodes, kind="stable")
        pos = self.nodes[order]
        cum = self.zero_atom + np.cumsum(self.weights[order])
        idx = np.searchsorted(cum, p - 1e-15, side="left")
        idx = np.minimum(idx, pos.size - 1)
        return np.where(p <= self.zero_atom, 0.0, pos[idx])


@dataclass(frozen=True)
class SymmetricMeasure:
    """The symmetrization ``(mu(B) + mu(-B)) / 2`` of a half-line measure."""

    base: MeasureRPlus

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        b = self.base
        total = 0.5 * float(np.dot(b.weights, f(b.nodes) + f(-b.nodes)))
        if b.zero_atom > 0:
            total += b.zero_atom * float(f(np.zeros(1))[0])
        return total

    def atoms(self):
        """Explicit ``(positions, weights)`` on the real line."""
        b = self.base
        pos = np.concatenate([-b.nodes[::-1], [0.0] if b.zero_atom > 0 else [], b.nodes])
        w = np.concatenate([0.5 * b.weights[::-1], [b.zero_atom] if b.zero_atom > 0 else [], 0.5 * b.weights])
        return pos, w


@dataclass(frozen=True)
class LambdaBounds:
    lambda1: float
    lambda2: float
    dirac: bool = False
    # the squared radii as integrated, so closed forms avoid sqrt round trips
    sq: Optional[tuple] = field(default=None, repr=False, compare=False)

    @property
    def inner_sq(self) -> float:
        return self.sq[0] if self.sq else self.lambda1 ** 2

    @property
    def outer_sq(self) -> float:
        return self.sq[1] if self.sq else self.lambda2 ** 2


# ---------------------------------------------------------------- constructors


def make_atomic(atoms: Iterable[Sequence[float]]) -> MeasureRPlus:
    atoms = [(float(p), float(w)) for p, w in atoms]
    if not atoms:
        raise NonNormalized("empty atom list", mass=0.0)
    pos = np.array([a[0] for a in atoms])
    w = np.array([a[1] for a in atoms])
    if np.any(pos < 0) or not np.all(np.isfinite(pos)):
        raise NegativeSupport("atom positions must be finite and >= 0", positions=pos.tolist())
    if np.any(w <= 0):
        raise NonNormalized("atom weights must be > 0", weights=w.tolist())
    if abs(w.sum() - 1.0) > MASS_TOL:
        raise NonNormalized(f"total mass {w.sum()!r} != 1", mass=float(w.sum()))
    at_zero = pos == 0
    zero_atom = float(w[at_zero].sum())
    pos, w = pos[~at_zero], w[~at_zero]
    uniq, inv = np.unique(pos, return_inverse=True)
    merged = np.zeros(uniq.size)
    np.add.at(merged, inv, w)
    return MeasureRPlus("atomic", _frozen(uniq), _frozen(merged), zero_atom=zero_atom)


def make_empirical(samples: Iterable[float]) -> MeasureRPlus:
    x = np.asarray(list(samples), dtype=float)
    if x.size == 0:
        raise NonNormalized("empty sample", mass=0.0)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise NegativeSupport("samples must be finite and >= 0")
    x = np.sort(x)
    n = x.size
    zero_atom = float(np.count_nonzero(x == 0)) / n
    pos = x[x > 0]
    return MeasureRPlus(
        "empirical",
        _frozen(pos),
        _frozen(np.full(pos.size, 1.0 / n)),
        zero_atom=zero_atom,
        samples=_frozen(x),
    )


@functools.lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gl_rule(a: float, b: float, n: int):
    """Gauss-Legendre nodes on ``(a, b)`` after an endpoint-clustering change of variables.

    Finite ``b``: ``x = a + (b - a)(1 - cos th)/2`` with ``th`` in ``(0, pi)``, which
    turns square-root and inverse-square-root edge behaviour into analytic
    integrands.  Infinite ``b``: ``x = a + v/(1 - v)`` with ``v`` in ``(0, 1)`` mapped
    the same way.
    """
    g, gw = _leggauss(n)
    th = 0.5 * np.pi * (g + 1.0)
    dth = 0.5 * np.pi * gw
    c = 0.5 * (1.0 - np.cos(th))
    dc = 0.5 * np.sin(th) * dth
    if math.isinf(b):
        x = a + c / (1.0 - c)
        dx = dc / (1.0 - c) ** 2
    else:
        x = a + (b - a) * c
        dx = (b - a) * dc
    return x, dx


def make_density(
    density: Callable[[np.ndarray], np.ndarray],
    support: Sequence[float],
    n_nodes: int = DEFAULT_NODES,
    zero_atom: float = 0.0,
    check: bool = True,
) -> MeasureRPlus:
    """Discretize ``density`` on ``support`` into a quadrature rule.

    The absolutely continuous part is renormalized to mass ``1 - zero_atom``;
    the factor applied is kept in ``renormalization``.
    """
    a, b = float(support[0]), float(support[1])
    if not (0 <= a < b):
        raise NegativeSupport("support must satisfy 0 <= a < b", support=[a, b])
    if not 0 <= zero_atom < 1:
        raise NonNormalized("zero_atom must lie in [0, 1)", zero_atom=zero_atom)
    n_nodes = int(n_nodes)
    if n_nodes < 2:
        raise InputError("need at least two nodes", n_nodes=n_nodes)

    def raw(n):
        x, dx = _gl_rule(a, b, n)
        f = np.asarray(density(x), dtype=float)
        return x, f, f * dx

    x, f, w = raw(n_nodes)
    if np.any(f < 0) or np.any(np.isnan(f)):
        raise NegativeDensity("density is negative on the support", min=float(np.nanmin(f)))
    mass = float(w.sum())
    if not math.isfinite(mass) or mass <= 0:
        raise NonIntegrable("density has no finite positive mass", mass=mass)
    if check:
        _, f2, w2 = raw(2 * n_nodes)
        if np.any(f2 < 0):
            raise NegativeDensity("density is negative on the support", min=float(f2.min()))
        mass2 = float(w2.sum())
        if not math.isfinite(mass2) or abs(mass2 - mass) > MASS_STABILITY_TOL * max(1.0, mass):
            raise NonIntegrable(
                "mass estimate unstable under node doubling",
                mass=mass,
                mass_doubled=mass2,
                n_nodes=n_nodes,
            )
    keep = w > 0
    factor = (1.0 - zero_atom) / mass

    def rebuild(n, _d=density, _s=(a, b), _z=zero_atom):
        return make_density(_d, _s, n, _z, check=False)

    return MeasureRPlus(
        "density",
        _frozen(x[keep]),
        _frozen(w[keep] * factor),
        zero_atom=float(zero_atom),
        support=(a, b),
        density=density,
        renormalization=factor,
        rebuild=rebuild,
    )


# ------------------------------------------------------------- named densities


def quarter_circle(radius: float = 2.0, n_nodes: int = DEFAULT_NODES) -> MeasureRPlus:
    """Law of ``|c|`` for a circular element of variance ``radius**2 / 4``."""
    R = float(radius)
    return make_density(lambda x: 4.0 / (np.pi * R * R) * np.sqrt(np.clip(R * R - x * x, 0, None)), (0.0, R), n_nodes)


def marchenko_pastur(rate: float = 1.0, n_nodes: int = DEFAULT_NODES) -> MeasureRPlus:
    """Marchenko-Pastur law with ratio ``rate``, atom ``1 - 1/rate`` at 0 when ``rate > 1``."""
    c = float(rate)
    if c <= 0:
        raise InputError("rate must be positive", rate=c)
    lo, hi = (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2

    def f(x):
        return np.sqrt(np.clip((hi - x) * (x - lo), 0, None)) / (2 * np.pi * c * x)

    return make_density(f, (lo, hi), n_nodes, zero_atom=max(0.0, 1.0 - 1.0 / c))


def uniform(a: float = 0.0, b: float = 1.0, n_nodes: int = DEFAULT_NODES) -> MeasureRPlus:
    a, b = float(a), float(b)
    if not b > a:
        raise InputError("uniform needs a < b", a=a, b=b)
    return make_density(lambda x: np.full_like(x, 1.0 / (b - a)), (a, b), n_nodes)


def tabulated(x: Sequence[float], y: Sequence[float], support=None, n_nodes: int = DEFAULT_NODES) -> MeasureRPlus:
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2 or np.any(np.diff(xs) <= 0):
        raise InputError("table needs increasing x and matching y")
    if support is None:
        support = (xs[0], xs[-1])
    return make_density(lambda t: np.interp(t, xs, ys, left=0.0, right=0.0), support, n_nodes)


# ----------------------------------------------------------------- operations


def symmetrize(mu: MeasureRPlus) -> SymmetricMeasure:
    return SymmetricMeasure(mu)


def pushforward_square(mu: MeasureRPlus) -> MeasureRPlus:
    """Image of ``mu`` under ``u -> u**2``."""
    density = None
    support = None
    rebuild = None
    if mu.kind == "density":
        f = mu.density

        def density(v, _f=f):
            r = np.sqrt(v)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(r > 0, _f(r) / (2 * r), 0.0)

        support = (mu.support[0] ** 2, mu.support[1] ** 2)
        if mu.rebuild is not None:
            parent = mu.rebuild
            rebuild = lambda n, _p=parent: pushforward_square(_p(n))  # noqa: E731
    nodes = mu.nodes ** 2
    samples = None if mu.samples is None else _frozen(mu.samples ** 2)
    return MeasureRPlus(
        mu.kind,
        _frozen(nodes),
        mu.weights,
        zero_atom=mu.zero_atom,
        support=support,
        density=density,
        renormalization=mu.renormalization,
        samples=samples,
        rebuild=rebuild,
    )


def moment(mu: MeasureRPlus, p: float) -> float:
    """``int u**p dmu``, returning ``inf`` when the integral diverges.

    For density measures whose support touches 0 (``p < 0``) or infinity
    (``p > 0``) divergence is detected by doubling the quadrature rule: a
    convergent integral is stable, a divergent one keeps growing as the
    extreme nodes move outwards.
    """
    val = mu.raw_moment(p)
    if not math.isfinite(val):
        return math.inf
    if mu.kind != "density" or mu.rebuild is None:
        return val
    a, b = mu.support
    risky = (p < 0 and a == 0) or (p > 0 and math.isinf(b))
    if not risky:
        return val
    val2 = mu.rebuild(2 * mu.n_nodes).raw_moment(p)
    if not math.isfinite(val2) or abs(val2 - val) > DIVERGENCE_RTOL * abs(val):
        return math.inf
    return val


def is_dirac(mu: MeasureRPlus) -> bool:
    if mu.kind == "density":
        return False
    if mu.zero_atom >= 1.0 - MASS_TOL:
        return True
    if mu.zero_atom > MASS_TOL:
        return False
    return bool(mu.nodes.size > 0 and np.ptp(mu.nodes) <= POSITION_TOL)


def lambda_bounds(mu: MeasureRPlus) -> LambdaBounds:
    """Inner and outer radii ``(int u**-2)**-1/2`` and ``(int u**2)**1/2``."""
    if is_dirac(mu):
        c = 0.0 if mu.zero_atom >= 1.0 - MASS_TOL else float(mu.nodes[0])
        return LambdaBounds(c, c, dirac=True)
    inv = moment(mu, -2)
    lam1 = 0.0 if math.isinf(inv) else inv ** -0.5
    m2 = moment(mu, 2)
    lam2 = math.inf if math.isinf(m2) else math.sqrt(m2)
    return LambdaBounds(lam1, lam2, sq=(0.0 if math.isinf(inv) else 1.0 / inv, m2))


_TABLE_CACHE: dict = {}


def _density_table(mu: MeasureRPlus, n: int = 20001):
    key = id(mu)
    hit = _TABLE_CACHE.get(key)
    if hit is not None and hit[0] is mu:
        return hit[1], hit[2]
    a, b = mu.support
    th = np.linspace(0.0, np.pi, n)
    c = 0.5 * (1.0 - np.cos(th))
    dc = 0.5 * np.sin(th)
    if math.isinf(b):
        c = np.minimum(c, 1.0 - 1e-12)
        x = a + c / (1.0 - c)
        dx = dc / (1.0 - c) ** 2
    else:
        x = a + (b - a) * c
        dx = (b - a) * dc
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.nan_to_num(np.asarray(mu.density(x), dtype=float) * dx, posinf=0.0)
    # the integrand can blow up at the two end samples; those carry no area
    # after the change of variables, so they are dropped from the trapezoid
    g[0] = g[-1] = 0.0
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(th))])
    cum = mu.zero_atom + (1.0 - mu.zero_atom) * cum / cum[-1]
    _TABLE_CACHE[key] = (mu, x, cum)
    return x, cum


# ------------------------------------------------------------- spec files

NAMED_DENSITIES = ("quarter_circle", "marchenko_pastur", "uniform", "table")


def measure_from_spec(spec: dict) -> MeasureRPlus:
    """Build a measure from the JSON measure-specification mapping."""
    if not isinstance(spec, dict):
        raise InputError("measure spec must be a JSON object")
    kind = spec.get("type")
    zero_atom = float(spec.get("zero_atom", 0.0) or 0.0)
    if kind == "atomic":
        atoms = spec.get("atoms")
        if not atoms:
            raise InputError("atomic spec needs a non-empty 'atoms' list")
        atoms = [tuple(a) for a in atoms]
        if zero_atom > 0:
            atoms.append((0.0, zero_atom))
        return make_atomic(atoms)
    if kind == "empirical":
        samples = spec.get("samples")
        if not samples:
            raise InputError("empirical spec needs a non-empty 'samples' list")
        return make_empirical(samples)
    if kind == "density":
        d = spec.get("density")
        if not isinstance(d, dict):
            raise InputError("density spec needs a 'density' object")
        name = d.get("name")
        params = d.get("params", {}) or {}
        n = int(d.get("nodes", DEFAULT_NODES))
        support = d.get("support")
        if name == "quarter_circle":
            mu = quarter_circle(params.get("radius", 2.0), n)
        elif name == "marchenko_pastur":
            mu = marchenko_pastur(params.get("rate", 1.0), n)
        elif name == "uniform":
            lo, hi = support if support else (params.get("a", 0.0), params.get("b", 1.0))
            mu = uniform(params.get("a", lo), params.get("b", hi), n)
        elif name == "table":
            mu = tabulated(params["x"], params["density"], support, n)
        else:
            raise InputError(f"unknown density name {name!r}", known=list(NAMED_DENSITIES))
        if zero_atom > 0:
            if name == "marchenko_pastur":
                raise InputError("marchenko_pastur fixes its own atom at 0")
            mu = make_density(mu.density, mu.support, n, zero_atom)
        return mu
    raise InputError(f"unknown measure type {kind!r}")


def load_measure(path) -> MeasureRPlus:
    text = Path(path).read_text()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"measure file is not valid JSON: {exc}") from exc
    return measure_from_spec(spec)
