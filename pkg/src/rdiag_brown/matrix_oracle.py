"""Finite-dimensional Monte Carlo oracle.

``T_n = U V diag(q) V*`` with ``U, V`` independent Haar unitaries and ``q`` the
``i/(n+1)`` quantiles of the law of ``|T|``.  The spectrum of ``|T_n|`` is
deterministic, so the Monte Carlo variance comes from the unitaries only.
Each sample draws from its own stream ``default_rng([seed, index])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EigenFailure, InputError
from .measures import MeasureRPlus


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def complex_gaussian(n: int, rng) -> np.ndarray:
    rng = _rng(rng)
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)


def sample_haar_unitary(n: int, rng=None) -> np.ndarray:
    """Haar unitary from the QR factorization of a complex Ginibre matrix.

    Columns are rescaled by the phases of ``diag(R)`` so the factorization is
    unique; without that step the law is not Haar.
    """
    if n < 1:
        raise InputError("n must be >= 1", n=n)
    q, r = np.linalg.qr(complex_gaussian(n, rng))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_ginibre(n: int, rng=None) -> np.ndarray:
    """Ginibre matrix scaled by ``1/sqrt(n)``; its spectrum fills the unit disc."""
    return complex_gaussian(n, rng) / math.sqrt(n)


def quantile_spectrum(mu: MeasureRPlus, n: int) -> np.ndarray:
    p = np.arange(1, n + 1) / (n + 1.0)
    return np.asarray(mu.quantile(p), dtype=float)


def sample_rdiagonal(mu: MeasureRPlus, n: int, rng=None) -> np.ndarray:
    if n < 2:
        raise InputError("n must be >= 2", n=n)
    rng = _rng(rng)
    h = quantile_spectrum(mu, n)
    u = sample_haar_unitary(n, rng)
    v = sample_haar_unitary(n, rng)
    return u @ ((v * h) @ v.conj().T)


# -------------------------------------------------------------- spectra


@dataclass(frozen=True)
class EmpiricalBrown:
    eigenvalues: np.ndarray
    moduli: np.ndarray  # sorted

    def cdf(self, r):
        return np.searchsorted(self.moduli, np.asarray(r, dtype=float), side="right") / self.moduli.size


def empirical_brown(t_matrix: np.ndarray) -> EmpiricalBrown:
    a = np.asarray(t_matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError("expected a square matrix", shape=a.shape)
    try:
        ev = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc), n=a.shape[0]) from exc
    if not np.all(np.isfinite(ev)):
        raise EigenFailure("non-finite eigenvalues", n=a.shape[0])
    return EmpiricalBrown(ev, np.sort(np.abs(ev)))


def _eval_cdf(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        f = np.asarray(cdf(x), dtype=float)
        if f.shape == x.shape:
            return f
    except (TypeError, ValueError):
        pass
    return np.array([cdf(v) for v in x], dtype=float)


def ks_distance(samples: Sequence[float], cdf: Callable, continuous: bool = True) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``.

    ``cdf`` is evaluated at the jump points only; it may be vectorized or scalar.
    With ``continuous=False`` the left limits ``cdf(x-)`` are evaluated too, which
    makes the distance exact when ``cdf`` itself has jumps.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise InputError("empirical sample is empty")
    f = _eval_cdf(cdf, x)
    f_left = f if continuous else _eval_cdf(cdf, np.nextafter(x, -np.inf))
    # ties: the empirical CDF jumps to the last index of each run
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(f_left - lower))))


# ---------------------------------------------------- shifted operators


@dataclass(frozen=True)
class ShiftedSpectrum:
    """SVD of ``lambda - T`` reused across ``t``."""

    lam: complex
    w: np.ndarray
    sigma: np.ndarray
    vh: np.ndarray

    def h(self, t: float) -> float:
        """``t tr_n[(|lambda - T|^2 + t^2)^-1]``."""
        return float(t * np.mean(1.0 / (self.sigma ** 2 + t * t)))

    def resolvent_traces(self, t: float):
        """Normalized traces of ``Y (Y*Y + t^2)^-1`` and ``Y* (Y*Y + t^2)^-1`` for ``Y = lambda - T``."""
        g = self.sigma / (self.sigma ** 2 + t * t)
        # Y (Y*Y+t^2)^-1 = W diag(g) V*, trace = sum g_i (V* W)_ii
        diag = np.einsum("ij,ji->i", self.vh, self.w)
        first = complex(np.mean(g * diag))
        return first, first.conjugate()


def shifted_spectrum(t_matrix: np.ndarray, lam) -> ShiftedSpectrum:
    a = np.asarray(t_matrix)
    lam = complex(lam)
    y = lam * np.eye(a.shape[0]) - a
    w, sigma, vh = np.linalg.svd(y)
    return ShiftedSpectrum(lam, w, sigma, vh)


def empirical_symmetrized_law(t_matrix: np.ndarray, lam, t_list: Sequence[float]):
    """Singular values of ``T - lambda`` and ``h_lambda(t) = t mean(1/(sigma^2 + t^2))``."""
    if any(not t > 0 for t in t_list):
        raise InputError("t values must be > 0", t_list=list(t_list))
    sp = shifted_spectrum(t_matrix, lam)
    return sp.sigma, np.array([sp.h(t) for t in t_list])


def block_resolvent_entries(t_matrix: np.ndarray, lam, eps: float) -> np.ndarray:
    """Blockwise normalized traces of ``(Lambda_eps - X)^-1``.

    ``X = [[0, T], [T*, 0]]`` and ``Lambda_eps = [[i eps, lambda], [conj(lambda), i eps]]``
    (scalar blocks).  The full ``2n x 2n`` inverse is formed on purpose, as an
    oracle independent of the SVD shortcuts above.
    """
    a = np.asarray(t_matrix)
    n = a.shape[0]
    lam = complex(lam)
    eye = np.eye(n)
    m = np.block([[1j * eps * eye, lam * eye - a], [lam.conjugate() * eye - a.conj().T, 1j * eps * eye]])
    inv = np.linalg.inv(m)
    out = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = np.trace(inv[i * n:(i + 1) * n, j * n:(j + 1) * n]) / n
    return out


# ------------------------------------------------------------ ensembles


@dataclass(frozen=True)
class McConfig:
    n: int
    n_samples: int = 1
    seed: int = 0
    lambda_list: tuple = ()
    t_list: tuple = ()
    model: str = "rdiagonal"  # or "ginibre"

    def __post_init__(self):
        if self.n < 2:
            raise InputError("n must be >= 2", n=self.n)
        if self.n_samples < 1:
            raise InputError("n_samples must be >= 1", n_samples=self.n_samples)
        if any(not t > 0 for t in self.t_list):
            raise InputError("t values must be > 0")
        if self.model not in ("rdiagonal", "ginibre"):
            raise InputError("unknown model", model=self.model)
        object.__setattr__(self, "lambda_list", tuple(complex(x) for x in self.lambda_list))
        object.__setattr__(self, "t_list", tuple(float(x) for x in self.t_list))

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, index])


@dataclass
class McEnsembleReport:
    n: int
    n_samples: int
    seed: int
    eigenvalue_moduli: np.ndarray
    ks_to_analytic: Optional[float] = None
    resolvent_trace_estimates: list = field(default_factory=list)

    def empirical_radial_cdf(self, r):
        return np.searchsorted(self.eigenvalue_moduli, np.asarray(r, dtype=float), side="right") / self.eigenvalue_moduli.size

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "ks": self.ks_to_analytic,
            "per_lambda": self.resolvent_trace_estimates,
        }


def run_ensemble(
    mu: Optional[MeasureRPlus],
    config: McConfig,
    analytic_cdf: Optional[Callable] = None,
    analytic_h: Optional[Callable[[complex, float], float]] = None,
    analytic_traces: Optional[Callable] = None,
) -> McEnsembleReport:
    """Pool eigenvalue moduli and shifted-operator statistics over ``config.n_samples`` draws.

    Per-sample statistics are averaged in sample order, so the report depends
    only on the configuration.
    """
    if config.model == "rdiagonal" and mu is None:
        raise InputError("the rdiagonal model needs a measure")
    moduli = []
    keys = [(lam, t) for lam in config.lambda_list for t in config.t_list]
    h_acc = np.zeros(len(keys))
    tr_acc = np.zeros(len(keys), dtype=complex)
    for idx in range(config.n_samples):
        rng = config.rng(idx)
        if config.model == "ginibre":
            tm = sample_ginibre(config.n, rng)
        else:
            tm = sample_rdiagonal(mu, config.n, rng)
        moduli.append(empirical_brown(tm).moduli)
        k = 0
        for lam in config.lambda_list:
            sp = shifted_spectrum(tm, lam)
            for t in config.t_list:
                h_acc[k] += sp.h(t)
                tr_acc[k] += sp.resolvent_traces(t)[0]
                k += 1
    pooled = np.sort(np.concatenate(moduli))
    ks = ks_distance(pooled, analytic_cdf) if analytic_cdf is not None else None
    rows = []
    for k, (lam, t) in enumerate(keys):
        row = {
            "lambda": [lam.real, lam.imag],
            "t": t,
            "h_mc": float(h_acc[k] / config.n_samples),
            "trace_mc": [float(tr_acc[k].real / config.n_samples), float(tr_acc[k].imag / config.n_samples)],
        }
        if analytic_h is not None:
            row["h_analytic"] = float(analytic_h(lam, t))
            row["h_error"] = abs(row["h_mc"] - row["h_analytic"])
        if analytic_traces is not None:
            tr = complex(analytic_traces(lam, t))
            row["trace_analytic"] = [tr.real, tr.imag]
            row["trace_error"] = abs(complex(*row["trace_mc"]) - tr)
        rows.append(row)
    return McEnsembleReport(config.n, config.n_samples, config.seed, pooled, ks, rows)
