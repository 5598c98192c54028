import cmath
import math

import numpy as np
import pytest
from oracles import shifted_circular_modulus

from rdiag_brown import brown as B
from rdiag_brown import measures as M
from rdiag_brown.errors import DiracMeasure, RegimeError
from rdiag_brown.subordination import INFINITE, NEG_INFINITE, KFunction

SQ2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def kfs(builtins):
    return {k: KFunction(v) for k, v in builtins.items()}


def annulus(kf, n):
    b = kf.bounds
    return np.linspace(b.lambda1, b.lambda2, n + 2)[1:-1]


# ------------------------------------------------------------ radial CDF


def test_circular_cdf(qc):
    for r in np.arange(1, 10) / 10:
        assert abs(B.radial_cdf(qc, r) - r * r) < 1e-8


def test_bernoulli_cdf(bern):
    assert B.radial_cdf(bern, SQ2) == pytest.approx(0.5, abs=1e-15)
    assert B.radial_cdf(bern, 2.0) == 1.0
    assert B.radial_cdf(bern, 1.0) == 0.0


def test_cdf_at_inner_radius_is_right_continuous(bern):
    lam1 = KFunction(bern).bounds.lambda1
    assert B.radial_cdf(bern, lam1) == 0.0


def test_cdf_dirac_rejected():
    with pytest.raises(DiracMeasure):
        B.radial_cdf(M.make_atomic([(1, 1.0)]), 0.5)


def test_cdf_zero_mass_limit():
    mu = M.make_density(lambda x: np.ones_like(x), (1.0, 2.0), zero_atom=0.3)
    assert B.radial_cdf(mu, 1e-6) == pytest.approx(0.3, abs=1e-8)
    rbm = B.radial_brown_measure(mu)
    assert rbm.zero_mass == pytest.approx(0.3)
    assert rbm.cdf[0] == pytest.approx(0.3, abs=1e-3)


def test_cdf_s_transform_route(qc, bern):
    assert B.radial_cdf_via_s_transform(qc, 0.5) == pytest.approx(0.25, abs=1e-12)
    assert B.radial_cdf_via_s_transform(bern, SQ2) == pytest.approx(0.5, abs=1e-12)


def test_cdf_routes_agree(kfs):
    for name, kf in kfs.items():
        err = max(abs(B.radial_cdf(kf, r) - B.radial_cdf_via_s_transform(kf, r)) for r in annulus(kf, 50))
        assert err < 1e-9, name


def test_cdf_reaches_one_at_outer_radius(kfs):
    for kf in kfs.values():
        lam2 = kf.bounds.lambda2
        assert abs(B.radial_cdf(kf, lam2 * (1 - 1e-11)) - 1.0) < 1e-8
        assert B.radial_cdf(kf, lam2) == 1.0


def test_cdf_monotone(kfs):
    for kf in kfs.values():
        vals = [B.radial_cdf(kf, r) for r in annulus(kf, 200)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


# --------------------------------------------------------------- density


def test_circular_density(qc):
    for r in np.linspace(0.05, 0.95, 19):
        assert abs(B.radial_density(qc, r) - 1 / math.pi) < 1e-7


def test_density_matches_difference(kfs):
    for name, kf in kfs.items():
        for r in annulus(kf, 5):
            h = 1e-5 * r
            fd = (B.radial_cdf(kf, r + h) - B.radial_cdf(kf, r - h)) / (2 * h)
            assert abs(fd - 2 * math.pi * r * B.radial_density(kf, r)) < 1e-5, (name, r)


def test_density_nonnegative(kfs):
    for kf in kfs.values():
        assert min(B.radial_density(kf, r) for r in annulus(kf, 1000)) >= 0.0


def test_density_outside_annulus(bern):
    with pytest.raises(RegimeError):
        B.radial_density(bern, 2.0)


def test_density_normalization(kfs):
    # the radial density integrates to 1 - zero_mass over the annulus
    from scipy import integrate

    for name, kf in kfs.items():
        b = kf.bounds
        val, _ = integrate.quad(lambda r: 2 * math.pi * r * B.radial_density(kf, r), b.lambda1, b.lambda2,
                                epsabs=1e-10, limit=200)
        assert abs(val - (1 - kf.base.zero_atom)) < 1e-6, name


def test_radial_brown_measure(bern):
    rbm = B.radial_brown_measure(bern, np.linspace(0.5, 2.0, 40))
    assert np.all(np.diff(rbm.cdf) >= 0)
    assert np.all((rbm.cdf >= 0) & (rbm.cdf <= 1))
    assert np.all(rbm.density >= 0)
    assert rbm.cdf[-1] == 1.0


def test_radial_brown_measure_default_grid(mp):
    rbm = B.radial_brown_measure(mp)
    assert rbm.r[-1] < rbm.lambda2
    assert np.all(np.diff(rbm.cdf) >= 0)


# ---------------------------------------------------------- determinants


def test_fk_det_regularized_large_t(kfs):
    for kf in kfs.values():
        t = 1e6
        v = B.fk_det_regularized(kf, 0.7 + 0.2j, t).log_delta
        assert abs(v - 2 * math.log(t)) < 1e-6


def test_fk_det_regularized_derivative(kfs):
    for kf in kfs.values():
        lam = 0.9 * cmath.exp(0.4j)
        for t in (0.05, 0.5, 3.0):
            d = 1e-5 * t
            up = B.fk_det_regularized(kf, lam, t + d).log_delta
            dn = B.fk_det_regularized(kf, lam, t - d).log_delta
            h = kf.h(kf.solve(abs(lam), t).s)
            assert abs((up - dn) / (2 * d) - 2 * h) < 1e-6


def test_fk_det_regimes(bern, kfs):
    assert B.fk_det(bern, 3.0).log_delta == math.log(3.0)
    assert B.fk_det(bern, 1.0).log_delta == pytest.approx(0.5 * math.log(2.0), abs=1e-15)
    assert B.fk_det(bern, 0.3j).log_delta == pytest.approx(0.5 * math.log(2.0), abs=1e-15)
    for kf in kfs.values():
        lam2 = kf.bounds.lambda2
        a = B.fk_det(kf, lam2 * (1 - 1e-6)).log_delta
        b = B.fk_det(kf, lam2 * (1 + 1e-6)).log_delta
        assert abs(a - b) < 1e-4


def test_fk_det_zero_atom_tag():
    mu = M.make_atomic([(0, 0.25), (1, 0.75)])
    kf = KFunction(mu)
    assert kf.bounds.lambda1 == 0.0
    assert B.log_det_T(mu) is NEG_INFINITE


def test_fk_det_gradient(kfs):
    for kf in kfs.values():
        for r in annulus(kf, 6):
            h = 1e-5 * r
            fd = (B.fk_det(kf, r + h).log_delta - B.fk_det(kf, r - h).log_delta) / (2 * h)
            assert abs(fd - B.radial_cdf(kf, r) / r) < 1e-6


def test_fk_det_rotation(kfs):
    for kf in kfs.values():
        for r in (0.5, 1.2, 3.0):
            assert B.fk_det(kf, r).log_delta == B.fk_det(kf, r * cmath.exp(1.1j)).log_delta


# ---------------------------------------------------------------- traces


def test_resolvent_traces_phase(kfs):
    for kf in kfs.values():
        lam, th = 1.1, 0.8
        a, a_bar = B.resolvent_traces(kf, lam, 0.3)
        b, b_bar = B.resolvent_traces(kf, lam * cmath.exp(1j * th), 0.3)
        assert abs(b - cmath.exp(1j * th) * a) < 1e-14
        assert abs(b_bar - b.conjugate()) < 1e-15


def test_resolvent_limits(bern):
    assert B.resolvent_traces_limit(bern, 1.0) == (0, 0)
    lam = 3.0 * cmath.exp(0.2j)
    a, b = B.resolvent_traces_limit(bern, lam)
    assert abs(a - lam / 9.0) < 1e-15 and abs(b - lam.conjugate() / 9.0) < 1e-15
    a, _ = B.resolvent_traces_limit(bern, SQ2)
    assert abs(a - SQ2 / 4) < 1e-14


def test_resolvent_limit_matches_small_t(kfs):
    for kf in kfs.values():
        lam = 0.5 * (kf.bounds.lambda1 + kf.bounds.lambda2) * cmath.exp(0.3j)
        a0, _ = B.resolvent_traces_limit(kf, lam)
        a, _ = B.resolvent_traces(kf, lam, 1e-9)
        assert abs(a - a0) < 1e-6


# ------------------------------------------------------- negative moment


def test_negative_moment(bern):
    assert B.negative_moment_first(bern, 2.0) == pytest.approx(2 / 3, abs=1e-15)
    assert B.negative_moment_first(bern, SQ2) is INFINITE
    assert B.negative_moment_first(bern, 1.0) == pytest.approx(1 / 0.6, abs=1e-14)
    assert abs(B.negative_moment_numeric(bern, 2.0, 1e-6) - 2 / 3) < 1e-4


def test_negative_moment_at_seam(bern):
    assert B.negative_moment_first(bern, KFunction(bern).bounds.lambda2) is INFINITE


@pytest.mark.parametrize("t", [0.25, 0.5])
def test_negative_moment_shifted_circular(t):
    mu = shifted_circular_modulus(t)
    for r in (0.1, 0.3):
        exact = 1 / ((1 - t) - r * r)
        assert B.negative_moment_first(mu, r) == pytest.approx(exact, rel=1e-10)
        assert B.negative_moment_numeric(mu, r, 1e-6) == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0, 2.0])
def test_shifted_circular_radii(t, qc):
    circ_t = M.quarter_circle(2 * math.sqrt(t))
    b = B.shifted_modulus_bounds(circ_t, 1.0)
    assert abs(b.lambda2 - math.sqrt(1 + t)) < 1e-8
    assert abs(b.lambda1 - math.sqrt(max(0.0, 1 - t))) < 1e-8
    direct = M.lambda_bounds(shifted_circular_modulus(t))
    assert abs(direct.lambda2 - math.sqrt(1 + t)) < 1e-8
    assert abs(direct.lambda1 - math.sqrt(max(0.0, 1 - t))) < 1e-8


# -------------------------------------------------------- log potential


def test_log_potential_circular(qc):
    assert abs(B.log_potential(qc, 2.0) - math.log(2.0)) < 1e-6
    # int_0^1 log max(1/2, rho) 2 rho drho = (log(1/2) + 3/4) / 4 ... closed form below
    exact = 0.25 * math.log(0.5) + (-0.5 - (0.25 * math.log(0.5) - 0.125))
    assert abs(B.log_potential(qc, 0.5) - exact) < 1e-9
    assert abs(B.fk_det(qc, 0.5).log_delta - exact) < 1e-6


def test_log_potential_consistency(kfs):
    for name, kf in kfs.items():
        grid = B.regime_spanning_grid(kf, 16)
        assert len(grid) == 16
        assert B.log_potential_consistency(None, kf, grid) < 1e-6, name


# -------------------------------------------------- Hermitian reduction


def test_hermitian_delta(kfs):
    for kf in kfs.values():
        for r in (0.2, 1.0, 2.5):
            for eps in (1e-4, 0.1, 10.0):
                hr = B.hermitian_reduction(kf, r * cmath.exp(0.7j), eps)
                assert hr.delta > 0
                assert hr.identity_residual < 1e-9
                assert hr.delta == pytest.approx(B.hermitian_reduction_delta(kf, r, eps), rel=1e-15)


def test_hermitian_entries_match_traces(bern):
    lam = 1.3 * cmath.exp(0.5j)
    hr = B.hermitian_reduction(bern, lam, 0.2)
    a, b = B.resolvent_traces(bern, lam, 0.2)
    assert abs(hr.entries[0, 1] - a) < 1e-14
    assert abs(hr.entries[1, 0] - b) < 1e-14
