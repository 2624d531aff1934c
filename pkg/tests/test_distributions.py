import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from vlc5g.distributions import (
    DistributionSpec,
    EmpiricalSample,
    TLocationScaleParams,
    tls_cdf,
    tls_pdf,
    tls_sample,
)
from vlc5g.errors import ParameterDomainError

from conftest import FIVEG

mpmath.mp.dps = 40


def mp_tls_pdf(x, mu, sigma, nu):
    """Density straight from the printed formula, in 40-digit arithmetic."""
    x, mu, sigma, nu = (mpmath.mpf(v) for v in (x, mu, sigma, nu))
    norm = mpmath.gamma((nu + 1) / 2) / (sigma * mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))
    return norm * ((nu + ((x - mu) / sigma) ** 2) / nu) ** (-(nu + 1) / 2)


def test_cauchy_special_case():
    assert tls_pdf(0.0, TLocationScaleParams(0, 1, 1)) == pytest.approx(1 / math.pi, abs=1e-12)


def test_peak_matches_high_precision_oracle():
    p = FIVEG
    got = float(tls_pdf(p.mu, p))
    want = float(mp_tls_pdf(p.mu, p.mu, p.sigma, p.nu))
    assert got == pytest.approx(want, rel=1e-12)
    # Frozen from the 40-digit evaluation above.
    assert want == pytest.approx(435.39455468304162, rel=1e-14)


@given(
    a=st.floats(0, 1e3),
    mu=st.floats(-10, 10),
    sigma=st.floats(1e-4, 10),
    nu=st.floats(0.5, 100),
)
def test_symmetry(a, mu, sigma, nu):
    p = TLocationScaleParams(mu, sigma, nu)
    assert tls_pdf(mu + a, p) == tls_pdf(mu - a, p) or math.isclose(
        tls_pdf(mu + a, p), tls_pdf(mu - a, p), rel_tol=1e-12
    )


def test_symmetry_1000_random_offsets(rng):
    p = FIVEG
    a = rng.uniform(0, 50 * p.sigma, 1000)
    # Evaluate on z directly so the check is not blurred by rounding in mu +/- a.
    z = a / p.sigma
    q = TLocationScaleParams(0.0, p.sigma, p.nu)
    np.testing.assert_array_equal(tls_pdf(z * p.sigma, q), tls_pdf(-z * p.sigma, q))


@pytest.mark.parametrize("bad", [(0, 0, 1), (0, -1, 1), (0, 1, 0), (0, 1, -2), (math.nan, 1, 1), (0, math.inf, 1)])
def test_invalid_parameters(bad):
    with pytest.raises(ParameterDomainError):
        TLocationScaleParams(*bad)


def test_cdf_at_location_is_half():
    for sigma, nu in [(1e-4, 0.6), (1.0, 1.0), (3.0, 50.0)]:
        assert tls_cdf(1.5, TLocationScaleParams(1.5, sigma, nu)) == pytest.approx(0.5, abs=1e-15)


def test_cdf_limits():
    p = FIVEG
    assert tls_cdf(-math.inf, p) == 0.0
    assert tls_cdf(math.inf, p) == 1.0
    assert tls_cdf(-1e12, p) < 1e-12
    assert tls_cdf(1e12, p) > 1 - 1e-12


def test_cdf_against_quadrature_of_pdf():
    p = FIVEG
    x = p.mu + p.sigma
    # Integrate in standardized units; split at the mode for the peaked density.
    f = lambda z: float(tls_pdf(p.mu + p.sigma * z, p)) * p.sigma
    left, _ = integrate.quad(f, -np.inf, 0.0, epsabs=1e-13, epsrel=1e-13, limit=500)
    right, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    assert tls_cdf(x, p) == pytest.approx(left + right, abs=1e-9)
    # Frozen from a 40-digit mpmath quadrature of the printed density.
    assert tls_cdf(x, p) == pytest.approx(0.75560156603525430, abs=1e-12)


@pytest.mark.parametrize("nu", [0.6, 1.09, 2.5, 30.0])
def test_cdf_matches_scipy_student_t(nu):
    z = np.linspace(-40, 40, 801)
    got = tls_cdf(z, TLocationScaleParams(0.0, 1.0, nu))
    np.testing.assert_allclose(got, stats.t.cdf(z, nu), rtol=1e-10, atol=1e-14)


@settings(max_examples=50)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=30), st.floats(0.5, 80))
def test_cdf_nondecreasing(xs, nu):
    xs = np.sort(np.asarray(xs))
    c = tls_cdf(xs, TLocationScaleParams(0.0, 1.0, nu))
    assert np.all(np.diff(c) >= 0)
    assert np.all((c >= 0) & (c <= 1))


def test_normalization_grid():
    for sigma in np.geomspace(1e-4, 10, 5):
        for nu in np.geomspace(0.6, 50, 5):
            p = TLocationScaleParams(0.0, float(sigma), float(nu))
            body, _ = integrate.quad(
                lambda x: float(tls_pdf(x, p)), -200 * sigma, 200 * sigma,
                points=[0.0], limit=1000, epsabs=1e-12, epsrel=1e-12,
            )
            # Exact two-sided tail beyond 200 sigma from the incomplete beta function.
            tail = float(mpmath.betainc(nu / 2, 0.5, 0, nu / (nu + 200.0**2), regularized=True))
            assert body + tail == pytest.approx(1.0, abs=1e-6), (sigma, nu)


def test_normal_limit():
    x = np.linspace(-5, 5, 201)
    got = tls_pdf(x, TLocationScaleParams(0.0, 1.0, 1e6))
    assert np.max(np.abs(got - stats.norm.pdf(x))) < 1e-4


@pytest.mark.parametrize("nu", [0.6, 1.09, 5.0, 50.0])
def test_cdf_derivative_matches_pdf(nu):
    p = TLocationScaleParams(0.01, 0.002, nu)
    x = p.mu + p.sigma * np.linspace(-5, 5, 41)
    h = 1e-4 * p.sigma
    fd = (tls_cdf(x + h, p) - tls_cdf(x - h, p)) / (2 * h)
    np.testing.assert_allclose(fd, tls_pdf(x, p), rtol=1e-6)


def test_sampling_is_deterministic():
    a = tls_sample(FIVEG, 42, 1000)
    b = tls_sample(FIVEG, 42, 1000)
    assert a.tobytes() == b.tobytes()
    assert tls_sample(FIVEG, 43, 10).tobytes() != a[:10].tobytes()


def test_sample_median_inside_order_statistic_interval():
    n = 100_000
    x = np.sort(tls_sample(FIVEG, 7, n))
    # 99% CI for the median: order statistics at n/2 -/+ 2.576 sqrt(n)/2.
    half = 2.576 * math.sqrt(n) / 2
    lo, hi = x[int(math.floor(n / 2 - half)) - 1], x[int(math.ceil(n / 2 + half)) - 1]
    assert lo <= FIVEG.mu <= hi


def test_sampling_ks_against_cdf():
    p = TLocationScaleParams(0.0, 1.0, 1.09)
    x = tls_sample(p, 11, 100_000)
    d = stats.kstest(x, lambda v: tls_cdf(v, p)).statistic
    assert d < 0.01


def test_sample_rejects_bad_n():
    with pytest.raises(ValueError):
        tls_sample(FIVEG, 0, 0)


class TestDistributionSpec:
    def test_arity_checked(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec("normal", (0.0, 1.0, 2.0))
        with pytest.raises(ParameterDomainError):
            DistributionSpec("t-location-scale", (0.0, 1.0))

    def test_unknown_family(self):
        with pytest.raises(ParameterDomainError):
            DistributionSpec("weibull", (1.0, 1.0))

    def test_scale_must_be_positive(self):
        for fam in ("normal", "logistic", "log-normal"):
            with pytest.raises(ParameterDomainError):
                DistributionSpec(fam, (0.0, 0.0))

    @pytest.mark.parametrize(
        "family,params,ref",
        [
            ("normal", (1.0, 2.0), stats.norm(1.0, 2.0)),
            ("logistic", (1.0, 2.0), stats.logistic(1.0, 2.0)),
            ("log-normal", (-4.0, 0.3), stats.lognorm(0.3, scale=math.exp(-4.0))),
            ("t-location-scale", (1.0, 2.0, 3.0), stats.t(3.0, 1.0, 2.0)),
        ],
    )
    def test_against_scipy(self, family, params, ref):
        spec = DistributionSpec(family, params)
        x = np.linspace(0.001, 6.0, 50)
        np.testing.assert_allclose(spec.logpdf(x), ref.logpdf(x), rtol=1e-10)
        np.testing.assert_allclose(spec.cdf(x), ref.cdf(x), rtol=1e-10, atol=1e-15)

    def test_lognormal_nonpositive_support(self):
        spec = DistributionSpec("log-normal", (0.0, 1.0))
        assert spec.pdf(0.0) == 0.0
        assert spec.cdf(-1.0) == 0.0


class TestEmpiricalSample:
    def test_rejects_negative_and_nonfinite(self):
        for bad in ([], [1.0, -0.1], [math.nan], [math.inf]):
            with pytest.raises(ValueError):
                EmpiricalSample(bad)

    def test_from_ms(self):
        s = EmpiricalSample.from_ms([1.0, 2.5])
        assert s.n == 2
        np.testing.assert_allclose(s.values, [1e-3, 2.5e-3])
