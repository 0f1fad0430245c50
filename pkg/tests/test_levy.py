import numpy as np
import pytest
from scipy.stats import norminvgauss

from locstat import (GaussianLevy, NIGLevy, RngStream, levy_moments,
                     nig_centered, sample_increment, sample_increments)
from locstat.levy import nig_fourth_cumulant

PAPER_NIG = dict(alpha=3.0, beta=1.0, delta_nig=2.0, mu=-2.0 / np.sqrt(8.0))


def test_paper_nig_moments():
    spec = NIGLevy(**PAPER_NIG)
    mean, var = levy_moments(spec)
    assert mean == pytest.approx(0.0, abs=1e-12)
    assert var == pytest.approx(9.0 * np.sqrt(2.0) / 16.0, abs=1e-12)


def test_gaussian_moments():
    assert levy_moments(GaussianLevy(0.2)) == (0.0, 0.2)


def test_symmetric_nig_centered_exactly():
    spec = NIGLevy(alpha=2.0, beta=0.0, delta_nig=1.0, mu=0.0)
    assert levy_moments(spec)[0] == 0.0


def test_nig_centered_helper_matches_paper_location():
    spec = nig_centered(3.0, 1.0, 2.0)
    assert spec.mu == pytest.approx(PAPER_NIG["mu"], abs=1e-15)


@pytest.mark.parametrize("alpha,beta,delta", [(3.0, 1.0, 2.0),
                                              (5.0, -2.0, 1.5),
                                              (1.0, 0.0, 0.7)])
def test_moments_against_scipy(alpha, beta, delta):
    # scipy parameterizes by a = alpha*delta, b = beta*delta, scale = delta
    spec = nig_centered(alpha, beta, delta)
    mean, var = levy_moments(spec)
    ref_mean, ref_var = norminvgauss.stats(
        alpha * delta, beta * delta, loc=spec.mu, scale=delta,
        moments="mv")
    assert mean == pytest.approx(float(ref_mean), abs=1e-12)
    assert var == pytest.approx(float(ref_var), rel=1e-12)


def test_inadmissible_specs_rejected():
    with pytest.raises(ValueError):
        NIGLevy(alpha=1.0, beta=2.0, delta_nig=1.0, mu=0.0)
    with pytest.raises(ValueError):
        NIGLevy(alpha=3.0, beta=1.0, delta_nig=0.0, mu=0.0)
    with pytest.raises(ValueError):
        NIGLevy(**{**PAPER_NIG, "mu": 0.1})  # not centered
    with pytest.raises(ValueError):
        GaussianLevy(0.0)
    with pytest.raises(ValueError):
        GaussianLevy(-1.0)


def test_zero_and_negative_dt():
    rng = RngStream(1)
    assert sample_increment(GaussianLevy(0.2), 0.0, rng) == 0.0
    assert sample_increment(NIGLevy(**PAPER_NIG), 0.0, rng) == 0.0
    with pytest.raises(ValueError):
        sample_increment(GaussianLevy(0.2), -1e-9, rng)


def test_gaussian_small_dt_variance():
    n = 1_000_000
    draws = sample_increments(GaussianLevy(0.2), 1e-3, n, RngStream(42))
    target = 2e-4
    se = target * np.sqrt(2.0 / n)
    assert abs(draws.var() - target) < 3.0 * se


def test_nig_unit_dt_mean():
    n = 1_000_000
    spec = NIGLevy(**PAPER_NIG)
    draws = sample_increments(spec, 1.0, n, RngStream(7))
    sigma_l = levy_moments(spec)[1]
    assert abs(draws.mean()) < 3.0 * np.sqrt(sigma_l / n)


def test_nig_first_four_moments():
    n = 1_000_000
    spec = NIGLevy(**PAPER_NIG)
    x = sample_increments(spec, 1.0, n, RngStream(99))
    var = levy_moments(spec)[1]
    kappa = spec.kappa
    skew3 = 3.0 * spec.delta_nig * spec.beta * spec.alpha ** 2 / kappa ** 5
    mu4 = nig_fourth_cumulant(spec) + 3.0 * var ** 2

    # standard errors estimated from the sample's higher moments
    def se_central(k):
        ck = np.mean((x - x.mean()) ** k)
        c2k = np.mean((x - x.mean()) ** (2 * k))
        return np.sqrt(max(c2k - ck ** 2, 0.0) / n)

    assert abs(x.mean() - 0.0) < 4.0 * np.sqrt(var / n)
    assert abs(x.var() - var) < 4.0 * se_central(2)
    assert abs(np.mean((x - x.mean()) ** 3) - skew3) < 4.0 * se_central(3)
    assert abs(np.mean((x - x.mean()) ** 4) - mu4) < 4.0 * se_central(4)


@pytest.mark.parametrize("spec", [GaussianLevy(0.2), NIGLevy(**PAPER_NIG)])
def test_increment_additivity(spec):
    # sum of independent increments over dt1, dt2 matches one increment
    # over dt1 + dt2 in the first two sample moments
    n = 400_000
    a = sample_increments(spec, 0.3, n, RngStream(11, 0))
    b = sample_increments(spec, 0.7, n, RngStream(11, 1))
    c = sample_increments(spec, 1.0, n, RngStream(11, 2))
    combined = a + b
    var = levy_moments(spec)[1]
    se_mean = np.sqrt(2.0 * var / n)
    assert abs(combined.mean() - c.mean()) < 4.0 * se_mean
    se_var = np.sqrt((np.var(combined ** 2) + np.var(c ** 2)) / n)
    assert abs(combined.var() - c.var()) < 4.0 * se_var


def test_streams_deterministic_and_distinct():
    spec = NIGLevy(**PAPER_NIG)
    a = sample_increments(spec, 0.5, 1000, RngStream(3, 4))
    b = sample_increments(spec, 0.5, 1000, RngStream(3, 4))
    c = sample_increments(spec, 0.5, 1000, RngStream(3, 5))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_stream_validation():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(2 ** 64)
    with pytest.raises(ValueError):
        RngStream(0, -2)
    sub = RngStream(9, 1).substream(3)
    assert sub.seed == 9 and sub.stream != 1
