import numpy as np
import pytest

from locstat import (ConfigurationError, DeConfig, EstimationError,
                     GaussianLevy, RngStream, SamplingGrid, Window,
                     constant_theta, example2d_family, extract_window,
                     local_autocov, local_periodogram, local_spectrum,
                     o2_grid, sampled_autocovariance, simulate_tv_statespace,
                     whittle_estimate, whittle_frequencies, whittle_objective,
                     whittle_value)

THETA = np.array([-0.5, -3.0, 0.2])


def grid_m(m, N=1, u=60.0):
    return SamplingGrid(N=N, delta_N=1.0 / N, b_N=m / N, u=u, Delta=1.0)


def random_window(g, seed=0):
    return Window(g, RngStream(seed).generator.standard_normal(g.n_obs))


# --------------------------------------------------------------------------
# localized autocovariance


def test_autocov_constant_window():
    g = grid_m(12)
    c = 1.7
    got = local_autocov(Window(g, np.full(g.n_obs, c)), g, "rect", 0)
    want = c * c * g.n_obs * g.delta_N / (2.0 * g.b_N)
    assert got == pytest.approx(want, rel=1e-12)
    assert got == pytest.approx(c * c, rel=0.1)


def test_autocov_zero_window():
    g = grid_m(6)
    w = Window(g, np.zeros(g.n_obs))
    assert all(local_autocov(w, g, "rect", h) == 0.0 for h in range(8))


def test_autocov_beyond_window_is_zero():
    g = grid_m(4)
    w = random_window(g)
    assert local_autocov(w, g, "rect", 2 * g.m_N + 1) == 0.0


def test_autocov_negative_lag_rejected():
    g = grid_m(4)
    with pytest.raises(ValueError):
        local_autocov(random_window(g), g, "rect", -1)


# --------------------------------------------------------------------------
# localized periodogram


def test_periodogram_single_spike_flat():
    g = grid_m(5)
    y = np.zeros(g.n_obs)
    y[g.m_N] = 2.0  # observation at j = 0
    w = Window(g, y)
    omegas = np.linspace(-np.pi, np.pi, 9)
    got = local_periodogram(w, g, "rect", omegas)
    want = g.delta_N * 4.0 / (4.0 * np.pi * g.b_N)
    assert np.max(np.abs(got - want)) < 1e-14


def test_periodogram_zero_window():
    g = grid_m(5)
    got = local_periodogram(Window(g, np.zeros(g.n_obs)), g, "rect", 0.3)
    assert got == 0.0


@pytest.mark.parametrize("kind", ["rect", "epan"])
def test_periodogram_dual_forms_agree(kind):
    g = grid_m(9)  # 19-point window
    w = random_window(g, seed=3)
    omegas = np.linspace(-np.pi, np.pi, 25)
    product_form = local_periodogram(w, g, kind, omegas)
    hs = np.arange(1, 2 * g.m_N + 1)
    acov = np.array([local_autocov(w, g, kind, h)
                     for h in range(2 * g.m_N + 1)])
    series_form = (acov[0]
                   + 2.0 * np.cos(np.outer(omegas, hs)) @ acov[1:]) \
        / (2.0 * np.pi)
    assert np.max(np.abs(product_form - series_form)) < 1e-10
    assert np.all(product_form >= 0.0)


@pytest.mark.parametrize("kind", ["rect", "epan"])
def test_fft_spectrum_matches_direct_and_autocov(kind):
    g = grid_m(8)
    w = random_window(g, seed=4)
    spec = local_spectrum(w, g, kind)
    direct = local_periodogram(w, g, kind, spec.frequencies)
    assert np.max(np.abs(spec.periodogram - direct)) < 1e-12
    acov = np.array([local_autocov(w, g, kind, h)
                     for h in range(2 * g.m_N + 1)])
    assert np.max(np.abs(spec.autocov - acov)) < 1e-12


def test_fourier_sum_indicator_identity():
    m = 8
    omegas = whittle_frequencies(m)
    L = 4 * m + 2
    for h in range(0, 3 * L + 1):
        val = np.mean(np.exp(-1j * h * omegas))
        want = 1.0 if h % L == 0 else 0.0
        assert abs(val - want) < 1e-12


def test_parseval_mean_periodogram():
    g = grid_m(11)
    w = random_window(g, seed=9)
    spec = local_spectrum(w, g, "rect")
    gamma0 = local_autocov(w, g, "rect", 0)
    assert np.mean(spec.periodogram) == pytest.approx(
        gamma0 / (2.0 * np.pi), abs=1e-10)


# --------------------------------------------------------------------------
# Whittle objective


def test_constant_density_value():
    g = grid_m(7)
    w = random_window(g, seed=10)
    spec = local_spectrum(w, g, "rect")
    c = 0.37
    got = whittle_value(spec.periodogram, np.full(spec.periodogram.size, c))
    gamma0 = local_autocov(w, g, "rect", 0)
    assert got == pytest.approx(gamma0 / (2.0 * np.pi * c) + np.log(c),
                                rel=1e-10)


def test_zero_window_objective_is_mean_log_density():
    fam = example2d_family()
    g = grid_m(6)
    w = Window(g, np.zeros(g.n_obs))
    got = whittle_objective(w, g, "rect", fam, THETA)
    from locstat.whittle import _density_on_whittle_grid
    f = _density_on_whittle_grid(fam, THETA, 1.0, g.m_N)
    assert got == pytest.approx(float(np.mean(np.log(f))), rel=1e-12)


def test_nonpositive_density_rejected():
    from locstat import NumericError
    with pytest.raises(NumericError):
        whittle_value(np.ones(4), np.array([0.5, 0.0, 1.0, 2.0]))


def test_objective_outside_box_rejected():
    fam = example2d_family()
    g = grid_m(5)
    with pytest.raises(ConfigurationError):
        whittle_objective(random_window(g), g, "rect", fam,
                          [-0.9, -3.0, 0.2])


# --------------------------------------------------------------------------
# estimator


def test_whittle_estimate_deterministic():
    fam = example2d_family()
    g = SamplingGrid(N=1, delta_N=1.0, b_N=60.0, u=80.0, Delta=1.0)
    path = simulate_tv_statespace(fam, constant_theta(THETA),
                                  GaussianLevy(0.2), 1, 160.0, 100,
                                  RngStream(410, 0))
    window = extract_window(path, g)
    de = DeConfig(population=20, max_gens=40, tol=1e-6, seed=2)
    e1 = whittle_estimate(window, g, "rect", fam, de)
    e2 = whittle_estimate(window, g, "rect", fam, de)
    assert np.array_equal(e1.theta, e2.theta)
    assert e1.whittle_value == e1.objective


def test_whittle_rejects_o2_grid():
    fam = example2d_family()
    g = o2_grid(16, u=400.0)
    win = Window(g, np.ones(g.n_obs))
    with pytest.raises(ConfigurationError, match="O1|fixed-spacing"):
        whittle_estimate(win, g, "rect", fam, DeConfig(max_gens=5, seed=1))


def test_whittle_zero_window_is_estimation_error():
    fam = example2d_family()
    g = grid_m(6)
    with pytest.raises(EstimationError):
        whittle_estimate(Window(g, np.zeros(g.n_obs)), g, "rect", fam,
                         DeConfig(max_gens=5, seed=1))


@pytest.mark.slow
def test_local_autocov_targets_stationary_autocovariance():
    # replication mean of the localized autocovariance approaches the
    # model autocovariance at lags 0 and 1
    fam = example2d_family()
    N, reps = 16, 40
    g = SamplingGrid(N=N, delta_N=1.0 / N, b_N=100.0, u=130.0, Delta=1.0)
    truth = sampled_autocovariance(fam, THETA, 1.0, 1)
    got = np.empty((reps, 2))
    for rep in range(reps):
        path = simulate_tv_statespace(fam, constant_theta(THETA),
                                      GaussianLevy(0.2), N, 260.0, 1000,
                                      RngStream(2024, rep))
        w = extract_window(path, g)
        got[rep] = [local_autocov(w, g, "rect", h) for h in (0, 1)]
    for h in (0, 1):
        se = got[:, h].std(ddof=1) / np.sqrt(reps)
        assert abs(got[:, h].mean() - truth[h]) < 3.0 * se
