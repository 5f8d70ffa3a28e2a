import math

import numpy as np
import pytest

from oracles import brute_force_posterior, gaussian_pdf, total_variance
from spectraforge import (FilterTransmittance, NoExplanatorySpectrum, NoiseParams,
                          SpectraPrior, SystemResponse, WavelengthGrid, conditional_mean,
                          conditional_variance_trace, estimate_v, estimate_v_system,
                          log_likelihood, posterior, search_filters)
from spectraforge import synthetic as syn
from spectraforge.uncertainty import FilterLibrary, build_system


@pytest.fixture
def toy():
    grid = WavelengthGrid(400.0, 100.0, 3)
    sr = SystemResponse(grid, np.eye(3), 1)
    spectra = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [0.5, 0.5, 0.5]])
    return grid, sr, SpectraPrior.uniform(grid, spectra)


def test_log_likelihood_analytic(toy):
    grid, sr, _ = toy
    p = NoiseParams.uniform(0.0, 1.0)
    c = np.array([1.0, 2.0, 3.0])
    expected = sum(math.log(gaussian_pdf(x, 0.0, 1.0)) for x in c)
    assert log_likelihood(c, np.zeros(3), sr, p, 1.0) == pytest.approx(expected, rel=1e-12)


def test_log_likelihood_shot_noise_oracle(toy):
    grid, sr, _ = toy
    p = NoiseParams([0.3, 0.5, 0.7], [0.01, 0.02, 0.03])
    r = np.array([2.0, 1.0, 0.5])
    c = np.array([2.2, 0.7, 0.6])
    t = 0.4
    expected = sum(math.log(gaussian_pdf(c[j], r[j], (p.alpha[j] * r[j] * t + p.beta[j]) / t ** 2))
                   for j in range(3))
    assert log_likelihood(c, r, sr, p, t) == pytest.approx(expected, rel=1e-12)


def test_log_likelihood_point_mass(toy):
    grid, sr, _ = toy
    p = NoiseParams.uniform(0.0, 0.0)
    assert log_likelihood([1.0, 0, 0], [1.0, 0, 0], sr, p, 1.0) == math.inf
    assert log_likelihood([1.0, 0, 0], [0, 1.0, 0], sr, p, 1.0) == -math.inf


def test_log_likelihood_shape_error(toy):
    grid, sr, _ = toy
    with pytest.raises(ValueError):
        log_likelihood([1.0, 2.0], np.zeros(3), sr, NoiseParams.uniform(0, 1), 1.0)


def test_posterior_matches_brute_force(rng):
    for trial in range(10):
        n, N, k = 4, int(rng.integers(2, 9)), int(rng.integers(1, 4))
        grid = WavelengthGrid(400.0, 10.0, n)
        sr = SystemResponse(grid, rng.random((3 * k, n)), k)
        prior = SpectraPrior(grid, rng.random((N, n)), rng.dirichlet(np.ones(N)))
        params = NoiseParams(rng.uniform(0.01, 0.1, 3), rng.uniform(0.01, 0.1, 3))
        t = 0.5
        r = prior.spectra[rng.integers(N)]
        c = sr.matrix @ r + 0.1 * rng.standard_normal(3 * k)
        got = posterior(c, prior, sr, params, t).probs
        a, b = params.for_channels(3 * k)
        want = brute_force_posterior(c, prior.spectra, prior.probs, sr.matrix, a, b,
                                     np.full(3 * k, t))
        np.testing.assert_allclose(got, want, atol=1e-9)


def test_posterior_symmetric_prior(toy):
    grid, sr, prior = toy
    c = np.array([0.5, 0.5, 0.0])
    post = posterior(c, prior, sr, NoiseParams.uniform(0.0, 0.1), 1.0).probs
    assert post[0] == pytest.approx(post[1], abs=1e-15)
    assert post.sum() == pytest.approx(1.0, abs=1e-12)


def test_posterior_concentrates_with_low_noise(toy):
    grid, sr, prior = toy
    post = posterior([0.0, 1.0, 0.0], prior, sr, NoiseParams.uniform(0.0, 1e-6), 1.0).probs
    assert post[1] > 1 - 1e-12


def test_posterior_far_signal_stays_finite(toy):
    grid, sr, prior = toy
    # densities underflow individually; log-space normalization must not
    post = posterior([1e3, 0, 0], prior, sr, NoiseParams.uniform(0.0, 1e-2), 1.0).probs
    assert np.all(np.isfinite(post)) and post[0] == pytest.approx(1.0)


def test_posterior_no_explanation(toy):
    grid, sr, prior = toy
    with pytest.raises(NoExplanatorySpectrum):
        posterior([0.3, 0.3, 0.3], prior, sr, NoiseParams.uniform(0.0, 0.0), 1.0)


def test_conditional_mean_and_variance(toy):
    grid, sr, prior = toy
    p = np.array([0.5, 0.5, 0.0, 0.0])
    np.testing.assert_allclose(conditional_mean(p, prior).values, [0.5, 0.5, 0.0])
    assert conditional_variance_trace(p, prior) == pytest.approx(0.5)
    assert conditional_variance_trace(np.eye(4)[2], prior) == 0.0


def test_variance_identity(rng, toy):
    grid, _, _ = toy
    spectra = rng.random((6, 3))
    prior = SpectraPrior.uniform(grid, spectra)
    for _ in range(20):
        p = rng.dirichlet(np.ones(6))
        assert conditional_variance_trace(p, prior) == pytest.approx(
            total_variance(p, spectra), rel=1e-9)


def test_estimate_v_single_spectrum(toy, noise):
    grid, sr, _ = toy
    prior = SpectraPrior.uniform(grid, [[1.0, 2.0, 3.0]])
    rep = estimate_v_system(sr, prior, noise, n_samples=1024)
    assert rep.v == 0.0 and rep.std_error == 0.0


def test_estimate_v_zero_noise(toy):
    grid, sr, prior = toy
    rep = estimate_v_system(sr, prior, NoiseParams.uniform(0, 0), n_samples=2048)
    assert rep.v == 0.0


def test_estimate_v_flat_likelihood_gives_prior_variance(toy):
    grid, sr, prior = toy
    rep = estimate_v_system(sr, prior, NoiseParams.uniform(0.0, 1e12), n_samples=4096,
                            fixed_exposure=1.0, rel_tol=None)
    assert abs(rep.v - prior.variance_trace()) <= 3 * rep.std_error + 1e-9


def test_estimate_v_standard_error_scaling(grid, cameras, prior, noise):
    lib = syn.filter_library(grid, 4, seed=1)
    kw = dict(rel_tol=None, seed=5)
    a = estimate_v(("F00", "F01"), lib, cameras, prior, noise, n_samples=4096, **kw)
    b = estimate_v(("F00", "F01"), lib, cameras, prior, noise, n_samples=16384, **kw)
    assert b.samples == 16384
    assert a.std_error / b.std_error == pytest.approx(2.0, rel=0.25)


def test_estimate_v_deterministic(grid, cameras, prior, noise):
    lib = syn.filter_library(grid, 3, seed=1)
    a = estimate_v(("F01", "F02"), lib, cameras, prior, noise, n_samples=2048, seed=9)
    b = estimate_v(("F01", "F02"), lib, cameras, prior, noise, n_samples=2048, seed=9)
    assert a == b
    c = estimate_v(("F01", "F02"), lib, cameras, prior, noise, n_samples=2048, seed=10)
    assert c.v != a.v


def test_estimate_v_early_stop(grid, cameras, prior, noise):
    lib = syn.filter_library(grid, 3, seed=1)
    rep = estimate_v(("F00", "F01"), lib, cameras, prior, noise, n_samples=2 ** 20,
                     rel_tol=0.05, min_samples=1024)
    assert 1024 <= rep.samples < 2 ** 20
    assert rep.std_error <= 0.05 * rep.v


def test_build_system_layout(grid, cameras):
    lib = syn.filter_library(grid, 2)
    sr = build_system(("F00", "F01"), lib, cameras)
    assert sr.matrix.shape == (9, grid.count)
    np.testing.assert_array_equal(sr.matrix[:3], cameras[0].rows)
    np.testing.assert_allclose(sr.matrix[3:6], cameras[1].rows * lib["F00"].values)
    with pytest.raises(ValueError):
        build_system(("F00", "F00"), lib, cameras)
    with pytest.raises(KeyError):
        build_system(("F00", "nope"), lib, cameras)


def test_search_counts_and_order(grid, cameras, prior, noise):
    lib = syn.filter_library(grid, 4, seed=2)
    reps = search_filters(lib, cameras, prior, noise, n_samples=256, seed=1)
    assert len(reps) == 12
    assert len({r.filter_pair for r in reps}) == 12
    assert [r.v for r in reps] == sorted(r.v for r in reps)


def test_search_blocking_filter_never_first(grid, cameras, prior, noise):
    block = ("BLOCK", FilterTransmittance(grid, np.zeros(grid.count)))
    lib = syn.filter_library(grid, 3, seed=4, extra=[block])
    reps = search_filters(lib, cameras, prior, noise, n_samples=4096, seed=2)
    assert "BLOCK" not in reps[0].filter_pair


def test_search_needs_two_filters(grid, cameras, prior, noise):
    with pytest.raises(ValueError):
        search_filters(syn.filter_library(grid, 1), cameras, prior, noise, n_samples=16)


def test_filter_library_rejects_duplicates(grid):
    f = FilterTransmittance.unit(grid)
    with pytest.raises(ValueError):
        FilterLibrary([("a", f), ("a", f)])
