import numpy as np
import pytest

from spectraforge import (HsiCube, IlluminantSpectrum, RadianceSpectrum, SpectraPrior,
                          WavelengthGrid, kmeans_compress, reflectance_to_radiance,
                          subsample_corpus, validate_prior)


def _cube(h, w, n=3, seed=0):
    grid = WavelengthGrid(400.0, 50.0, n)
    return HsiCube(grid, np.random.default_rng(seed).random((h, w, n)))


@pytest.mark.parametrize("h, w, stride, expected", [
    (4, 4, 1, 16), (4, 4, 2, 4), (5, 5, 2, 9), (58, 58, 29, 4), (3, 7, 10, 1),
])
def test_subsample_counts(h, w, stride, expected):
    assert subsample_corpus([_cube(h, w)], stride).shape == (expected, 3)


def test_subsample_order_and_concat():
    a, b = _cube(4, 4, seed=1), _cube(2, 2, seed=2)
    out = subsample_corpus([a, b], 2)
    np.testing.assert_array_equal(out[:4], a.data[::2, ::2].reshape(-1, 3))
    np.testing.assert_array_equal(out[4:], b.data[::2, ::2].reshape(-1, 3))


@pytest.mark.parametrize("stride", [0, -1, 1.5])
def test_subsample_rejects_stride(stride):
    with pytest.raises(ValueError):
        subsample_corpus([_cube(2, 2)], stride)


def test_reflectance_to_radiance(small_grid):
    illum = IlluminantSpectrum(small_grid, [1.0, 2.0, 0.5])
    out = reflectance_to_radiance(RadianceSpectrum(small_grid, [0.5, 0.5, 1.0]), illum)
    np.testing.assert_array_equal(out.values, [0.5, 1.0, 0.5])
    arr = reflectance_to_radiance(np.ones((2, 2, 3)), illum)
    np.testing.assert_array_equal(arr[1, 1], [1.0, 2.0, 0.5])


def test_kmeans_k_equals_distinct(small_grid):
    x = np.random.default_rng(0).random((7, 3))
    res = kmeans_compress(x, 7, grid=small_grid)
    got = res.prior.spectra[np.lexsort(res.prior.spectra.T)]
    np.testing.assert_allclose(got, x[np.lexsort(x.T)], atol=1e-15)
    np.testing.assert_allclose(res.prior.probs, 1 / 7)
    assert min(res.objective_history) == pytest.approx(0.0, abs=1e-24)


def test_kmeans_two_blobs(small_grid):
    gen = np.random.default_rng(3)
    a = np.array([1.0, 2.0, 3.0]) + 0.01 * gen.standard_normal((30, 3))
    b = np.array([5.0, 1.0, 0.5]) + 0.01 * gen.standard_normal((10, 3))
    res = kmeans_compress(np.vstack([a, b]), 2, seed=1, grid=small_grid)
    order = np.argsort(res.prior.probs)
    np.testing.assert_allclose(res.prior.probs[order], [0.25, 0.75])
    np.testing.assert_allclose(res.prior.spectra[order[1]], a.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(res.prior.spectra[order[0]], b.mean(axis=0), atol=1e-12)


def test_kmeans_objective_nonincreasing(grid):
    x = np.random.default_rng(5).random((500, grid.count))
    res = kmeans_compress(x, 12, seed=2, grid=grid)
    h = np.array(res.objective_history)
    assert np.all(np.diff(h) <= 1e-9 * h[0])


def test_kmeans_probs_and_variance(grid):
    x = np.random.default_rng(6).random((300, grid.count))
    res = kmeans_compress(x, 10, seed=0, grid=grid)
    assert res.prior.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert res.labels.shape == (300,)
    # compression cannot add spread: the centers' variance is at most the data's
    data_var = float(np.sum(x.var(axis=0)))
    assert res.prior.variance_trace() <= data_var + 1e-12
    uni = kmeans_compress(x, 10, seed=0, grid=grid, weights="uniform")
    np.testing.assert_allclose(uni.prior.probs, 0.1)


def test_kmeans_deterministic(grid):
    x = np.random.default_rng(8).random((200, grid.count))
    a = kmeans_compress(x, 8, seed=4, grid=grid)
    b = kmeans_compress(x, 8, seed=4, grid=grid)
    np.testing.assert_array_equal(a.prior.spectra, b.prior.spectra)
    np.testing.assert_array_equal(a.prior.probs, b.prior.probs)


@pytest.mark.parametrize("k, kw", [(0, {}), (4, {}), (2, {"weights": "bad"})])
def test_kmeans_errors(small_grid, k, kw):
    x = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    with pytest.raises(ValueError):
        kmeans_compress(x, k, grid=small_grid, **kw)


def test_prior_variance_trace_oracle(small_grid):
    s = np.array([[0.0, 0, 0], [2.0, 0, 0]])
    assert SpectraPrior.uniform(small_grid, s).variance_trace() == pytest.approx(1.0)
    p = SpectraPrior(small_grid, s, [0.25, 0.75])
    assert p.variance_trace() == pytest.approx(0.75)


def test_validate_prior_clean(prior):
    rep = validate_prior(prior)
    assert rep.ok and rep.duplicate_centers == []
    assert rep.effective_size == pytest.approx(len(prior))


@pytest.mark.parametrize("spectra, probs, message", [
    ([[1.0, 1, 1], [2.0, 2, 2]], [0.5, 0.6], "probs sum ≠ 1"),
    ([[1.0, -1, 1], [2.0, 2, 2]], [0.5, 0.5], "negative radiance"),
    ([[1.0, 1, 1], [2.0, 2, 2]], [1.5, -0.5], "negative probability"),
    ([[1.0, np.nan, 1], [2.0, 2, 2]], [0.5, 0.5], "non-finite radiance"),
])
def test_validate_prior_violations(small_grid, spectra, probs, message):
    rep = validate_prior(SpectraPrior(small_grid, spectra, probs))
    assert message in rep.violations and not rep.ok


def test_validate_prior_duplicates(small_grid):
    rep = validate_prior(SpectraPrior.uniform(small_grid, [[1.0, 1, 1], [0, 1, 0], [1.0, 1, 1]]))
    assert rep.duplicate_centers == [(0, 2)]
    assert rep.ok
