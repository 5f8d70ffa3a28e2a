"""Synthetic spectra, sensitivities and filters for tests and demos.

None of these curves are measurements.  They are smooth, physically shaped
stand-ins so every part of the pipeline can run without external data.
"""
import numpy as np

from .cube import HsiCube
from .noise import NoiseParams
from .prior import IlluminantSpectrum, SpectraPrior
from .spectral import CameraSSF, FilterTransmittance, RadianceSpectrum
from .uncertainty import FilterLibrary


def _gauss(x, mu, width):
    return np.exp(-0.5 * ((x - mu) / width) ** 2)


def camera_ssf(grid, centers=(600.0, 540.0, 460.0), widths=(38.0, 42.0, 32.0),
               peaks=(0.9, 1.0, 0.8), crosstalk=0.05):
    """Bell-shaped RGB sensitivities with a little broadband crosstalk."""
    x = grid.wavelengths
    rows = [p * (_gauss(x, mu, w) + crosstalk * _gauss(x, 520.0, 120.0))
            for mu, w, p in zip(centers, widths, peaks)]
    return CameraSSF(grid, np.stack(rows))


def phone_cameras(grid):
    """Three slightly different cameras, e.g. main, tele and wide."""
    return [
        camera_ssf(grid),
        camera_ssf(grid, centers=(605.0, 535.0, 455.0), widths=(35.0, 45.0, 30.0),
                   peaks=(0.8, 0.95, 0.85)),
        camera_ssf(grid, centers=(595.0, 545.0, 465.0), widths=(40.0, 40.0, 35.0),
                   peaks=(0.85, 1.0, 0.75)),
    ]


def _edge(x, cut, slope):
    return 1.0 / (1.0 + np.exp(-(x - cut) / slope))


def filter_bank(grid, count, seed=0):
    """``count`` varied filters: long/short pass, band pass, notch and ND."""
    gen = np.random.default_rng(seed)
    x = grid.wavelengths
    lo, hi = grid.start_nm, grid.stop_nm
    out = []
    for i in range(count):
        kind = i % 5
        cut = gen.uniform(lo + 30, hi - 30)
        slope = gen.uniform(5.0, 20.0)
        peak = gen.uniform(0.6, 0.95)
        if kind == 0:
            v = peak * _edge(x, cut, slope)
        elif kind == 1:
            v = peak * (1.0 - _edge(x, cut, slope))
        elif kind == 2:
            v = peak * _gauss(x, cut, gen.uniform(15.0, 60.0))
        elif kind == 3:
            v = peak * (1.0 - 0.9 * _gauss(x, cut, gen.uniform(15.0, 40.0)))
        else:
            v = np.full_like(x, gen.uniform(0.1, 0.9))
        out.append((f"F{i:02d}", FilterTransmittance(grid, np.clip(v, 0.0, 1.0))))
    return out


def filter_library(grid, count, seed=0, extra=()):
    return FilterLibrary(list(extra) + filter_bank(grid, count, seed))


def smooth_spectra(grid, count, seed=0, components=4, scale=1.0):
    """Random positive spectra made of a few broad bumps on a baseline."""
    gen = np.random.default_rng(seed)
    x = grid.wavelengths
    span = grid.stop_nm - grid.start_nm
    out = np.empty((count, grid.count))
    for i in range(count):
        v = gen.uniform(0.05, 0.3) * np.ones_like(x)
        for _ in range(components):
            mu = gen.uniform(grid.start_nm - 0.1 * span, grid.stop_nm + 0.1 * span)
            w = gen.uniform(0.08, 0.35) * span
            v = v + gen.uniform(0.0, 1.0) * _gauss(x, mu, w)
        out[i] = scale * v
    return out


def smooth_prior(grid, count, seed=0, scale=1.0):
    return SpectraPrior.uniform(grid, smooth_spectra(grid, count, seed, scale=scale))


def led_spectra(grid, count=25, fwhm_nm=20.0, power=1.0):
    """Narrow-band LED emission peaks spread across the grid."""
    x = grid.wavelengths
    centers = np.linspace(grid.start_nm + 5.0, grid.stop_nm - 5.0, count)
    w = fwhm_nm / 2.3548
    return [RadianceSpectrum(grid, power * _gauss(x, c, w)) for c in centers]


def overcast_illuminant(grid):
    """A smooth daylight-like curve peaking in the blue-green."""
    x = grid.wavelengths
    v = 0.6 + 0.5 * _gauss(x, 470.0, 90.0) + 0.2 * _gauss(x, 650.0, 80.0)
    return IlluminantSpectrum(grid, v / v.max())


def cube_from_prior(prior, height, width, seed=0):
    """Cube whose pixels are prior spectra drawn by prior probability."""
    gen = np.random.default_rng(seed)
    idx = gen.choice(len(prior), size=height * width, p=prior.probs)
    data = prior.spectra[idx].reshape(height, width, -1)
    return HsiCube(prior.grid, data), idx.reshape(height, width)


def reflectance_cube(grid, height, width, seed=0):
    """Patchy reflectance scene with values in [0, 1]."""
    gen = np.random.default_rng(seed)
    palette = smooth_spectra(grid, 6, seed=seed)
    palette = palette / palette.max(axis=1, keepdims=True) * gen.uniform(0.2, 0.95, (6, 1))
    labels = gen.integers(0, 6, size=(height // 2 + 1, width // 2 + 1))
    labels = np.kron(labels, np.ones((2, 2), dtype=int))[:height, :width]
    return HsiCube(grid, palette[labels])


def phone_noise(channels=3):
    """Noise coefficients giving a few percent noise at typical exposures."""
    alpha = np.resize([2.0e-4, 1.5e-4, 2.5e-4], channels)
    beta = np.resize([4.0e-7, 3.0e-7, 5.0e-7], channels)
    return NoiseParams(alpha, beta)
