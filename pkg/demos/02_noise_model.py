"""
Sensor noise and auto exposure
==============================

Readings are normalized by exposure time, so the noise on a normalized
channel value ``c`` at exposure ``t`` has standard deviation
``sqrt(alpha * c * t + beta) / t``: shot noise grows with signal, read noise
does not, and both shrink with longer exposures.  This script simulates
uniform patches, measures their statistics and fits the two coefficients
back.
"""
import numpy as np

from spectraforge import ExposureCurve, NoiseParams, exposure_time, fit_noise_params, sample_noise, sigma

true = NoiseParams([2.0e-4], [4.0e-7])
t = 0.05
levels = np.geomspace(0.02, 2.0, 24)
print("normalized level   sigma     relative noise")
for c in levels[::6]:
    s = sigma(c, t, true.alpha[0], true.beta[0])
    print(f"{c:14.3f}  {s:9.5f}  {100 * s / c:8.2f}%")

# %%
# Measure 24 patches with 4000 pixels each, in raw charge units (c * t)
stats = []
for i, c in enumerate(levels):
    pixels = sample_noise(np.full((4000, 1), c), t, true, seed=i)
    stats.append((pixels.mean() * t, pixels.std() * t))
fit = fit_noise_params([stats])
print(f"\nfitted alpha {fit.params.alpha[0]:.3e} (true {true.alpha[0]:.1e})")
print(f"fitted beta  {fit.params.beta[0]:.3e} (true {true.beta[0]:.1e})")

# %%
# Auto exposure shortens the exposure for bright scenes
curve = ExposureCurve()
for b in (0.0, 0.05, 0.5, 5.0, 50.0):
    print(f"brightness {b:6.2f} -> exposure {1000 * exposure_time(b, curve):7.2f} ms")
