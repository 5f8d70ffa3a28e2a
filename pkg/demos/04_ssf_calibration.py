"""
Recovering a camera's spectral sensitivity
==========================================

Narrow-band LEDs with known spectra are photographed under flat-field
illumination.  Each capture gives three channel means, and together they
constrain the camera sensitivities.  The estimate is nonnegative and
smooth, with the smoothness weight chosen by cross-validation.
"""
import numpy as np

from spectraforge import VISIBLE_10NM, CalibrationSample, estimate_ssf, validate_ssf
from spectraforge import synthetic as syn

grid = VISIBLE_10NM
true = syn.camera_ssf(grid)
leds = syn.led_spectra(grid, 25)
gen = np.random.default_rng(3)
samples = [CalibrationSample(np.maximum(true.rows @ r.values * (1 + 0.01 * gen.standard_normal(3)), 0), r)
           for r in leds]

fit = estimate_ssf(samples)
print(f"cross-validated smoothness weight: {fit.lam:g}")
for lam, err in sorted(fit.cv_errors.items()):
    print(f"  lambda {lam:8.0e}  held-out error {err:.3e}")
print(f"solver: {fit.iterations} iterations, converged {fit.converged}")

# %%
cos = np.sum(fit.ssf.rows * true.rows, 1) / (np.linalg.norm(fit.ssf.rows, axis=1)
                                             * np.linalg.norm(true.rows, axis=1))
print("angle to the true sensitivity per channel (deg):",
      np.round(np.degrees(np.arccos(np.clip(cos, -1, 1))), 2))

# %%
# Check against a color chart the fit never saw
patches = syn.smooth_spectra(grid, 24, seed=9)
chart_rgb = patches @ true.rows.T
check = validate_ssf(fit.ssf, patches, chart_rgb)
print(f"mean RGB angle on 24 chart patches: {check.mean_angle_deg:.3f} deg")
