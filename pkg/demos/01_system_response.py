"""
From spectra to camera readings
===============================

A phone with three cameras sees a radiance spectrum through three sets of
RGB sensitivities.  Putting a filter in front of a camera multiplies its
sensitivities wavelength by wavelength.  Stacking every camera gives one
matrix that maps a spectrum to all nine channel readings.
"""
import numpy as np

from spectraforge import FilterTransmittance, VISIBLE_10NM, apply_system, stack_system
from spectraforge import synthetic as syn

grid = VISIBLE_10NM
print(f"wavelength grid: {grid}")

# three slightly different cameras
main, second, third = syn.phone_cameras(grid)
print("main camera peak sensitivity per channel (nm):",
      grid.wavelengths[np.argmax(main.rows, axis=1)])

# a long-pass and a band-pass filter from the synthetic bank
bank = dict(syn.filter_bank(grid, 5, seed=1))
long_pass, band_pass = bank["F00"], bank["F02"]

sr = stack_system([(main, FilterTransmittance.unit(grid)),
                   (second, long_pass),
                   (third, band_pass)])
print(f"system matrix: {sr.matrix.shape[0]} channels x {sr.matrix.shape[1]} bands")

# %%
# Two spectra that the main camera alone barely tells apart
spectra = syn.smooth_spectra(grid, 200, seed=4)
main_only = sr.subsystem([0])
c_main = apply_system(main_only, spectra)
c_all = apply_system(sr, spectra)
d_main = np.linalg.norm(c_main[:, None] - c_main[None], axis=-1)
np.fill_diagonal(d_main, np.inf)
i, j = np.unravel_index(np.argmin(d_main), d_main.shape)
print(f"closest pair under the main camera: spectra {i} and {j}")
print(f"  spectral distance     {np.linalg.norm(spectra[i] - spectra[j]):.3f}")
print(f"  main-camera distance  {np.linalg.norm(c_main[i] - c_main[j]):.4f}")
print(f"  nine-channel distance {np.linalg.norm(c_all[i] - c_all[j]):.4f}")
