"""Simulated multi-camera captures and per-pixel MMSE reconstruction."""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .cube import HsiCube, MultiCamCapture
from .noise import ExposureCurve, exposure_time, sample_noise, scene_brightness
from .spectral import check_grids
from .uncertainty import PosteriorModel

log = logging.getLogger(__name__)


def simulate_capture(hsi, sr, params, curve=None, seed=0, fixed_exposure=None):
    """Render an aligned noisy capture of ``hsi`` through system ``sr``.

    Each camera auto-exposes on the mean of its own noiseless channels over
    the whole frame.  Noise for pixel ``p`` (row-major) and channel ``j`` is
    keyed by ``(seed, p, j)``.
    """
    check_grids(hsi.grid, sr.grid)
    curve = curve or ExposureCurve()
    h, w = hsi.height, hsi.width
    k = sr.camera_count
    c_bar = hsi.pixels() @ sr.matrix.T
    if fixed_exposure is not None:
        t_cam = np.full(k, float(fixed_exposure))
    else:
        t_cam = np.array([exposure_time(scene_brightness(c_bar[:, 3 * i:3 * i + 3]), curve)
                          for i in range(k)])
    t = np.repeat(t_cam, 3)
    c = sample_noise(c_bar, t, params, seed)
    return MultiCamCapture(c.reshape(h, w, -1), t_cam, seed, sr)


def mmse_reconstruct(capture, prior, params, batch=256, threads=1):
    """Posterior-mean spectrum for every pixel of ``capture``.

    Pixels whose posterior cannot be normalized come back as zeros with
    ``mask`` false; the count is logged.  Pixel batches are independent, so
    ``threads`` does not change the result.
    """
    sr = capture.system
    check_grids(prior.grid, sr.grid)
    model = PosteriorModel(prior, sr, params)
    h, w, m = capture.data.shape
    c = capture.data.reshape(-1, m)
    t = np.repeat(capture.t_per_camera, 3)[None, :]
    out = np.zeros((c.shape[0], prior.grid.count))
    valid = np.zeros(c.shape[0], dtype=bool)

    def run(s):
        probs, ok = model.posterior_probs(c[s:s + batch], t)
        out[s:s + batch] = probs @ prior.spectra
        valid[s:s + batch] = ok

    starts = range(0, c.shape[0], batch)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    out = np.maximum(out, 0.0)
    failed = int((~valid).sum())
    if failed:
        log.warning("posterior failed at %d of %d pixels", failed, valid.size)
    mask = valid.reshape(h, w)
    return HsiCube(prior.grid, out.reshape(h, w, -1), None if mask.all() else mask)
