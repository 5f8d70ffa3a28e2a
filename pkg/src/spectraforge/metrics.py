"""PSNR, spectral angle and normalized spectral error over masked pixels."""
import math
from dataclasses import asdict, dataclass

import numpy as np

PSNR_CAP_DB = 100.0


def _arrays(pred, gt, mask):
    p = np.asarray(getattr(pred, "data", pred), dtype=np.float64)
    g = np.asarray(getattr(gt, "data", gt), dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    if p.ndim == 1:
        p, g = p[None, None], g[None, None]
    elif p.ndim == 2:
        p, g = p[None], g[None]
    if mask is None:
        mask = np.ones(p.shape[:2], dtype=bool)
        for cube in (pred, gt):
            cm = getattr(cube, "mask", None)
            if cm is not None:
                mask &= cm
    mask = np.asarray(mask, dtype=bool).reshape(p.shape[:2])
    return p, g, mask


def psnr(pred, gt, mask=None, peak=None):
    """Peak signal-to-noise ratio in dB over masked voxels.

    ``peak`` defaults to the maximum of ``gt`` over the masked pixels.  A
    perfect match returns :data:`PSNR_CAP_DB`.
    """
    p, g, mask = _arrays(pred, gt, mask)
    if not mask.any():
        raise ValueError("mask selects no pixels")
    if peak is None:
        peak = float(g[mask].max())
    if not peak > 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((p[mask] - g[mask]) ** 2))
    if mse == 0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak ** 2 / mse), PSNR_CAP_DB)


def _pixel_angles(p, g):
    np_ = np.linalg.norm(p, axis=-1)
    ng = np.linalg.norm(g, axis=-1)
    ok = (np_ > 0) & (ng > 0)
    a = p[ok] / np_[ok, None]
    b = g[ok] / ng[ok, None]
    # half-angle form stays accurate near 0 and 180 degrees
    ang = 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))
    return np.degrees(ang), ok


def sam(pred, gt, mask=None, return_excluded=False):
    """Mean per-pixel spectral angle in degrees.

    Pixels where either spectrum has zero norm are left out; pass
    ``return_excluded`` to also get how many.
    """
    p, g, mask = _arrays(pred, gt, mask)
    ang, ok = _pixel_angles(p[mask], g[mask])
    if ang.size == 0:
        raise ValueError("no valid pixels for SAM")
    value = float(ang.mean())
    if return_excluded:
        return value, int((~ok).sum())
    return value


def nse(pred, gt, mask=None, return_excluded=False):
    """Mean per-pixel ``||pred - gt||_1 / ||gt||_1`` in percent."""
    p, g, mask = _arrays(pred, gt, mask)
    p, g = p[mask], g[mask]
    denom = np.abs(g).sum(axis=-1)
    ok = denom > 0
    if not ok.any():
        raise ValueError("all reference pixels are zero")
    ratio = np.abs(p[ok] - g[ok]).sum(axis=-1) / denom[ok]
    value = float(ratio.mean() * 100.0)
    if return_excluded:
        return value, int((~ok).sum())
    return value


@dataclass
class MetricsReport:
    psnr_db: float
    sam_deg: float
    nse_pct: float
    valid_pixels: int
    peak_used: float
    seed: int = None

    def to_dict(self):
        return asdict(self)


def evaluate(pred, gt, mask=None, peak=None, seed=None):
    """All three metrics over the same masked pixels."""
    p, g, mask = _arrays(pred, gt, mask)
    if not mask.any():
        raise ValueError("mask selects no pixels")
    if peak is None:
        peak = float(g[mask].max())
    return MetricsReport(psnr(p, g, mask, peak), sam(p, g, mask), nse(p, g, mask),
                         int(mask.sum()), float(peak), seed)
