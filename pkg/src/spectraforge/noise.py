"""Heteroscedastic sensor noise, its calibration, and auto-exposure.

Signals here are photometrically normalized: raw values divided by exposure
time and gain after black-level subtraction.  For a channel with noiseless
normalized level ``c`` captured at exposure ``t``, the collected charge is
``c * t`` with variance ``alpha * c * t + beta``, so the normalized noise has

    sigma(c) = sqrt(alpha * c * t + beta) / t

Gain cancels after normalization and post-amplification noise is ignored.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NoiseParams:
    """Per-channel noise coefficients.

    ``alpha`` scales with collected charge (shot noise), ``beta`` is the
    signal-independent charge variance (read noise).  A 3-vector is tiled
    across cameras when used with a multi-camera system.
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.array(self.alpha, dtype=np.float64))
        b = np.atleast_1d(np.array(self.beta, dtype=np.float64))
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("alpha and beta must be vectors of equal length")
        if np.any(a < 0) or np.any(b < 0) or not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("noise parameters must be finite and nonnegative")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def uniform(cls, alpha, beta, channels=3):
        return cls(np.full(channels, float(alpha)), np.full(channels, float(beta)))

    @property
    def channel_count(self):
        return self.alpha.size

    def for_channels(self, m):
        """``(alpha, beta)`` expanded to ``m`` channels."""
        c = self.alpha.size
        if c == m:
            return self.alpha, self.beta
        if m % c == 0:
            reps = m // c
            return np.tile(self.alpha, reps), np.tile(self.beta, reps)
        raise ValueError(f"cannot expand {c} noise channels to {m}")

    def subset(self, channels):
        a, b = self.alpha, self.beta
        return NoiseParams(a[list(channels)], b[list(channels)])

    def to_dict(self):
        return {"channels": [{"alpha": float(a), "beta": float(b)}
                             for a, b in zip(self.alpha, self.beta)]}

    @classmethod
    def from_dict(cls, d):
        ch = d["channels"]
        if not ch:
            raise ValueError("noise params need at least one channel")
        return cls([c["alpha"] for c in ch], [c["beta"] for c in ch])


@dataclass(frozen=True)
class CaptureSettings:
    exposure_s: float
    gain: float = 1.0

    def __post_init__(self):
        if not (self.exposure_s > 0 and self.gain > 0):
            raise ValueError("exposure and gain must be positive")

    def to_raw(self, c):
        """Normalized signal back to raw sensor units (before black level)."""
        return np.asarray(c) * self.exposure_s * self.gain

    def normalize(self, raw):
        return np.asarray(raw) / (self.exposure_s * self.gain)


@dataclass(frozen=True)
class ExposureCurve:
    """Auto-exposure model ``t = clamp(scale * brightness**exponent)``.

    The defaults are placeholders chosen to give plausible phone exposures
    for normalized brightness around one; they are not measured values.
    Fit the curve to your own device and pass it in.
    """

    scale: float = 0.04
    exponent: float = -0.9
    t_min: float = 1e-4
    t_max: float = 0.25

    def __post_init__(self):
        if not (self.scale > 0 and self.t_min > 0 and self.t_max > 0):
            raise ValueError("scale and exposure bounds must be positive")
        if self.t_min > self.t_max:
            raise ValueError("t_min must not exceed t_max")

    def to_dict(self):
        return {"scale": self.scale, "exponent": self.exponent,
                "t_min_s": self.t_min, "t_max_s": self.t_max}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["scale"]), float(d["exponent"]),
                   float(d["t_min_s"]), float(d["t_max_s"]))


def sigma(c_bar, t, alpha, beta):
    """Noise standard deviation of a normalized signal.

    Broadcasts over all arguments, so it serves single channels and whole
    ``(samples, channels)`` blocks alike.
    """
    c_bar = np.asarray(c_bar, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t <= 0):
        raise ValueError("exposure time must be positive")
    if np.any(c_bar < 0):
        raise ValueError("noiseless signal must be nonnegative")
    return np.sqrt(alpha * c_bar * t + beta) / t


def channel_sigma(c_bar, channel, t, params):
    """Scalar form of :func:`sigma` for one channel of ``params``."""
    return float(sigma(c_bar, t, params.alpha[channel], params.beta[channel]))


def sample_noise(c_bar, t, params, seed, start_index=0):
    """Add Gaussian sensor noise to noiseless signals.

    ``c_bar`` is ``(m,)`` or ``(samples, m)``; ``t`` broadcasts against it.
    Each draw is keyed by ``(seed, sample index, channel)`` so the result is
    independent of batching.
    """
    c_bar = np.asarray(c_bar, dtype=np.float64)
    single = c_bar.ndim == 1
    block = np.atleast_2d(c_bar)
    alpha, beta = params.for_channels(block.shape[1])
    s = sigma(block, t, alpha, beta)
    idx = np.arange(start_index, start_index + block.shape[0])
    z = rng.channel_normals(rng.derive_key(seed, "sensor-noise"), idx,
                            range(block.shape[1]))
    out = block + s * z
    return out[0] if single else out


@dataclass
class NoiseFit:
    """Result of :func:`fit_noise_params`."""

    params: NoiseParams
    clamped: list = field(default_factory=list)
    residual_rms: np.ndarray = None

    @property
    def any_clamped(self):
        return any(self.clamped)


def fit_noise_params(patch_stats):
    """Fit ``alpha`` and ``beta`` per channel from patch statistics.

    Parameters
    ----------
    patch_stats : sequence
        One entry per channel, each a sequence of ``(mean_charge, std_charge)``
        pairs, i.e. ``(c * t, sigma * t)`` for uniform patches.

    Returns
    -------
    NoiseFit
        The fitted parameters.  The model ``std**2 = alpha * mean + beta`` is
        fitted in the variance domain by least squares on relative residuals
        (each row scaled by ``1 / std**2``), since the scatter of a measured
        variance grows with the variance itself.  A negative coefficient is
        pinned at zero and the other refitted, and the channel is flagged in
        ``clamped``.
    """
    alphas, betas, clamped, rms = [], [], [], []
    if len(patch_stats) == 0:
        raise ValueError("no channels given")
    for ch, pts in enumerate(patch_stats):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError(f"channel {ch}: need at least 2 (mean, std) points")
        x, var = pts[:, 0], pts[:, 1] ** 2
        if np.unique(x).size < 2:
            raise ValueError(f"channel {ch}: need at least 2 distinct mean values")
        # relative weighting; fall back to plain least squares on zero variance
        w = 1.0 / var if np.all(var > 0) else np.ones_like(var)
        A = np.column_stack([x, np.ones_like(x)]) * w[:, None]
        (a, b), *_ = np.linalg.lstsq(A, var * w, rcond=None)
        was_clamped = False
        if a < 0:
            a, b = 0.0, float(np.sum(w * w * var) / np.sum(w * w))
            was_clamped = True
        if b < 0:
            xw = x * w
            a, b = float(xw @ (var * w) / (xw @ xw)), 0.0
            was_clamped = True
        if was_clamped:
            warnings.warn(f"noise fit for channel {ch} hit a zero bound", RuntimeWarning)
        alphas.append(max(a, 0.0))
        betas.append(max(b, 0.0))
        clamped.append(was_clamped)
        rms.append(np.sqrt(np.mean((a * x + b - var) ** 2)))
    return NoiseFit(NoiseParams(alphas, betas), clamped, np.array(rms))


def exposure_time(brightness, curve):
    """Auto-exposure time for a scene of the given mean normalized brightness."""
    b = np.asarray(brightness, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError("brightness must be nonnegative")
    with np.errstate(divide="ignore", over="ignore"):
        t = curve.scale * np.power(np.where(b > 0, b, 1.0), curve.exponent)
    t = np.where(b > 0, t, curve.t_max)
    t = np.clip(t, curve.t_min, curve.t_max)
    return float(t) if t.ndim == 0 else t


def scene_brightness(image):
    """Mean of a photometrically normalized image over pixels and channels."""
    image = np.asarray(image, dtype=np.float64)
    if image.size == 0:
        raise ValueError("empty image")
    return float(image.mean())


def camera_exposures(c_bar, camera_count, curve):
    """Per-camera exposure from each camera's own mean brightness.

    ``c_bar`` has shape ``(..., 3k)``; returns ``(..., k)`` exposure times.
    """
    c_bar = np.asarray(c_bar, dtype=np.float64)
    per_cam = c_bar.reshape(c_bar.shape[:-1] + (camera_count, 3)).mean(axis=-1)
    return exposure_time(np.maximum(per_cam, 0.0), curve)


def expand_exposures(t_cam):
    """Repeat per-camera exposure times over the three channels of each camera."""
    return np.repeat(np.asarray(t_cam, dtype=np.float64), 3, axis=-1)
