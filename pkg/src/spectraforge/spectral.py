"""Wavelength grids, spectra, sensitivities and the stacked system response."""
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError

CHANNELS = ("r", "g", "b")


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WavelengthGrid:
    """Uniform wavelength sampling ``start_nm + i * step_nm``, ``i < count``."""

    start_nm: float
    step_nm: float
    count: int

    def __post_init__(self):
        if not self.step_nm > 0:
            raise ValueError(f"step_nm must be positive, got {self.step_nm}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"count must be an integer >= 2, got {self.count}")
        object.__setattr__(self, "start_nm", float(self.start_nm))
        object.__setattr__(self, "step_nm", float(self.step_nm))
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_range(cls, start_nm, stop_nm, step_nm):
        """Grid from ``start_nm`` to ``stop_nm`` inclusive."""
        count = int(round((stop_nm - start_nm) / step_nm)) + 1
        return cls(start_nm, step_nm, count)

    @classmethod
    def from_wavelengths(cls, wavelengths, rtol=1e-6):
        w = np.asarray(wavelengths, dtype=np.float64)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("need at least two wavelengths")
        d = np.diff(w)
        if np.any(d <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        step = (w[-1] - w[0]) / (w.size - 1)
        if np.max(np.abs(d - step)) > rtol * max(step, 1.0):
            raise ValueError("wavelengths are not uniformly spaced")
        return cls(w[0], step, w.size)

    @property
    def stop_nm(self):
        return self.start_nm + (self.count - 1) * self.step_nm

    @property
    def wavelengths(self):
        return self.start_nm + self.step_nm * np.arange(self.count)

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, WavelengthGrid):
            return NotImplemented
        tol = 1e-9 * max(1.0, abs(self.start_nm), abs(other.start_nm))
        return (self.count == other.count
                and abs(self.start_nm - other.start_nm) <= tol
                and abs(self.step_nm - other.step_nm) <= 1e-9 * max(1.0, self.step_nm))

    def __hash__(self):
        return hash((round(self.start_nm, 6), round(self.step_nm, 6), self.count))

    def __repr__(self):
        return (f"WavelengthGrid({self.start_nm:g}-{self.stop_nm:g} nm, "
                f"step {self.step_nm:g}, n={self.count})")

    def to_dict(self):
        return {"start_nm": self.start_nm, "step_nm": self.step_nm, "count": self.count}

    @classmethod
    def from_dict(cls, d):
        return cls(d["start_nm"], d["step_nm"], d["count"])


#: 400-730 nm at 10 nm, the working grid of the reconstruction experiments.
VISIBLE_10NM = WavelengthGrid(400.0, 10.0, 34)
#: 400-730 nm at 3 nm, the native hyperspectral camera sampling.
VISIBLE_3NM = WavelengthGrid(400.0, 3.0, 111)


def check_grids(a, b):
    if a != b:
        raise GridMismatchError(a, b)


@dataclass(frozen=True, eq=False)
class RadianceSpectrum:
    grid: WavelengthGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.count,):
            raise ValueError(f"expected {self.grid.count} values, got shape {v.shape}")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("radiance must be finite and nonnegative")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class FilterTransmittance:
    grid: WavelengthGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.count,):
            raise ValueError(f"expected {self.grid.count} values, got shape {v.shape}")
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise ValueError("transmittance must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @classmethod
    def unit(cls, grid):
        """The no-filter transmittance (all ones)."""
        return cls(grid, np.ones(grid.count))


@dataclass(frozen=True, eq=False)
class CameraSSF:
    """Spectral sensitivity of one RGB camera, rows ordered R, G, B."""

    grid: WavelengthGrid
    rows: np.ndarray

    def __post_init__(self):
        m = _frozen(self.rows)
        if m.shape != (3, self.grid.count):
            raise ValueError(f"SSF must be 3x{self.grid.count}, got {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("SSF entries must be finite and nonnegative")
        object.__setattr__(self, "rows", m)


@dataclass(frozen=True, eq=False)
class SystemResponse:
    """Stacked ``3k x n`` response of ``k`` filtered cameras."""

    grid: WavelengthGrid
    matrix: np.ndarray
    camera_count: int

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.shape != (3 * self.camera_count, self.grid.count):
            raise ValueError(f"system matrix must be {3 * self.camera_count}x"
                             f"{self.grid.count}, got {m.shape}")
        if np.any(m < 0):
            raise ValueError("system response entries must be nonnegative")
        object.__setattr__(self, "matrix", m)

    @property
    def channel_count(self):
        return 3 * self.camera_count

    def camera(self, i):
        """Rows belonging to camera ``i`` as a one-camera system."""
        return SystemResponse(self.grid, self.matrix[3 * i:3 * i + 3], 1)

    def subsystem(self, cameras):
        cameras = list(cameras)
        rows = np.concatenate([self.matrix[3 * i:3 * i + 3] for i in cameras])
        return SystemResponse(self.grid, rows, len(cameras))


def effective_response(ssf, filt):
    """Sensitivity of a camera looking through ``filt``."""
    check_grids(ssf.grid, filt.grid)
    return CameraSSF(ssf.grid, ssf.rows * filt.values[None, :])


def stack_system(cameras):
    """Stack ``(CameraSSF, FilterTransmittance)`` pairs into a system response.

    Rows follow the input camera order with R, G, B inside each camera.
    """
    cameras = list(cameras)
    if not cameras:
        raise ValueError("stack_system needs at least one camera")
    grid = cameras[0][0].grid
    blocks = []
    for ssf, filt in cameras:
        check_grids(grid, ssf.grid)
        blocks.append(effective_response(ssf, filt).rows)
    return SystemResponse(grid, np.vstack(blocks), len(cameras))


def apply_system(sr, r):
    """Noiseless camera signal for radiance ``r``.

    ``r`` may be a :class:`RadianceSpectrum` or a bare array whose last axis
    is the band axis (a batch of spectra is allowed).
    """
    if isinstance(r, RadianceSpectrum):
        check_grids(sr.grid, r.grid)
        r = r.values
    r = np.asarray(r, dtype=np.float64)
    if r.shape[-1] != sr.grid.count:
        raise GridMismatchError(sr.grid.count, r.shape[-1], "band counts")
    return r @ sr.matrix.T


def resample_spectrum(s, target):
    """Linearly interpolate a spectrum-like object onto ``target``.

    Works on :class:`RadianceSpectrum`, :class:`FilterTransmittance` and
    :class:`CameraSSF`.  Values are clamped to be nonnegative, transmittance
    additionally to at most one.
    """
    src = s.grid
    # tolerate rounding in the grid endpoints
    eps = 1e-9 * max(1.0, abs(src.stop_nm))
    if target.start_nm < src.start_nm - eps or target.stop_nm > src.stop_nm + eps:
        raise ValueError(f"target {target} extends beyond source {src}")
    if target == src:
        return s
    x_src = src.wavelengths
    x = np.clip(target.wavelengths, src.start_nm, src.stop_nm)

    def interp(v):
        return np.maximum(np.interp(x, x_src, v), 0.0)

    if isinstance(s, CameraSSF):
        return CameraSSF(target, np.stack([interp(row) for row in s.rows]))
    if isinstance(s, FilterTransmittance):
        return FilterTransmittance(target, np.minimum(interp(s.values), 1.0))
    if isinstance(s, RadianceSpectrum):
        return RadianceSpectrum(target, interp(s.values))
    raise TypeError(f"cannot resample {type(s).__name__}")


def resample_array(values, source, target):
    """Resample a ``(..., n)`` array of spectra between grids (no clamping)."""
    values = np.asarray(values, dtype=np.float64)
    if target.start_nm < source.start_nm - 1e-9 or target.stop_nm > source.stop_nm + 1e-9:
        raise ValueError(f"target {target} extends beyond source {source}")
    x = np.clip(target.wavelengths, source.start_nm, source.stop_nm)
    idx = np.searchsorted(source.wavelengths, x, side="right") - 1
    idx = np.clip(idx, 0, source.count - 2)
    frac = (x - source.wavelengths[idx]) / source.step_nm
    return values[..., idx] * (1 - frac) + values[..., idx + 1] * frac
