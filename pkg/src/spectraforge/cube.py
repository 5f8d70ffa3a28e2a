"""In-memory containers for hyperspectral cubes and multi-camera captures."""
from dataclasses import dataclass

import numpy as np

from .spectral import SystemResponse, WavelengthGrid


@dataclass(frozen=True, eq=False)
class HsiCube:
    """``h x w x n`` radiance image with an optional validity mask."""

    grid: WavelengthGrid
    data: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != self.grid.count:
            raise ValueError(f"cube must be h x w x {self.grid.count}, got {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("cube must have at least one pixel")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise ValueError("cube data must be finite and nonnegative")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)
        if self.mask is not None:
            m = np.array(self.mask, dtype=bool)
            if m.shape != d.shape[:2]:
                raise ValueError(f"mask shape {m.shape} does not match {d.shape[:2]}")
            m.flags.writeable = False
            object.__setattr__(self, "mask", m)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def bands(self):
        return self.data.shape[2]

    def pixels(self):
        return self.data.reshape(-1, self.bands)

    def valid_mask(self):
        if self.mask is None:
            return np.ones(self.data.shape[:2], dtype=bool)
        return self.mask

    def with_mask(self, mask):
        return HsiCube(self.grid, self.data, mask)


@dataclass(frozen=True, eq=False)
class MultiCamCapture:
    """Aligned ``h x w x 3k`` capture of a ``k``-camera system."""

    data: np.ndarray
    t_per_camera: np.ndarray
    seed: int
    system: SystemResponse

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        t = np.array(self.t_per_camera, dtype=np.float64).reshape(-1)
        if d.ndim != 3 or d.shape[2] != self.system.channel_count:
            raise ValueError(f"capture must be h x w x {self.system.channel_count}, "
                             f"got {d.shape}")
        if t.shape != (self.system.camera_count,):
            raise ValueError("need one exposure time per camera")
        if np.any(t <= 0):
            raise ValueError("exposure times must be positive")
        d.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "t_per_camera", t)

    @property
    def camera_count(self):
        return self.system.camera_count

    def cameras(self, which):
        """Capture restricted to a subset of cameras."""
        which = list(which)
        cols = np.concatenate([np.arange(3 * i, 3 * i + 3) for i in which])
        return MultiCamCapture(self.data[:, :, cols], self.t_per_camera[which],
                               self.seed, self.system.subsystem(which))
