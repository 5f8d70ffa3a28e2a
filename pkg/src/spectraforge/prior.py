"""Discrete radiance priors built from hyperspectral corpora."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .spectral import RadianceSpectrum, WavelengthGrid, check_grids

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectraPrior:
    """A weighted finite set of radiance spectra.

    Only shapes are checked on construction; use :func:`validate_prior` for
    the full set of invariants.
    """

    grid: WavelengthGrid
    spectra: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        s = np.array(self.spectra, dtype=np.float64)
        p = np.array(self.probs, dtype=np.float64)
        if s.ndim != 2 or s.shape[1] != self.grid.count:
            raise ValueError(f"spectra must be N x {self.grid.count}, got {s.shape}")
        if p.shape != (s.shape[0],):
            raise ValueError("probs must have one entry per spectrum")
        if s.shape[0] == 0:
            raise ValueError("prior is empty")
        s.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "spectra", s)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, grid, spectra):
        spectra = np.asarray(spectra, dtype=np.float64)
        return cls(grid, spectra, np.full(spectra.shape[0], 1.0 / spectra.shape[0]))

    def __len__(self):
        return self.spectra.shape[0]

    @property
    def mean(self):
        return self.probs @ self.spectra

    def variance_trace(self):
        """``sum_i p_i ||r_i - mean||^2``."""
        d = self.spectra - self.mean
        return float(self.probs @ np.einsum("ij,ij->i", d, d))

    def spectrum(self, i):
        return RadianceSpectrum(self.grid, self.spectra[i])


@dataclass(frozen=True, eq=False)
class IlluminantSpectrum:
    grid: WavelengthGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (self.grid.count,):
            raise ValueError(f"expected {self.grid.count} values, got {v.shape}")
        if np.any(v < 0):
            raise ValueError("illuminant must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def subsample_corpus(cubes, stride):
    """Every ``stride``-th pixel along both axes of every cube.

    Returns an ``M x n`` array ordered by cube, then row-major.
    """
    if stride < 1 or int(stride) != stride:
        raise ValueError("stride must be a positive integer")
    cubes = list(cubes)
    if not cubes:
        raise ValueError("empty corpus")
    grid = cubes[0].grid
    parts = []
    for cube in cubes:
        check_grids(grid, cube.grid)
        sub = cube.data[::stride, ::stride, :]
        parts.append(sub.reshape(-1, sub.shape[-1]))
    return np.concatenate(parts, axis=0)


def reflectance_to_radiance(refl, illum):
    """Radiance of a surface with reflectance ``refl`` under ``illum``.

    ``refl`` may be a single spectrum (anything with ``grid`` and ``values``)
    or a bare ``(..., n)`` array, in which case a bare array is returned.
    """
    if hasattr(refl, "grid"):
        check_grids(refl.grid, illum.grid)
        return RadianceSpectrum(illum.grid, np.asarray(refl.values) * illum.values)
    refl = np.asarray(refl, dtype=np.float64)
    if refl.shape[-1] != illum.grid.count:
        raise ValueError(f"band count {refl.shape[-1]} does not match illuminant "
                         f"grid {illum.grid}")
    return refl * illum.values


@dataclass
class KMeansResult:
    prior: SpectraPrior
    labels: np.ndarray
    objective_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _sq_dists(x, x_sq, centers, chunk=8192):
    """Squared distances to the nearest center and its index, in row chunks."""
    c_sq = np.einsum("ij,ij->i", centers, centers)
    labels = np.empty(x.shape[0], dtype=np.int64)
    best = np.empty(x.shape[0])
    for s in range(0, x.shape[0], chunk):
        xs = x[s:s + chunk]
        d = x_sq[s:s + chunk, None] - 2.0 * (xs @ centers.T) + c_sq[None, :]
        lab = np.argmin(d, axis=1)
        labels[s:s + chunk] = lab
        diff = xs - centers[lab]
        # exact distance to the chosen center, free of expansion round-off
        best[s:s + chunk] = np.einsum("ij,ij->i", diff, diff)
    return best, labels


def _kmeans_pp(x, x_sq, k, gen):
    m = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    first = gen.integers(m)
    centers[0] = x[first]
    d = np.einsum("ij,ij->i", x - x[first], x - x[first])
    for j in range(1, k):
        total = d.sum()
        if total <= 0:
            # remaining points all coincide with chosen centers
            j_idx = int(np.argmax(d))
        else:
            u = gen.random() * total
            j_idx = int(np.searchsorted(np.cumsum(d), u, side="right"))
            j_idx = min(j_idx, m - 1)
            while d[j_idx] == 0:
                j_idx = (j_idx + 1) % m
        centers[j] = x[j_idx]
        diff = x - x[j_idx]
        d = np.minimum(d, np.einsum("ij,ij->i", diff, diff))
    return centers


def _update(x, labels, k):
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums, counts


def kmeans_compress(samples, k, seed=0, max_iter=300, tol=1e-6, grid=None,
                    weights="share"):
    """Compress spectra to ``k`` cluster centers with Lloyd's algorithm.

    Initialization is k-means++ driven by ``seed``.  Iteration stops when the
    largest center movement, relative to the largest center norm, drops below
    ``tol`` or after ``max_iter`` rounds.  A cluster that empties is moved to
    the sample currently farthest from its center.

    The returned centers are the exact means of their final clusters.  With
    ``weights="share"`` each center's probability is its cluster's share of
    the samples; ``weights="uniform"`` gives every center equal mass.

    Returns
    -------
    KMeansResult
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("samples must be an M x n matrix")
    if k <= 0 or int(k) != k:
        raise ValueError("k must be a positive integer")
    distinct = np.unique(x, axis=0).shape[0]
    if k > distinct:
        raise ValueError(f"k={k} exceeds the number of distinct samples ({distinct})")
    if weights not in ("share", "uniform"):
        raise ValueError("weights must be 'share' or 'uniform'")
    if grid is None:
        raise ValueError("grid is required")
    if grid.count != x.shape[1]:
        raise ValueError(f"samples have {x.shape[1]} bands, grid has {grid.count}")

    gen = np.random.default_rng(seed)
    x_sq = np.einsum("ij,ij->i", x, x)
    centers = _kmeans_pp(x, x_sq, int(k), gen)
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        dist, labels = _sq_dists(x, x_sq, centers)
        history.append(float(dist.sum()))
        sums, counts = _update(x, labels, k)
        new = centers.copy()
        nz = counts > 0
        new[nz] = sums[nz] / counts[nz, None]
        empty = np.flatnonzero(~nz)
        if empty.size:
            # farthest points from their current centers, one per empty cluster
            order = np.argsort(-dist, kind="stable")
            for j, idx in zip(empty, order):
                new[j] = x[idx]
            log.debug("reseeded %d empty clusters", empty.size)
        scale = max(np.sqrt(np.max(np.einsum("ij,ij->i", new, new))), 1e-300)
        shift = np.sqrt(np.max(np.einsum("ij,ij->i", new - centers, new - centers)))
        centers = new
        if empty.size == 0 and shift / scale < tol:
            converged = True
            break

    dist, labels = _sq_dists(x, x_sq, centers)
    history.append(float(dist.sum()))
    sums, counts = _update(x, labels, k)
    nz = counts > 0
    centers[nz] = sums[nz] / counts[nz, None]
    if weights == "share":
        probs = counts / counts.sum()
    else:
        probs = np.full(k, 1.0 / k)
    # centers of clusters are averages of nonnegative data; clip round-off
    centers = np.maximum(centers, 0.0) if np.all(x >= 0) else centers
    prior = SpectraPrior(grid, centers, probs)
    return KMeansResult(prior, labels, history, it, converged)


@dataclass
class PriorReport:
    violations: list
    duplicate_centers: list
    min_norm: float
    max_norm: float
    prob_min: float
    prob_max: float
    effective_size: float

    @property
    def ok(self):
        return not self.violations


def validate_prior(prior, prob_tol=1e-9):
    """Check a prior's invariants and summarize it; never raises."""
    s, p = prior.spectra, prior.probs
    violations = []
    if not np.all(np.isfinite(s)):
        violations.append("non-finite radiance")
    if np.any(s < 0):
        violations.append("negative radiance")
    if np.any(p < 0):
        violations.append("negative probability")
    if not abs(p.sum() - 1.0) <= prob_tol:
        violations.append("probs sum ≠ 1")
    _, first, inverse = np.unique(s, axis=0, return_index=True, return_inverse=True)
    inverse = np.ravel(inverse)
    dups = [(int(first[inverse[i]]), i) for i in range(len(s)) if first[inverse[i]] != i]
    norms = np.linalg.norm(s, axis=1)
    pos = p[p > 0]
    eff = float(1.0 / np.sum((pos / pos.sum()) ** 2)) if pos.size else 0.0
    return PriorReport(violations, dups, float(norms.min()), float(norms.max()),
                       float(p.min()), float(p.max()), eff)
