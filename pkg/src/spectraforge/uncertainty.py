"""Posterior spectral uncertainty of a filtered multi-camera system.

Given a discrete prior over radiance spectra and the Gaussian sensor-noise
model, the posterior over prior entries follows from Bayes' rule.  The
quality of a filter configuration is the expected trace of the posterior
covariance, estimated by Monte Carlo: draw a spectrum from the prior,
simulate a noisy capture, and average the resulting posterior variance.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import rng
from .errors import NoExplanatorySpectrum
from .noise import ExposureCurve, camera_exposures, expand_exposures
from .spectral import (FilterTransmittance, RadianceSpectrum, SystemResponse,
                       check_grids, stack_system)

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)
#: Tolerance for a noise-free channel to count as reproducing a measurement.
DIRAC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PosteriorWeights:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64)
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)


@dataclass(frozen=True)
class UncertaintyReport:
    v: float
    std_error: float
    samples: int
    filter_pair: tuple = ()
    seed: int = 0

    def to_dict(self):
        return {"id1": self.filter_pair[0] if self.filter_pair else None,
                "id2": self.filter_pair[1] if len(self.filter_pair) > 1 else None,
                "v": self.v, "std_error": self.std_error,
                "samples": self.samples, "seed": self.seed}


class FilterLibrary:
    """Named filter transmittances on a shared grid, kept in insertion order."""

    def __init__(self, entries):
        entries = list(entries)
        ids = [e[0] for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("filter ids must be unique")
        if entries:
            grid = entries[0][1].grid
            for fid, f in entries:
                check_grids(grid, f.grid)
        self._entries = dict(entries)

    @property
    def ids(self):
        return list(self._entries)

    @property
    def grid(self):
        return next(iter(self._entries.values())).grid

    def __getitem__(self, fid):
        try:
            return self._entries[fid]
        except KeyError:
            raise KeyError(f"unknown filter id {fid!r}") from None

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.items())

    def ordered_pairs(self):
        ids = self.ids
        return [(a, b) for a in ids for b in ids if a != b]


def _as_values(x):
    return np.asarray(x.values if hasattr(x, "values") else x, dtype=np.float64)


def _channel_t(t, m):
    t = np.asarray(t, dtype=np.float64)
    if t.ndim == 0:
        return np.full(m, float(t))
    if t.shape[-1] == m:
        return t
    if m % t.shape[-1] == 0 and t.shape[-1] * 3 == m:
        return expand_exposures(t)
    raise ValueError(f"cannot match {t.shape[-1]} exposure times to {m} channels")


def log_likelihood(c, r, sr, params, t):
    """Gaussian log-density of measurement ``c`` given spectrum ``r``.

    A channel with zero noise acts as a point mass: a mismatch gives
    ``-inf`` and an exact match gives ``+inf``.
    """
    if isinstance(r, RadianceSpectrum):
        check_grids(sr.grid, r.grid)
    c = _as_values(c)
    c_bar = sr.matrix @ _as_values(r)
    m = c_bar.size
    if c.shape != (m,):
        raise ValueError(f"signal has shape {c.shape}, system has {m} channels")
    alpha, beta = params.for_channels(m)
    tt = _channel_t(t, m)
    if np.any(tt <= 0):
        raise ValueError("exposure time must be positive")
    var = (alpha * c_bar * tt + beta) / tt ** 2
    dirac = var == 0
    if np.any(dirac):
        if np.any(np.abs(c[dirac] - c_bar[dirac]) > DIRAC_TOL):
            return -math.inf
        return math.inf
    return float(-0.5 * np.sum((c - c_bar) ** 2 / var + np.log(var) + LOG_2PI))


class PosteriorModel:
    """Precomputed quantities for batched posterior evaluation.

    Parameters
    ----------
    prior : SpectraPrior
    sr : SystemResponse
    params : NoiseParams
    """

    def __init__(self, prior, sr, params):
        check_grids(prior.grid, sr.grid)
        self.prior = prior
        self.sr = sr
        self.m = sr.channel_count
        self.alpha, self.beta = params.for_channels(self.m)
        self.means = prior.spectra @ sr.matrix.T  # N x m
        with np.errstate(divide="ignore"):
            self.log_prior = np.log(prior.probs)
        # zero noise regardless of exposure: beta == 0 and alpha * cbar == 0
        self.dirac = (self.beta[None, :] == 0) & (self.alpha[None, :] * self.means == 0)
        self.any_dirac = bool(self.dirac.any())
        mu = prior.spectra.mean(axis=0)
        self._centered = prior.spectra - mu
        self._sq = np.einsum("ij,ij->i", self._centered, self._centered)

    def log_posterior(self, c, t):
        """Unnormalized log posterior, ``(B, N)``, for signals ``c`` ``(B, m)``.

        ``t`` is a per-channel exposure array broadcastable to ``(B, m)``.
        """
        c = np.atleast_2d(np.asarray(c, dtype=np.float64))
        tt = np.broadcast_to(_channel_t(t, self.m), c.shape)
        inv_t = 1.0 / tt
        var = (self.means[None, :, :] * (self.alpha * inv_t)[:, None, :]
               + (self.beta * inv_t ** 2)[:, None, :])
        resid = c[:, None, :] - self.means[None, :, :]
        if not self.any_dirac:
            ll = -0.5 * np.sum(resid ** 2 / var + np.log(var), axis=2)
        else:
            ll = self._dirac_loglik(resid, var)
        ll = ll - 0.5 * self.m * LOG_2PI
        return ll + self.log_prior[None, :]

    def _dirac_loglik(self, resid, var):
        dirac = np.broadcast_to(self.dirac[None], resid.shape)
        safe_var = np.where(dirac, 1.0, var)
        terms = np.where(dirac, 0.0, resid ** 2 / safe_var + np.log(safe_var))
        hit = dirac & (np.abs(resid) <= DIRAC_TOL)
        miss = dirac & ~hit
        # a noise-free channel that reproduces c outweighs any finite density
        hit_any = hit.any(axis=1, keepdims=True)
        excluded = miss | (hit_any & ~hit)
        terms = np.where(excluded, np.inf, terms)
        # the matched point masses share one reference density; drop their terms
        return -0.5 * terms.sum(axis=2)

    def posterior_probs(self, c, t):
        """Normalized posteriors ``(B, N)`` and a per-row success flag."""
        lp = self.log_posterior(c, t)
        top = lp.max(axis=1)
        ok = np.isfinite(top)
        probs = np.zeros_like(lp)
        if ok.any():
            l_ok = lp[ok]
            probs[ok] = np.exp(l_ok - logsumexp(l_ok, axis=1, keepdims=True))
        return probs, ok

    def variance_traces(self, probs):
        """Posterior variance trace for each row of ``probs``."""
        mean_c = probs @ self._centered
        tr = probs @ self._sq - np.einsum("ij,ij->i", mean_c, mean_c)
        tr = np.maximum(tr, 0.0)
        # a single surviving spectrum has exactly zero spread
        tr[np.count_nonzero(probs, axis=1) <= 1] = 0.0
        return tr


def posterior(c, prior, sr, params, t):
    """Posterior probabilities of the prior spectra given one measurement."""
    model = PosteriorModel(prior, sr, params)
    c = _as_values(c)
    if c.shape != (model.m,):
        raise ValueError(f"signal has shape {c.shape}, system has {model.m} channels")
    tt = _channel_t(t, model.m)
    if np.any(tt <= 0):
        raise ValueError("exposure time must be positive")
    probs, ok = model.posterior_probs(c[None, :], tt[None, :])
    if not ok[0]:
        raise NoExplanatorySpectrum()
    return PosteriorWeights(probs[0])


def conditional_mean(post, prior):
    p = _as_values(post.probs if isinstance(post, PosteriorWeights) else post)
    if p.shape != (len(prior),):
        raise ValueError(f"posterior has {p.size} entries, prior has {len(prior)}")
    return RadianceSpectrum(prior.grid, np.maximum(p @ prior.spectra, 0.0))


def conditional_variance_trace(post, prior):
    """``sum_i p_i ||r_i - E[r|c]||^2`` by direct summation."""
    p = _as_values(post.probs if isinstance(post, PosteriorWeights) else post)
    if p.shape != (len(prior),):
        raise ValueError(f"posterior has {p.size} entries, prior has {len(prior)}")
    d = prior.spectra - p @ prior.spectra
    return float(p @ np.einsum("ij,ij->i", d, d))


def _draw_indices(key, idx, cdf):
    u = rng.uniform(key, idx)
    return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), cdf.size - 1)


def _merge(acc, chunk):
    # Chan et al. pairwise update of (count, mean, M2)
    n_a, mean_a, m2_a = acc
    n_b = chunk.size
    mean_b = float(chunk.mean())
    m2_b = float(np.sum((chunk - mean_b) ** 2))
    n = n_a + n_b
    delta = mean_b - mean_a
    return n, mean_a + delta * n_b / n, m2_a + m2_b + delta ** 2 * n_a * n_b / n


def estimate_v_system(sr, prior, params, curve=None, n_samples=2 ** 20, seed=0,
                      rel_tol=0.005, min_samples=4096, batch=512,
                      fixed_exposure=None, return_samples=False):
    """Monte Carlo estimate of the expected posterior variance trace.

    Each sample draws ``r*`` from the prior, derives one exposure per camera
    from that camera's mean noiseless signal (or uses ``fixed_exposure``),
    adds sensor noise and evaluates the posterior variance trace.  Random
    draws are keyed by sample index and channel, so two systems sharing the
    leading cameras see identical spectra and identical noise on those
    cameras for a given seed.

    Sampling stops early once the relative standard error falls below
    ``rel_tol`` (checked after each batch, never before ``min_samples``).
    Pass ``rel_tol=None`` to always use ``n_samples``.

    Returns
    -------
    UncertaintyReport, or ``(UncertaintyReport, ndarray)`` when
    ``return_samples`` is set.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    curve = curve or ExposureCurve()
    model = PosteriorModel(prior, sr, params)
    k = sr.camera_count
    m = model.m
    cdf = np.cumsum(prior.probs)
    draw_key = rng.derive_key(seed, "prior-draw")
    noise_key = rng.derive_key(seed, "sensor-noise")
    channel_keys = [rng.derive_key(noise_key, "channel", j) for j in range(m)]

    acc = (0, 0.0, 0.0)
    kept = [] if return_samples else None
    start = 0
    while start < n_samples:
        stop = min(start + batch, n_samples)
        idx = np.arange(start, stop, dtype=np.uint64)
        pick = _draw_indices(draw_key, idx, cdf)
        c_bar = model.means[pick]
        if fixed_exposure is not None:
            t = np.full((idx.size, m), float(fixed_exposure))
        else:
            t = expand_exposures(camera_exposures(c_bar, k, curve))
        sd = np.sqrt(model.alpha * c_bar * t + model.beta) / t
        z = np.column_stack([rng.normal(ck, idx) for ck in channel_keys])
        c = c_bar + sd * z
        probs, ok = model.posterior_probs(c, t)
        if not ok.all():
            raise NoExplanatorySpectrum()
        tr = model.variance_traces(probs)
        acc = _merge(acc, tr)
        if kept is not None:
            kept.append(tr)
        start = stop
        n, mean, m2 = acc
        if rel_tol is not None and n >= min_samples and n > 1 and start < n_samples:
            se = math.sqrt(m2 / (n - 1) / n)
            if mean > 0 and se / mean < rel_tol:
                break
            if mean == 0 and m2 == 0:
                break

    n, mean, m2 = acc
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
    report = UncertaintyReport(float(mean), float(se), int(n), (), int(seed))
    if return_samples:
        return report, np.concatenate(kept)
    return report


def build_system(filter_pair, library, base_ssfs):
    """Main camera unfiltered, the pair's filters on cameras two and three."""
    a, b = filter_pair
    if a == b:
        raise ValueError(f"filter pair must use two distinct filters, got {a!r} twice")
    base_ssfs = list(base_ssfs)
    if len(base_ssfs) != 3:
        raise ValueError("expected three base SSFs (main, second, third camera)")
    fa, fb = library[a], library[b]
    unit = FilterTransmittance.unit(base_ssfs[0].grid)
    return stack_system([(base_ssfs[0], unit), (base_ssfs[1], fa), (base_ssfs[2], fb)])


def estimate_v(filter_pair, library, base_ssfs, prior, params, curve=None,
               n_samples=2 ** 20, seed=0, **kwargs):
    """Expected posterior variance for one ordered filter pair."""
    sr = build_system(filter_pair, library, base_ssfs)
    rep = estimate_v_system(sr, prior, params, curve, n_samples, seed, **kwargs)
    return UncertaintyReport(rep.v, rep.std_error, rep.samples, tuple(filter_pair), rep.seed)


def search_filters(library, base_ssfs, prior, params, curve=None, n_samples=2 ** 20,
                   seed=0, threads=1, progress=None, **kwargs):
    """Evaluate every ordered filter pair and rank by ascending uncertainty.

    Pair ``i`` in :meth:`FilterLibrary.ordered_pairs` order draws from the
    substream ``(seed, i)``; ties are broken by standard error, then ids.
    The ranking does not depend on ``threads``.
    """
    if len(library) < 2:
        raise ValueError("filter search needs at least two filters")
    pairs = library.ordered_pairs()

    def run(i):
        pair_seed = rng.derive_seed(seed, "pair", i)
        rep = estimate_v(pairs[i], library, base_ssfs, prior, params, curve,
                         n_samples, pair_seed, **kwargs)
        if progress is not None:
            progress(i, rep)
        return rep

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run, range(len(pairs))))
    else:
        reports = [run(i) for i in range(len(pairs))]
    return sorted(reports, key=lambda r: (r.v, r.std_error, r.filter_pair))
