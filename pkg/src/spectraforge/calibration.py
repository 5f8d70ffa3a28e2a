"""Camera sensitivity estimation and radiometric calibration helpers."""
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .spectral import CameraSSF, RadianceSpectrum, check_grids

log = logging.getLogger(__name__)

#: Log-spaced smoothness weights tried by cross-validation.
LAMBDA_GRID = tuple(10.0 ** e for e in range(-6, 3))


@dataclass(frozen=True)
class CalibrationSample:
    """Flat-field channel means ``c`` of one LED and its measured radiance."""

    c: np.ndarray
    r: RadianceSpectrum

    def __post_init__(self):
        c = np.array(self.c, dtype=np.float64)
        if c.shape != (3,):
            raise ValueError("c must have three channel values")
        if np.any(c < 0):
            raise ValueError("channel means must be nonnegative")
        object.__setattr__(self, "c", c)


def second_diff_operator(n):
    """``(n-2) x n`` matrix with rows ``[..., 1, -2, 1, ...]``."""
    if n < 3:
        return np.zeros((0, n))
    d = np.zeros((n - 2, n))
    i = np.arange(n - 2)
    d[i, i] = 1.0
    d[i, i + 1] = -2.0
    d[i, i + 2] = 1.0
    return d


@dataclass
class SSFFit:
    ssf: CameraSSF
    lam: float
    objective_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    cv_errors: dict = None


def _objective(S, R, C, D, lam):
    res = R @ S - C
    ds = D @ S
    return float(np.sum(res * res) + lam * np.sum(ds * ds))


def _solve_nnls_smooth(R, C, D, lam, max_iter, tol, S0=None):
    """Minimize ``||R S - C||^2 + lam ||D S||^2`` over ``S >= 0``.

    Monotone FISTA: the accelerated candidate is accepted only when it does
    not raise the objective, otherwise momentum restarts from the current
    iterate, so the recorded objective never increases.
    """
    n = R.shape[1]
    H = R.T @ R + lam * (D.T @ D)
    b = R.T @ C
    L = 2.0 * np.linalg.eigvalsh(H)[-1]
    if L <= 0:
        return np.zeros((n, C.shape[1])), [0.0], 0, True
    S = np.zeros((n, C.shape[1])) if S0 is None else S0.copy()
    f = _objective(S, R, C, D, lam)
    hist = [f]
    y = S.copy()
    tk = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (H @ y - b)
        z = np.maximum(y - grad / L, 0.0)
        fz = _objective(z, R, C, D, lam)
        tk_next = (1.0 + np.sqrt(1.0 + 4.0 * tk * tk)) / 2.0
        if fz <= f:
            dec = f - fz
            y = z + ((tk - 1.0) / tk_next) * (z - S)
            S, f = z, fz
            tk = tk_next
            hist.append(f)
            if dec <= tol * max(f, 1e-300):
                converged = True
                break
        else:
            y = S.copy()
            tk = 1.0
            hist.append(f)
    return S, hist, it, converged


def _stack_samples(samples):
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one calibration sample")
    grid = samples[0].r.grid
    for s in samples:
        check_grids(grid, s.r.grid)
    R = np.stack([s.r.values for s in samples])
    C = np.stack([s.c for s in samples])
    return grid, R, C


def cross_validate_lambda(samples, lambdas=LAMBDA_GRID, folds=5, max_iter=20000, tol=1e-10):
    """Pick the smoothness weight with the lowest held-out squared error."""
    grid, R, C = _stack_samples(samples)
    m = R.shape[0]
    folds = max(2, min(folds, m))
    D = second_diff_operator(grid.count)
    # folds as interleaved index sets so each fold spans the wavelength range
    parts = [np.arange(i, m, folds) for i in range(folds)]
    errors = {}
    for lam in lambdas:
        err = 0.0
        for test in parts:
            train = np.setdiff1d(np.arange(m), test)
            S, *_ = _solve_nnls_smooth(R[train], C[train], D, lam, max_iter, tol)
            res = R[test] @ S - C[test]
            err += float(np.sum(res * res))
        errors[lam] = err
    best = min(errors, key=lambda k: (errors[k], k))
    return best, errors


def estimate_ssf(samples, lam=None, max_iter=50000, tol=1e-10, cv_folds=5):
    """Estimate a nonnegative smooth camera SSF from LED samples.

    Minimizes ``sum_i ||c_i - S^T r_i||^2 + lam ||D S||^2`` with ``S >= 0``,
    ``D`` the second-difference operator.  When ``lam`` is None it is
    chosen by cross-validation over :data:`LAMBDA_GRID`.

    Returns
    -------
    SSFFit
    """
    grid, R, C = _stack_samples(samples)
    cv = None
    if lam is None:
        lam, cv = cross_validate_lambda(samples, folds=cv_folds)
        log.info("cross-validated lambda = %g", lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    D = second_diff_operator(grid.count)
    S, hist, it, conv = _solve_nnls_smooth(R, C, D, lam, max_iter, tol)
    if not conv:
        log.warning("SSF fit stopped at max_iter=%d", max_iter)
    return SSFFit(CameraSSF(grid, S.T), lam, hist, it, conv, cv)


def ssf_objective(ssf, samples, lam):
    grid, R, C = _stack_samples(samples)
    return _objective(ssf.rows.T, R, C, second_diff_operator(grid.count), lam)


def smoothness(ssf):
    """``||D S||^2`` of an SSF."""
    ds = second_diff_operator(ssf.grid.count) @ ssf.rows.T
    return float(np.sum(ds * ds))


def calibration_divisor(r_device, r_reference):
    """Band-wise ratio of a device reading to a trusted reference reading."""
    check_grids(r_device.grid, r_reference.grid)
    ref = np.asarray(r_reference.values)
    bad = np.flatnonzero(ref <= 0)
    if bad.size:
        wl = r_reference.grid.wavelengths[bad[0]]
        raise ValueError(f"reference is not positive at band {bad[0]} ({wl:g} nm)")
    return np.asarray(r_device.values) / ref


def apply_divisor(cube, divisor):
    """Divide every band of ``cube`` (``h x w x n`` or HsiCube) by ``divisor``."""
    from .cube import HsiCube

    divisor = np.asarray(divisor, dtype=np.float64)
    if np.any(divisor <= 0):
        raise ValueError("divisor must be positive")
    if isinstance(cube, HsiCube):
        return HsiCube(cube.grid, cube.data / divisor, cube.mask)
    return np.asarray(cube) / divisor


@dataclass
class ColorProjection:
    matrix: np.ndarray
    residual: float
    pixels: int
    ridge: float = 0.0


def fit_color_projection(hsi, rgb, mask=None):
    """Least-squares ``n x 3`` map from spectra to camera RGB.

    Solved through the normal equations; a ``1e-10`` relative ridge is added
    when they are rank deficient.
    """
    data = np.asarray(getattr(hsi, "data", hsi), dtype=np.float64)
    rgb = np.asarray(rgb, dtype=np.float64)
    if data.shape[:2] != rgb.shape[:2] or rgb.shape[-1] != 3:
        raise ValueError(f"hsi {data.shape} and rgb {rgb.shape} are not aligned")
    if mask is None:
        mask = getattr(hsi, "mask", None)
    if mask is None:
        mask = np.ones(data.shape[:2], dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != data.shape[:2]:
        raise ValueError("mask shape does not match the image")
    X = data[mask]
    Y = rgb[mask]
    n = X.shape[1]
    if X.shape[0] < n:
        raise ValueError(f"{X.shape[0]} valid pixels are fewer than {n} bands")
    G = X.T @ X
    rhs = X.T @ Y
    ridge = 0.0
    if np.linalg.matrix_rank(G) < n:
        ridge = 1e-10 * max(np.trace(G) / n, 1e-300)
    M = np.linalg.solve(G + ridge * np.eye(n), rhs)
    residual = float(np.linalg.norm(X @ M - Y))
    return ColorProjection(M, residual, int(X.shape[0]), ridge)


@dataclass
class SSFValidation:
    mean_angle_deg: float
    angles_deg: np.ndarray
    excluded: list


def validate_ssf(ssf, patch_spectra, patch_rgb):
    """Mean angle between predicted and measured RGB of chart patches.

    ``patch_spectra`` is ``P x n`` (or an HsiCube of patch means shaped
    ``P x 1 x n``), ``patch_rgb`` is ``P x 3``.
    """
    spectra = getattr(patch_spectra, "data", patch_spectra)
    grid = getattr(patch_spectra, "grid", None)
    if grid is not None:
        check_grids(ssf.grid, grid)
    spectra = np.asarray(spectra, dtype=np.float64).reshape(-1, ssf.grid.count)
    rgb = np.asarray(patch_rgb, dtype=np.float64).reshape(-1, 3)
    if spectra.shape[0] != rgb.shape[0]:
        raise GridMismatchError(spectra.shape[0], rgb.shape[0], "patch counts")
    pred = spectra @ ssf.rows.T
    npred = np.linalg.norm(pred, axis=1)
    nrgb = np.linalg.norm(rgb, axis=1)
    ok = (npred > 0) & (nrgb > 0)
    excluded = [int(i) for i in np.flatnonzero(~ok)]
    if not ok.any():
        raise ValueError("no patch has nonzero predicted and measured RGB")
    a = pred[ok] / npred[ok, None]
    b = rgb[ok] / nrgb[ok, None]
    ang = np.degrees(2.0 * np.arctan2(np.linalg.norm(a - b, axis=1),
                                      np.linalg.norm(a + b, axis=1)))
    return SSFValidation(float(ang.mean()), ang, excluded)
