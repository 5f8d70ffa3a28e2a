"""Acceptance suite: one test per criterion, each printing a pass/fail line."""
import time

import numpy as np
import pytest

from oracles import brute_force_posterior, total_variance
from spectraforge import (VISIBLE_10NM, CalibrationSample, NoiseParams, SpectraPrior,
                          SystemResponse, WavelengthGrid, conditional_variance_trace,
                          estimate_ssf, estimate_v_system, evaluate, fit_noise_params,
                          mmse_reconstruct, nse, posterior, psnr, sam, search_filters,
                          simulate_capture)
from spectraforge import synthetic as syn
from spectraforge.uncertainty import build_system

pytestmark = pytest.mark.acceptance

GRID = VISIBLE_10NM


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")


def _angles_deg(a, b):
    cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def test_criterion_01_posterior_matches_brute_force(capsys):
    gen = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n = int(gen.integers(3, 7))
        N = int(gen.integers(2, 9))
        k = int(gen.integers(1, 4))
        grid = WavelengthGrid(400.0, 10.0, n)
        sr = SystemResponse(grid, gen.random((3 * k, n)), k)
        prior = SpectraPrior(grid, gen.random((N, n)), gen.dirichlet(np.ones(N)))
        params = NoiseParams(gen.uniform(0.005, 0.05, 3), gen.uniform(0.005, 0.05, 3))
        t = gen.uniform(0.2, 1.0, k)
        c = sr.matrix @ prior.spectra[gen.integers(N)] + 0.1 * gen.standard_normal(3 * k)
        got = posterior(c, prior, sr, params, t).probs
        a, b = params.for_channels(3 * k)
        want = brute_force_posterior(c, prior.spectra, prior.probs, sr.matrix, a, b,
                                     np.repeat(t, 3))
        worst = max(worst, float(np.max(np.abs(got - want))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 1.0
    _report(capsys, 1, ok, f"max |diff| {worst:.2e} over 50 instances in {elapsed:.2f} s")
    assert ok


def test_criterion_02_variance_identity(capsys):
    gen = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        N, n = int(gen.integers(2, 20)), int(gen.integers(2, 40))
        spectra = gen.random((N, n)) * gen.uniform(0.1, 10.0)
        prior = SpectraPrior.uniform(WavelengthGrid(400.0, 10.0, n), spectra)
        p = gen.dirichlet(np.full(N, gen.uniform(0.1, 2.0)))
        got = conditional_variance_trace(p, prior)
        want = total_variance(p, spectra)
        worst = max(worst, abs(got - want) / abs(want))
    ok = worst <= 1e-9
    _report(capsys, 2, ok, f"max relative diff {worst:.2e}")
    assert ok


def test_criterion_03_monte_carlo_convergence(capsys):
    # main camera alone with the stock phone noise; N = 16
    prior = syn.smooth_prior(GRID, 16, seed=3)
    sr = build_system(("F00", "F02"), syn.filter_library(GRID, 4, seed=1),
                      syn.phone_cameras(GRID)).subsystem([0])
    noise = syn.phone_noise()
    start = time.perf_counter()
    small = estimate_v_system(sr, prior, noise, n_samples=2 ** 18, seed=1, rel_tol=None)
    large = estimate_v_system(sr, prior, noise, n_samples=2 ** 20, seed=1, rel_tol=None)
    elapsed = time.perf_counter() - start
    rel = small.std_error / small.v
    ratio = small.std_error / large.std_error
    ok = rel <= 0.005 and abs(ratio - 2.0) <= 0.5 and elapsed < 60.0
    _report(capsys, 3, ok, f"v={small.v:.5g} rel SE at 2^18 {100 * rel:.3f}%, "
                           f"SE ratio 2^18/2^20 {ratio:.3f}, {elapsed:.1f} s")
    assert ok


def test_criterion_04_zero_noise_identification(capsys):
    prior = syn.smooth_prior(GRID, 32, seed=4)
    sr = build_system(("F00", "F01"), syn.filter_library(GRID, 2, seed=2),
                      syn.phone_cameras(GRID))
    means = prior.spectra @ sr.matrix.T
    assert len(np.unique(means, axis=0)) == len(prior)  # injective on the prior
    zero = NoiseParams.uniform(0.0, 0.0)
    rep = estimate_v_system(sr, prior, zero, n_samples=4096, seed=4)
    cube, _ = syn.cube_from_prior(prior, 16, 16, seed=4)
    rec = mmse_reconstruct(simulate_capture(cube, sr, zero, seed=4), prior, zero)
    exact = bool(np.array_equal(rec.data, cube.data))
    ok = rep.v == 0.0 and exact
    _report(capsys, 4, ok, f"v={rep.v!r}, exact reconstruction {exact}")
    assert ok


def test_criterion_05_channel_superset(capsys):
    gen = np.random.default_rng(105)
    lib = syn.filter_library(GRID, 12, seed=5)
    cams = syn.phone_cameras(GRID)
    prior = syn.smooth_prior(GRID, 32, seed=5)
    noise = syn.phone_noise()
    pairs = lib.ordered_pairs()
    chosen = [pairs[i] for i in gen.choice(len(pairs), 10, replace=False)]
    failures = []
    for i, pair in enumerate(chosen):
        sr = build_system(pair, lib, cams)
        full = estimate_v_system(sr, prior, noise, n_samples=8192, seed=i, rel_tol=None)
        main = estimate_v_system(sr.subsystem([0]), prior, noise, n_samples=8192, seed=i,
                                 rel_tol=None)
        bound = main.v + 3.0 * np.hypot(full.std_error, main.std_error)
        if not full.v <= bound:
            failures.append(pair)
    ok = not failures
    _report(capsys, 5, ok, f"{10 - len(failures)}/10 pairs satisfy v9 <= v3 + 3 SE")
    assert ok


def test_criterion_06_multi_camera_gain(capsys):
    cams = syn.phone_cameras(GRID)
    noise = syn.phone_noise()
    sr = build_system(("F00", "F02"), syn.filter_library(GRID, 4, seed=1), cams)
    start = time.perf_counter()
    wins = 0
    sam_gain, nse_gain = [], []
    for trial in range(20):
        prior = syn.smooth_prior(GRID, 64, seed=100 + trial)
        cube, _ = syn.cube_from_prior(prior, 32, 32, seed=trial)
        cap = simulate_capture(cube, sr, noise, seed=trial)
        multi = evaluate(mmse_reconstruct(cap, prior, noise), cube)
        single = evaluate(mmse_reconstruct(cap.cameras([0]), prior, noise), cube)
        wins += multi.sam_deg < single.sam_deg and multi.nse_pct < single.nse_pct
        sam_gain.append(1 - multi.sam_deg / single.sam_deg)
        nse_gain.append(1 - multi.nse_pct / single.nse_pct)
    elapsed = time.perf_counter() - start
    ok = wins >= 19 and elapsed < 300.0
    _report(capsys, 6, ok, f"multi-camera better in {wins}/20 trials; mean reduction "
                           f"SAM {100 * np.mean(sam_gain):.0f}%, NSE {100 * np.mean(nse_gain):.0f}%, "
                           f"{elapsed:.1f} s")
    assert ok


def test_criterion_07_ssf_recovery(capsys):
    gen = np.random.default_rng(107)
    true = syn.camera_ssf(GRID)
    leds = syn.led_spectra(GRID, 25)
    samples = []
    for r in leds:
        c = true.rows @ r.values
        samples.append(CalibrationSample(np.maximum(c * (1 + 0.01 * gen.standard_normal(3)), 0), r))
    fit = estimate_ssf(samples)
    ang = _angles_deg(fit.ssf.rows, true.rows)
    monotone = bool(np.all(np.diff(fit.objective_history) <= 0))
    ok = ang.mean() < 3.0 and monotone
    _report(capsys, 7, ok, f"lambda={fit.lam:g}, per-channel angles "
                           f"{np.array2string(ang, precision=2)} deg, mean {ang.mean():.2f} deg, "
                           f"objective monotone {monotone}")
    assert ok


def test_criterion_08_noise_fit_round_trip(capsys):
    gen = np.random.default_rng(108)
    alpha = np.array([2.0, 1.5, 2.5])
    beta = np.array([25.0, 16.0, 36.0])
    means = np.geomspace(5.0, 3000.0, 24)
    stats = []
    for a, b in zip(alpha, beta):
        std = np.sqrt(a * means + b) * (1 + 0.01 * gen.standard_normal(24))
        stats.append(np.column_stack([means, std]))
    fit = fit_noise_params(stats)
    err_a = np.abs(fit.params.alpha / alpha - 1)
    err_b = np.abs(fit.params.beta / beta - 1)
    ok = err_a.max() <= 0.05 and err_b.max() <= 0.05
    _report(capsys, 8, ok, f"max relative error alpha {100 * err_a.max():.2f}%, "
                           f"beta {100 * err_b.max():.2f}%")
    assert ok


def test_criterion_09_metric_unit_cases(capsys):
    gen = np.random.default_rng(109)
    gt = gen.uniform(0.1, 1.0, (8, 8, 31))
    pred = gen.uniform(0.1, 1.0, (8, 8, 31))
    errors = [
        abs(sam(7.5 * pred, gt) - sam(pred, gt)),
        abs(sam(pred, 0.01 * gt) - sam(pred, gt)),
        abs(sam(np.array([1.0, 0.0]), np.array([0.0, 1.0])) - 90.0),
        abs(sam(np.array([1.0, 0.0]), np.array([1.0, 1.0])) - 45.0),
        abs(nse(np.zeros_like(gt), gt) - 100.0),
        abs(nse(1.5 * gt, gt) - 50.0),
        abs(nse(gt, gt)),
        abs(psnr(np.full((2, 2, 3), 1.1), np.ones((2, 2, 3))) - 20.0),
        abs(psnr(np.full((2, 2, 3), 1.01), np.ones((2, 2, 3)), peak=10.0) - 60.0),
    ]
    worst = max(errors)
    ok = worst <= 1e-12
    _report(capsys, 9, ok, f"{len(errors)} analytic cases, max error {worst:.1e}")
    assert ok


def test_criterion_10_search_count_and_determinism(capsys):
    lib = syn.filter_library(GRID, 65, seed=10)
    cams = syn.phone_cameras(GRID)
    prior = syn.smooth_prior(GRID, 8, seed=10)
    noise = syn.phone_noise()
    kw = dict(n_samples=64, seed=10, rel_tol=None)
    start = time.perf_counter()
    a = search_filters(lib, cams, prior, noise, threads=1, **kw)
    b = search_filters(lib, cams, prior, noise, threads=1, **kw)
    c = search_filters(lib, cams, prior, noise, threads=8, **kw)
    elapsed = time.perf_counter() - start
    key = lambda reps: [(r.filter_pair, r.v, r.std_error, r.samples) for r in reps]
    same_runs = key(a) == key(b)
    same_threads = key(a) == key(c)
    ok = len(a) == 4160 and len({r.filter_pair for r in a}) == 4160 and same_runs and same_threads
    _report(capsys, 10, ok, f"{len(a)} reports, identical across runs {same_runs}, "
                            f"1 vs 8 threads {same_threads}, {elapsed:.1f} s")
    assert ok
