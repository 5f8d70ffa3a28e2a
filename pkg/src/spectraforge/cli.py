"""Command-line entry point.

Each subcommand reads one JSON config (``--config``); the stable flags
override the matching config keys, and ``--set key=value`` overrides any
other key.  Relative paths in a config are resolved against the config's
directory.  Exit codes: 0 success, 1 numerical failure, 2 input or config
error.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .calibration import (apply_divisor, calibration_divisor, estimate_ssf,
                          second_diff_operator)
from .errors import FormatError, GridMismatchError, NumericalFailure
from .metrics import evaluate
from .noise import ExposureCurve, fit_noise_params
from .prior import kmeans_compress, reflectance_to_radiance, subsample_corpus
from .rng import derive_seed
from .simulate import mmse_reconstruct, simulate_capture
from .spectral import (FilterTransmittance, WavelengthGrid, resample_array,
                       stack_system)
from .uncertainty import search_filters

log = logging.getLogger("spectraforge")

#: flag name -> config key
FLAG_KEYS = {"seed": "seed", "samples": "samples", "threads": "threads", "out": "out",
             "peak": "peak", "lambda_": "lambda", "k": "k", "stride": "stride"}

PATH_KEYS = {"prior", "library", "ssfs", "noise", "exposure", "cubes", "corpus",
             "illuminant", "samples_csv", "led_spectra_dir", "patch_stats", "device",
             "reference", "cube", "capture", "pred", "gt", "cameras", "out"}


class ConfigError(ValueError):
    pass


# --- configuration --------------------------------------------------------

def _resolve(value, base):
    if isinstance(value, str):
        return str((base / value).resolve()) if not os.path.isabs(value) else value
    if isinstance(value, list):
        return [_resolve(v, base) for v in value]
    if isinstance(value, dict):
        return {k: (_resolve(v, base) if k in ("ssf", "filter") else v) for k, v in value.items()}
    return value


def load_config(args):
    cfg = {}
    base = Path.cwd()
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        cfg = io.read_json(path)
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        base = path.parent.resolve()
    for k in list(cfg):
        if k in PATH_KEYS and cfg[k] is not None:
            cfg[k] = _resolve(cfg[k], base)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        cfg[key] = _resolve(val, Path.cwd()) if key in PATH_KEYS else val
    for attr, key in FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            cfg[key] = _resolve(val, Path.cwd()) if key in PATH_KEYS else val
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", str(Path.cwd() / "out"))
    return cfg


def require(cfg, key):
    if cfg.get(key) in (None, "", []):
        raise ConfigError(f"missing config key {key!r}")
    return cfg[key]


def _input_files(value):
    if isinstance(value, list):
        for v in value:
            yield from _input_files(v)
    elif isinstance(value, dict):
        for v in value.values():
            yield from _input_files(v)
    elif isinstance(value, str) and os.path.exists(value):
        p = Path(value)
        if p.is_dir():
            yield from sorted(x for x in p.rglob("*") if x.is_file())
        else:
            yield p
            # payloads stored next to JSON sidecars
            for sib in sorted(p.parent.glob(p.stem + ".*")):
                if sib != p and sib.is_file():
                    yield sib


def config_digest(command, cfg):
    """Digest of the effective config plus the content of every input file."""
    h = hashlib.sha256()
    public = {k: v for k, v in cfg.items() if k not in ("out", "threads")}
    h.update(command.encode())
    h.update(json.dumps(public, sort_keys=True, default=str).encode())
    for key in sorted(public):
        if key in PATH_KEYS:
            for f in _input_files(public[key]):
                h.update(f.name.encode())
                h.update(io.sha256_file(f).encode())
    return h.hexdigest()


def _run_info(command, cfg, **extra):
    info = {"command": command, "config_digest": config_digest(command, cfg),
            "seed": int(cfg.get("seed", 0))}
    if "samples" in cfg and not isinstance(cfg["samples"], str):
        info["n_samples"] = cfg["samples"]
    info.update(extra)
    return {"run": info}


def _outdir(cfg):
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(cfg):
    g = cfg.get("grid")
    return WavelengthGrid.from_dict(g) if g else None


def _as_int(cfg, key, default=None, minimum=None):
    val = cfg.get(key, default)
    if val is None:
        return None
    try:
        ival = int(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {val!r}") from None
    if ival != val:
        raise ConfigError(f"{key} must be an integer, got {val!r}")
    if minimum is not None and ival < minimum:
        raise ConfigError(f"{key} must be >= {minimum}")
    return ival


def _curve(cfg):
    return io.read_exposure_json(cfg["exposure"]) if cfg.get("exposure") else ExposureCurve()


# --- subcommands ----------------------------------------------------------

def cmd_build_prior(cfg):
    corpus = cfg.get("corpus") or cfg.get("cubes")
    if not corpus:
        raise ConfigError("missing config key 'corpus'")
    corpus = [corpus] if isinstance(corpus, str) else corpus
    cubes = [io.read_cube(p) for p in corpus]
    stride = _as_int(cfg, "stride", 1, minimum=1)
    k = _as_int(cfg, "k", None, minimum=1)
    if k is None:
        raise ConfigError("missing config key 'k'")
    samples = subsample_corpus(cubes, stride)
    grid = cubes[0].grid
    kind = cfg.get("kind", "radiance")
    if kind == "reflectance":
        illum = io.read_spectrum_csv(require(cfg, "illuminant"), "illuminant")
        samples = reflectance_to_radiance(samples, illum)
    elif kind != "radiance":
        raise ConfigError("kind must be 'radiance' or 'reflectance'")
    target = _grid(cfg)
    if target is not None and target != grid:
        samples = np.maximum(resample_array(samples, grid, target), 0.0)
        grid = target
    seed = derive_seed(cfg["seed"], "prior-builder", "kmeans")
    try:
        res = kmeans_compress(samples, k, seed=seed, max_iter=_as_int(cfg, "max_iter", 300),
                              tol=float(cfg.get("tol", 1e-6)), grid=grid,
                              weights=cfg.get("weights", "share"))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = _outdir(cfg)
    h = hashlib.sha256()
    for f in _input_files(corpus):
        h.update(io.sha256_file(f).encode())
    provenance = {"corpus_sha256": h.hexdigest(), "stride": stride, "k": k,
                  "samples": int(samples.shape[0]), "kind": kind,
                  "iterations": res.iterations, "converged": res.converged}
    provenance.update(_run_info("build-prior", cfg))
    io.write_prior(out / "prior.json", res.prior, extra={"provenance": provenance})
    io.write_json(out / "provenance.json", provenance)
    print(f"prior with N={k} from {samples.shape[0]} spectra -> {out / 'prior.json'}")


def _load_search_inputs(cfg):
    library = io.read_filter_library(require(cfg, "library"))
    ssf_paths = require(cfg, "ssfs")
    if len(ssf_paths) != 3:
        raise ConfigError("ssfs must list exactly three SSF files (main first)")
    ssfs = [io.read_ssf_csv(p) for p in ssf_paths]
    prior = io.read_prior(require(cfg, "prior"))
    noise = io.read_noise_json(require(cfg, "noise"))
    return library, ssfs, prior, noise


def cmd_select_filters(cfg):
    library, ssfs, prior, noise = _load_search_inputs(cfg)
    n = _as_int(cfg, "samples", 4096, minimum=1)
    threads = _as_int(cfg, "threads", 1, minimum=1)
    rel_tol = cfg.get("rel_tol", 0.005)
    reports = search_filters(library, ssfs, prior, noise, _curve(cfg), n_samples=n,
                             seed=int(cfg["seed"]), threads=threads, rel_tol=rel_tol,
                             fixed_exposure=cfg.get("fixed_exposure"))
    out = _outdir(cfg)
    io.write_search_results(out / "ranking.json", out / "ranking.csv", reports,
                            extra=_run_info("select-filters", cfg, n_samples=n))
    best = reports[0]
    print(f"best pair {best.filter_pair[0]},{best.filter_pair[1]} "
          f"v={best.v:.6g} +- {best.std_error:.2g} ({len(reports)} pairs)")


def cmd_fit_ssf(cfg):
    samples = io.read_calibration_samples(require(cfg, "samples_csv"), cfg.get("led_spectra_dir"))
    lam = cfg.get("lambda")
    if lam is not None and float(lam) < 0:
        raise ConfigError("lambda must be nonnegative")
    fit = estimate_ssf(samples, None if lam is None else float(lam),
                       max_iter=_as_int(cfg, "max_iter", 50000))
    out = _outdir(cfg)
    io.write_ssf_csv(out / "ssf.csv", fit.ssf)
    d = second_diff_operator(fit.ssf.grid.count)
    meta = {"lambda": fit.lam, "iterations": fit.iterations, "converged": fit.converged,
            "objective": fit.objective_history[-1],
            "smoothness": float(np.sum((d @ fit.ssf.rows.T) ** 2))}
    if fit.cv_errors:
        meta["cv_errors"] = {f"{k:g}": v for k, v in fit.cv_errors.items()}
    meta.update(_run_info("fit-ssf", cfg))
    io.write_json(out / "ssf_fit.json", meta)
    print(f"SSF fitted with lambda={fit.lam:g} -> {out / 'ssf.csv'}")


def cmd_fit_noise(cfg):
    stats = io.read_patch_stats_csv(require(cfg, "patch_stats"))
    try:
        fit = fit_noise_params(stats)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = _outdir(cfg)
    extra = {"clamped": list(fit.clamped),
             "residual_rms": [float(x) for x in fit.residual_rms]}
    extra.update(_run_info("fit-noise", cfg))
    io.write_noise_json(out / "noise.json", fit.params, extra=extra)
    print(f"noise parameters for {fit.params.channel_count} channels -> {out / 'noise.json'}")


def cmd_calibrate(cfg):
    device = io.read_spectrum_csv(require(cfg, "device"))
    reference = io.read_spectrum_csv(require(cfg, "reference"))
    k = calibration_divisor(device, reference)
    out = _outdir(cfg)
    io.write_divisor_csv(out / "divisor.csv", device.grid, k)
    cubes = cfg.get("cubes") or []
    cubes = [cubes] if isinstance(cubes, str) else cubes
    info = _run_info("calibrate", cfg)
    for p in cubes:
        cube = io.read_cube(p)
        if cube.grid != device.grid:
            raise GridMismatchError(cube.grid, device.grid)
        io.write_cube(out / (Path(p).stem + "_calibrated.json"), apply_divisor(cube, k),
                      extra=info)
    io.write_json(out / "calibrate.json", info)
    print(f"divisor over {device.grid} -> {out / 'divisor.csv'}")


def _system_from_cameras(cfg):
    cams = require(cfg, "cameras")
    pairs = []
    for cam in cams:
        if isinstance(cam, str):
            cam = {"ssf": cam}
        ssf = io.read_ssf_csv(cam["ssf"])
        f = (io.read_spectrum_csv(cam["filter"], "filter") if cam.get("filter")
             else FilterTransmittance.unit(ssf.grid))
        pairs.append((ssf, f))
    return stack_system(pairs)


def cmd_simulate(cfg):
    cube = io.read_cube(require(cfg, "cube"))
    sr = _system_from_cameras(cfg)
    noise = io.read_noise_json(require(cfg, "noise"))
    seed = int(cfg["seed"])
    cap = simulate_capture(cube, sr, noise, _curve(cfg), seed=seed,
                           fixed_exposure=cfg.get("fixed_exposure"))
    out = _outdir(cfg)
    io.write_capture(out / "capture.json", cap, extra=_run_info("simulate", cfg))
    print(f"capture {cap.data.shape} t={list(np.round(cap.t_per_camera, 6))} -> "
          f"{out / 'capture.json'}")


def cmd_reconstruct(cfg):
    cap = io.read_capture(require(cfg, "capture"))
    prior = io.read_prior(require(cfg, "prior"))
    noise = io.read_noise_json(require(cfg, "noise"))
    cube = mmse_reconstruct(cap, prior, noise, threads=_as_int(cfg, "threads", 1, minimum=1))
    failed = 0 if cube.mask is None else int((~cube.mask).sum())
    out = _outdir(cfg)
    io.write_cube(out / "reconstruction.json", cube,
                  extra=_run_info("reconstruct", cfg, failed_pixels=failed))
    print(f"reconstructed {cube.height}x{cube.width} ({failed} failed) -> "
          f"{out / 'reconstruction.json'}")
    if failed == cube.height * cube.width:
        raise NumericalFailure("posterior failed at every pixel")


def cmd_evaluate(cfg):
    pred = io.read_cube(require(cfg, "pred"))
    gt = io.read_cube(require(cfg, "gt"))
    peak = cfg.get("peak")
    rep = evaluate(pred, gt, peak=None if peak is None else float(peak),
                   seed=int(cfg["seed"]))
    out = _outdir(cfg)
    d = rep.to_dict()
    d.update(_run_info("evaluate", cfg))
    io.write_json(out / "metrics.json", d)
    print(f"PSNR {rep.psnr_db:.2f} dB  SAM {rep.sam_deg:.3f} deg  NSE {rep.nse_pct:.2f} %  "
          f"({rep.valid_pixels} px)")


COMMANDS = {
    "build-prior": cmd_build_prior,
    "select-filters": cmd_select_filters,
    "fit-ssf": cmd_fit_ssf,
    "fit-noise": cmd_fit_noise,
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "evaluate": cmd_evaluate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="spectraforge", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--samples", type=int, help="Monte Carlo sample count")
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--peak", type=float, help="PSNR peak value")
        p.add_argument("--lambda", dest="lambda_", type=float, help="SSF smoothness weight")
        p.add_argument("--k", type=int, help="prior size")
        p.add_argument("--stride", type=int, help="corpus pixel stride")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any config key (value parsed as JSON)")
    return parser


def main(argv=None):
    level = os.environ.get("SPECTRAFORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        COMMANDS[args.command](cfg)
    except NumericalFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ConfigError, FormatError, GridMismatchError, FileNotFoundError, KeyError,
            ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
