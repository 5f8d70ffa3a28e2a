"""Readers and writers for the on-disk formats.

* spectra and filters: CSV ``wavelength_nm,value``
* camera SSFs: CSV ``wavelength_nm,r,g,b``
* calibration divisor: CSV ``wavelength_nm,divisor``
* noise parameters / exposure curve: JSON
* priors: JSON header plus a little-endian float32 ``N x n`` payload
* cubes and captures: JSON sidecar plus a band-sequential float32 payload
"""
import csv
import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .calibration import CalibrationSample
from .cube import HsiCube, MultiCamCapture
from .errors import FormatError
from .noise import ExposureCurve, NoiseParams
from .prior import IlluminantSpectrum, SpectraPrior
from .spectral import (CameraSSF, FilterTransmittance, RadianceSpectrum,
                       SystemResponse, WavelengthGrid)
from .uncertainty import FilterLibrary

_F32 = np.dtype("<f4")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", path, e.lineno) from None


# --- CSV ------------------------------------------------------------------

def read_table(path, header):
    """Read a numeric CSV with an exact header; returns an array of rows."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise FormatError("file is empty", path, 1) from None
        got = [h.strip() for h in first]
        if got != list(header):
            raise FormatError(f"expected header {','.join(header)}, got {','.join(got)}",
                              path, 1)
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FormatError(f"expected {len(header)} fields, got {len(row)}",
                                  path, line_no)
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise FormatError(f"non-numeric value in {row}", path, line_no) from None
    if not rows:
        raise FormatError("no data rows", path, 2)
    return np.array(rows)


def _grid_of(table, path):
    try:
        return WavelengthGrid.from_wavelengths(table[:, 0])
    except ValueError as e:
        raise FormatError(str(e), path) from None


def write_table(path, header, columns, fmt="%.10g"):
    data = np.column_stack(columns)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(fmt % v for v in row) + "\n")


def read_spectrum_csv(path, kind="radiance"):
    """Read a ``wavelength_nm,value`` CSV as radiance, filter or illuminant."""
    t = read_table(path, ("wavelength_nm", "value"))
    grid = _grid_of(t, path)
    cls = {"radiance": RadianceSpectrum, "filter": FilterTransmittance,
           "illuminant": IlluminantSpectrum}[kind]
    try:
        return cls(grid, t[:, 1])
    except ValueError as e:
        raise FormatError(str(e), path) from None


def write_spectrum_csv(path, spectrum, value_header="value"):
    write_table(path, ("wavelength_nm", value_header),
                [spectrum.grid.wavelengths, spectrum.values])


def read_ssf_csv(path):
    t = read_table(path, ("wavelength_nm", "r", "g", "b"))
    try:
        return CameraSSF(_grid_of(t, path), t[:, 1:].T)
    except ValueError as e:
        raise FormatError(str(e), path) from None


def write_ssf_csv(path, ssf):
    write_table(path, ("wavelength_nm", "r", "g", "b"),
                [ssf.grid.wavelengths, *ssf.rows])


def read_divisor_csv(path):
    t = read_table(path, ("wavelength_nm", "divisor"))
    return _grid_of(t, path), t[:, 1]


def write_divisor_csv(path, grid, divisor):
    write_table(path, ("wavelength_nm", "divisor"), [grid.wavelengths, divisor])


def read_filter_library(directory):
    """Every ``*.csv`` in ``directory`` as a filter, id = file stem, sorted."""
    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise FormatError("no filter CSV files found", directory)
    return FilterLibrary([(p.stem, read_spectrum_csv(p, "filter")) for p in paths])


def write_filter_library(directory, library):
    os.makedirs(directory, exist_ok=True)
    for fid, f in library:
        write_spectrum_csv(Path(directory) / f"{fid}.csv", f)


def read_calibration_samples(path, spectra_dir=None):
    """LED samples from ``led_id,c_r,c_g,c_b`` rows plus ``<led_id>.csv`` spectra."""
    spectra_dir = Path(spectra_dir) if spectra_dir else Path(path).parent
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError("file is empty", path, 1) from None
        if first != ["led_id", "c_r", "c_g", "c_b"]:
            raise FormatError("expected header led_id,c_r,c_g,c_b", path, 1)
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise FormatError(f"expected 4 fields, got {len(row)}", path, line_no)
            led = row[0].strip()
            try:
                c = [float(v) for v in row[1:]]
            except ValueError:
                raise FormatError(f"non-numeric channel value in {row}", path, line_no) from None
            r = read_spectrum_csv(spectra_dir / f"{led}.csv")
            try:
                samples.append(CalibrationSample(c, r))
            except ValueError as e:
                raise FormatError(str(e), path, line_no) from None
    if not samples:
        raise FormatError("no calibration samples", path, 2)
    return samples


def write_calibration_samples(path, samples, ids=None):
    path = Path(path)
    ids = ids or [f"led{i:02d}" for i in range(len(samples))]
    with open(path, "w", newline="") as fh:
        fh.write("led_id,c_r,c_g,c_b\n")
        for led, s in zip(ids, samples):
            fh.write(led + "," + ",".join("%.12g" % v for v in s.c) + "\n")
    for led, s in zip(ids, samples):
        write_spectrum_csv(path.parent / f"{led}.csv", s.r)


def read_patch_stats_csv(path):
    """``channel,mean_charge,std_charge`` rows grouped by channel index."""
    t = read_table(path, ("channel", "mean_charge", "std_charge"))
    ch = t[:, 0].astype(int)
    if np.any(ch != t[:, 0]) or np.any(ch < 0):
        raise FormatError("channel must be a nonnegative integer", path)
    return [t[ch == c][:, 1:] for c in range(ch.max() + 1)]


# --- JSON parameter files -------------------------------------------------

def read_noise_json(path):
    try:
        return NoiseParams.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad noise parameter file: {e}", path) from None


def write_noise_json(path, params, extra=None):
    d = params.to_dict()
    if extra:
        d.update(extra)
    write_json(path, d)


def read_exposure_json(path):
    try:
        return ExposureCurve.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad exposure curve file: {e}", path) from None


def write_exposure_json(path, curve):
    write_json(path, curve.to_dict())


# --- priors ---------------------------------------------------------------

def _payload_path(header_path, suffix):
    p = Path(header_path)
    return p.with_name(p.stem + suffix)


def write_prior(path, prior, extra=None):
    """Write ``path`` (JSON header) and a sibling ``.f32`` payload.

    The payload stores spectra as float32, so a round trip is exact only to
    single precision.
    """
    payload = _payload_path(path, ".f32")
    payload.write_bytes(np.ascontiguousarray(prior.spectra, dtype=_F32).tobytes())
    header = {"n": prior.grid.count, "N": len(prior), "grid": prior.grid.to_dict(),
              "probs": [float(p) for p in prior.probs], "payload": payload.name,
              "dtype": "float32-little-endian", "layout": "row-major",
              "sha256": sha256_file(payload)}
    if extra:
        header.update(extra)
    write_json(path, header)


def read_prior(path):
    h = read_json(path)
    try:
        grid = WavelengthGrid.from_dict(h["grid"])
        n, N = int(h["n"]), int(h["N"])
        payload = Path(path).parent / h["payload"]
        digest = h["sha256"]
        probs = np.array(h["probs"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad prior header: {e}", path) from None
    if n != grid.count or probs.shape != (N,):
        raise FormatError("prior header sizes are inconsistent", path)
    if sha256_file(payload) != digest:
        raise FormatError("payload checksum mismatch", payload)
    data = np.fromfile(payload, dtype=_F32)
    if data.size != N * n:
        raise FormatError(f"payload holds {data.size} values, expected {N * n}", payload)
    return SpectraPrior(grid, data.reshape(N, n).astype(np.float64), probs)


# --- cubes and captures ---------------------------------------------------

def _write_bsq(path, data):
    # band-sequential: band index slowest, then rows, then columns
    bsq = np.ascontiguousarray(np.moveaxis(data, 2, 0), dtype=_F32)
    Path(path).write_bytes(bsq.tobytes())


def _read_bsq(path, h, w, b):
    data = np.fromfile(path, dtype=_F32)
    if data.size != h * w * b:
        raise FormatError(f"payload holds {data.size} values, expected {h * w * b}", path)
    return np.moveaxis(data.reshape(b, h, w), 0, 2).astype(np.float64)


def write_cube(path, cube, extra=None):
    """Write an HsiCube as ``path`` (sidecar) + ``.bin`` (+ ``.mask.bin``)."""
    payload = _payload_path(path, ".bin")
    _write_bsq(payload, cube.data)
    header = {"height": cube.height, "width": cube.width, "bands": cube.bands,
              "wavelengths_nm": [float(x) for x in cube.grid.wavelengths],
              "layout": "band-sequential", "dtype": "float32-little-endian",
              "mask_present": cube.mask is not None, "payload": payload.name}
    if cube.mask is not None:
        mpath = _payload_path(path, ".mask.bin")
        mpath.write_bytes(np.ascontiguousarray(cube.mask, dtype=np.uint8).tobytes())
        header["mask_payload"] = mpath.name
    if extra:
        header.update(extra)
    write_json(path, header)


def _check_layout(h, path):
    if h.get("layout") != "band-sequential" or h.get("dtype") != "float32-little-endian":
        raise FormatError("unsupported layout or dtype", path)


def read_cube(path):
    h = read_json(path)
    try:
        _check_layout(h, path)
        hh, ww, bb = int(h["height"]), int(h["width"]), int(h["bands"])
        grid = WavelengthGrid.from_wavelengths(h["wavelengths_nm"])
        payload = Path(path).parent / h.get("payload", _payload_path(path, ".bin").name)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad cube header: {e}", path) from None
    if grid.count != bb:
        raise FormatError("wavelength list does not match band count", path)
    data = _read_bsq(payload, hh, ww, bb)
    mask = None
    if h.get("mask_present"):
        mpath = Path(path).parent / h.get("mask_payload", _payload_path(path, ".mask.bin").name)
        m = np.fromfile(mpath, dtype=np.uint8)
        if m.size != hh * ww:
            raise FormatError("mask payload has the wrong size", mpath)
        mask = m.reshape(hh, ww).astype(bool)
    try:
        return HsiCube(grid, data, mask)
    except ValueError as e:
        raise FormatError(str(e), path) from None


def write_capture(path, capture, extra=None):
    payload = _payload_path(path, ".bin")
    _write_bsq(payload, capture.data)
    sr = capture.system
    h, w, m = capture.data.shape
    header = {"kind": "capture", "height": h, "width": w, "channels": m,
              "layout": "band-sequential", "dtype": "float32-little-endian",
              "payload": payload.name, "seed": int(capture.seed),
              "t_per_camera_s": [float(t) for t in capture.t_per_camera],
              "channel_order": "camera-major, R,G,B within camera",
              "system": {"grid": sr.grid.to_dict(), "camera_count": sr.camera_count,
                         "matrix": sr.matrix.tolist()}}
    if extra:
        header.update(extra)
    write_json(path, header)


def read_capture(path):
    h = read_json(path)
    try:
        _check_layout(h, path)
        if h.get("kind") != "capture":
            raise ValueError("not a capture file")
        s = h["system"]
        sr = SystemResponse(WavelengthGrid.from_dict(s["grid"]), np.array(s["matrix"]),
                            int(s["camera_count"]))
        hh, ww, m = int(h["height"]), int(h["width"]), int(h["channels"])
        payload = Path(path).parent / h["payload"]
        t = h["t_per_camera_s"]
        seed = int(h["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"bad capture header: {e}", path) from None
    data = _read_bsq(payload, hh, ww, m)
    return MultiCamCapture(data, t, seed, sr)


# --- filter search results ------------------------------------------------

def write_search_results(json_path, csv_path, reports, extra=None):
    rows = []
    for rank, r in enumerate(reports, start=1):
        d = r.to_dict()
        d["rank"] = rank
        rows.append(d)
    doc = {"reports": rows}
    if extra:
        doc.update(extra)
    write_json(json_path, doc)
    with open(csv_path, "w", newline="") as fh:
        fh.write("rank,id1,id2,v,std_error,samples\n")
        for d in rows:
            fh.write(f"{d['rank']},{d['id1']},{d['id2']},{d['v']!r},"
                     f"{d['std_error']!r},{d['samples']}\n")
