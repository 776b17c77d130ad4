"""File writers: CSV time series, JSON reports and the run manifest.

CSV column orders are part of the public format; see README.md.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from . import __version__
from .core_rd import GENERATOR_NAME

TIMESERIES_COLUMNS = ("step", "time", "segment", "cell", "theta", "q_pas", "q_act", "q_inh")
SWEEP_COLUMNS = (
    "axis1",
    "axis2",
    "frac_2lobe",
    "frac_3lobe",
    "frac_4plus",
    "frac_invalid",
    "mean_amplitude",
    "frac_other",
    "median_amplitude",
)
TURNING_COLUMNS = ("step", "time", "segment", "turning_distance", "lobe_count", "amplitude", "valid")


def fmt(v) -> str:
    """Shortest round-tripping text for a number."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, data) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)  # RFC 4180 quoting, CRLF line ends
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return path


def write_text(path, text: str) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def timeseries_rows(record):
    for k in range(record.n_samples):
        step, t, seg = record.steps[k], record.times[k], record.segment_of_sample[k]
        theta, qp, qa, qh = record.theta[k], record.q_pas[k], record.q_act[k], record.q_inh[k]
        for m in range(theta.size):
            yield (step, t, seg, m, theta[m], qp[m], qa[m], qh[m])


def write_timeseries(path, record) -> Path:
    return write_csv(path, TIMESERIES_COLUMNS, timeseries_rows(record))


def read_timeseries(path):
    """Load a time-series CSV back into per-sample arrays.

    Returns a dict with ``steps``, ``times``, ``segments`` (1-D) and
    ``theta``, ``q_pas``, ``q_act``, ``q_inh`` (samples x cells).
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TIMESERIES_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [[float(x) for x in r] for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no samples")
    arr = np.asarray(rows)
    n_cells = int(arr[:, 3].max()) + 1
    if arr.shape[0] % n_cells:
        raise ValueError(f"{path}: incomplete sample rows")
    arr = arr.reshape(-1, n_cells, arr.shape[1])
    return {
        "steps": arr[:, 0, 0].astype(int),
        "times": arr[:, 0, 1],
        "segments": arr[:, 0, 2].astype(int),
        "theta": arr[:, :, 4],
        "q_pas": arr[:, :, 5],
        "q_act": arr[:, :, 6],
        "q_inh": arr[:, :, 7],
    }


def sweep_rows(result):
    for p in result.rows():
        yield (
            p.axis1_value,
            p.axis2_value,
            p.frac_2lobe,
            p.frac_3lobe,
            p.frac_4plus,
            p.frac_invalid,
            p.mean_amplitude,
            p.frac_other,
            p.median_amplitude,
        )


def write_sweep(path, result) -> Path:
    return write_csv(path, SWEEP_COLUMNS, sweep_rows(result))


def turning_rows(record):
    for k, s in enumerate(record.summaries):
        d = record.turning[k] if k < len(record.turning) else float("nan")
        yield (record.steps[k], record.times[k], record.segment_of_sample[k], d, s.lobe_count, s.amplitude, s.valid)


def write_turning(path, record) -> Path:
    return write_csv(path, TURNING_COLUMNS, turning_rows(record))


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, config: dict, files, started: str, extra: dict | None = None) -> Path:
    """Manifest listing every output with its checksum.  ``config`` is the
    fully-resolved configuration; feeding it back reproduces the run."""
    out_dir = Path(out_dir)
    inventory = []
    for f in sorted(Path(f) for f in files):
        inventory.append({"file": os.path.relpath(f, out_dir), "sha256": sha256(f), "bytes": f.stat().st_size})
    manifest = {
        "command": command,
        "tool": "loopysim",
        "version": __version__,
        "generator": GENERATOR_NAME,
        "started": started,
        "finished": now(),
        "config": config,
        "outputs": inventory,
    }
    if extra:
        manifest.update(extra)
    return write_json(out_dir / "manifest.json", manifest)


def now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
