"""Deterministic run outputs: CSV tables, JSON summaries, manifests.

Floats are written with repr-faithful precision so reruns with the same
seed produce byte-identical files regardless of worker count.
"""

import csv
import json
import hashlib
import os
import tempfile
import time

import numpy as np

FLOAT_FORMAT = "%.17g"


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % float(value)
    return str(value)


def write_csv(path, header, rows):
    """Write rows (iterables or dicts keyed by header) with \\n endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(col) for col in header]
            writer.writerow([_fmt(v) for v in row])


def write_ladder_csv(path, report):
    """Long-format ladder table: one row per (index, metric)."""
    header = ["ladder_index", "metric", "value", "stderr"]
    write_csv(path, header, report.rows())


def write_wealth_csv(path, grid, log_wealth, finite_variation, martingale,
                     growth):
    """Single-path wealth decomposition table on the time grid."""
    header = ["t", "logX", "B", "L", "g"]
    rows = zip(grid, log_wealth, finite_variation, martingale, growth)
    write_csv(path, header, rows)


def canonical_json(payload):
    """Stable serialization: sorted keys, no whitespace jitter."""

    def clean(obj):
        if isinstance(obj, dict):
            return {str(k): clean(v) for k, v in sorted(obj.items())}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return [clean(v) for v in obj.tolist()]
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (np.bool_,)):
            return bool(obj)
        return obj

    return json.dumps(clean(payload), sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def write_json(path, payload):
    with open(path, "w") as fh:
        fh.write(canonical_json(payload))
        fh.write("\n")


def atomic_write_json(path, payload):
    """Write via a temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(canonical_json(payload))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RunManifest:
    """Collects run metadata and writes manifest.json atomically."""

    def __init__(self, config, seed, version):
        self.config = config
        self.seed = seed
        self.version = version
        self.started = time.time()
        self.checks = {}
        self.files = []

    def record_check(self, name, passed):
        self.checks[name] = bool(passed)

    def record_file(self, path):
        self.files.append(os.path.basename(path))

    @property
    def all_passed(self):
        return all(self.checks.values())

    def write(self, out_dir):
        payload = {
            "config_sha256": config_hash(self.config),
            "version": self.version,
            "seed": self.seed,
            "wall_clock_seconds": time.time() - self.started,
            "checks": self.checks,
            "files": sorted(self.files),
        }
        path = os.path.join(out_dir, "manifest.json")
        atomic_write_json(path, payload)
        return path


def bundle_cache_path(cache_dir, spec_config, seed):
    key = config_hash({"spec": spec_config, "seed": int(seed)})
    return os.path.join(cache_dir, f"paths-{key[:16]}.npz")


def save_bundle_arrays(path, **arrays):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)),
                               suffix=".npz")
    os.close(fd)
    try:
        np.savez_compressed(tmp, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_bundle_arrays(path):
    if not os.path.exists(path):
        return None
    with np.load(path) as data:
        return {k: data[k] for k in data.files}
