"""File formats: CSV/JSON tables with units in the headers, trace dumps,
structured-text configs and run manifests."""
import os
import json
import logging
from typing import Dict, List, Optional
from importlib import metadata

import numpy as np
import pandas as pd
from flax.core.frozen_dict import freeze, unfreeze

from ..errors import ConfigError
from ..datasets.ensemble import DetuningEnsemble, make_ensemble
from ..models.filters import FilterFunction
from ..models.coherence import CoherenceCurve
from ..models.overlap import Tabulated, tabulated_spectrum
from .misc import canonical_json, config_digest, file_digest

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
TABLE_FORMATS = ("csv", "json")
PACKAGES = ("bath_spectroscopy", "jax", "flax", "numpy", "scipy", "pandas")

SPECTRUM_COLUMNS = ("f_hz", "G_rad2_per_s", "G_err_rad2_per_s", "clamped")


def write_table(frame: pd.DataFrame, path: str, fmt: str = "csv") -> str:
    """Writes frame as CSV (17 significant digits) or as JSON records; returns the path."""
    if fmt not in TABLE_FORMATS:
        raise ValueError("Unknown table format: " + str(fmt))
    path = os.path.splitext(path)[0] + "." + fmt
    if fmt == "csv":
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    else:
        frame.to_json(path, orient="records", double_precision=15)
    return path


def read_table(path: str) -> pd.DataFrame:
    if path.endswith(".json"):
        return pd.read_json(path, orient="records")
    return pd.read_csv(path)


def spectrum_frame(G: Tabulated) -> pd.DataFrame:
    values = np.asarray(G.values)
    return pd.DataFrame({
        "f_hz": np.asarray(G.grid.values),
        "G_rad2_per_s": values,
        "G_err_rad2_per_s": (np.zeros_like(values) if G.uncertainties is None
                             else np.asarray(G.uncertainties)),
        "clamped": (np.zeros(values.shape, dtype=bool) if G.clamped is None
                    else np.asarray(G.clamped)),
    })


def read_spectrum(path: str) -> Tabulated:
    frame = read_table(path)
    missing = [c for c in ("f_hz", "G_rad2_per_s") if c not in frame.columns]
    if missing:
        raise ConfigError("Spectrum file lacks columns " + ", ".join(missing), field=path)
    uncertainties = frame["G_err_rad2_per_s"].to_numpy() if "G_err_rad2_per_s" in frame else None
    clamped = frame["clamped"].to_numpy(dtype=bool) if "clamped" in frame else None
    return tabulated_spectrum(frame["f_hz"].to_numpy(dtype=float),
                              frame["G_rad2_per_s"].to_numpy(dtype=float),
                              uncertainties, origin="file:" + os.path.basename(path),
                              clamped=clamped)


def filter_frame(F: FilterFunction) -> pd.DataFrame:
    return pd.DataFrame({"f_hz": np.asarray(F.grid.values), "F_s2": np.asarray(F.values)})


def coherence_frame(curve: CoherenceCurve, rates: Optional[np.ndarray] = None) -> pd.DataFrame:
    frame = pd.DataFrame({"t_s": np.asarray(curve.times), "C": np.asarray(curve.values),
                          "stderr": np.asarray(curve.stderr)})
    if rates is not None:
        frame["rate_per_s"] = np.asarray(rates)
        frame["fidelity"] = (1 + frame["C"]) / 2
    return frame


def scans_frame(points) -> pd.DataFrame:
    """One row per readout sample of every scan: f0_hz (NaN for the bias run), t_s, z."""
    rows = []
    for point in points:
        for scan in point.scans:
            f0 = np.nan if scan.rabi_frequency is None else scan.rabi_frequency
            rows.append(pd.DataFrame({"f0_hz": f0, "t_s": scan.duration, "z": scan.samples}))
    return pd.concat(rows, ignore_index=True)


def write_traces(ens: DetuningEnsemble, path: str) -> List[str]:
    """Traces as .npy (rad/s, shape atoms x steps) with a JSON sidecar holding dt and units."""
    stem = os.path.splitext(path)[0]
    np.save(stem + ".npy", np.asarray(ens.traces, dtype=np.float64), allow_pickle=False)
    sidecar = {"dt_s": ens.dt, "n_steps": ens.n_steps, "n_atoms": ens.n_atoms,
               "units": "rad/s", "rng_seed": ens.rng_seed, "offset_rad_per_s": ens.offset,
               "config": ens.config}
    with open(stem + ".json", "w") as f:
        f.write(canonical_json(sidecar))
    return [stem + ".npy", stem + ".json"]


def read_traces(path: str) -> DetuningEnsemble:
    stem = os.path.splitext(path)[0]
    with open(stem + ".json") as f:
        sidecar = json.load(f)
    traces = np.load(stem + ".npy", allow_pickle=False)
    return make_ensemble(traces, sidecar["dt_s"], sidecar.get("rng_seed"), sidecar.get("config"),
                         sidecar.get("offset_rad_per_s", 0.0))


def _deep_merge(base: Dict, override: Dict) -> Dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_json(path: str) -> Dict:
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError("Config file not found: " + path)
    except json.JSONDecodeError as e:
        raise ConfigError("Malformed JSON in %s: %s" % (path, e.msg), field=path, line=e.lineno)
    if not isinstance(data, dict):
        raise ConfigError("Config must be a JSON object", field=path, line=1)
    return data


def load_config(path: str, _seen=()):
    """Reads a JSON config, resolving "extends" chains relative to each file.
    Parents are deep-merged first, so the child overrides. Returns a FrozenDict."""
    path = os.path.abspath(path)
    if path in _seen:
        raise ConfigError("Circular extends chain through " + path, field="extends")
    data = _read_json(path)
    parent = data.pop("extends", None)
    if parent is not None:
        if not isinstance(parent, str):
            raise ConfigError("extends must be a relative path", field="extends")
        base = unfreeze(load_config(os.path.join(os.path.dirname(path), parent), _seen + (path,)))
        data = _deep_merge(base, data)
    return freeze(data)


MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["command", "config_digest", "seed", "versions", "outputs", "wall_time_s"],
    "properties": {
        "command": {"type": "string"},
        "config_digest": {"type": "string"},
        "seed": {"type": "integer"},
        "versions": {"type": "object"},
        "outputs": {"type": "array",
                    "items": {"type": "object", "required": ["path", "sha256"]}},
        "wall_time_s": {"type": "number"},
    },
}

_JSON_TYPES = {"object": dict, "array": list, "string": str, "integer": int, "number": (int, float)}


def validate_manifest(manifest: Dict, schema: Dict = MANIFEST_SCHEMA, where: str = "manifest"):
    """Checks required keys and value types of the manifest against the schema."""
    if not isinstance(manifest, _JSON_TYPES[schema["type"]]) or isinstance(manifest, bool):
        raise ValueError("%s: expected %s" % (where, schema["type"]))
    for key in schema.get("required", ()):
        if key not in manifest:
            raise ValueError("%s: missing %s" % (where, key))
    for key, sub in schema.get("properties", {}).items():
        if key in manifest:
            validate_manifest(manifest[key], sub, where + "." + key)
    if "items" in schema:
        for i, item in enumerate(manifest):
            validate_manifest(item, schema["items"], "%s[%d]" % (where, i))


def package_versions() -> Dict[str, str]:
    versions = {}
    for name in PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_manifest(out_dir: str, command: str, config, seed: int, outputs: List[str],
                   wall_time: float) -> str:
    manifest = {
        "command": command,
        "config_digest": config_digest(config, seed),
        "seed": int(seed),
        "versions": package_versions(),
        "outputs": [{"path": os.path.relpath(p, out_dir), "sha256": file_digest(p)}
                    for p in outputs],
        "wall_time_s": float(wall_time),
    }
    validate_manifest(manifest)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path
