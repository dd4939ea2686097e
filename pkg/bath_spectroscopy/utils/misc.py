import os
import sys
import json
import hashlib
import logging
from typing import Callable, Optional
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import InvalidArgument


def get_logger(level=logging.INFO) -> logging.Logger:
    """Root logger printing bare messages to stdout. Called once by entry points."""
    logger = logging.getLogger()
    logger.setLevel(level)
    if not any(getattr(h, "_bath_spectroscopy", False) for h in logger.handlers):
        ch = logging.StreamHandler(sys.stdout)
        ch.setLevel(level)
        formatter = logging.Formatter('%(message)s')
        ch.setFormatter(formatter)
        ch._bath_spectroscopy = True
        logger.addHandler(ch)
    return logger


def run_chunked(fn: Callable, n_items: int, chunk_size: int,
                threads: Optional[int] = None):
    """Runs fn(indices) over fixed-size chunks of range(n_items) on a thread pool.

    Every chunk, including the last, receives exactly chunk_size indices (the
    tail is padded by repeating the last index), so compiled kernels see one
    shape and results do not depend on the number of threads. fn must return a
    tuple of arrays with a leading chunk axis; padded rows are dropped and the
    chunks are concatenated in index order.
    """
    if n_items < 1:
        raise ValueError("Need at least one item to run")

    def run(start):
        indices = np.arange(start, start + chunk_size)
        indices = np.minimum(indices, n_items - 1)
        outputs = fn(indices)
        keep = min(chunk_size, n_items - start)
        return tuple(np.asarray(out)[:keep] for out in outputs)

    starts = range(0, n_items, chunk_size)
    with ThreadPoolExecutor(max_workers=threads) as executor:
        results = list(executor.map(run, starts))
    return tuple(np.concatenate(parts, axis=0) for parts in zip(*results))


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def config_digest(config, seed: Optional[int] = None) -> str:
    payload = {"config": config, "seed": seed}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_digest(path: str) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            sha.update(block)
    return sha.hexdigest()


def prepare_out_dir(out_dir: str) -> str:
    if os.path.exists(out_dir) and not os.path.isdir(out_dir):
        raise InvalidArgument("Output path exists and is not a directory: " + out_dir)
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "items"):
        return dict(obj.items())
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    raise TypeError("Object of type " + type(obj).__name__ + " is not JSON serializable")
