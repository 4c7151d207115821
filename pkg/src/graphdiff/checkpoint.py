"""Binary checkpoint container for network weights and optimizer state.

Layout: one JSON header line (tensor names, shapes, dtypes, config echo and
training metadata) terminated by a newline, followed by the raw little-endian
tensor bytes concatenated in header order. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .ppgn import MiniPPGNParams

__all__ = ["save_payload", "load_payload"]

FORMAT_NAME = "graphdiff-checkpoint"
FORMAT_VERSION = 1


def _json_default(obj):
    # numpy scalars occasionally appear inside RNG state dicts
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__} in checkpoint header")


def _float_meta(value: float):
    # JSON has no inf/nan literals.
    if math.isfinite(value):
        return value
    return {"repr": repr(value)}


def _float_unmeta(value) -> float:
    if isinstance(value, dict):
        return float(value["repr"])
    return float(value)


def save_payload(
    path: str | Path,
    params: MiniPPGNParams,
    moments_m: dict[str, np.ndarray],
    moments_v: dict[str, np.ndarray],
    config: dict[str, Any],
    meta: dict[str, Any],
) -> None:
    """Write weights + Adam moments with a config echo and training metadata."""
    tensors: list[tuple[str, np.ndarray]] = []
    for name, arr in params.tensors.items():
        tensors.append((name, arr))
    for name in params.tensors:
        tensors.append((f"adam.m.{name}", moments_m[name]))
    for name in params.tensors:
        tensors.append((f"adam.v.{name}", moments_v[name]))

    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": config,
        "meta": {**meta, "best_loss": _float_meta(meta.get("best_loss", math.inf))},
        "d": params.d,
        "h": params.h,
        "tensors": [
            {"name": name, "shape": list(arr.shape), "dtype": "<f8"}
            for name, arr in tensors
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, default=_json_default).encode("utf-8"))
        fh.write(b"\n")
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_payload(path: str | Path):
    """Read back (params, moments_m, moments_v, config, meta)."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format") != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        loaded: dict[str, np.ndarray] = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise ValueError(f"{path}: truncated tensor {entry['name']}")
            loaded[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()

    param_tensors = {
        e["name"]: loaded[e["name"]]
        for e in header["tensors"]
        if not e["name"].startswith("adam.")
    }
    params = MiniPPGNParams(d=header["d"], h=header["h"], tensors=param_tensors)
    moments_m = {k: loaded[f"adam.m.{k}"] for k in param_tensors}
    moments_v = {k: loaded[f"adam.v.{k}"] for k in param_tensors}
    meta = dict(header["meta"])
    meta["best_loss"] = _float_unmeta(meta["best_loss"])
    return params, moments_m, moments_v, header["config"], meta
