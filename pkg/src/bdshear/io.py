"""File formats: GRD1 grids, 16-bit PGM export, and JSON with full float precision."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import GridMismatch

GRD1_HEADER_BYTES = 64


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = f"{x:.17g}"
    if all(ch not in text for ch in ".eEn"):
        text += ".0"
    return text


def dumps_json(obj, indent: int | None = 2) -> str:
    """``json.dumps`` with every float written using 17 significant digits."""

    def convert(o):
        if isinstance(o, (bool, np.bool_)):
            return bool(o)
        if isinstance(o, (float, np.floating)):
            return _Raw(_format_float(float(o)))
        if isinstance(o, (int, np.integer)):
            return int(o)
        if isinstance(o, dict):
            return {str(k): convert(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [convert(v) for v in o]
        if isinstance(o, np.ndarray):
            return [convert(v) for v in o.tolist()]
        return o

    placeholders: list[str] = []

    class _Encoder(json.JSONEncoder):
        def default(self, o):
            if isinstance(o, _Raw):
                placeholders.append(o.text)
                return f"@@RAW{len(placeholders) - 1}@@"
            return super().default(o)

    text = json.dumps(convert(obj), indent=indent, cls=_Encoder)
    for i, raw in enumerate(placeholders):
        text = text.replace(f'"@@RAW{i}@@"', raw, 1)
    return text


class _Raw:
    __slots__ = ("text",)

    def __init__(self, text: str):
        self.text = text


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_grd1(path, samples: np.ndarray) -> None:
    """Write a GRD1 file: 64-byte space-padded JSON header, then little-endian f64 values."""
    arr = np.ascontiguousarray(samples, dtype="<f8")
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        header = {"magic": "GRD1", "n": int(arr.shape[0]), "dtype": "f64le"}
    else:
        header = {"magic": "GRD1", "n": int(arr.shape[0]), "dtype": "f64le", "shape": list(arr.shape)}
    text = json.dumps(header, separators=(",", ":"))
    if len(text) > GRD1_HEADER_BYTES:
        raise ValueError("GRD1 header does not fit in 64 bytes")
    with open(path, "wb") as fh:
        fh.write(text.ljust(GRD1_HEADER_BYTES).encode("ascii"))
        fh.write(arr.tobytes())


def read_grd1(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    try:
        header = json.loads(raw[:GRD1_HEADER_BYTES].decode("ascii").strip())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GridMismatch(f"{path}: not a GRD1 file") from exc
    if header.get("magic") != "GRD1" or header.get("dtype") != "f64le":
        raise GridMismatch(f"{path}: not a GRD1 file")
    shape = tuple(header.get("shape", (header["n"], header["n"])))
    body = np.frombuffer(raw[GRD1_HEADER_BYTES:], dtype="<f8")
    if body.size != int(np.prod(shape)):
        raise GridMismatch(f"{path}: expected {np.prod(shape)} values, found {body.size}")
    return body.reshape(shape).astype(float)


def write_pgm16(path, samples: np.ndarray) -> None:
    """Binary 16-bit PGM with a linear rescale of min..max to 0..65535."""
    a = np.asarray(samples, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros(a.shape) if hi == lo else (a - lo) / (hi - lo) * 65535.0
    pix = np.round(scaled).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())
