"""Versioned binary model file.

All integers and floats are little-endian::

    magic       4s   b"ECHM"
    version     u16
    N, p        u32, u32
    band_reject u8
    encoding    f64 band_lo, f64 band_hi, u32 n_neurons, f64 threshold,
                f64 silence_floor, u32 fft_length (0 = adaptive), u32 fft_cap
    dynamics    u32 max_iterations, f64 tie_tol, u8 has_bias, [N x f64 bias]
    labels      p x (u16 byte length, utf-8 bytes)
    band edges  (N + 1) x f64
    patterns    p x N x i8
    weights     N x N x f64, row-major
    crc32       u32 over every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import (
    ModelChecksumError,
    ModelFormatError,
    ModelTruncatedError,
    ModelVersionError,
    TrainingError,
)
from .hopfield import DynamicsConfig
from .pipeline import FORMAT_VERSION, TrainedModel
from .spectrum import EncodingConfig, FrequencyBandMap

MAGIC = b"ECHM"
_HEAD = struct.Struct("<4sHII")
_ENC = struct.Struct("<ddIddII")
_DYN = struct.Struct("<IdB")


def save_model(model: TrainedModel) -> bytes:
    n, p = model.n_neurons, model.n_patterns
    enc = model.encoding
    dyn = model.dynamics
    parts = [
        _HEAD.pack(MAGIC, FORMAT_VERSION, n, p),
        struct.pack("<B", int(model.band_reject)),
        _ENC.pack(enc.band_lo, enc.band_hi, enc.n_neurons, enc.activation_threshold,
                  enc.silence_power_floor, enc.fft_length or 0, enc.fft_cap),
        _DYN.pack(dyn.max_iterations, dyn.tie_tol, dyn.bias is not None),
    ]
    if dyn.bias is not None:
        parts.append(dyn.bias.astype("<f8").tobytes())
    for label in model.class_labels:
        raw = label.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
    parts.append(model.band_map.edges.astype("<f8").tobytes())
    parts.append(model.stored_patterns.astype(np.int8).tobytes())
    parts.append(model.weights.astype("<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelTruncatedError(
                f"model file truncated while reading {what} "
                f"(need {self.pos + n} bytes, have {len(self.data)})"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, st: struct.Struct, what: str):
        return st.unpack(self.take(st.size, what))


def load_model(data: bytes) -> TrainedModel:
    r = _Reader(bytes(data))
    if len(data) >= 4 and data[:4] != MAGIC:
        raise ModelFormatError("not an echomem model file (bad magic)")
    magic, version, n, p = r.unpack(_HEAD, "header")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"model format version {version}, expected {FORMAT_VERSION}")
    (band_reject,) = struct.unpack("<B", r.take(1, "flags"))
    band_lo, band_hi, n_neurons, thr, floor, nfft, cap = r.unpack(_ENC, "encoding config")
    max_it, tie_tol, has_bias = r.unpack(_DYN, "dynamics config")
    bias = np.frombuffer(r.take(8 * n, "bias"), "<f8") if has_bias else None
    labels = []
    for _ in range(p):
        (length,) = struct.unpack("<H", r.take(2, "label length"))
        labels.append(r.take(length, "label").decode("utf-8"))
    edges = np.frombuffer(r.take(8 * (n + 1), "band edges"), "<f8")
    patterns = np.frombuffer(r.take(p * n, "patterns"), np.int8).reshape(p, n)
    weights = np.frombuffer(r.take(8 * n * n, "weights"), "<f8").reshape(n, n)
    body_end = r.pos
    (crc,) = struct.unpack("<I", r.take(4, "checksum"))
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} unexpected trailing bytes")
    if zlib.crc32(data[:body_end]) != crc:
        raise ModelChecksumError("model checksum mismatch")
    try:
        enc = EncodingConfig(band_lo, band_hi, n_neurons, thr, floor, nfft or None, cap)
        dyn = DynamicsConfig(max_it, bias, tie_tol)
        return TrainedModel(weights, patterns, tuple(labels), FrequencyBandMap(edges),
                            enc, dyn, bool(band_reject), version)
    except (ValueError, TrainingError) as exc:
        raise ModelFormatError(f"inconsistent model contents: {exc}") from exc


def write_model_file(model: TrainedModel, path) -> None:
    Path(path).write_bytes(save_model(model))


def read_model_file(path) -> TrainedModel:
    return load_model(Path(path).read_bytes())
