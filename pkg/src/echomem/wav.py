"""Minimal RIFF/WAVE reader and writer.

Supports integer PCM at 8/16/24/32 bits and IEEE float at 32/64 bits,
including WAVE_FORMAT_EXTENSIBLE wrappers of either. Multichannel input is
averaged down to mono.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import EmptyWavError, MalformedWavError, UnsupportedCodecError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

# trailing 14 bytes shared by the KSDATAFORMAT_SUBTYPE_* GUIDs
_GUID_TAIL = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError("samples must be 1-d")
        if s.size < 2:
            raise ValueError("a waveform needs at least 2 samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def _decode_frames(raw: bytes, fmt: int, bits: int, channels: int) -> np.ndarray:
    width = bits // 8
    frame = width * channels
    n_frames = len(raw) // frame
    raw = raw[: n_frames * frame]
    if fmt == WAVE_FORMAT_PCM:
        if bits == 8:
            data = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
        elif bits == 16:
            data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
        elif bits == 24:
            b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
            v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            v = np.where(v & 0x800000, v - (1 << 24), v)
            data = v.astype(np.float64) / float(1 << 23)
        elif bits == 32:
            data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / float(1 << 31)
        else:
            raise UnsupportedCodecError(f"unsupported PCM bit depth {bits}")
    elif fmt == WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            data = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        elif bits == 64:
            data = np.frombuffer(raw, dtype="<f8").copy()
        else:
            raise UnsupportedCodecError(f"unsupported float bit depth {bits}")
        data = np.clip(np.nan_to_num(data), -1.0, 1.0)
    else:
        raise UnsupportedCodecError(f"unsupported WAVE format tag 0x{fmt:04x}")
    return data.reshape(n_frames, channels).mean(axis=1)


def read_wav(data: bytes, source_id: str = "") -> Waveform:
    """Decode a WAV byte string into a mono :class:`Waveform`."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError("not a RIFF/WAVE stream")
    pos = 12
    fmt_info = None
    raw = None
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWavError("fmt chunk too short")
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", body)
            if tag == WAVE_FORMAT_EXTENSIBLE:
                if len(body) < 40:
                    raise MalformedWavError("extensible fmt chunk too short")
                guid = body[24:40]
                if guid[2:] != _GUID_TAIL:
                    raise UnsupportedCodecError("unknown extensible subformat")
                tag = struct.unpack_from("<H", guid)[0]
            fmt_info = (tag, channels, rate, block_align, bits)
        elif cid == b"data":
            # oversized data chunks are common in field recorders: take what exists
            raw = body
            if fmt_info is not None:
                break
        pos += 8 + size + (size & 1)
    if fmt_info is None:
        raise MalformedWavError("missing fmt chunk")
    if raw is None:
        raise MalformedWavError("missing data chunk")
    tag, channels, rate, block_align, bits = fmt_info
    if tag not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedCodecError(f"unsupported WAVE format tag 0x{tag:04x}")
    if channels < 1 or rate < 1 or bits < 1 or bits % 8:
        raise MalformedWavError(
            f"bad fmt fields: channels={channels} rate={rate} bits={bits}"
        )
    samples = _decode_frames(raw, tag, bits, channels)
    if samples.size == 0:
        raise EmptyWavError(f"{source_id or 'input'}: no audio frames")
    if samples.size < 2:
        raise EmptyWavError(f"{source_id or 'input'}: only one audio frame")
    return Waveform(samples, rate, source_id)


def load_wav(path: Union[str, Path], source_id: str | None = None) -> Waveform:
    path = Path(path)
    return read_wav(path.read_bytes(), source_id if source_id is not None else path.name)


def write_wav(samples, sample_rate: int, bits: int = 16, float_format: bool = False) -> bytes:
    """Encode ``samples`` (mono, or frames x channels) as a WAV byte string.

    Integer output rounds to the nearest code and saturates at full scale.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    channels = x.shape[1]
    if float_format:
        if bits not in (32, 64):
            raise ValueError("float output must be 32 or 64 bit")
        payload = x.astype("<f4" if bits == 32 else "<f8").tobytes()
        tag = WAVE_FORMAT_IEEE_FLOAT
    else:
        tag = WAVE_FORMAT_PCM
        if bits == 8:
            payload = np.clip(np.round(x * 128.0 + 128.0), 0, 255).astype(np.uint8).tobytes()
        elif bits in (16, 24, 32):
            scale = float(1 << (bits - 1))
            v = np.clip(np.round(x * scale), -scale, scale - 1).astype(np.int64)
            if bits == 16:
                payload = v.astype("<i2").tobytes()
            elif bits == 32:
                payload = v.astype("<i4").tobytes()
            else:
                u = (v & 0xFFFFFF).astype("<u4")
                payload = u.view(np.uint8).reshape(-1, 4)[:, :3].tobytes()
        else:
            raise ValueError(f"unsupported bit depth {bits}")
    block_align = channels * bits // 8
    buf = io.BytesIO()
    buf.write(b"RIFF")
    buf.write(struct.pack("<I", 4 + 8 + 16 + 8 + len(payload) + (len(payload) & 1)))
    buf.write(b"WAVE")
    buf.write(b"fmt ")
    buf.write(struct.pack("<IHHIIHH", 16, tag, channels, int(sample_rate),
                          int(sample_rate) * block_align, block_align, bits))
    buf.write(b"data")
    buf.write(struct.pack("<I", len(payload)))
    buf.write(payload)
    if len(payload) & 1:
        buf.write(b"\x00")
    return buf.getvalue()
