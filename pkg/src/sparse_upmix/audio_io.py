"""Multichannel WAV I/O and first-order ambisonic convention conversion.

Signals are held as ``(channels, samples)`` float64 arrays. Files are
written as interleaved IEEE float32 (format code 3); the reader also
accepts 16/24/32-bit integer PCM and WAVE_FORMAT_EXTENSIBLE headers.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, UnsupportedFormatError, ValidationError, WavParseError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class MultichannelSignal:
    """Equal-length channels plus a sample rate.

    ``data`` has shape ``(channels, samples)`` and is stored read-only.
    """

    data: np.ndarray
    sample_rate: int

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise DimensionError(f"signal data must be 2-D (channels, samples), got ndim={data.ndim}")
        if data.shape[0] < 1:
            raise DimensionError("signal needs at least one channel")
        if int(self.sample_rate) <= 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate}")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data) -> "MultichannelSignal":
        return MultichannelSignal(data, self.sample_rate)


class AmbisonicConvention(enum.Enum):
    """First-order channel conventions.

    ``PAPER_BFORMAT`` orders channels (W, X, Y, Z) with W = pressure / sqrt(2)
    (identical to FuMa at first order). ``AMBIX_SN3D`` orders channels by ACN,
    (W, Y, Z, X), with W = pressure.
    """

    PAPER_BFORMAT = "paper"
    AMBIX_SN3D = "ambix"

    @classmethod
    def parse(cls, name: str) -> "AmbisonicConvention":
        key = name.strip().lower()
        aliases = {"paper": cls.PAPER_BFORMAT, "fuma": cls.PAPER_BFORMAT, "bformat": cls.PAPER_BFORMAT,
                   "ambix": cls.AMBIX_SN3D, "acn": cls.AMBIX_SN3D, "sn3d": cls.AMBIX_SN3D}
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(f"unknown ambisonic convention {name!r}") from None


def convert_convention(signal: MultichannelSignal, src: AmbisonicConvention,
                       dst: AmbisonicConvention) -> MultichannelSignal:
    """Convert a 4-channel first-order signal between conventions."""
    if signal.n_channels != 4:
        raise DimensionError(f"first-order conversion needs 4 channels, got {signal.n_channels}")
    if src == dst:
        return signal
    d = signal.data
    if src is AmbisonicConvention.PAPER_BFORMAT:
        w, x, y, z = d
        out = np.stack([SQRT2 * w, y, z, x])
    else:
        w, y, z, x = d
        out = np.stack([w / SQRT2, x, y, z])
    return signal.with_data(out)


# --------------------------------------------------------------------------- WAV


def _read_chunks(raw: bytes):
    if len(raw) < 12:
        raise WavParseError("file too short for a RIFF header", chunk="RIFF")
    riff, _size, wave = struct.unpack("<4sI4s", raw[:12])
    if riff != b"RIFF":
        raise WavParseError(f"missing RIFF tag (found {riff!r})", chunk="RIFF")
    if wave != b"WAVE":
        raise WavParseError(f"RIFF form type is {wave!r}, expected b'WAVE'", chunk="RIFF")
    pos = 12
    chunks = {}
    while pos + 8 <= len(raw):
        cid, size = struct.unpack("<4sI", raw[pos:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        name = cid.decode("latin-1")
        if len(body) < size:
            raise WavParseError(f"{name!r} chunk declares {size} bytes but only {len(body)} remain",
                                chunk=name.strip())
        chunks.setdefault(name, body)
        pos += 8 + size + (size & 1)
    return chunks


def _decode_samples(body: bytes, fmt_code: int, bits: int, n_channels: int) -> np.ndarray:
    width = bits // 8
    if fmt_code == WAVE_FORMAT_IEEE_FLOAT:
        if bits == 32:
            flat = np.frombuffer(body, dtype="<f4").astype(np.float64)
        elif bits == 64:
            flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
        else:
            raise UnsupportedFormatError(f"IEEE float WAV with {bits} bits per sample")
    elif fmt_code == WAVE_FORMAT_PCM:
        if bits == 16:
            flat = np.frombuffer(body, dtype="<i2").astype(np.float64)
        elif bits == 24:
            b = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
            v = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            flat = np.where(v >= 1 << 23, v - (1 << 24), v).astype(np.float64)
        elif bits == 32:
            flat = np.frombuffer(body, dtype="<i4").astype(np.float64)
        else:
            raise UnsupportedFormatError(f"integer PCM WAV with {bits} bits per sample")
        flat /= float(2 ** (bits - 1))
    else:  # pragma: no cover - guarded by caller
        raise UnsupportedFormatError(f"format code {fmt_code}")
    n_frames = len(body) // (width * n_channels)
    return flat[: n_frames * n_channels].reshape(n_frames, n_channels).T


def read_wav(path) -> MultichannelSignal:
    """Read a RIFF/WAVE file into a :class:`MultichannelSignal`."""
    path = Path(path)
    raw = path.read_bytes()
    chunks = _read_chunks(raw)
    if "fmt " not in chunks:
        raise WavParseError(f"{path}: no fmt chunk", chunk="fmt")
    fmt = chunks["fmt "]
    if len(fmt) < 16:
        raise WavParseError(f"{path}: fmt chunk is {len(fmt)} bytes, need at least 16", chunk="fmt")
    fmt_code, n_channels, rate, _byte_rate, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if fmt_code == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise WavParseError(f"{path}: extensible fmt chunk is {len(fmt)} bytes, need 40", chunk="fmt")
        fmt_code = struct.unpack("<H", fmt[24:26])[0]
    if fmt_code not in (WAVE_FORMAT_PCM, WAVE_FORMAT_IEEE_FLOAT):
        raise UnsupportedFormatError(f"{path}: unsupported WAV format code {fmt_code}")
    if n_channels < 1 or bits % 8 or block_align != n_channels * bits // 8:
        raise WavParseError(f"{path}: inconsistent fmt chunk (channels={n_channels}, bits={bits}, "
                            f"block_align={block_align})", chunk="fmt")
    if "data" not in chunks:
        raise WavParseError(f"{path}: no data chunk", chunk="data")
    body = chunks["data"]
    if len(body) % block_align:
        raise WavParseError(f"{path}: data chunk length {len(body)} is not a multiple of "
                            f"block align {block_align}", chunk="data")
    samples = _decode_samples(body, fmt_code, bits, n_channels)
    return MultichannelSignal(samples, rate)


def write_wav(signal: MultichannelSignal, path) -> None:
    """Write ``signal`` as interleaved float32 (format code 3)."""
    path = Path(path)
    n_channels = signal.n_channels
    if n_channels > 0xFFFF:
        raise DimensionError(f"WAV supports at most 65535 channels, got {n_channels}")
    if not np.all(np.isfinite(signal.data)):
        raise ValidationError("refusing to write non-finite samples (NaN or Inf)")
    if signal.data.size and np.abs(signal.data).max() > np.finfo(np.float32).max:
        raise ValidationError("samples exceed the float32 range")
    payload = np.ascontiguousarray(signal.data.T, dtype="<f4").tobytes()
    block_align = 4 * n_channels
    fmt = struct.pack("<HHIIHH", WAVE_FORMAT_IEEE_FLOAT, n_channels, signal.sample_rate,
                      signal.sample_rate * block_align, block_align, 32)
    header = b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)) + b"WAVE"
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
            fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
    except OSError as exc:
        raise OSError(f"cannot write WAV to {path}: {exc}") from exc
