"""Mono WAV (PCM16 / IEEE float32) and 8-bit PGM spectrogram images."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .types import Spectrogram, Waveform

_PCM = 1
_IEEE_FLOAT = 3
_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    """Base class for WAV files this toolkit refuses to read."""


class MalformedWavError(WavError):
    pass


class MultichannelWavError(WavError):
    pass


class UnsupportedCodecError(WavError):
    pass


@dataclass(frozen=True)
class WriteReport:
    path: Path
    format: str
    clipped: int


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size and cid != b"data":
            raise MalformedWavError(f"chunk {cid!r} truncated")
        yield cid, body
        pos += 8 + size + (size & 1)


def wav_read(path) -> Waveform:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")
    fmt = body = None
    for cid, chunk in _chunks(data):
        if cid == b"fmt ":
            fmt = chunk
        elif cid == b"data":
            body = chunk
    if fmt is None or len(fmt) < 16:
        raise MalformedWavError(f"{path}: missing or short fmt chunk")
    if body is None:
        raise MalformedWavError(f"{path}: missing data chunk")
    tag, channels, rate, _, block_align, bits = struct.unpack("<HHIIHH", fmt[:16])
    if tag == _EXTENSIBLE and len(fmt) >= 26:
        tag = struct.unpack("<H", fmt[24:26])[0]
    if channels != 1:
        raise MultichannelWavError(f"{path}: {channels} channels; only mono is supported")
    if rate == 0:
        raise MalformedWavError(f"{path}: zero sample rate")
    if tag == _PCM and bits == 16:
        raw = np.frombuffer(body[: len(body) // 2 * 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif tag == _IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(body[: len(body) // 4 * 4], dtype="<f4").astype(np.float64)
    else:
        raise UnsupportedCodecError(f"{path}: format tag {tag} with {bits} bits not supported")
    return Waveform(samples, float(rate))


def wav_write(path, w: Waveform, format: Literal["pcm16", "float32"] = "float32") -> WriteReport:
    """Write ``w`` as mono WAV. Samples outside [-1, 1] are clamped and counted."""
    from scipy.io import wavfile

    x = w.samples
    clipped = int(np.count_nonzero(np.abs(x) > 1.0))
    x = np.clip(x, -1.0, 1.0)
    if format == "pcm16":
        data = np.clip(np.rint(x * 32768.0), -32768, 32767).astype("<i2")
    elif format == "float32":
        data = x.astype("<f4")
    else:
        raise ValueError(f"unknown WAV format {format!r}")
    rate = int(round(w.sample_rate_hz))
    path = Path(path)
    wavfile.write(path, rate, data)
    return WriteReport(path, format, clipped)


def spectrogram_image(s: Spectrogram) -> np.ndarray:
    """uint8 image, rows = bins with the highest frequency on top, cols = frames."""
    span = 0.0 - s.db_floor
    gray = (s.magnitudes_db - s.db_floor) / span * 255.0
    gray = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    return np.ascontiguousarray(gray.T[::-1])


def spectrogram_to_image(s: Spectrogram, path) -> Path:
    img = spectrogram_image(s)
    height, width = img.shape
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    head = data[:64].split(maxsplit=4)
    if head[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    width, height, maxval = int(head[1]), int(head[2]), int(head[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported")
    # pixel bytes may themselves look like whitespace, so count from the end
    pixels = np.frombuffer(data[len(data) - width * height :], dtype=np.uint8)
    return pixels.reshape(height, width)
