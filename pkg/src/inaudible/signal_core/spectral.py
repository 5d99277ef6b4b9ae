"""FFT magnitude, STFT spectrograms and band-energy statistics."""

from __future__ import annotations

import numpy as np
from scipy.signal import get_window

from .types import Band, DomainError, Spectrogram, Spectrum, Waveform

DEFAULT_FRAME = 1024
DEFAULT_HOP = 256
DEFAULT_DB_FLOOR = -100.0


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def fft_magnitude(w: Waveform, n: int | None = None) -> Spectrum:
    """One-sided amplitude spectrum of ``w`` zero-padded to ``n`` points.

    Bins are scaled by 2/len(w) (1/len(w) at DC and Nyquist) so a sine of
    amplitude A at a bin centre reads A. ``n`` defaults to the next power of
    two at or above the signal length.
    """
    L = len(w)
    if L == 0:
        raise DomainError("cannot transform an empty waveform")
    if n is None:
        n = next_pow2(L)
    if n < L:
        raise DomainError(f"transform length {n} shorter than signal ({L} samples)")
    X = np.fft.rfft(w.samples, n=n)
    mags = np.abs(X) * (2.0 / L)
    mags[0] *= 0.5
    if n % 2 == 0:
        mags[-1] *= 0.5
    freqs = np.fft.rfftfreq(n, d=1.0 / w.sample_rate_hz)
    return Spectrum(freqs, mags, n, L, w.sample_rate_hz)


def _window(name: str, frame_len: int) -> np.ndarray:
    if name == "rect":
        return np.ones(frame_len)
    # periodic windows tile cleanly at hop = frame/4
    return get_window(name, frame_len, fftbins=True)


def stft_frames(
    w: Waveform, frame_len: int = DEFAULT_FRAME, hop_len: int = DEFAULT_HOP, window: str = "hann"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Complex STFT: (frame start indices, window, spectra of shape frames x bins)."""
    if hop_len < 1:
        raise DomainError(f"hop must be >= 1, got {hop_len}")
    if frame_len < 2:
        raise DomainError(f"frame length must be >= 2, got {frame_len}")
    if frame_len > len(w):
        raise DomainError(f"frame of {frame_len} samples longer than signal ({len(w)})")
    win = _window(window, frame_len)
    n_frames = 1 + (len(w) - frame_len) // hop_len
    starts = np.arange(n_frames) * hop_len
    frames = np.lib.stride_tricks.sliding_window_view(w.samples, frame_len)[::hop_len][:n_frames]
    return starts, win, np.fft.rfft(frames * win, axis=1)


def stft_spectrogram(
    w: Waveform,
    frame_len: int = DEFAULT_FRAME,
    hop_len: int = DEFAULT_HOP,
    window: str = "hann",
    db_floor: float = DEFAULT_DB_FLOOR,
) -> Spectrogram:
    """Magnitude spectrogram in dBFS (a full-scale sine peaks near 0 dB)."""
    starts, win, X = stft_frames(w, frame_len, hop_len, window)
    mag = np.abs(X) * (2.0 / np.sum(win))
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag)
    db = np.maximum(db, db_floor)
    times = (starts + frame_len / 2) / w.sample_rate_hz
    freqs = np.fft.rfftfreq(frame_len, d=1.0 / w.sample_rate_hz)
    return Spectrogram(times, freqs, db, frame_len, hop_len, window, db_floor)


AC_RESOLUTION = 1e-20


def _one_sided_power(w: Waveform) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin energy of the rfft such that the bins sum to sum(x**2)."""
    n = len(w)
    X = np.fft.rfft(w.samples)
    p = np.abs(X) ** 2 / n
    p[1:] *= 2.0
    if n % 2 == 0:
        p[-1] *= 0.5
    return np.fft.rfftfreq(n, d=1.0 / w.sample_rate_hz), p


def band_energy_ratio(w: Waveform, band: Band) -> float:
    """Fraction of the non-DC spectral energy that falls inside ``band``.

    Bins on either edge count as inside. Returns 0 when there is no AC
    energy above floating-point resolution (all-zero or constant input).
    """
    if band.high_hz > w.nyquist_hz + 1e-9:
        raise DomainError(
            f"band top {band.high_hz:g} Hz above Nyquist ({w.nyquist_hz:g} Hz)"
        )
    if len(w) == 0:
        raise DomainError("empty waveform")
    freqs, p = _one_sided_power(w)
    total = float(np.sum(p[1:]))
    # FFT rounding leaves ~1e-30 relative energy in every bin of a constant signal
    if total <= AC_RESOLUTION * float(np.sum(p)):
        return 0.0
    inside = (freqs >= band.low_hz) & (freqs <= band.high_hz)
    inside[0] = False
    return float(min(1.0, np.sum(p[inside]) / total))


def band_energy(w: Waveform, band: Band) -> float:
    """Energy sum(x**2) carried by bins inside ``band`` (DC excluded)."""
    freqs, p = _one_sided_power(w)
    inside = (freqs >= band.low_hz) & (freqs <= band.high_hz)
    inside[0] = False
    return float(np.sum(p[inside]))

