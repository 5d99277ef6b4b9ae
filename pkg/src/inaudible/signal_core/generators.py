"""Test-signal generators and simple waveform arithmetic."""

from __future__ import annotations

import numpy as np

from .types import DomainError, Waveform


def _check_freq(freq_hz: float, sample_rate_hz: float, what: str = "frequency") -> None:
    if not 0 < freq_hz < sample_rate_hz / 2:
        raise DomainError(
            f"{what} {freq_hz} Hz must lie in (0, Nyquist={sample_rate_hz / 2:g} Hz)"
        )


def _num_samples(duration_s: float, sample_rate_hz: float) -> int:
    if not duration_s > 0:
        raise DomainError(f"duration must be positive, got {duration_s}")
    if not sample_rate_hz > 0:
        raise DomainError(f"sample rate must be positive, got {sample_rate_hz}")
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise DomainError("duration shorter than one sample")
    return n


def _check_amplitude(amplitude: float) -> None:
    # zero is allowed: a silent tone is a useful degenerate case
    if not 0 <= amplitude <= 1:
        raise DomainError(f"amplitude must be in [0, 1], got {amplitude}")


def generate_tone(
    freq_hz: float, duration_s: float, amplitude: float = 0.8, sample_rate_hz: float = 48000.0
) -> Waveform:
    _check_freq(freq_hz, sample_rate_hz)
    _check_amplitude(amplitude)
    n = np.arange(_num_samples(duration_s, sample_rate_hz))
    return Waveform(amplitude * np.sin(2 * np.pi * freq_hz * n / sample_rate_hz), sample_rate_hz)


def generate_sweep(
    f_start_hz: float,
    f_end_hz: float,
    duration_s: float,
    amplitude: float = 0.8,
    sample_rate_hz: float = 48000.0,
) -> Waveform:
    """Linear chirp from ``f_start_hz`` to ``f_end_hz`` over ``duration_s``."""
    _check_freq(f_start_hz, sample_rate_hz, "start frequency")
    _check_freq(f_end_hz, sample_rate_hz, "end frequency")
    _check_amplitude(amplitude)
    n = np.arange(_num_samples(duration_s, sample_rate_hz))
    t = n / sample_rate_hz
    # written so that f_start == f_end reproduces generate_tone bit for bit
    phase = 2 * np.pi * f_start_hz * n / sample_rate_hz
    phase = phase + 2 * np.pi * (f_end_hz - f_start_hz) * t**2 / (2 * duration_s)
    return Waveform(amplitude * np.sin(phase), sample_rate_hz)


def silence(duration_s: float, sample_rate_hz: float = 48000.0) -> Waveform:
    return Waveform(np.zeros(_num_samples(duration_s, sample_rate_hz)), sample_rate_hz)


def mix(a: Waveform, b: Waveform) -> Waveform:
    """Sample-wise sum; the shorter operand is zero-padded."""
    if a.sample_rate_hz != b.sample_rate_hz:
        raise DomainError(
            f"cannot mix {a.sample_rate_hz:g} Hz and {b.sample_rate_hz:g} Hz waveforms"
        )
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a.samples
    out[: len(b)] += b.samples
    return Waveform(out, a.sample_rate_hz)


def scale(w: Waveform, gain: float) -> Waveform:
    return w.with_samples(w.samples * gain)


def normalize_peak(w: Waveform, target_peak: float = 1.0) -> Waveform:
    peak = w.peak()
    if peak == 0:
        return w
    return w.with_samples(w.samples * (target_peak / peak))


def add_awgn(w: Waveform, snr_db: float, seed: int | None = 0) -> Waveform:
    """Add white Gaussian noise at ``snr_db`` below the measured signal power.

    The noise draw is rescaled to its exact target power, so the realized SNR
    matches the request up to floating-point error.
    """
    if len(w) == 0:
        raise DomainError("cannot add noise to an empty waveform")
    rng = np.random.default_rng(seed)
    p_sig = float(np.mean(w.samples**2))
    noise = rng.standard_normal(len(w))
    if p_sig == 0:
        return w.with_samples(w.samples.copy())
    noise *= np.sqrt(p_sig / 10 ** (snr_db / 10) / np.mean(noise**2))
    return w.with_samples(w.samples + noise)
