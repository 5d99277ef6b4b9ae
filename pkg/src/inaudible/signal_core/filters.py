"""Butterworth design (bilinear transform, second-order sections) and rate changes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .types import DomainError, FilterCascade, FilterSpec, Waveform

_SCIPY_KIND = {
    "low_pass": "lowpass",
    "high_pass": "highpass",
    "band_stop": "bandstop",
    "band_pass": "bandpass",
}


def design_filter(spec: FilterSpec, sample_rate_hz: float) -> FilterCascade:
    nyq = sample_rate_hz / 2
    for c in spec.cutoffs_hz:
        if not 0 < c < nyq:
            raise DomainError(f"cutoff {c:g} Hz not inside (0, Nyquist={nyq:g} Hz)")
    wn = spec.cutoffs_hz[0] if len(spec.cutoffs_hz) == 1 else list(spec.cutoffs_hz)
    sos = signal.butter(
        spec.order, wn, btype=_SCIPY_KIND[spec.kind], fs=sample_rate_hz, output="sos"
    )
    # group delay is frequency dependent; record it at a representative passband point
    probe = 0.1 * spec.cutoffs_hz[0] if spec.kind in ("low_pass", "band_stop") else None
    meta = {}
    if probe:
        b, a = signal.sos2tf(sos)
        _, gd = signal.group_delay((b, a), w=[probe], fs=sample_rate_hz)
        meta["group_delay_samples"] = {float(probe): float(gd[0])}
    return FilterCascade(sos, spec, float(sample_rate_hz), meta)


def apply_filter(w: Waveform, cascade: FilterCascade, zero_phase: bool = False) -> Waveform:
    """Run ``w`` through ``cascade``.

    The forward pass is causal and carries the design's group delay. With
    ``zero_phase`` the cascade runs forwards and backwards, squaring the
    magnitude response and cancelling the phase.
    """
    if cascade.sample_rate_hz != w.sample_rate_hz:
        raise DomainError(
            f"filter designed for {cascade.sample_rate_hz:g} Hz applied at {w.sample_rate_hz:g} Hz"
        )
    if len(w) == 0:
        return w
    if zero_phase:
        padlen = min(len(w) - 1, 3 * (2 * len(cascade.sos) + 1))
        y = signal.sosfiltfilt(cascade.sos, w.samples, padlen=padlen)
    else:
        y = signal.sosfilt(cascade.sos, w.samples)
    return w.with_samples(y)


def filter_waveform(w: Waveform, spec: FilterSpec, zero_phase: bool = False) -> Waveform:
    return apply_filter(w, design_filter(spec, w.sample_rate_hz), zero_phase)


@dataclass(frozen=True)
class FilterPreset:
    """A shipped filter and the tone probes its response is checked against."""

    name: str
    spec: FilterSpec
    sample_rate_hz: float
    stop_probes_hz: tuple[float, ...]
    pass_probes_hz: tuple[float, ...]
    min_stop_db: float = 40.0
    max_pass_db: float = 1.0
    zero_phase: bool = False


FILTER_PRESETS = {
    p.name: p
    for p in (
        FilterPreset(
            "guard_stop",
            FilterSpec("band_stop", (16000.0, 22000.0), 8),
            48000.0,
            stop_probes_hz=(18000.0, 19000.0, 20000.0, 21000.0),
            pass_probes_hz=(100.0, 1000.0, 4000.0, 10000.0, 14000.0, 23500.0),
        ),
        FilterPreset(
            "adc_antialias",
            FilterSpec("low_pass", (7000.0,), 8),
            48000.0,
            stop_probes_hz=(12000.0, 16000.0, 18000.0, 22000.0),
            pass_probes_hz=(100.0, 1000.0, 3000.0, 5000.0),
        ),
        FilterPreset(
            "defense_lowpass",
            FilterSpec("low_pass", (11000.0,), 8),
            96000.0,
            stop_probes_hz=(16000.0, 18000.0, 22000.0, 25000.0, 31000.0),
            pass_probes_hz=(100.0, 1000.0, 3000.0, 6000.0),
            zero_phase=True,
        ),
    )
}


# ---------------------------------------------------------------------------
# sample-rate conversion
# ---------------------------------------------------------------------------


def _ratio(new_rate_hz: float, old_rate_hz: float) -> Fraction:
    return Fraction(new_rate_hz / old_rate_hz).limit_denominator(10000)


def resample(w: Waveform, new_rate_hz: float) -> Waveform:
    """Rational resampling: upsample, windowed-sinc (Kaiser) low-pass, downsample."""
    if not new_rate_hz > 0:
        raise DomainError(f"new rate must be positive, got {new_rate_hz}")
    if new_rate_hz == w.sample_rate_hz:
        return w
    r = _ratio(new_rate_hz, w.sample_rate_hz)
    y = signal.resample_poly(w.samples, r.numerator, r.denominator, window=("kaiser", 8.0))
    return Waveform(y, new_rate_hz)


def _check_down(w: Waveform, new_rate_hz: float) -> None:
    if not 0 < new_rate_hz < w.sample_rate_hz:
        raise DomainError(
            f"decimation needs 0 < new rate < {w.sample_rate_hz:g} Hz, got {new_rate_hz:g}"
        )


def decimate_with_aa(
    w: Waveform, new_rate_hz: float, aa_cutoff_hz: float = 7000.0, aa_order: int = 8
) -> Waveform:
    """Butterworth anti-alias low-pass at the source rate, then rational resampling."""
    _check_down(w, new_rate_hz)
    if aa_cutoff_hz >= new_rate_hz / 2:
        raise DomainError(
            f"anti-alias corner {aa_cutoff_hz:g} Hz not below new Nyquist {new_rate_hz / 2:g} Hz"
        )
    lp = filter_waveform(w, FilterSpec("low_pass", (aa_cutoff_hz,), aa_order))
    return resample(lp, new_rate_hz)


def decimate_no_aa(w: Waveform, new_rate_hz: float) -> Waveform:
    """Nearest-sample pick with no filtering; content above the new Nyquist folds."""
    _check_down(w, new_rate_hz)
    n_out = int(np.floor(len(w) * new_rate_hz / w.sample_rate_hz))
    idx = np.rint(np.arange(n_out) * (w.sample_rate_hz / new_rate_hz)).astype(np.int64)
    idx = np.minimum(idx, len(w) - 1)
    return Waveform(w.samples[idx], new_rate_hz)


def alias_frequency(freq_hz: float, rate_hz: float) -> float:
    """|f - k*rate| for the integer k that minimizes it."""
    k = round(freq_hz / rate_hz)
    return abs(freq_hz - k * rate_hz)
