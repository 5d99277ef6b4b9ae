"""Inaudible attack-signal synthesis.

Every builder returns an :class:`AttackSignal` whose ``emitted`` waveform is
what a loudspeaker would play. Command-carrying modes (AM on an ultrasonic
carrier, single-sideband shift into the 16-22 kHz band) start from a
:class:`CommandBaseband`; the dual-tone and probe modes are pure tones.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy.signal import hilbert

from .signal_core import (
    AUDIBLE,
    GUARD,
    Band,
    DomainError,
    FilterSpec,
    Waveform,
    band_energy_ratio,
    filter_waveform,
    generate_sweep,
    generate_tone,
    normalize_peak,
    resample,
    wav_read,
)

COMMAND_BAND = Band(80.0, 6000.0)
COMMAND_PEAK = 0.9
FUNDAMENTAL_RANGE = (80.0, 400.0)
INAUDIBLE_MAX_RATIO = 0.01
# raised-cosine fade on command/tone emissions; an abrupt ultrasonic onset is an audible click
EMISSION_FADE_S = 0.01
BASE_RATE = 48000.0
HIGH_RATE = 96000.0
# above this, a 48 kHz working rate leaves too little room for sidebands
HIGH_RATE_THRESHOLD_HZ = 18000.0


class InaudibilityError(DomainError):
    """An attack would put more than 1% of its energy below 16 kHz."""


# ---------------------------------------------------------------------------
# command baseband
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    fundamental_hz: float
    harmonic_count: int
    duration_s: float
    attack_s: float = 0.02
    release_s: float = 0.04


@dataclass(frozen=True)
class SyntheticCommandSpec:
    """A deterministic voice-like stand-in: harmonic syllables separated by gaps."""

    segments: tuple[Segment, ...]
    gap_s: float = 0.06
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise DomainError("a synthetic command needs at least one segment")
        lo, hi = FUNDAMENTAL_RANGE
        for seg in self.segments:
            if not lo <= seg.fundamental_hz <= hi:
                raise DomainError(
                    f"fundamental {seg.fundamental_hz:g} Hz outside [{lo:g}, {hi:g}] Hz"
                )
            if seg.harmonic_count < 1 or seg.duration_s <= 0:
                raise DomainError(f"invalid segment {seg}")
        if self.gap_s < 0:
            raise DomainError("gap must be non-negative")

    def with_seed(self, seed: int) -> "SyntheticCommandSpec":
        return SyntheticCommandSpec(self.segments, self.gap_s, seed)

    def to_dict(self) -> dict:
        return {"segments": [asdict(s) for s in self.segments], "gap_s": self.gap_s, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticCommandSpec":
        return cls(tuple(Segment(**s) for s in d["segments"]), d.get("gap_s", 0.06), d.get("seed", 0))


# four "syllables", roughly the cadence of a short wake phrase plus command
DEFAULT_COMMAND = SyntheticCommandSpec(
    (
        Segment(140.0, 30, 0.22),
        Segment(180.0, 24, 0.16),
        Segment(120.0, 36, 0.30),
        Segment(165.0, 26, 0.24),
    )
)


@dataclass(frozen=True)
class CommandBaseband:
    source: str
    waveform: Waveform
    label: str = ""


def _band_limit(w: Waveform) -> Waveform:
    """Zero-phase band-limit to the command band and peak-normalize."""
    w = filter_waveform(w, FilterSpec("high_pass", (60.0,), 4), zero_phase=True)
    if w.nyquist_hz > COMMAND_BAND.high_hz * 1.05:
        w = filter_waveform(w, FilterSpec("low_pass", (COMMAND_BAND.high_hz,), 8), zero_phase=True)
    return normalize_peak(w, COMMAND_PEAK)


def _envelope(n: int, rate: float, attack_s: float, release_s: float) -> np.ndarray:
    env = np.ones(n)
    a = min(n, int(round(attack_s * rate)))
    r = min(n - a, int(round(release_s * rate)))
    if a:
        env[:a] = 0.5 - 0.5 * np.cos(np.pi * np.arange(a) / a)
    if r:
        env[n - r :] = 0.5 + 0.5 * np.cos(np.pi * np.arange(1, r + 1) / r)
    return env


def synth_command(
    spec: SyntheticCommandSpec = DEFAULT_COMMAND, sample_rate_hz: float = BASE_RATE, label: str = ""
) -> CommandBaseband:
    """Render ``spec`` to a band-limited baseband peaking at 0.9.

    Harmonic amplitudes fall as 1/h with a seeded +-30% jitter; phases are
    seeded too. Harmonics above 6 kHz are dropped.
    """
    rng = np.random.default_rng(spec.seed)
    gap = np.zeros(int(round(spec.gap_s * sample_rate_hz)))
    pieces = []
    for i, seg in enumerate(spec.segments):
        n = int(round(seg.duration_s * sample_rate_hz))
        t = np.arange(n) / sample_rate_hz
        count = min(seg.harmonic_count, int(COMMAND_BAND.high_hz // seg.fundamental_hz))
        h = np.arange(1, count + 1)
        amps = rng.uniform(0.7, 1.3, count) / h
        phases = rng.uniform(0, 2 * np.pi, count)
        tone = np.sin(2 * np.pi * seg.fundamental_hz * np.outer(t, h) + phases) @ amps
        pieces.append(tone * _envelope(n, sample_rate_hz, seg.attack_s, seg.release_s))
        if i < len(spec.segments) - 1:
            pieces.append(gap)
    raw = Waveform(np.concatenate(pieces), sample_rate_hz)
    return CommandBaseband("synthetic", _band_limit(raw), label)


def load_command(path, label: str = "") -> CommandBaseband:
    """Load a recorded command from a mono WAV and band-limit it."""
    w = wav_read(path)
    if w.peak() == 0:
        raise DomainError(f"{path}: command recording is silent")
    return CommandBaseband(f"wav:{Path(path)}", _band_limit(w), label)


def command_from_waveform(w: Waveform, label: str = "") -> CommandBaseband:
    """Wrap an arbitrary waveform as a command baseband without reshaping it."""
    return CommandBaseband("waveform", w, label)


def occupied_band(w: Waveform, rel_db: float = -60.0, min_hz: float = 20.0) -> tuple[float, float]:
    """Lowest and highest frequency within ``rel_db`` of the spectral peak."""
    win = np.hanning(len(w))
    mag = np.abs(np.fft.rfft(w.samples * win))
    freqs = np.fft.rfftfreq(len(w), 1.0 / w.sample_rate_hz)
    keep = freqs >= min_hz
    mag, freqs = mag[keep], freqs[keep]
    if mag.size == 0 or mag.max() == 0:
        return (0.0, 0.0)
    idx = np.nonzero(mag >= mag.max() * 10 ** (rel_db / 20))[0]
    return float(freqs[idx[0]]), float(freqs[idx[-1]])


# ---------------------------------------------------------------------------
# attack modes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmCarrier:
    carrier_hz: float = 25000.0
    mod_index: float = 1.0
    kind: str = field(default="am_carrier", init=False)

    def __post_init__(self):
        if self.carrier_hz < 20000:
            raise DomainError(f"AM carrier must be >= 20 kHz, got {self.carrier_hz:g}")
        if not 0 < self.mod_index <= 1:
            raise DomainError(f"mod_index must be in (0, 1], got {self.mod_index}")

    def max_freq_hz(self) -> float:
        return self.carrier_hz + COMMAND_BAND.high_hz


@dataclass(frozen=True)
class DualTone:
    f1_hz: float = 20000.0
    f2_hz: float = 21000.0
    a1: float = 0.45
    a2: float = 0.45
    kind: str = field(default="dual_tone", init=False)

    def __post_init__(self):
        if self.f1_hz == self.f2_hz:
            raise DomainError("dual-tone frequencies must differ")
        for f in (self.f1_hz, self.f2_hz):
            if f < GUARD.low_hz:
                raise DomainError(f"dual-tone component {f:g} Hz is below 16 kHz (audible)")
        if self.a1 <= 0 or self.a2 <= 0:
            raise DomainError("dual-tone amplitudes must be positive")
        if self.a1 + self.a2 > 1:
            raise DomainError(
                f"a1 + a2 = {self.a1 + self.a2:g} > 1 would clip at the source"
            )

    def max_freq_hz(self) -> float:
        return max(self.f1_hz, self.f2_hz)


@dataclass(frozen=True)
class NearUltraShift:
    offset_hz: float = 16000.0
    kind: str = field(default="near_ultra_shift", init=False)

    def __post_init__(self):
        if self.offset_hz <= 0:
            raise DomainError("offset must be positive")

    def max_freq_hz(self) -> float:
        return GUARD.high_hz


@dataclass(frozen=True)
class ProbeTone:
    freq_hz: float = 16000.0
    kind: str = field(default="probe_tone", init=False)

    def max_freq_hz(self) -> float:
        return self.freq_hz


@dataclass(frozen=True)
class ProbeSweep:
    f_start_hz: float = 20000.0
    f_end_hz: float = 16000.0
    kind: str = field(default="probe_sweep", init=False)

    def max_freq_hz(self) -> float:
        return max(self.f_start_hz, self.f_end_hz)


AttackMode = Union[AmCarrier, DualTone, NearUltraShift, ProbeTone, ProbeSweep]
MODE_TYPES = {
    "am_carrier": AmCarrier,
    "dual_tone": DualTone,
    "near_ultra_shift": NearUltraShift,
    "probe_tone": ProbeTone,
    "probe_sweep": ProbeSweep,
}
PROBE_KINDS = ("probe_tone", "probe_sweep")


def mode_to_dict(mode: AttackMode) -> dict:
    return asdict(mode)


def mode_from_dict(d: dict) -> AttackMode:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in MODE_TYPES:
        raise DomainError(f"unknown attack mode {kind!r}; expected one of {sorted(MODE_TYPES)}")
    try:
        return MODE_TYPES[kind](**d)
    except TypeError as exc:
        raise DomainError(f"bad parameters for {kind}: {exc}") from None


def working_rate(mode: AttackMode) -> float:
    return HIGH_RATE if mode.max_freq_hz() > HIGH_RATE_THRESHOLD_HZ else BASE_RATE


@dataclass(frozen=True)
class AttackSignal:
    emitted: Waveform
    mode: AttackMode
    baseband: CommandBaseband | None
    inaudibility_ratio: float

    @property
    def is_probe(self) -> bool:
        return self.mode.kind in PROBE_KINDS


def _fade(w: Waveform, fade_s: float = EMISSION_FADE_S) -> Waveform:
    n = min(len(w) // 2, int(round(fade_s * w.sample_rate_hz)))
    if n == 0:
        return w
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(n) / n)
    y = w.samples.copy()
    y[:n] *= ramp
    y[len(y) - n :] *= ramp[::-1]
    return w.with_samples(y)


def _finish(emitted: Waveform, mode: AttackMode, baseband: CommandBaseband | None) -> AttackSignal:
    if mode.kind not in PROBE_KINDS:
        emitted = _fade(emitted)
    ratio = band_energy_ratio(emitted, AUDIBLE)
    if mode.kind not in PROBE_KINDS and ratio > INAUDIBLE_MAX_RATIO:
        raise InaudibilityError(
            f"{mode.kind}: {100 * ratio:.2f}% of energy below 16 kHz (limit 1%)"
        )
    return AttackSignal(emitted, mode, baseband, ratio)


def _at_rate(baseband: CommandBaseband, rate: float) -> np.ndarray:
    return resample(baseband.waveform, rate).samples


def am_modulate(
    baseband: CommandBaseband,
    carrier_hz: float = 25000.0,
    mod_index: float = 1.0,
    sample_rate_hz: float | None = None,
) -> AttackSignal:
    """Double-sideband AM with carrier: N * (1 + m * x(t)) * cos(2 pi fc t).

    ``x`` is the baseband scaled to unit peak, so ``mod_index`` is the true
    modulation depth. N sets the emitted peak to 0.9.
    """
    mode = AmCarrier(carrier_hz, mod_index)
    rate = sample_rate_hz or working_rate(mode)
    if carrier_hz + COMMAND_BAND.high_hz >= rate / 2:
        raise DomainError(
            f"carrier {carrier_hz:g} Hz + 6 kHz sideband reaches Nyquist ({rate / 2:g} Hz)"
        )
    x = _at_rate(baseband, rate)
    peak = np.max(np.abs(x))
    if peak > 0:
        x = x / peak
    t = np.arange(x.size) / rate
    env = 1.0 + mod_index * x
    y = env * np.cos(2 * np.pi * carrier_hz * t)
    y *= COMMAND_PEAK / np.max(np.abs(env))
    return _finish(Waveform(y, rate), mode, baseband)


def dual_tone(
    f1_hz: float = 20000.0,
    f2_hz: float = 21000.0,
    a1: float = 0.45,
    a2: float = 0.45,
    duration_s: float = 1.0,
    sample_rate_hz: float | None = None,
) -> AttackSignal:
    mode = DualTone(f1_hz, f2_hz, a1, a2)
    rate = sample_rate_hz or working_rate(mode)
    for f in (f1_hz, f2_hz):
        if f >= rate / 2:
            raise DomainError(f"tone {f:g} Hz at or above Nyquist ({rate / 2:g} Hz)")
    n = int(round(duration_s * rate))
    if n < 1:
        raise DomainError("duration must be positive")
    t = np.arange(n) / rate
    y = a1 * np.sin(2 * np.pi * f1_hz * t) + a2 * np.sin(2 * np.pi * f2_hz * t)
    return _finish(Waveform(y, rate), mode, None)


def near_ultra_shift(
    baseband: CommandBaseband, offset_hz: float = 16000.0, sample_rate_hz: float | None = None
) -> AttackSignal:
    """Single-sideband upshift of the command into the 16-22 kHz band.

    The analytic signal of the baseband is rotated by ``offset_hz`` and the
    real part kept, so only the upper sideband survives. The occupied band
    of the actual content, shifted, must sit inside [16, 22] kHz.
    """
    mode = NearUltraShift(offset_hz)
    rate = sample_rate_hz or working_rate(mode)
    if GUARD.high_hz >= rate / 2:
        raise DomainError(f"working rate {rate:g} Hz cannot represent the 16-22 kHz band")
    x = _at_rate(baseband, rate)
    if not np.any(x):
        return _finish(Waveform(np.zeros_like(x), rate), mode, baseband)
    lo, hi = occupied_band(Waveform(x, rate))
    if offset_hz + lo < GUARD.low_hz or offset_hz + hi > GUARD.high_hz:
        raise DomainError(
            f"offset {offset_hz:g} Hz moves content to [{offset_hz + lo:.0f}, {offset_hz + hi:.0f}] Hz,"
            f" outside [16000, 22000] Hz"
        )
    t = np.arange(x.size) / rate
    y = np.real(hilbert(x) * np.exp(2j * np.pi * offset_hz * t))
    y = normalize_peak(Waveform(y, rate), COMMAND_PEAK)
    return _finish(y, mode, baseband)


def probe_tone(
    freq_hz: float = 16000.0, duration_s: float = 1.0, sample_rate_hz: float | None = None,
    amplitude: float = 0.8,
) -> AttackSignal:
    mode = ProbeTone(freq_hz)
    rate = sample_rate_hz or working_rate(mode)
    return _finish(generate_tone(freq_hz, duration_s, amplitude, rate), mode, None)


def probe_sweep(
    f_start_hz: float = 20000.0,
    f_end_hz: float = 16000.0,
    duration_s: float = 2.0,
    sample_rate_hz: float | None = None,
    amplitude: float = 0.8,
) -> AttackSignal:
    mode = ProbeSweep(f_start_hz, f_end_hz)
    rate = sample_rate_hz or working_rate(mode)
    return _finish(generate_sweep(f_start_hz, f_end_hz, duration_s, amplitude, rate), mode, None)


def build_attack(
    mode: AttackMode,
    baseband: CommandBaseband | None = None,
    duration_s: float | None = None,
    sample_rate_hz: float | None = None,
) -> AttackSignal:
    """Dispatch on ``mode``. Tone modes last as long as the baseband (or 1 s)."""
    fs = sample_rate_hz
    if duration_s is None:
        duration_s = baseband.waveform.duration_s if baseband is not None else 1.0
    if mode.kind == "am_carrier":
        if baseband is None:
            raise DomainError("AM needs a command baseband")
        return am_modulate(baseband, mode.carrier_hz, mode.mod_index, fs)
    if mode.kind == "near_ultra_shift":
        if baseband is None:
            raise DomainError("near-ultrasound shift needs a command baseband")
        return near_ultra_shift(baseband, mode.offset_hz, fs)
    if mode.kind == "dual_tone":
        return dual_tone(mode.f1_hz, mode.f2_hz, mode.a1, mode.a2, duration_s, fs)
    if mode.kind == "probe_tone":
        return probe_tone(mode.freq_hz, duration_s, fs)
    if mode.kind == "probe_sweep":
        return probe_sweep(mode.f_start_hz, mode.f_end_hz, duration_s, sample_rate_hz=fs)
    raise DomainError(f"unknown attack mode {mode.kind!r}")
