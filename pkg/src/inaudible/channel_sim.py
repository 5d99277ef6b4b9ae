"""Speaker, air path, nonlinear microphone and ADC.

The chain turns an emitted waveform at the synthesis rate into what the
device's ADC hands to the recognizer. The microphone is a memoryless
polynomial ``a1*x + a2*x**2 + a3*x**3``; the square term is what moves
ultrasonic energy into the audible band.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from .attack_synth import AttackSignal
from .signal_core import (
    Band,
    DomainError,
    FilterSpec,
    Spectrogram,
    Waveform,
    add_awgn,
    decimate_no_aa,
    decimate_with_aa,
    design_filter,
    filter_waveform,
    stft_spectrogram,
)


@dataclass(frozen=True)
class SpeakerModel:
    """Flat passband with a fixed dB/octave rolloff on both sides.

    A passband edge at or above the signal's Nyquist means no upper rolloff.
    """

    passband: Band = Band(60.0, 22000.0)
    rolloff_db_per_octave: float = 24.0

    def to_dict(self) -> dict:
        return {"passband": self.passband.to_list(), "rolloff_db_per_octave": self.rolloff_db_per_octave}

    @classmethod
    def from_dict(cls, d: dict) -> "SpeakerModel":
        return cls(Band(*d.get("passband", (60.0, 22000.0))), d.get("rolloff_db_per_octave", 24.0))


@dataclass(frozen=True)
class AirPath:
    distance_m: float = 0.0
    reference_m: float = 0.1
    absorption_db_per_m_at_20k: float = 0.5
    spreading: Literal["inverse_distance", "none"] = "inverse_distance"

    def __post_init__(self):
        if self.distance_m < 0:
            raise DomainError(f"distance must be non-negative, got {self.distance_m}")
        if self.absorption_db_per_m_at_20k < 0:
            raise DomainError("absorption must be non-negative")
        if self.reference_m <= 0:
            raise DomainError("reference distance must be positive")
        if self.spreading not in ("inverse_distance", "none"):
            raise DomainError(f"unknown spreading {self.spreading!r}")

    to_dict = asdict

    @classmethod
    def from_dict(cls, d: dict) -> "AirPath":
        return cls(**d)


@dataclass(frozen=True)
class MicModel:
    a1: float = 1.0
    a2: float = 0.1
    a3: float = 0.0
    dc_block_hz: float = 20.0
    aa_cutoff_hz: float = 7000.0
    aa_order: int = 8
    adc_rate_hz: float = 16000.0
    aa_enabled: bool = True

    def __post_init__(self):
        if not self.a1 > 0:
            raise DomainError(f"a1 must be positive, got {self.a1}")
        if self.aa_enabled and self.aa_cutoff_hz >= self.adc_rate_hz / 2:
            raise DomainError(
                f"anti-alias corner {self.aa_cutoff_hz:g} Hz must be below ADC Nyquist"
                f" {self.adc_rate_hz / 2:g} Hz"
            )

    def linear(self) -> "MicModel":
        """Same microphone with every nonlinear term removed."""
        return MicModel(self.a1, 0.0, 0.0, self.dc_block_hz, self.aa_cutoff_hz,
                        self.aa_order, self.adc_rate_hz, self.aa_enabled)

    def replace(self, **kw) -> "MicModel":
        return MicModel(**{**asdict(self), **kw})

    to_dict = asdict

    @classmethod
    def from_dict(cls, d: dict) -> "MicModel":
        return cls(**d)


@dataclass(frozen=True)
class NoiseSpec:
    """White Gaussian noise.

    ``stage="acoustic"`` adds it to the sound field before the microphone;
    ``stage="capture"`` adds it to the ADC output. In both cases the level is
    ``snr_db`` below the signal power measured at that point.
    """

    snr_db: float
    seed: int = 0
    stage: Literal["acoustic", "capture"] = "capture"

    def __post_init__(self):
        if self.stage not in ("acoustic", "capture"):
            raise DomainError(f"unknown noise stage {self.stage!r}")

    to_dict = asdict

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(**d)


@dataclass(frozen=True)
class ChannelChain:
    speaker: SpeakerModel = field(default_factory=SpeakerModel)
    path: AirPath = field(default_factory=AirPath)
    mic: MicModel = field(default_factory=MicModel)
    noise: NoiseSpec | None = None

    def to_dict(self) -> dict:
        return {
            "speaker": self.speaker.to_dict(),
            "path": self.path.to_dict(),
            "mic": self.mic.to_dict(),
            "noise": self.noise.to_dict() if self.noise else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelChain":
        noise = d.get("noise")
        return cls(
            SpeakerModel.from_dict(d.get("speaker", {})),
            AirPath.from_dict(d.get("path", {})),
            MicModel.from_dict(d.get("mic", {})),
            NoiseSpec.from_dict(noise) if noise else None,
        )


STAGE_NAMES = ("emitted", "broadcast", "received", "captured")


@dataclass(frozen=True)
class Stage:
    name: str
    waveform: Waveform
    spectrogram: Spectrogram


@dataclass(frozen=True)
class StageTrace:
    stages: tuple[Stage, ...]

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, i) -> Stage:
        return self.stages[i]

    def rms_dbfs(self) -> list[float]:
        return [s.waveform.rms_dbfs(floor_db=-200.0) for s in self.stages]


def _spectral_gain(w: Waveform, gain_fn) -> Waveform:
    n = len(w)
    if n == 0:
        return w
    X = np.fft.rfft(w.samples)
    f = np.fft.rfftfreq(n, 1.0 / w.sample_rate_hz)
    return w.with_samples(np.fft.irfft(X * gain_fn(f), n=n))


def speaker_gain_db(freqs_hz, spk: SpeakerModel, nyquist_hz: float | None = None) -> np.ndarray:
    f = np.asarray(freqs_hz, dtype=float)
    lo, hi = spk.passband.low_hz, spk.passband.high_hz
    g = np.zeros_like(f)
    with np.errstate(divide="ignore"):
        below = f < lo
        g[below] = -spk.rolloff_db_per_octave * np.log2(lo / f[below])
        if nyquist_hz is None or hi < nyquist_hz:
            above = f > hi
            g[above] = -spk.rolloff_db_per_octave * np.log2(f[above] / hi)
    return g


def speaker_render(w: Waveform, spk: SpeakerModel = SpeakerModel()) -> Waveform:
    """Shape ``w`` by the speaker's magnitude response (FFT-domain gain mask)."""
    return _spectral_gain(
        w, lambda f: 10 ** (speaker_gain_db(f, spk, w.nyquist_hz) / 20)
    )


def path_gain_db(freqs_hz, path: AirPath) -> np.ndarray:
    """Gain of the air path at ``freqs_hz``.

    Within the reference distance the path is transparent. Beyond it, the
    amplitude falls as reference/distance (if spreading is on) and absorption
    removes absorption * (f / 20 kHz)**2 * distance dB.
    """
    f = np.asarray(freqs_hz, dtype=float)
    if path.distance_m <= path.reference_m:
        return np.zeros_like(f)
    g = -path.absorption_db_per_m_at_20k * (f / 20000.0) ** 2 * path.distance_m
    if path.spreading == "inverse_distance":
        g = g + 20 * np.log10(path.reference_m / path.distance_m)
    return g


def propagate(w: Waveform, path: AirPath = AirPath()) -> Waveform:
    if path.distance_m <= path.reference_m:
        return w
    return _spectral_gain(w, lambda f: 10 ** (path_gain_db(f, path) / 20))


def _dc_block(w: Waveform, mic: MicModel) -> Waveform:
    return filter_waveform(w, FilterSpec("high_pass", (mic.dc_block_hz,), 2))


def transduce(w: Waveform, mic: MicModel = MicModel()) -> Waveform:
    """Polynomial transducer, DC block, anti-alias filter, ADC decimation."""
    if mic.adc_rate_hz >= w.sample_rate_hz:
        raise DomainError(
            f"ADC rate {mic.adc_rate_hz:g} Hz must be below the input rate {w.sample_rate_hz:g} Hz"
        )
    x = w.samples
    y = mic.a1 * x
    if mic.a2:
        y = y + mic.a2 * x**2
    if mic.a3:
        y = y + mic.a3 * x**3
    y = _dc_block(w.with_samples(y), mic)
    if mic.aa_enabled:
        return decimate_with_aa(y, mic.adc_rate_hz, mic.aa_cutoff_hz, mic.aa_order)
    return decimate_no_aa(y, mic.adc_rate_hz)


def transduce_gain(freq_hz: float, mic: MicModel, source_rate_hz: float) -> float:
    """Linear gain the post-nonlinearity filters apply at ``freq_hz``.

    Dividing a measured output amplitude by this recovers the amplitude the
    polynomial itself produced. The resampler's passband ripple is below
    0.01 dB and is ignored.
    """
    g = abs(design_filter(FilterSpec("high_pass", (mic.dc_block_hz,), 2), source_rate_hz).response(freq_hz)[0])
    if mic.aa_enabled:
        aa = design_filter(FilterSpec("low_pass", (mic.aa_cutoff_hz,), mic.aa_order), source_rate_hz)
        g *= abs(aa.response(freq_hz)[0])
    return float(g)


def run_chain(
    attack: AttackSignal | Waveform, chain: ChannelChain = ChannelChain(), trace: bool = True
) -> tuple[Waveform, StageTrace | None]:
    """emitted -> speaker -> air -> (noise) -> microphone/ADC."""
    emitted = attack.emitted if isinstance(attack, AttackSignal) else attack
    broadcast = speaker_render(emitted, chain.speaker)
    received = propagate(broadcast, chain.path)
    noise = chain.noise
    if noise is not None and noise.stage == "acoustic":
        received = add_awgn(received, noise.snr_db, noise.seed)
    captured = transduce(received, chain.mic)
    if noise is not None and noise.stage == "capture":
        captured = add_awgn(captured, noise.snr_db, noise.seed)
    if not trace:
        return captured, None
    stages = tuple(
        Stage(name, w, _trace_spectrogram(w))
        for name, w in zip(STAGE_NAMES, (emitted, broadcast, received, captured))
    )
    return captured, StageTrace(stages)


def _trace_spectrogram(w: Waveform) -> Spectrogram:
    frame = 1024 if len(w) >= 1024 else max(2, 1 << (len(w).bit_length() - 1))
    return stft_spectrogram(w, frame, frame // 4)
