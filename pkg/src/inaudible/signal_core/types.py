"""Value types shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np


class DomainError(ValueError):
    """Raised when an argument is outside the domain an operation accepts."""


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled mono signal. Samples are float64, nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DomainError("Waveform samples must be one-dimensional")
        if not self.sample_rate_hz > 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate_hz}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate_hz / 2.0

    def rms(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    def rms_dbfs(self, floor_db: float = -300.0) -> float:
        """RMS level in dB relative to a full-scale amplitude of 1."""
        r = self.rms()
        return max(20.0 * np.log10(r), floor_db) if r > 0 else floor_db

    def peak(self) -> float:
        return float(np.max(np.abs(self.samples))) if self.samples.size else 0.0

    def with_samples(self, samples: np.ndarray) -> "Waveform":
        return Waveform(samples, self.sample_rate_hz)

    def __eq__(self, other):
        if not isinstance(other, Waveform):
            return NotImplemented
        return self.sample_rate_hz == other.sample_rate_hz and np.array_equal(
            self.samples, other.samples
        )

    __hash__ = None


@dataclass(frozen=True)
class Band:
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not (0 <= self.low_hz < self.high_hz):
            raise DomainError(f"invalid band [{self.low_hz}, {self.high_hz}]")

    def to_list(self) -> list[float]:
        return [float(self.low_hz), float(self.high_hz)]


# Band where adult listeners hear nothing but device microphones still respond.
GUARD = Band(16000.0, 22000.0)
# Everything a listener can hear.
AUDIBLE = Band(0.0, 16000.0)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One-sided amplitude spectrum.

    ``magnitudes`` are scaled so that a sine of amplitude A centred on a bin
    shows a peak of A. ``energy()`` undoes that scaling to give back the
    time-domain energy sum(x**2).
    """

    bin_freqs_hz: np.ndarray
    magnitudes: np.ndarray
    reference_len: int
    signal_len: int
    sample_rate_hz: float

    def energy(self) -> float:
        m2 = self.magnitudes**2
        n = self.reference_len
        total = m2[0]
        if n % 2 == 0:
            total += m2[-1] + 0.5 * np.sum(m2[1:-1])
        else:
            total += 0.5 * np.sum(m2[1:])
        return float(self.signal_len**2 / n * total)

    def peak_freq_hz(self) -> float:
        return float(self.bin_freqs_hz[int(np.argmax(self.magnitudes))])

    def magnitude_at(self, freq_hz: float) -> float:
        k = int(np.argmin(np.abs(self.bin_freqs_hz - freq_hz)))
        return float(self.magnitudes[k])

    @property
    def bin_width_hz(self) -> float:
        return self.sample_rate_hz / self.reference_len


WindowName = Literal["hann", "hamming", "blackman", "rect"]


@dataclass(frozen=True, eq=False)
class Spectrogram:
    frame_times_s: np.ndarray
    band_freqs_hz: np.ndarray
    magnitudes_db: np.ndarray  # shape (frames, bins)
    frame_len: int
    hop_len: int
    window: str
    db_floor: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitudes_db.shape

    def ridge_hz(self) -> np.ndarray:
        """Frequency of the strongest bin in every frame."""
        return self.band_freqs_hz[np.argmax(self.magnitudes_db, axis=1)]


FilterKind = Literal["low_pass", "high_pass", "band_stop", "band_pass"]


@dataclass(frozen=True)
class FilterSpec:
    """Butterworth filter request.

    ``order`` is the prototype order, so a band filter of order 8 realizes
    16 poles (8 second-order sections).
    """

    kind: FilterKind
    cutoffs_hz: tuple[float, ...]
    order: int = 8
    _KINDS = ("low_pass", "high_pass", "band_stop", "band_pass")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise DomainError(f"unknown filter kind {self.kind!r}")
        cutoffs = tuple(float(c) for c in np.atleast_1d(self.cutoffs_hz))
        object.__setattr__(self, "cutoffs_hz", cutoffs)
        want = 2 if self.kind in ("band_stop", "band_pass") else 1
        if len(cutoffs) != want:
            raise DomainError(f"{self.kind} needs {want} cutoff(s), got {len(cutoffs)}")
        if want == 2 and not cutoffs[0] < cutoffs[1]:
            raise DomainError("band cutoffs must be ascending")
        if self.order < 2 or self.order % 2:
            raise DomainError(f"order must be even and >= 2, got {self.order}")


@dataclass(frozen=True, eq=False)
class FilterCascade:
    """A realized filter: second-order sections plus what produced them."""

    sos: np.ndarray
    spec: FilterSpec
    sample_rate_hz: float
    meta: dict = field(default_factory=dict)

    def response(self, freqs_hz) -> np.ndarray:
        from scipy import signal

        _, h = signal.sosfreqz(self.sos, worN=np.atleast_1d(freqs_hz), fs=self.sample_rate_hz)
        return h

    def gain_db(self, freqs_hz) -> np.ndarray:
        return 20.0 * np.log10(np.maximum(np.abs(self.response(freqs_hz)), 1e-300))
