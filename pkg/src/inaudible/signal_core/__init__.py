"""Signal types, spectral analysis, filtering, resampling and file I/O."""

from .filters import (
    FILTER_PRESETS,
    FilterPreset,
    alias_frequency,
    apply_filter,
    decimate_no_aa,
    decimate_with_aa,
    design_filter,
    filter_waveform,
    resample,
)
from .generators import (
    add_awgn,
    generate_sweep,
    generate_tone,
    mix,
    normalize_peak,
    scale,
    silence,
)
from .io import (
    MalformedWavError,
    MultichannelWavError,
    UnsupportedCodecError,
    WavError,
    read_pgm,
    spectrogram_image,
    spectrogram_to_image,
    wav_read,
    wav_write,
)
from .spectral import (
    DEFAULT_DB_FLOOR,
    DEFAULT_FRAME,
    DEFAULT_HOP,
    band_energy,
    band_energy_ratio,
    fft_magnitude,
    next_pow2,
    stft_frames,
    stft_spectrogram,
)
from .types import (
    AUDIBLE,
    GUARD,
    Band,
    DomainError,
    FilterCascade,
    FilterSpec,
    Spectrogram,
    Spectrum,
    Waveform,
)

__all__ = [name for name in dir() if not name.startswith("_")]
