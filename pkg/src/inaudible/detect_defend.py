"""Software defenses: guard-band filtering, band-energy anomaly detection and a
logistic-regression detector over fixed spectral features.

Everything here looks at the high-rate signal in front of the ADC. A device
that samples at 16 kHz cannot see the 16-22 kHz band at all, so detection on
post-ADC audio is rejected rather than silently returning "clean".
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .signal_core import (
    GUARD,
    Band,
    DomainError,
    FilterSpec,
    Waveform,
    band_energy,
    band_energy_ratio,
    filter_waveform,
    stft_frames,
)

FEATURE_FLOOR_DB = -100.0
FORMAT_VERSION = 1
# guard_ratio of benign speech plus white noise at 10 dB SNR, 96 kHz, stays under this
DEFAULT_FLAG_THRESHOLD = 0.1
# guard-band RMS below this cannot drive a microphone (and is under 16-bit resolution)
MIN_GUARD_DBFS = -100.0
DEFENSE_CUTOFF_HZ = 11000.0
DEFENSE_ORDER = 8


class BlindDetectorError(DomainError):
    """The waveform's Nyquist frequency is below the top of the guard band."""


@dataclass(frozen=True)
class DetectorConfig:
    guard: Band = GUARD
    # count everything from guard.low_hz up to Nyquist, so carriers above 22 kHz also register
    extend_guard_to_nyquist: bool = True
    n_bands: int = 16
    lowest_edge_hz: float = 100.0
    max_freq_hz: float = 48000.0
    flag_threshold: float = DEFAULT_FLAG_THRESHOLD
    frame_len: int = 1024
    hop_len: int = 512
    min_guard_dbfs: float = MIN_GUARD_DBFS

    def __post_init__(self):
        if not 0 <= self.flag_threshold < 1:
            raise DomainError(f"flag threshold must be in [0, 1), got {self.flag_threshold}")
        if self.n_bands < 2:
            raise DomainError("need at least two analysis bands")
        if not 0 < self.lowest_edge_hz < self.max_freq_hz:
            raise DomainError("lowest band edge must lie below max_freq_hz")

    @property
    def band_edges_hz(self) -> np.ndarray:
        """K+1 ascending edges; band i is (edges[i], edges[i+1]]."""
        upper = np.geomspace(self.lowest_edge_hz, self.max_freq_hz, self.n_bands)
        return np.concatenate([[0.0], upper])

    @property
    def analysis_bands(self) -> list[Band]:
        e = self.band_edges_hz
        return [Band(lo, hi) for lo, hi in zip(e[:-1], e[1:])]

    def with_threshold(self, threshold: float) -> "DetectorConfig":
        return DetectorConfig(**{**self.__dict__, "flag_threshold": threshold})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["guard"] = self.guard.to_list()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        d = dict(d)
        if "guard" in d:
            d["guard"] = Band(*d["guard"])
        return cls(**d)


@dataclass(frozen=True)
class FeatureVector:
    band_db: np.ndarray
    flatness: float
    guard_ratio: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.band_db, [self.flatness, self.guard_ratio]])

    def __len__(self) -> int:
        return self.band_db.size + 2


@dataclass
class DetectionReport:
    guard_ratio: float
    flagged_by_guard: bool
    per_band_energies: list[float]
    classifier_score: float | None = None
    flagged_by_classifier: bool | None = None
    guard_level_dbfs: float = 0.0

    @property
    def flagged(self) -> bool:
        return bool(self.flagged_by_guard or self.flagged_by_classifier)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "guard_ratio": self.guard_ratio,
            "flagged_by_guard": self.flagged_by_guard,
            "guard_level_dbfs": self.guard_level_dbfs,
            "classifier_score": self.classifier_score,
            "flagged_by_classifier": self.flagged_by_classifier,
            "per_band_energies": list(self.per_band_energies),
        }


def _check_visible(w: Waveform, cfg: DetectorConfig) -> None:
    if w.nyquist_hz < cfg.guard.high_hz:
        raise BlindDetectorError(
            f"detector blind above Nyquist: {w.sample_rate_hz:g} Hz sampling cannot see"
            f" the {cfg.guard.low_hz:g}-{cfg.guard.high_hz:g} Hz guard band"
        )
    if w.nyquist_hz > cfg.max_freq_hz:
        raise DomainError(
            f"sample rate {w.sample_rate_hz:g} Hz exceeds the band layout (max {cfg.max_freq_hz:g} Hz)"
        )
    if len(w) == 0:
        raise DomainError("empty waveform")


def _guard_band(w: Waveform, cfg: DetectorConfig) -> Band:
    top = w.nyquist_hz if cfg.extend_guard_to_nyquist else cfg.guard.high_hz
    return Band(cfg.guard.low_hz, top)


def guard_ratio(w: Waveform, cfg: DetectorConfig = DetectorConfig()) -> float:
    _check_visible(w, cfg)
    return band_energy_ratio(w, _guard_band(w, cfg))


def guard_level_dbfs(w: Waveform, cfg: DetectorConfig = DetectorConfig()) -> float:
    """RMS of the guard-band content alone, dB re full scale (floored at -300)."""
    _check_visible(w, cfg)
    ms = band_energy(w, _guard_band(w, cfg)) / len(w)
    return float(max(10 * np.log10(ms), -300.0)) if ms > 0 else -300.0


def extract_features(w: Waveform, cfg: DetectorConfig = DetectorConfig()) -> FeatureVector:
    """K band levels (dB re full-scale sine power), spectral flatness and guard ratio.

    Band levels are the STFT power in each band averaged over frames, scaled so
    a full-scale sine inside one band reads about -3 dB (its mean power, 0.5).
    """
    _check_visible(w, cfg)
    frame = min(cfg.frame_len, len(w))
    _, win, X = stft_frames(w, frame, min(cfg.hop_len, frame), "hann")
    p = np.abs(X) ** 2
    p[:, 1:] *= 2.0
    if frame % 2 == 0:
        p[:, -1] *= 0.5
    p /= frame * np.sum(win**2)
    mean_p = p.mean(axis=0)
    freqs = np.fft.rfftfreq(frame, 1.0 / w.sample_rate_hz)

    edges = cfg.band_edges_hz
    band_power = np.array(
        [mean_p[(freqs > lo) & (freqs <= hi)].sum() for lo, hi in zip(edges[:-1], edges[1:])]
    )
    with np.errstate(divide="ignore"):
        band_db = np.maximum(10 * np.log10(band_power), FEATURE_FLOOR_DB)

    spec = mean_p[1:]
    am = spec.mean()
    flatness = float(np.exp(np.mean(np.log(spec + 1e-30))) / am) if am > 0 else 0.0
    return FeatureVector(band_db, min(flatness, 1.0), guard_ratio(w, cfg))


def guard_band_detect(w: Waveform, cfg: DetectorConfig = DetectorConfig()) -> DetectionReport:
    """Flag when the guard ratio exceeds the threshold and the guard band is
    loud enough to matter (``cfg.min_guard_dbfs``)."""
    fv = extract_features(w, cfg)
    level = guard_level_dbfs(w, cfg)
    flagged = fv.guard_ratio > cfg.flag_threshold and level >= cfg.min_guard_dbfs
    return DetectionReport(fv.guard_ratio, bool(flagged), fv.band_db.tolist(), guard_level_dbfs=level)


# ---------------------------------------------------------------------------
# linear classifier
# ---------------------------------------------------------------------------


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z)))


def logistic_loss_and_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray):
    """Mean binary cross-entropy and its gradient. ``params`` = [weights..., bias]."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # log(1 + e^z) - y z, evaluated stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    r = _sigmoid(z) - y
    grad = np.concatenate([X.T @ r / len(y), [r.mean()]])
    return loss, grad


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    band_edges_hz: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise DomainError("classifier weights must be finite")
        if np.any(self.feature_std <= 0):
            raise DomainError("feature standard deviations must be positive")

    @property
    def dim(self) -> int:
        return self.weights.size

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.feature_mean) / self.feature_std

    def score_features(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"feature dimension {x.shape[-1]} != classifier dimension {self.dim}")
        return float(_sigmoid(self.standardize(x) @ self.weights + self.bias))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "band_edges_hz": self.band_edges_hz.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearClassifier":
        if d.get("format_version") != FORMAT_VERSION:
            raise DomainError(f"unsupported classifier format {d.get('format_version')!r}")
        return cls(
            np.asarray(d["weights"], float),
            float(d["bias"]),
            np.asarray(d["feature_mean"], float),
            np.asarray(d["feature_std"], float),
            np.asarray(d["band_edges_hz"], float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "LinearClassifier":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrainingLog:
    losses: list[float] = field(default_factory=list)
    accuracy: float = float("nan")
    epochs: int = 0
    learning_rate: float = 0.0
    seed: int = 0


def _label(v) -> float:
    if v in ("attack", 1, True):
        return 1.0
    if v in ("benign", 0, False):
        return 0.0
    raise DomainError(f"unknown label {v!r}")


def feature_matrix(waveforms, cfg: DetectorConfig) -> np.ndarray:
    return np.array([extract_features(w, cfg).as_array() for w in waveforms])


def train_classifier(
    corpus,
    cfg: DetectorConfig = DetectorConfig(),
    epochs: int = 200,
    learning_rate: float = 0.1,
    seed: int = 0,
) -> tuple[LinearClassifier, TrainingLog]:
    """Full-batch gradient descent on the logistic loss over standardized features.

    ``corpus`` is a sequence of (Waveform, label) with labels "attack"/"benign".
    Weights start at zero. Batch descent has no stochastic step; ``seed`` is
    recorded for provenance only. Constant features get unit scale.
    """
    corpus = list(corpus)
    y = np.array([_label(lbl) for _, lbl in corpus])
    n_pos, n_neg = int(y.sum()), int((1 - y).sum())
    if n_pos == 0 or n_neg == 0:
        raise DomainError("training corpus must contain both attack and benign examples")
    if min(n_pos, n_neg) < 10:
        raise DomainError(f"need >= 10 examples per class, got {n_pos} attack / {n_neg} benign")
    X = feature_matrix([w for w, _ in corpus], cfg)
    return fit_logistic(X, y, cfg.band_edges_hz, epochs, learning_rate, seed)


def fit_logistic(X, y, band_edges_hz, epochs=200, learning_rate=0.1, seed=0):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Xs = (X - mu) / sd
    params = np.zeros(X.shape[1] + 1)
    log = TrainingLog(epochs=epochs, learning_rate=learning_rate, seed=seed)
    for _ in range(epochs):
        loss, grad = logistic_loss_and_grad(params, Xs, y)
        log.losses.append(loss)
        params -= learning_rate * grad
    clf = LinearClassifier(params[:-1].copy(), float(params[-1]), mu, sd, np.asarray(band_edges_hz))
    pred = _sigmoid(Xs @ clf.weights + clf.bias) >= 0.5
    log.accuracy = float(np.mean(pred == (y == 1)))
    return clf, log


def classify(
    w: Waveform, clf: LinearClassifier, cfg: DetectorConfig = DetectorConfig()
) -> DetectionReport:
    if clf.band_edges_hz.size != cfg.band_edges_hz.size or not np.allclose(
        clf.band_edges_hz, cfg.band_edges_hz
    ):
        raise DomainError("classifier was trained with a different band layout")
    report = guard_band_detect(w, cfg)
    fv = extract_features(w, cfg)
    report.classifier_score = clf.score_features(fv.as_array())
    report.flagged_by_classifier = bool(report.classifier_score >= 0.5)
    return report


# ---------------------------------------------------------------------------
# filtering defense and threshold calibration
# ---------------------------------------------------------------------------


def defense_filter(w: Waveform, cfg: DetectorConfig = DetectorConfig()) -> Waveform:
    """Strip everything from the guard band upwards.

    Order-8 Butterworth low-pass at 11 kHz run forwards and backwards (zero
    phase), which puts >= 40 dB on 16 kHz and above at any rate from 44.1 to
    192 kHz while leaving the speech band untouched. A waveform whose Nyquist
    is already below the guard band is returned unchanged.
    """
    if len(w) == 0 or w.nyquist_hz <= cfg.guard.low_hz:
        return w
    spec = FilterSpec("low_pass", (DEFENSE_CUTOFF_HZ,), DEFENSE_ORDER)
    return filter_waveform(w, spec, zero_phase=True)


@dataclass(frozen=True)
class DefenseSummary:
    guard_reduction_db: float
    residual_guard_ratio: float
    output_guard_ratio: float

    to_dict = asdict


def defense_summary(
    before: Waveform, after: Waveform, cfg: DetectorConfig = DetectorConfig()
) -> DefenseSummary:
    """How much guard-band energy the filter removed.

    ``residual_guard_ratio`` is guard energy left after filtering over the
    total energy before it. ``output_guard_ratio`` is the plain ratio of the
    output, which stays near 1 for an input that lived entirely in the guard
    band (filtering scales it down, it does not move it).
    """
    top = before.nyquist_hz if cfg.extend_guard_to_nyquist else cfg.guard.high_hz
    band = Band(cfg.guard.low_hz, top)
    e_before = band_energy(before, band)
    e_after = band_energy(after, band)
    total_before = band_energy(before, Band(0.0, before.nyquist_hz))
    with np.errstate(divide="ignore"):
        red = 10 * np.log10(e_before / e_after) if e_after > 0 else np.inf
    return DefenseSummary(
        float(red) if e_before > 0 else 0.0,
        e_after / total_before if total_before > 0 else 0.0,
        guard_ratio(after, cfg),
    )


@dataclass(frozen=True)
class Calibration:
    threshold: float
    achieved_fpr: float
    n_benign: int
    target_fpr: float


def calibrate_threshold(
    benign_corpus, cfg: DetectorConfig = DetectorConfig(), target_fpr: float = 0.05
) -> Calibration:
    """Guard-ratio threshold at the (1 - target_fpr) quantile of benign ratios."""
    ratios = np.array([guard_ratio(w, cfg) for w in benign_corpus])
    if ratios.size == 0:
        raise DomainError("benign corpus is empty")
    if ratios.size < 50:
        raise DomainError(f"need >= 50 benign samples to calibrate, got {ratios.size}")
    if not 0 <= target_fpr <= 1:
        raise DomainError("target FPR must be in [0, 1]")
    thr = float(np.quantile(ratios, 1.0 - target_fpr, method="higher"))
    return Calibration(thr, float(np.mean(ratios > thr)), int(ratios.size), target_fpr)
