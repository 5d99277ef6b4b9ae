"""Monte Carlo harness: scenario presets, single trials, parameter grids, ROC.

A trial's "success" is a proxy. The captured signal is compared with the
intended command by envelope cross-correlation, not by a speech recognizer.
Results are pure functions of (config, seed). Per-trial seeds come from
``numpy.random.SeedSequence`` keyed on (master seed, cell, trial), so the
order in which trials run cannot change them.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import signal

from .attack_synth import (
    DEFAULT_COMMAND,
    AmCarrier,
    AttackMode,
    CommandBaseband,
    Segment,
    SyntheticCommandSpec,
    am_modulate,
    build_attack,
    dual_tone,
    mode_from_dict,
    mode_to_dict,
    near_ultra_shift,
    synth_command,
)
from .channel_sim import (
    AirPath,
    ChannelChain,
    MicModel,
    NoiseSpec,
    SpeakerModel,
    StageTrace,
    propagate,
    run_chain,
    speaker_render,
)
from .detect_defend import DetectorConfig, defense_filter, guard_band_detect
from .signal_core import (
    Band,
    DomainError,
    FilterSpec,
    Waveform,
    add_awgn,
    filter_waveform,
    resample,
    spectrogram_to_image,
    wav_write,
)

FORMAT_VERSION = 1
MIN_CAPTURE_DBFS = -90.0
ENVELOPE_LP_HZ = 200.0
ENVELOPE_RATE_HZ = 1000.0
CORPUS_RATE = 96000.0
PROXY_NOTE = (
    "success = envelope cross-correlation between intended command and ADC output"
    " >= threshold; a stand-in for speech recognition"
)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodecSim:
    """Media-path degradation: low-pass then uniform quantization."""

    lowpass_hz: float = 20000.0
    quantize_bits: int = 16

    def apply(self, w: Waveform) -> Waveform:
        if self.lowpass_hz < w.nyquist_hz:
            w = filter_waveform(w, FilterSpec("low_pass", (self.lowpass_hz,), 8))
        q = 2.0 ** (self.quantize_bits - 1)
        return w.with_samples(np.clip(np.round(w.samples * q), -q, q - 1) / q)


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    speaker: SpeakerModel = SpeakerModel()
    path: AirPath = AirPath()
    mic: MicModel = MicModel()
    noise_snr_db: float | None = None
    media_codec_sim: CodecSim | None = None

    def chain(self, noise_seed: int = 0) -> ChannelChain:
        noise = None if self.noise_snr_db is None else NoiseSpec(self.noise_snr_db, noise_seed)
        return ChannelChain(self.speaker, self.path, self.mic, noise)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "speaker": self.speaker.to_dict(),
            "path": self.path.to_dict(),
            "mic": self.mic.to_dict(),
            "noise_snr_db": self.noise_snr_db,
            "media_codec_sim": asdict(self.media_codec_sim) if self.media_codec_sim else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioPreset":
        codec = d.get("media_codec_sim")
        return cls(
            d.get("name", "custom"),
            SpeakerModel.from_dict(d.get("speaker", {})),
            AirPath.from_dict(d.get("path", {})),
            MicModel.from_dict(d.get("mic", {})),
            d.get("noise_snr_db"),
            CodecSim(**codec) if codec else None,
        )


def builtin_presets() -> tuple[ScenarioPreset, ...]:
    return (
        ScenarioPreset("baseline"),
        # attacker audio played by the target's own speaker
        ScenarioPreset(
            "self_device",
            speaker=SpeakerModel(Band(20.0, 48000.0)),
            path=AirPath(distance_m=0.1),
        ),
        # command hidden in a media track
        ScenarioPreset(
            "media_embed",
            path=AirPath(distance_m=0.1),
            media_codec_sim=CodecSim(20000.0, 16),
        ),
        # remote meeting audio on a laptop speaker across a table
        ScenarioPreset(
            "conference",
            speaker=SpeakerModel(Band(100.0, 20000.0)),
            path=AirPath(distance_m=1.0),
            noise_snr_db=30.0,
        ),
        # 100 ft
        ScenarioPreset(
            "long_range",
            path=AirPath(distance_m=30.48, absorption_db_per_m_at_20k=0.5),
            noise_snr_db=30.0,
        ),
    )


PRESETS = {p.name: p for p in builtin_presets()}


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; valid: {', '.join(PRESETS)}") from None


# ---------------------------------------------------------------------------
# success proxy
# ---------------------------------------------------------------------------


def envelope(w: Waveform, rate_hz: float = ENVELOPE_RATE_HZ) -> np.ndarray:
    """Rectify, zero-phase 200 Hz low-pass, then keep every k-th sample (~1 kHz)."""
    sos = signal.butter(4, ENVELOPE_LP_HZ, fs=w.sample_rate_hz, output="sos")
    padlen = min(len(w) - 1, 27)
    env = signal.sosfiltfilt(sos, np.abs(w.samples), padlen=padlen)
    step = max(1, int(round(w.sample_rate_hz / rate_hz)))
    return env[::step]


def _max_lagged_corr(a: np.ndarray, b: np.ndarray, max_lag: int) -> float:
    n = min(a.size, b.size)
    a, b = a[:n], b[:n]
    best = 0.0
    for k in range(-max_lag, max_lag + 1):
        x = a[max(0, k) : n + min(0, k)]
        y = b[max(0, -k) : n - max(0, k)]
        if x.size < 2:
            continue
        x = x - x.mean()
        y = y - y.mean()
        den = np.sqrt(np.dot(x, x) * np.dot(y, y))
        if den > 0:
            best = max(best, float(np.dot(x, y) / den))
    return best


def demod_score(
    original: CommandBaseband | Waveform,
    captured: Waveform,
    max_lag_s: float = 0.05,
    min_level_dbfs: float = MIN_CAPTURE_DBFS,
) -> float:
    """How recognizably ``captured`` carries the command, in [0, 1].

    Maximum over lags within +-``max_lag_s`` of the Pearson correlation of
    the two envelopes. A capture whose RMS is below ``min_level_dbfs`` scores
    0: the correlation is scale-free, but a device cannot act on a command
    buried under its own sensitivity floor.
    """
    orig = original.waveform if isinstance(original, CommandBaseband) else original
    if captured.duration_s < 0.1:
        raise DomainError(f"captured signal is {1000 * captured.duration_s:.0f} ms; need >= 100 ms")
    if captured.rms_dbfs() < min_level_dbfs:
        return 0.0
    orig = resample(orig, captured.sample_rate_hz)
    a = envelope(orig)
    b = envelope(captured)
    lag = int(round(max_lag_s * ENVELOPE_RATE_HZ))
    return float(np.clip(_max_lagged_corr(a, b, lag), 0.0, 1.0))


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialConfig:
    scenario: ScenarioPreset = PRESETS["baseline"]
    attack_mode: AttackMode = AmCarrier()
    command_spec: SyntheticCommandSpec = DEFAULT_COMMAND
    defense_enabled: bool = False
    detector: DetectorConfig = DetectorConfig()
    seed: int = 0
    success_threshold: float = 0.5

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "attack_mode": mode_to_dict(self.attack_mode),
            "command": self.command_spec.to_dict(),
            "defense_enabled": self.defense_enabled,
            "detector": self.detector.to_dict(),
            "seed": self.seed,
            "success_threshold": self.success_threshold,
        }


@dataclass(frozen=True)
class TrialResult:
    demod_score: float
    success: bool
    detected: bool
    guard_ratio: float
    stage_rms: tuple[float, float, float, float]
    benign_guard_ratio: float
    benign_detected: bool

    to_dict = asdict


def trial_seeds(seed: int) -> tuple[int, int]:
    """(command seed, noise seed) derived from a trial seed."""
    s = np.random.SeedSequence(seed).generate_state(2)
    return int(s[0]), int(s[1])


def stable_seed(master_seed: int, cell_index: int, trial_index: int) -> int:
    return int(np.random.SeedSequence([master_seed, cell_index, trial_index]).generate_state(1)[0])


def _device_input(w: Waveform, scenario: ScenarioPreset) -> Waveform:
    return propagate(speaker_render(w, scenario.speaker), scenario.path)


def run_trial(cfg: TrialConfig, return_trace: bool = False):
    """command -> attack -> (codec) -> (defense) -> channel -> score + detection.

    Detection looks at the unfiltered signal arriving at the device. A benign
    control (the plain command played through the same speaker and path) is
    scored by the same detector so every trial also yields a false-positive
    sample.
    """
    cmd_seed, noise_seed = trial_seeds(cfg.seed)
    cmd = synth_command(cfg.command_spec.with_seed(cmd_seed))
    attack = build_attack(cfg.attack_mode, cmd)
    emitted = attack.emitted
    codec = cfg.scenario.media_codec_sim
    if codec is not None:
        emitted = codec.apply(emitted)

    report = guard_band_detect(_device_input(emitted, cfg.scenario), cfg.detector)
    benign = guard_band_detect(
        _device_input(resample(cmd.waveform, emitted.sample_rate_hz), cfg.scenario), cfg.detector
    )

    sent = defense_filter(emitted, cfg.detector) if cfg.defense_enabled else emitted
    captured, trace = run_chain(sent, cfg.scenario.chain(noise_seed))
    score = demod_score(cmd, captured)
    result = TrialResult(
        score,
        bool(score >= cfg.success_threshold),
        report.flagged_by_guard,
        report.guard_ratio,
        tuple(float(v) for v in trace.rms_dbfs()),
        benign.guard_ratio,
        benign.flagged_by_guard,
    )
    return (result, trace) if return_trace else result


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

AXES = ("distance_m", "snr_db", "a2", "mod_index", "attack_mode", "defense_enabled")


def parse_mode(value) -> AttackMode:
    if isinstance(value, str):
        return mode_from_dict({"kind": value})
    if isinstance(value, dict):
        return mode_from_dict(value)
    if hasattr(value, "kind"):
        return value
    raise DomainError(f"cannot interpret {value!r} as an attack mode")


def apply_axis(cfg: TrialConfig, name: str, value) -> TrialConfig:
    sc = cfg.scenario
    if name == "distance_m":
        return replace(cfg, scenario=replace(sc, path=replace(sc.path, distance_m=float(value))))
    if name == "snr_db":
        return replace(cfg, scenario=replace(sc, noise_snr_db=None if value is None else float(value)))
    if name == "a2":
        return replace(cfg, scenario=replace(sc, mic=sc.mic.replace(a2=float(value))))
    if name == "mod_index":
        if not isinstance(cfg.attack_mode, AmCarrier):
            raise DomainError("mod_index axis needs an am_carrier attack mode")
        return replace(cfg, attack_mode=AmCarrier(cfg.attack_mode.carrier_hz, float(value)))
    if name == "attack_mode":
        return replace(cfg, attack_mode=parse_mode(value))
    if name == "defense_enabled":
        return replace(cfg, defense_enabled=bool(value))
    raise DomainError(f"unknown grid axis {name!r}; valid axes: {', '.join(AXES)}")


def axis_label(value) -> str:
    if hasattr(value, "kind"):
        return value.kind
    if isinstance(value, dict):
        return value.get("kind", json.dumps(value, sort_keys=True))
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


@dataclass
class CellResult:
    index: int
    values: dict
    trials: list[TrialResult]
    success_threshold: float = 0.5

    @property
    def success_rate(self) -> float:
        return float(np.mean([t.success for t in self.trials]))

    @property
    def mean_demod_score(self) -> float:
        return float(np.mean([t.demod_score for t in self.trials]))

    @property
    def detection_tpr(self) -> float:
        return float(np.mean([t.detected for t in self.trials]))

    @property
    def detection_fpr(self) -> float:
        return float(np.mean([t.benign_detected for t in self.trials]))


@dataclass
class Metrics:
    trials: int
    success_rate: float
    detection_tpr: float
    detection_fpr: float
    roc_points: list[tuple[float, float]]
    auc: float
    grid_axes: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["roc_points"] = [list(p) for p in self.roc_points]
        return d


@dataclass
class GridResult:
    metrics: Metrics
    cells: list[CellResult]
    master_seed: int
    trials_per_cell: int
    base: TrialConfig


def _run_one(cfg: TrialConfig) -> TrialResult:
    return run_trial(cfg)


def cell_traces(base: TrialConfig, axes: dict, master_seed: int = 0) -> dict:
    """Stage traces of trial 0 in every cell, keyed ``cellNNN``."""
    return {
        f"cell{ci:03d}": run_trial(replace(cfg, seed=stable_seed(master_seed, ci, 0)), True)[1]
        for ci, (_, cfg) in enumerate(cell_configs(base, axes))
    }


def cell_configs(base: TrialConfig, axes: dict) -> list[tuple[dict, TrialConfig]]:
    """(axis labels, config) for every cell, in row-major order of ``axes``."""
    for name in axes:
        if name not in AXES:
            raise DomainError(f"unknown grid axis {name!r}; valid axes: {', '.join(AXES)}")
    names = list(axes)
    out = []
    for combo in itertools.product(*(axes[n] for n in names)):
        cfg = base
        for n, v in zip(names, combo):
            cfg = apply_axis(cfg, n, v)
        out.append(({n: axis_label(v) for n, v in zip(names, combo)}, cfg))
    return out


def run_grid(
    base: TrialConfig,
    axes: dict,
    trials_per_cell: int = 10,
    master_seed: int = 0,
    workers: int = 1,
) -> GridResult:
    """Run every combination of ``axes`` values ``trials_per_cell`` times."""
    if trials_per_cell < 1:
        raise DomainError("trials_per_cell must be >= 1")
    cells_in = cell_configs(base, axes)
    jobs = [
        replace(cfg, seed=stable_seed(master_seed, ci, ti))
        for ci, (_, cfg) in enumerate(cells_in)
        for ti in range(trials_per_cell)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]

    cells = [
        CellResult(ci, values, results[ci * trials_per_cell : (ci + 1) * trials_per_cell],
                   base.success_threshold)
        for ci, (values, _) in enumerate(cells_in)
    ]
    roc = roc_curve([r.benign_guard_ratio for r in results], [r.guard_ratio for r in results])
    metrics = Metrics(
        trials=len(results),
        success_rate=float(np.mean([r.success for r in results])),
        detection_tpr=float(np.mean([r.detected for r in results])),
        detection_fpr=float(np.mean([r.benign_detected for r in results])),
        roc_points=roc.points,
        auc=roc.auc,
        grid_axes={n: [axis_label(v) for v in axes[n]] for n in axes},
    )
    return GridResult(metrics, cells, master_seed, trials_per_cell, base)


# ---------------------------------------------------------------------------
# ROC
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Roc:
    points: list[tuple[float, float]]
    auc: float

    def tpr_at_fpr(self, max_fpr: float) -> float:
        return max(t for f, t in self.points if f <= max_fpr + 1e-12)


def roc_curve(benign_scores, attack_scores) -> Roc:
    """ROC for the rule "flag when score >= threshold", swept over every distinct score."""
    neg = np.asarray(benign_scores, dtype=float)
    pos = np.asarray(attack_scores, dtype=float)
    if neg.size == 0 or pos.size == 0:
        raise DomainError("ROC needs non-empty benign and attack score sets")
    thresholds = np.unique(np.concatenate([neg, pos]))[::-1]
    pts = [(0.0, 0.0)]
    for t in thresholds:
        pts.append((float(np.mean(neg >= t)), float(np.mean(pos >= t))))
    pts = sorted(set(pts))
    f = np.array([p[0] for p in pts])
    t = np.array([p[1] for p in pts])
    auc = float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2))
    return Roc(pts, auc)


def detector_roc(benign_corpus, attack_corpus, cfg: DetectorConfig = DetectorConfig(), classifier=None) -> dict:
    """ROC over guard ratio, and over classifier score when a classifier is given."""
    from .detect_defend import classify, guard_ratio

    benign_corpus, attack_corpus = list(benign_corpus), list(attack_corpus)
    if not benign_corpus or not attack_corpus:
        raise DomainError("ROC needs non-empty benign and attack corpora")
    out = {
        "guard_ratio": roc_curve(
            [guard_ratio(w, cfg) for w in benign_corpus], [guard_ratio(w, cfg) for w in attack_corpus]
        )
    }
    if classifier is not None:
        out["classifier"] = roc_curve(
            [classify(w, classifier, cfg).classifier_score for w in benign_corpus],
            [classify(w, classifier, cfg).classifier_score for w in attack_corpus],
        )
    return out


# ---------------------------------------------------------------------------
# standard corpus
# ---------------------------------------------------------------------------


def random_command_spec(rng: np.random.Generator) -> SyntheticCommandSpec:
    segs = []
    for _ in range(int(rng.integers(3, 6))):
        f0 = float(rng.uniform(90.0, 300.0))
        segs.append(Segment(f0, int(4500 // f0), float(rng.uniform(0.12, 0.3))))
    return SyntheticCommandSpec(tuple(segs), float(rng.uniform(0.03, 0.1)), int(rng.integers(2**31)))


def _speech_band_noise(rng: np.random.Generator, duration_s: float, rate: float) -> Waveform:
    n = int(duration_s * rate)
    w = Waveform(rng.standard_normal(n), rate)
    w = filter_waveform(w, FilterSpec("band_pass", (100.0, 6000.0), 4), zero_phase=True)
    return w.with_samples(0.9 * w.samples / np.max(np.abs(w.samples)))


@dataclass
class Corpus:
    benign: list[Waveform]
    attack: list[Waveform]
    attack_kinds: list[str] = field(default_factory=list)
    benign_kinds: list[str] = field(default_factory=list)

    def labeled(self) -> list[tuple[Waveform, str]]:
        return [(w, "benign") for w in self.benign] + [(w, "attack") for w in self.attack]


ATTACK_CLASSES = ("am_carrier", "dual_tone", "near_ultra_shift", "aliasing")


def standard_corpus(
    seed: int = 0, n_benign: int = 200, n_attack: int = 200, snr_range_db=(10.0, 40.0),
    rate: float = CORPUS_RATE,
) -> Corpus:
    """Benign speech-band recordings and guard-band attacks, each with AWGN.

    Benign: half synthetic commands, half band-limited (100 Hz-6 kHz) noise.
    Attack: equal shares of AM (21-30 kHz carriers), dual tones (16.5-23 kHz),
    SSB near-ultrasound shifts (offsets 16.2-17 kHz, recovered by the
    nonlinearity) and aliasing shifts (offset exactly 16 kHz, which folds
    back to baseband at a 16 kHz ADC with no anti-alias filter).
    """
    rng = np.random.default_rng(seed)
    corpus = Corpus([], [])
    for i in range(n_benign):
        snr = rng.uniform(*snr_range_db)
        if i % 2 == 0:
            w = resample(synth_command(random_command_spec(rng)).waveform, rate)
            kind = "command"
        else:
            w = _speech_band_noise(rng, rng.uniform(0.6, 1.4), rate)
            kind = "speech_noise"
        corpus.benign.append(add_awgn(w, snr, int(rng.integers(2**31))))
        corpus.benign_kinds.append(kind)
    for i in range(n_attack):
        kind = ATTACK_CLASSES[i % len(ATTACK_CLASSES)]
        snr = rng.uniform(*snr_range_db)
        cmd = synth_command(random_command_spec(rng))
        if kind == "am_carrier":
            a = am_modulate(cmd, float(rng.uniform(21000, 30000)), float(rng.uniform(0.5, 1.0)), rate)
        elif kind == "dual_tone":
            f1 = float(rng.uniform(16500, 22000))
            f2 = f1 + float(rng.uniform(300, 1000)) * rng.choice([-1, 1])
            f2 = f2 if f2 >= 16000 else f1 + abs(f2 - f1)
            a = dual_tone(f1, f2, 0.45, 0.45, cmd.waveform.duration_s, rate)
        elif kind == "near_ultra_shift":
            a = near_ultra_shift(cmd, float(rng.uniform(16200, 17000)), rate)
        else:
            a = near_ultra_shift(cmd, 16000.0, rate)
        corpus.attack.append(add_awgn(a.emitted, snr, int(rng.integers(2**31))))
        corpus.attack_kinds.append(kind)
    return corpus


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def cells_csv(result: GridResult) -> str:
    names = list(result.metrics.grid_axes)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["cell_index", *names, "trials", "success_rate", "mean_demod_score",
                 "detection_tpr", "detection_fpr"])
    for c in result.cells:
        wr.writerow([
            c.index, *(c.values[n] for n in names), len(c.trials),
            f"{c.success_rate:.6f}", f"{c.mean_demod_score:.6f}",
            f"{c.detection_tpr:.6f}", f"{c.detection_fpr:.6f}",
        ])
    return buf.getvalue()


def metrics_json(result: GridResult) -> dict:
    d = result.metrics.to_dict()
    d.update(
        format_version=FORMAT_VERSION,
        master_seed=result.master_seed,
        trials_per_cell=result.trials_per_cell,
        success_threshold=result.base.success_threshold,
        success_proxy=PROXY_NOTE,
    )
    return d


def write_trace(trace: StageTrace, out_dir, prefix: str = "") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, st in enumerate(trace.stages):
        stem = f"{prefix}stage{i}_{st.name}"
        wav_write(out / f"{stem}.wav", st.waveform, "float32")
        spectrogram_to_image(st.spectrogram, out / f"{stem}.pgm")
        written += [out / f"{stem}.wav", out / f"{stem}.pgm"]
    return written


def export_report(result: GridResult, out_dir, traces: dict | None = None) -> list[Path]:
    """Write metrics.json, cells.csv and optional per-trial stage traces."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(metrics_json(result), indent=2, sort_keys=True) + "\n")
    (out / "cells.csv").write_text(cells_csv(result))
    written = [out / "metrics.json", out / "cells.csv"]
    for name, trace in (traces or {}).items():
        written += write_trace(trace, out / "traces", prefix=f"{name}_")
    return written


# ---------------------------------------------------------------------------
# grid config files
# ---------------------------------------------------------------------------

GRID_SCHEMA = {
    "type": "object",
    "required": ["axes"],
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "preset": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "attack_mode": {
            "oneOf": [
                {"type": "string"},
                {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}},
            ]
        },
        "command": {
            "type": "object",
            "required": ["segments"],
            "properties": {
                "segments": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["fundamental_hz", "harmonic_count", "duration_s"],
                    },
                },
                "gap_s": {"type": "number", "minimum": 0},
                "seed": {"type": "integer"},
            },
        },
        "snr_db": {"type": ["number", "null"]},
        "defense_enabled": {"type": "boolean"},
        "success_threshold": {"type": "number", "minimum": 0, "maximum": 1},
        "trials_per_cell": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer"},
        "workers": {"type": "integer", "minimum": 1},
        "detector": {"type": "object"},
        "axes": {
            "type": "object",
            "propertyNames": {"enum": list(AXES)},
            "additionalProperties": {"type": "array", "minItems": 1},
            "properties": {
                "distance_m": {"items": {"type": "number", "minimum": 0}},
                "snr_db": {"items": {"type": ["number", "null"]}},
                "a2": {"items": {"type": "number"}},
                "mod_index": {"items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
                "attack_mode": {"items": {"type": ["string", "object"]}},
                "defense_enabled": {"items": {"type": "boolean"}},
            },
        },
    },
}


METRICS_SCHEMA = {
    "type": "object",
    "required": [
        "format_version", "trials", "success_rate", "detection_tpr", "detection_fpr",
        "roc_points", "auc", "grid_axes", "master_seed", "trials_per_cell",
        "success_threshold", "success_proxy",
    ],
    "additionalProperties": False,
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "trials": {"type": "integer", "minimum": 1},
        "success_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "detection_tpr": {"type": "number", "minimum": 0, "maximum": 1},
        "detection_fpr": {"type": "number", "minimum": 0, "maximum": 1},
        "roc_points": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [
                    {"type": "number", "minimum": 0, "maximum": 1},
                    {"type": "number", "minimum": 0, "maximum": 1},
                ],
                "minItems": 2,
                "maxItems": 2,
            },
        },
        "auc": {"type": "number", "minimum": 0, "maximum": 1},
        "grid_axes": {"type": "object", "additionalProperties": {"type": "array"}},
        "master_seed": {"type": "integer"},
        "trials_per_cell": {"type": "integer", "minimum": 1},
        "success_threshold": {"type": "number"},
        "success_proxy": {"type": "string"},
    },
}


class ConfigError(DomainError):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def validate_grid_config(doc: dict) -> None:
    import jsonschema

    validator = jsonschema.Draft202012Validator(GRID_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        pointer = "".join(f"/{p}" for p in e.absolute_path)
        raise ConfigError(pointer, e.message)


def grid_from_config(doc: dict, seed: int | None = None):
    """Parse a grid config into (base TrialConfig, axes, trials_per_cell, master_seed, workers)."""
    validate_grid_config(doc)
    preset = doc.get("preset", "baseline")
    try:
        scenario = get_preset(preset) if isinstance(preset, str) else ScenarioPreset.from_dict(preset)
    except (TypeError, DomainError) as exc:
        raise ConfigError("/preset", str(exc)) from None
    if "snr_db" in doc:
        scenario = replace(scenario, noise_snr_db=doc["snr_db"])
    try:
        mode = parse_mode(doc.get("attack_mode", "am_carrier"))
    except DomainError as exc:
        raise ConfigError("/attack_mode", str(exc)) from None
    try:
        command = SyntheticCommandSpec.from_dict(doc["command"]) if "command" in doc else DEFAULT_COMMAND
    except (TypeError, DomainError) as exc:
        raise ConfigError("/command", str(exc)) from None
    try:
        detector = DetectorConfig.from_dict(doc.get("detector", {}))
    except (TypeError, DomainError) as exc:
        raise ConfigError("/detector", str(exc)) from None
    base = TrialConfig(
        scenario=scenario,
        attack_mode=mode,
        command_spec=command,
        defense_enabled=doc.get("defense_enabled", False),
        detector=detector,
        success_threshold=doc.get("success_threshold", 0.5),
    )
    axes = doc["axes"]
    for name, values in axes.items():
        for i, v in enumerate(values):
            try:
                apply_axis(base, name, v)
            except DomainError as exc:
                raise ConfigError(f"/axes/{name}/{i}", str(exc)) from None
    master = doc.get("master_seed", 0) if seed is None else seed
    return base, axes, doc.get("trials_per_cell", 10), master, doc.get("workers", 1)


def default_grid_path() -> Path:
    return Path(__file__).with_name("configs") / "default_grid.json"
