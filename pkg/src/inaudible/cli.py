"""Command-line entry point.

Exit codes: 0 success or clean, 1 usage or domain error, 2 I/O error,
3 detection positive. With ``--json`` stdout carries exactly one JSON
document and everything else goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .attack_synth import (
    DEFAULT_COMMAND,
    AmCarrier,
    DualTone,
    NearUltraShift,
    SyntheticCommandSpec,
    build_attack,
    load_command,
    mode_from_dict,
    mode_to_dict,
    synth_command,
)
from .channel_sim import run_chain
from .detect_defend import (
    DetectorConfig,
    LinearClassifier,
    classify,
    defense_filter,
    defense_summary,
    guard_band_detect,
    train_classifier,
)
from .scenario_lab import (
    PRESETS,
    ScenarioPreset,
    cell_traces,
    default_grid_path,
    demod_score,
    export_report,
    get_preset,
    grid_from_config,
    run_grid,
    standard_corpus,
    write_trace,
)
from .signal_core import (
    DomainError,
    WavError,
    generate_sweep,
    generate_tone,
    spectrogram_to_image,
    stft_spectrogram,
    wav_read,
    wav_write,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DETECTED = 0, 1, 2, 3
MANIFEST_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _emit(args, doc: dict, human: str) -> None:
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        print(human)


def _out_path(args, explicit: str | None, default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(args.out_dir) / default_name


def _write_wav(path: Path, w, fmt: str) -> dict:
    path.parent.mkdir(parents=True, exist_ok=True)
    rep = wav_write(path, w, fmt)
    if rep.clipped:
        print(f"warning: {rep.clipped} samples clipped to [-1, 1]", file=sys.stderr)
    return {
        "path": str(path),
        "format": fmt,
        "sample_rate_hz": w.sample_rate_hz,
        "samples": len(w),
        "duration_s": w.duration_s,
        "peak": w.peak(),
        "rms_dbfs": w.rms_dbfs(floor_db=-300.0),
        "clipped": rep.clipped,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    rate = args.sample_rate or 48000.0
    if args.kind == "tone":
        w = generate_tone(args.freq, args.dur, args.amp, rate)
        name = "tone.wav"
    elif args.kind == "sweep":
        w = generate_sweep(args.f_from, args.f_to, args.dur, args.amp, rate)
        name = "sweep.wav"
    else:
        spec = SyntheticCommandSpec.from_dict(_read_json(args.spec)) if args.spec else DEFAULT_COMMAND
        w = synth_command(spec.with_seed(args.seed), rate).waveform
        name = "command.wav"
    info = _write_wav(_out_path(args, args.out, name), w, args.format)
    _emit(args, info, f"wrote {info['path']} ({info['duration_s']:.3f} s at {rate:g} Hz)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack
# ---------------------------------------------------------------------------


def _mode_from_args(args):
    if args.mode == "am":
        return AmCarrier(args.carrier, args.mod_index)
    if args.mode == "dualtone":
        return DualTone(args.f1, args.f2, args.a1, args.a2)
    return NearUltraShift(args.offset)


def _command_from_args(args):
    if args.mode == "dualtone" and not (args.command or args.synthetic):
        return None, None
    if args.command:
        return load_command(args.command, label=Path(args.command).name), {
            "source": "file",
            "path": str(Path(args.command)),
        }
    if not args.synthetic:
        raise UsageError(f"attack {args.mode} needs --command WAV or --synthetic")
    spec = DEFAULT_COMMAND.with_seed(args.seed)
    return synth_command(spec), {"source": "synthetic", "spec": spec.to_dict()}


def cmd_attack(args) -> int:
    mode = _mode_from_args(args)
    baseband, command_doc = _command_from_args(args)
    attack = build_attack(mode, baseband, args.dur, args.sample_rate)
    wav_path = _out_path(args, args.out, f"attack_{mode.kind}.wav")
    info = _write_wav(wav_path, attack.emitted, args.format)
    manifest = {
        "format_version": MANIFEST_VERSION,
        "mode": mode_to_dict(mode),
        "command": command_doc,
        "emission_wav": wav_path.name,
        "sample_rate_hz": attack.emitted.sample_rate_hz,
        "duration_s": attack.emitted.duration_s,
        "inaudibility_ratio": attack.inaudibility_ratio,
        "seed": args.seed,
    }
    man_path = wav_path.with_suffix(".json")
    _write_json(man_path, manifest)
    _emit(
        args,
        {"wav": info, "manifest": str(man_path), **{k: manifest[k] for k in ("mode", "inaudibility_ratio")}},
        f"wrote {wav_path} and {man_path} ({mode.kind}, inaudibility ratio {attack.inaudibility_ratio:.2e})",
    )
    return EXIT_OK


def _load_manifest(path):
    man = _read_json(path)
    if man.get("format_version") != MANIFEST_VERSION:
        raise DomainError(f"{path}: unsupported manifest format {man.get('format_version')!r}")
    for key in ("mode", "emission_wav"):
        if key not in man:
            raise DomainError(f"{path}: manifest missing /{key}")
    emitted = wav_read(Path(path).parent / man["emission_wav"])
    command_doc = man.get("command")
    baseband = None
    if command_doc and command_doc.get("source") == "synthetic":
        baseband = synth_command(SyntheticCommandSpec.from_dict(command_doc["spec"]))
    elif command_doc and command_doc.get("source") == "file":
        baseband = load_command(command_doc["path"])
    return man, emitted, baseband


# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------


def _preset_from_arg(value: str) -> ScenarioPreset:
    if value in PRESETS:
        return PRESETS[value]
    if value.endswith(".json"):
        return ScenarioPreset.from_dict(_read_json(value))
    return get_preset(value)


def cmd_channel(args) -> int:
    man, emitted, baseband = _load_manifest(args.attack)
    mode_from_dict(man["mode"])
    preset = _preset_from_arg(args.preset)
    if preset.media_codec_sim is not None:
        emitted = preset.media_codec_sim.apply(emitted)
    captured, trace = run_chain(emitted, preset.chain(args.seed))
    out_dir = Path(args.out_dir)
    cap_path = _out_path(args, args.out, "captured.wav")
    info = _write_wav(cap_path, captured, args.format)
    doc = {
        "captured": info,
        "preset": preset.name,
        "stage_rms_dbfs": dict(zip([s.name for s in trace.stages], trace.rms_dbfs())),
        "demod_score": demod_score(baseband, captured) if baseband is not None else None,
    }
    if args.trace:
        doc["trace_files"] = [str(p) for p in write_trace(trace, out_dir)]
    score = "n/a" if doc["demod_score"] is None else f"{doc['demod_score']:.3f}"
    _emit(args, doc, f"wrote {cap_path} (preset {preset.name}, demod score {score})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# detect / defend
# ---------------------------------------------------------------------------


def _detector_cfg(args) -> DetectorConfig:
    cfg = DetectorConfig()
    if getattr(args, "threshold", None) is not None:
        cfg = cfg.with_threshold(args.threshold)
    return cfg


def cmd_detect(args) -> int:
    w = wav_read(args.input)
    cfg = _detector_cfg(args)
    if args.classifier:
        report = classify(w, LinearClassifier.from_dict(_read_json(args.classifier)), cfg)
    else:
        report = guard_band_detect(w, cfg)
    verdict = "FLAGGED" if report.flagged else "clean"
    human = f"{verdict}: guard ratio {report.guard_ratio:.4f} (threshold {cfg.flag_threshold:g})"
    if not report.flagged_by_guard and report.guard_ratio > cfg.flag_threshold:
        human += f"; guard band at {report.guard_level_dbfs:.0f} dBFS is below the {cfg.min_guard_dbfs:g} dBFS floor"
    if report.classifier_score is not None:
        human += f", classifier score {report.classifier_score:.3f}"
    _emit(args, {**report.to_dict(), "flagged": report.flagged}, human)
    return EXIT_DETECTED if report.flagged else EXIT_OK


def cmd_defend(args) -> int:
    w = wav_read(args.input)
    cfg = DetectorConfig()
    out = defense_filter(w, cfg)
    info = _write_wav(Path(args.out), out, args.format)
    summ = defense_summary(w, out, cfg) if w.nyquist_hz > cfg.guard.low_hz else None
    doc = {"output": info, "summary": summ.to_dict() if summ else None}
    human = f"wrote {info['path']}"
    if summ:
        human += f" (guard band reduced by {summ.guard_reduction_db:.1f} dB)"
    _emit(args, doc, human)
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = standard_corpus(args.seed, args.n, args.n)
    clf, log = train_classifier(corpus.labeled(), DetectorConfig(), epochs=args.epochs, seed=args.seed)
    out = _out_path(args, args.out, "classifier.json")
    _write_json(out, clf.to_dict())
    doc = {"path": str(out), "final_loss": log.losses[-1], "train_accuracy": log.accuracy}
    _emit(args, doc, f"wrote {out} (training accuracy {log.accuracy:.3f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


def cmd_scenario(args) -> int:
    if args.action == "presets":
        names = list(PRESETS)
        _emit(args, {"presets": [PRESETS[n].to_dict() for n in names]}, "\n".join(names))
        return EXIT_OK
    cfg_path = default_grid_path() if args.config in (None, "default") else Path(args.config)
    base, axes, trials, master, workers = grid_from_config(_read_json(cfg_path), args.seed)
    if args.trials is not None:
        trials = args.trials
    if args.workers is not None:
        workers = args.workers
    result = run_grid(base, axes, trials, master, workers)
    traces = cell_traces(base, axes, master) if args.trace else None
    files = export_report(result, args.out_dir, traces)
    m = result.metrics
    _emit(
        args,
        {"out_dir": str(args.out_dir), "files": [str(f) for f in files], "metrics": m.to_dict()},
        f"{m.trials} trials, success rate {m.success_rate:.3f}, detection TPR {m.detection_tpr:.3f}"
        f" FPR {m.detection_fpr:.3f}; report in {args.out_dir}",
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectrogram
# ---------------------------------------------------------------------------


def cmd_spectrogram(args) -> int:
    w = wav_read(args.input)
    s = stft_spectrogram(w, args.frame, args.hop, args.window, args.floor)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    spectrogram_to_image(s, out)
    frames, bins = s.shape
    doc = {"path": str(out), "width": frames, "height": bins, "frame_len": args.frame, "hop_len": args.hop}
    _emit(args, doc, f"wrote {out} ({frames}x{bins})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (default 0)")
    p.add_argument("--sample-rate", type=float, default=d(None),
                   help="output sample rate in Hz (synth default 48000; attacks pick their working rate)")
    p.add_argument("--out-dir", default=d("."), help="directory for outputs (default .)")
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable stdout")
    p.add_argument("--trace", action="store_true", default=d(False), help="write per-stage artifacts")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    p = _Parser(prog="inaudible", description="Inaudible voice-command attack simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(q):
        q.add_argument("--format", choices=("float32", "pcm16"), default="float32")

    s = sub.add_parser("synth", parents=[common], help="generate a tone, sweep or synthetic command")
    ss = s.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    t = ss.add_parser("tone", parents=[common])
    t.add_argument("--freq", type=float, required=True)
    t.add_argument("--dur", type=float, default=1.0)
    t.add_argument("--amp", type=float, default=0.8)
    sw = ss.add_parser("sweep", parents=[common])
    sw.add_argument("--from", dest="f_from", type=float, required=True)
    sw.add_argument("--to", dest="f_to", type=float, required=True)
    sw.add_argument("--dur", type=float, default=2.0)
    sw.add_argument("--amp", type=float, default=0.8)
    c = ss.add_parser("command", parents=[common])
    c.add_argument("--spec", help="JSON command spec (segments, gap_s)")
    for q in (t, sw, c):
        q.add_argument("--out")
        fmt(q)
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("attack", parents=[common], help="build an attack emission and manifest")
    a.add_argument("mode", choices=("am", "dualtone", "nearultra"))
    src = a.add_mutually_exclusive_group()
    src.add_argument("--command", help="baseband command WAV")
    src.add_argument("--synthetic", action="store_true", help="use the built-in synthetic command")
    a.add_argument("--carrier", type=float, default=25000.0)
    a.add_argument("--mod-index", type=float, default=1.0)
    a.add_argument("--f1", type=float, default=20000.0)
    a.add_argument("--f2", type=float, default=21000.0)
    a.add_argument("--a1", type=float, default=0.45)
    a.add_argument("--a2", type=float, default=0.45)
    a.add_argument("--offset", type=float, default=16000.0)
    a.add_argument("--dur", type=float, help="duration of tone-only modes (default: command length or 1 s)")
    a.add_argument("--out")
    fmt(a)
    a.set_defaults(func=cmd_attack)

    ch = sub.add_parser("channel", parents=[common], help="run an attack manifest through a channel")
    ch.add_argument("--attack", required=True, help="attack manifest JSON")
    ch.add_argument("--preset", default="baseline", help="preset name or preset JSON file")
    ch.add_argument("--out")
    fmt(ch)
    ch.set_defaults(func=cmd_channel)

    de = sub.add_parser("detect", parents=[common], help="guard-band (and classifier) detection")
    de.add_argument("--in", dest="input", required=True)
    de.add_argument("--classifier", help="classifier JSON from train-classifier")
    de.add_argument("--threshold", type=float, help="guard-ratio threshold")
    de.set_defaults(func=cmd_detect)

    df = sub.add_parser("defend", parents=[common], help="remove guard-band content")
    df.add_argument("--in", dest="input", required=True)
    df.add_argument("--out", required=True)
    fmt(df)
    df.set_defaults(func=cmd_defend)

    tr = sub.add_parser("train-classifier", parents=[common], help="fit the linear detector")
    tr.add_argument("--n", type=int, default=200, help="samples per class")
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--out")
    tr.set_defaults(func=cmd_train)

    sc = sub.add_parser("scenario", parents=[common], help="Monte Carlo grids and presets")
    scs = sc.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = scs.add_parser("run", parents=[common])
    run.add_argument("--config", help="grid config JSON, or 'default' for the shipped grid")
    run.add_argument("--trials", type=int, help="override trials_per_cell")
    run.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    scs.add_parser("presets", parents=[common])
    sc.set_defaults(func=cmd_scenario)

    sp = sub.add_parser("spectrogram", parents=[common], help="render a WAV as a PGM spectrogram")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--frame", type=int, default=1024)
    sp.add_argument("--hop", type=int, default=256)
    sp.add_argument("--floor", type=float, default=-100.0)
    sp.add_argument("--window", default="hann")
    sp.set_defaults(func=cmd_spectrogram)
    return p


def _validate(args) -> None:
    if args.seed is None:
        args.seed = 0
    if args.seed < 0:
        raise UsageError(f"--seed must be non-negative, got {args.seed}")
    if args.sample_rate is not None and not args.sample_rate > 0:
        raise UsageError(f"--sample-rate must be positive, got {args.sample_rate:g}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        return args.func(args)
    except (UsageError, DomainError, WavError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
