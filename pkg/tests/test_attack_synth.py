import numpy as np
import pytest

from inaudible.attack_synth import (
    DEFAULT_COMMAND,
    AmCarrier,
    DualTone,
    InaudibilityError,
    NearUltraShift,
    ProbeSweep,
    ProbeTone,
    Segment,
    SyntheticCommandSpec,
    am_modulate,
    build_attack,
    command_from_waveform,
    dual_tone,
    load_command,
    mode_from_dict,
    mode_to_dict,
    near_ultra_shift,
    occupied_band,
    probe_sweep,
    probe_tone,
    synth_command,
    working_rate,
)
from inaudible.scenario_lab import envelope
from inaudible.signal_core import (
    AUDIBLE,
    GUARD,
    DomainError,
    band_energy_ratio,
    generate_sweep,
    generate_tone,
    resample,
    silence,
    wav_write,
)

from oracles import dominant_freq, tone_fit


def tone_baseband(freq=1000.0, dur=1.0, rate=48000.0):
    return command_from_waveform(generate_tone(freq, dur, 0.5, rate))


def middle(w, frac=0.1):
    k = int(len(w) * frac)
    return w.samples[k : len(w) - k]


# --- synthetic commands --------------------------------------------------------


def test_single_segment_harmonics_only():
    spec = SyntheticCommandSpec((Segment(150.0, 3, 0.5),), seed=3)
    w = synth_command(spec).waveform
    mag = np.abs(np.fft.rfft(w.samples * np.hanning(len(w))))
    f = np.fft.rfftfreq(len(w), 1 / w.sample_rate_hz)
    peaks = [i for i in range(1, mag.size - 1) if mag[i] > mag[i - 1] and mag[i] >= mag[i + 1] and mag[i] > 0.05 * mag.max()]
    found = sorted({round(f[i] / 2) * 2 for i in peaks})
    assert found == [150, 300, 450]


def test_command_deterministic_and_seed_sensitive():
    a = synth_command(DEFAULT_COMMAND.with_seed(5)).waveform
    b = synth_command(DEFAULT_COMMAND.with_seed(5)).waveform
    c = synth_command(DEFAULT_COMMAND.with_seed(6)).waveform
    assert a == b
    assert a != c


def test_command_shape(command):
    w = command.waveform
    assert w.peak() == pytest.approx(0.9)
    assert band_energy_ratio(w, AUDIBLE) > 0.999
    lo, hi = occupied_band(w)
    assert 20 <= lo and hi <= 6000


@pytest.mark.parametrize("f0", [2500.0, 50.0])
def test_fundamental_out_of_range(f0):
    with pytest.raises(DomainError):
        SyntheticCommandSpec((Segment(f0, 3, 0.5),))


def test_spec_round_trip():
    assert SyntheticCommandSpec.from_dict(DEFAULT_COMMAND.to_dict()) == DEFAULT_COMMAND


def test_load_command(tmp_path):
    wav_write(tmp_path / "c.wav", generate_tone(440, 0.5, 0.3))
    cmd = load_command(tmp_path / "c.wav")
    assert cmd.waveform.peak() == pytest.approx(0.9)
    wav_write(tmp_path / "z.wav", silence(0.1))
    with pytest.raises(DomainError):
        load_command(tmp_path / "z.wav")


# --- modes -------------------------------------------------------------------


def test_mode_dict_round_trip():
    for m in (AmCarrier(30000, 0.5), DualTone(17000, 18000, 0.3, 0.4), NearUltraShift(16500),
              ProbeTone(16000), ProbeSweep(20000, 16000)):
        assert mode_from_dict(mode_to_dict(m)) == m
    with pytest.raises(DomainError):
        mode_from_dict({"kind": "fm"})


@pytest.mark.parametrize(
    "bad",
    [
        lambda: DualTone(20000, 20000),
        lambda: DualTone(15000, 20000),
        lambda: DualTone(20000, 21000, 0.6, 0.6),
        lambda: AmCarrier(25000, 0.0),
        lambda: AmCarrier(25000, 1.5),
    ],
)
def test_mode_invariants(bad):
    with pytest.raises(DomainError):
        bad()


def test_working_rate():
    assert working_rate(AmCarrier()) == 96000
    assert working_rate(ProbeTone(16000)) == 48000
    assert working_rate(DualTone(16500, 17500)) == 48000


# --- AM ------------------------------------------------------------------------


def test_am_silence_is_pure_carrier():
    a = am_modulate(command_from_waveform(silence(1.0)), 25000)
    f, df = dominant_freq(a.emitted.samples[:8192], a.emitted.sample_rate_hz)
    assert abs(f - 25000) <= df
    amp, resid = tone_fit(middle(a.emitted), 25000, a.emitted.sample_rate_hz)
    assert resid < 1e-9 * amp


def test_am_tone_sidebands():
    a = am_modulate(tone_baseband(), 25000, 1.0)
    x, fs = middle(a.emitted), a.emitted.sample_rate_hz
    car = tone_fit(x, 25000, fs)[0]
    lo = tone_fit(x, 24000, fs)[0]
    hi = tone_fit(x, 26000, fs)[0]
    assert lo == pytest.approx(hi, rel=0.01)
    assert lo / car == pytest.approx(0.5, rel=0.01)
    assert a.inaudibility_ratio <= 0.01


@pytest.mark.parametrize("m", [0.25, 0.5, 0.8])
def test_am_sideband_ratio_tracks_mod_index(m):
    a = am_modulate(tone_baseband(), 25000, m)
    x, fs = middle(a.emitted), a.emitted.sample_rate_hz
    assert tone_fit(x, 26000, fs)[0] / tone_fit(x, 25000, fs)[0] == pytest.approx(m / 2, rel=0.02)


def test_am_command_is_inaudible(command):
    a = am_modulate(command, 25000)
    assert a.inaudibility_ratio <= 0.01
    assert a.emitted.peak() <= 0.9 + 1e-12


def test_am_nyquist_precondition(command):
    with pytest.raises(DomainError):
        am_modulate(command, 25000, 1.0, 48000)


# --- dual tone -------------------------------------------------------------------


def test_dual_tone_two_peaks():
    a = dual_tone(20000, 21000, 0.45, 0.45, 1.0)
    w = a.emitted
    mag = np.abs(np.fft.rfft(w.samples * np.hanning(len(w))))
    f = np.fft.rfftfreq(len(w), 1 / w.sample_rate_hz)
    strong = f[mag > 0.1 * mag.max()]
    assert set(np.round(strong / 1000)) == {20.0, 21.0}
    assert a.inaudibility_ratio <= 0.01


def test_dual_tone_equal_freqs_rejected():
    with pytest.raises(DomainError):
        dual_tone(20000, 20000)


# --- near-ultrasound shift ---------------------------------------------------------


def test_near_ultra_tone_single_sideband():
    a = near_ultra_shift(tone_baseband(), 17000)
    x, fs = middle(a.emitted), a.emitted.sample_rate_hz
    upper = tone_fit(x, 18000, fs)[0]
    image = tone_fit(x, 16000, fs)[0]
    assert 20 * np.log10(upper / max(image, 1e-300)) >= 40


def test_near_ultra_silence():
    a = near_ultra_shift(command_from_waveform(silence(0.5)), 16000)
    assert not np.any(a.emitted.samples)


def test_near_ultra_in_guard_band(command):
    a = near_ultra_shift(command, 16000)
    assert band_energy_ratio(a.emitted, GUARD) >= 0.99


def test_near_ultra_rejects_overflow(command):
    with pytest.raises(DomainError):
        near_ultra_shift(command, 19000)
    with pytest.raises(DomainError):
        near_ultra_shift(command, 15000)


def test_near_ultra_preserves_envelope(command):
    a = near_ultra_shift(command, 16000)
    e1 = envelope(resample(command.waveform, a.emitted.sample_rate_hz))
    e2 = envelope(a.emitted)
    assert np.corrcoef(e1, e2)[0, 1] >= 0.95


# --- probes ------------------------------------------------------------------------


def test_probes_match_generators():
    assert probe_tone(16000, 1.0).emitted == generate_tone(16000, 1.0, 0.8, 48000)
    # 20 kHz exceeds the 18 kHz threshold, so the sweep is synthesized at 96 kHz
    assert probe_sweep(20000, 16000, 2.0).emitted == generate_sweep(20000, 16000, 2.0, 0.8, 96000)
    assert probe_sweep(20000, 16000, 2.0, sample_rate_hz=48000).emitted == generate_sweep(
        20000, 16000, 2.0, 0.8, 48000
    )


def test_probe_nyquist_guard():
    with pytest.raises(DomainError):
        probe_tone(30000, 1.0, 48000)


def test_probe_exempt_from_inaudibility():
    p = probe_sweep(20000, 16000, 2.0)
    assert p.is_probe


def test_inaudibility_enforced_for_non_probes():
    # a short burst at the 16 kHz edge spreads well below it
    with pytest.raises(InaudibilityError):
        dual_tone(16000, 16010, 0.45, 0.45, 0.05, 48000)


def test_build_attack_dispatch(command):
    for mode in (AmCarrier(), DualTone(), NearUltraShift(), ProbeTone(16000), ProbeSweep()):
        a = build_attack(mode, command)
        assert a.mode == mode
    with pytest.raises(DomainError):
        build_attack(AmCarrier(), None)
