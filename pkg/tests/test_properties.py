import tempfile
from pathlib import Path

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from inaudible.detect_defend import guard_ratio
from inaudible.scenario_lab import roc_curve
from inaudible.signal_core import (
    GUARD,
    Band,
    FilterSpec,
    Waveform,
    alias_frequency,
    band_energy_ratio,
    decimate_no_aa,
    fft_magnitude,
    filter_waveform,
    generate_tone,
    mix,
    wav_read,
    wav_write,
)

from oracles import alias_oracle, amplitude_spectrum, dominant_freq

finite = st.floats(-1.0, 1.0, allow_nan=False, width=64)
signals = arrays(np.float64, st.integers(2, 600), elements=finite)
settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@given(signals, st.integers(0, 600))
def test_parseval(x, pad):
    s = fft_magnitude(Waveform(x, 8000), len(x) + pad)
    e = float(np.sum(x**2))
    assert abs(s.energy() - e) <= 1e-6 * max(e, 1e-300) or e == 0


@given(signals)
def test_fft_matches_direct_dft(x):
    s = fft_magnitude(Waveform(x, 8000), len(x))
    np.testing.assert_allclose(s.magnitudes, amplitude_spectrum(x), atol=1e-9)


@given(arrays(np.float64, 400, elements=finite), arrays(np.float64, 400, elements=finite),
       st.sampled_from(["low_pass", "high_pass", "band_stop"]), st.booleans())
def test_filter_linearity(a, b, kind, zero_phase):
    cut = (2000.0,) if kind != "band_stop" else (1500.0, 2500.0)
    spec = FilterSpec(kind, cut, 4)
    f = lambda v: filter_waveform(Waveform(v, 8000), spec, zero_phase).samples
    np.testing.assert_allclose(f(a + b), f(a) + f(b), atol=1e-9)


@given(signals, st.floats(1e-3, 1e3))
def test_band_ratio_scale_free(x, g):
    w = Waveform(x, 48000)
    r = band_energy_ratio(w, GUARD)
    assert 0.0 <= r <= 1.0 + 1e-12
    assert abs(band_energy_ratio(Waveform(g * x, 48000), GUARD) - r) <= 1e-9


@given(arrays(np.float64, st.integers(1100, 3000), elements=finite), st.floats(1e-2, 1e2))
def test_guard_ratio_scale_free(x, g):
    w = Waveform(x, 96000)
    assert abs(guard_ratio(Waveform(g * x, 96000)) - guard_ratio(w)) <= 1e-9


@settings(max_examples=25)
@given(st.floats(8500.0, 23500.0))
def test_alias_formula(f):
    y = decimate_no_aa(generate_tone(f, 0.25, 0.5, 48000), 16000)
    assert alias_frequency(f, 16000) == alias_oracle(f, 16000)
    if alias_oracle(f, 16000) < 50:
        return
    peak, df = dominant_freq(y.samples, 16000)
    assert abs(peak - alias_oracle(f, 16000)) <= df


@settings(max_examples=30)
@given(arrays(np.float32, st.integers(1, 300), elements=st.floats(-1, 1, width=32)))
def test_float32_round_trip(x):
    with tempfile.TemporaryDirectory() as d:
        w = Waveform(x.astype(np.float64), 22050)
        wav_write(Path(d) / "a.wav", w)
        assert wav_read(Path(d) / "a.wav") == w


@settings(max_examples=30)
@given(arrays(np.float64, st.integers(1, 300), elements=finite))
def test_pcm16_quantization_bound(x):
    with tempfile.TemporaryDirectory() as d:
        wav_write(Path(d) / "a.wav", Waveform(x, 8000), "pcm16")
        back = wav_read(Path(d) / "a.wav").samples
        assert np.max(np.abs(back - np.clip(x, -1, 32767 / 32768))) <= 0.5 / 32768 + 1e-12


@given(signals, signals)
def test_mix_commutes(a, b):
    assert mix(Waveform(a, 8000), Waveform(b, 8000)) == mix(Waveform(b, 8000), Waveform(a, 8000))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.lists(st.floats(0, 1), min_size=1, max_size=40))
def test_roc_is_monotone_step(neg, pos):
    r = roc_curve(neg, pos)
    f = np.array([p[0] for p in r.points])
    t = np.array([p[1] for p in r.points])
    assert np.all(np.diff(f) >= 0) and np.all(np.diff(t) >= 0)
    assert 0.0 <= r.auc <= 1.0


@given(st.floats(0.1, 7000), st.floats(0.2, 0.9))
def test_band_edges_inclusive(lo, width):
    hi = lo + width * (24000 - lo)
    b = Band(lo, hi)
    assert b.low_hz < b.high_hz
