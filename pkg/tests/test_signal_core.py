import numpy as np
import pytest

from inaudible.signal_core import (
    AUDIBLE,
    FILTER_PRESETS,
    GUARD,
    Band,
    DomainError,
    FilterSpec,
    MalformedWavError,
    MultichannelWavError,
    UnsupportedCodecError,
    Waveform,
    add_awgn,
    alias_frequency,
    apply_filter,
    band_energy,
    band_energy_ratio,
    decimate_no_aa,
    decimate_with_aa,
    design_filter,
    fft_magnitude,
    filter_waveform,
    generate_sweep,
    generate_tone,
    mix,
    normalize_peak,
    read_pgm,
    resample,
    scale,
    silence,
    spectrogram_image,
    spectrogram_to_image,
    stft_spectrogram,
    wav_read,
    wav_write,
)

from oracles import alias_oracle, amplitude_spectrum, dominant_freq, rms, sinusoid, tone_fit


# --- types -----------------------------------------------------------------


def test_waveform_is_immutable_and_float():
    w = Waveform([0, 1, 2], 8000)
    assert w.samples.dtype == np.float64
    with pytest.raises(ValueError):
        w.samples[0] = 5.0


@pytest.mark.parametrize("bad", [dict(samples=[[1, 2]], sample_rate_hz=8000), dict(samples=[1], sample_rate_hz=0)])
def test_waveform_rejects_bad_input(bad):
    with pytest.raises(DomainError):
        Waveform(**bad)


def test_waveform_equality_compares_samples_and_rate():
    assert Waveform([1.0, 2.0], 8000) == Waveform([1.0, 2.0], 8000)
    assert Waveform([1.0, 2.0], 8000) != Waveform([1.0, 2.0], 16000)


def test_band_validation():
    with pytest.raises(DomainError):
        Band(5, 5)
    with pytest.raises(DomainError):
        Band(-1, 5)
    assert GUARD.to_list() == [16000.0, 22000.0]
    assert AUDIBLE.high_hz == GUARD.low_hz


@pytest.mark.parametrize(
    "spec",
    [
        lambda: FilterSpec("notch", (1000.0,)),
        lambda: FilterSpec("low_pass", (1000.0, 2000.0)),
        lambda: FilterSpec("band_stop", (2000.0, 1000.0)),
        lambda: FilterSpec("low_pass", (1000.0,), order=3),
    ],
)
def test_filter_spec_validation(spec):
    with pytest.raises(DomainError):
        spec()


# --- generators --------------------------------------------------------------


def test_tone_16k_peak_bin():
    w = generate_tone(16000, 1.0, 0.8, 48000)
    s = fft_magnitude(w)
    nearest = np.argmin(np.abs(s.bin_freqs_hz - 16000))
    assert np.argmax(s.magnitudes) == nearest


def test_tone_zero_amplitude_is_silent():
    assert not np.any(generate_tone(1000, 1.0, 0.0, 48000).samples)


def test_tone_quarter_period_identity():
    w = generate_tone(1000, 0.01, 1.0, 8000)
    assert len(w) == 80
    assert w.samples[0] == 0.0
    assert w.samples[2] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("freq", [0.0, -5.0, 24000.0, 30000.0])
def test_tone_nyquist_guard(freq):
    with pytest.raises(DomainError):
        generate_tone(freq, 1.0, 0.5, 48000)


def test_tone_amplitude_range():
    with pytest.raises(DomainError):
        generate_tone(1000, 1.0, 1.5)


def test_degenerate_sweep_equals_tone():
    np.testing.assert_array_equal(
        generate_sweep(5000, 5000, 1.0, 0.5, 48000).samples, generate_tone(5000, 1.0, 0.5, 48000).samples
    )


def test_sweep_instantaneous_frequency_midpoint():
    w = generate_sweep(20000, 16000, 2.0, 0.8, 48000)
    s = stft_spectrogram(w, 1024, 256)
    ridge = s.ridge_hz()
    i = np.argmin(np.abs(s.frame_times_s - 1.0))
    assert abs(ridge[i] - 18000) <= 48000 / 1024


def test_sweep_phase_matches_closed_form():
    fs, d = 48000, 0.5
    w = generate_sweep(1000, 3000, d, 1.0, fs)
    t = np.arange(len(w)) / fs
    np.testing.assert_allclose(w.samples, np.sin(2 * np.pi * (1000 * t + 2000 * t**2 / (2 * d))), atol=1e-9)


def test_mix_pads_and_checks_rate():
    a = Waveform([1.0, 1.0, 1.0], 8000)
    b = Waveform([1.0], 8000)
    np.testing.assert_array_equal(mix(a, b).samples, [2.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        mix(a, Waveform([1.0], 16000))


def test_awgn_deterministic_and_at_target_snr():
    w = generate_tone(1000, 1.0, 0.5)
    a = add_awgn(w, 20.0, seed=7)
    b = add_awgn(w, 20.0, seed=7)
    assert a == b
    noise = a.samples - w.samples
    snr = 10 * np.log10(np.mean(w.samples**2) / np.mean(noise**2))
    assert snr == pytest.approx(20.0, abs=0.5)


def test_awgn_on_silence_is_identity():
    z = silence(0.1)
    assert add_awgn(z, 10.0, 1) == z


def test_normalize_peak_and_scale():
    w = scale(generate_tone(1000, 0.5, 1.0), 0.1)
    assert np.max(np.abs(normalize_peak(w, 1.0).samples)) == pytest.approx(1.0, abs=1e-6)
    assert normalize_peak(silence(0.1), 1.0) == silence(0.1)


# --- spectral ----------------------------------------------------------------


def test_fft_bin_centred_tone_amplitude():
    w = generate_tone(1000, 0.1, 0.5, 48000)
    s = fft_magnitude(w, 4800)
    assert s.peak_freq_hz() == pytest.approx(1000.0)
    assert s.magnitudes.max() == pytest.approx(0.5, rel=0.01)


def test_fft_zero_input():
    assert not np.any(fft_magnitude(silence(0.05)).magnitudes)


def test_fft_two_tones_against_direct_dft():
    fs, n = 40960, 4096  # 10 Hz bins, both tones bin-centred
    x = sinusoid(1000, n, fs, 0.4) + sinusoid(3000, n, fs, 0.4)
    s = fft_magnitude(Waveform(x, fs), n)
    ref = amplitude_spectrum(x, n)
    np.testing.assert_allclose(s.magnitudes, ref, atol=1e-9)
    top2 = np.sort(np.argsort(s.magnitudes)[-2:])
    f = s.bin_freqs_hz[top2]
    assert abs(f[0] - 1000) <= fs / n and abs(f[1] - 3000) <= fs / n
    m = s.magnitudes[top2]
    assert m[0] == pytest.approx(m[1], rel=0.01)


def test_fft_length_checks():
    w = generate_tone(1000, 0.01)
    with pytest.raises(DomainError):
        fft_magnitude(w, len(w) - 1)
    with pytest.raises(DomainError):
        fft_magnitude(Waveform([], 8000))


def test_parseval_with_zero_padding(rng):
    x = rng.standard_normal(1000)
    s = fft_magnitude(Waveform(x, 8000), 2048)
    assert s.energy() == pytest.approx(np.sum(x**2), rel=1e-6)


def test_stft_tone_argmax_every_frame():
    w = generate_tone(16000, 1.0, 0.8, 48000)
    s = stft_spectrogram(w, 1024, 256)
    nearest = np.argmin(np.abs(s.band_freqs_hz - 16000))
    assert np.all(np.argmax(s.magnitudes_db, axis=1) == nearest)


def test_stft_silence_is_floor():
    s = stft_spectrogram(silence(0.2), 512, 128, db_floor=-90)
    assert np.all(s.magnitudes_db == -90)


def test_stft_full_scale_sine_reads_zero_dbfs():
    s = stft_spectrogram(generate_tone(3000, 0.5, 1.0, 48000), 1024, 256)
    assert s.magnitudes_db.max() == pytest.approx(0.0, abs=0.1)


def test_stft_sweep_slope():
    w = generate_sweep(20000, 16000, 2.0, 0.8, 48000)
    s = stft_spectrogram(w, 1024, 256)
    slope = np.polyfit(s.frame_times_s, s.ridge_hz(), 1)[0]
    assert slope == pytest.approx(-2000, rel=0.02)


def test_stft_preconditions():
    w = generate_tone(1000, 0.01)
    with pytest.raises(DomainError):
        stft_spectrogram(w, 1024, 256)
    with pytest.raises(DomainError):
        stft_spectrogram(w, 128, 0)


def test_band_energy_ratio_examples():
    fs = 48000
    assert band_energy_ratio(generate_tone(18000, 1.0, 0.5, fs), GUARD) >= 0.99
    assert band_energy_ratio(generate_tone(1000, 1.0, 0.5, fs), GUARD) <= 0.01
    m = mix(generate_tone(1000, 1.0, 0.4, fs), generate_tone(18000, 1.0, 0.4, fs))
    assert band_energy_ratio(m, GUARD) == pytest.approx(0.5, abs=0.02)


def test_band_energy_ratio_edge_cases():
    assert band_energy_ratio(silence(0.1), GUARD) == 0.0
    with pytest.raises(DomainError):
        band_energy_ratio(generate_tone(1000, 0.1, 0.5, 32000), GUARD)


def test_band_energy_partition(rng):
    w = Waveform(rng.standard_normal(4000), 48000)
    total = np.sum(w.samples**2) - np.sum(w.samples) ** 2 / len(w)
    parts = band_energy(w, Band(0, 16000)) + band_energy(w, Band(16000 + 1e-9, 24000))
    assert parts == pytest.approx(total, rel=1e-9)


# --- filters -----------------------------------------------------------------


def _band_stop():
    return design_filter(FilterSpec("band_stop", (16000.0, 22000.0), 8), 48000)


def test_band_stop_rejects_18k():
    x = generate_tone(18000, 1.0, 0.5)
    y = apply_filter(x, _band_stop())
    # skip the start-up transient
    assert 20 * np.log10(rms(y.samples[4800:]) / rms(x.samples[4800:])) <= -40


def test_band_stop_passes_1k():
    x = generate_tone(1000, 1.0, 0.5)
    y = apply_filter(x, _band_stop())
    assert abs(20 * np.log10(rms(y.samples[4800:]) / rms(x.samples[4800:]))) <= 1


def test_filter_of_zero_is_zero():
    for p in FILTER_PRESETS.values():
        z = silence(0.1, p.sample_rate_hz)
        assert not np.any(filter_waveform(z, p.spec, p.zero_phase).samples)


@pytest.mark.parametrize("name", sorted(FILTER_PRESETS))
def test_presets_meet_targets_by_tone_probe(name):
    p = FILTER_PRESETS[name]
    fs = p.sample_rate_hz
    settle = int(0.1 * fs)
    for f in p.stop_probes_hz:
        x = generate_tone(f, 0.6, 0.5, fs)
        y = filter_waveform(x, p.spec, p.zero_phase)
        att = -20 * np.log10(max(rms(y.samples[settle:-settle]), 1e-300) / rms(x.samples[settle:-settle]))
        assert att >= p.min_stop_db, (f, att)
    for f in p.pass_probes_hz:
        x = generate_tone(f, 0.6, 0.5, fs)
        y = filter_waveform(x, p.spec, p.zero_phase)
        g = 20 * np.log10(rms(y.samples[settle:-settle]) / rms(x.samples[settle:-settle]))
        assert abs(g) <= p.max_pass_db, (f, g)


def test_design_rejects_cutoff_above_nyquist():
    with pytest.raises(DomainError):
        design_filter(FilterSpec("low_pass", (30000.0,)), 48000)


def test_apply_filter_rate_mismatch():
    with pytest.raises(DomainError):
        apply_filter(generate_tone(1000, 0.1, 0.5, 96000), _band_stop())


def test_filter_order_is_prototype_order():
    c = design_filter(FilterSpec("band_stop", (16000.0, 22000.0), 8), 48000)
    assert c.sos.shape[0] * 2 == 16
    c = design_filter(FilterSpec("low_pass", (7000.0,), 8), 48000)
    assert c.sos.shape[0] * 2 == 8


def test_decimate_no_aa_folds_18k_to_2k():
    y = decimate_no_aa(generate_tone(18000, 0.5, 0.5, 48000), 16000)
    f, df = dominant_freq(y.samples[:4000], 16000)
    assert abs(f - 2000) <= df
    assert alias_frequency(18000, 16000) == alias_oracle(18000, 16000) == 2000


def test_decimate_with_aa_removes_18k_and_keeps_1k():
    x = generate_tone(18000, 1.0, 0.5, 48000)
    y = decimate_with_aa(x, 16000, 7000, 8)
    assert 20 * np.log10(rms(y.samples[1600:]) / rms(x.samples)) <= -40
    x = generate_tone(1000, 1.0, 0.5, 48000)
    y = decimate_with_aa(x, 16000, 7000, 8)
    assert abs(20 * np.log10(rms(y.samples[1600:-100]) / rms(x.samples))) <= 1


def test_decimation_preconditions():
    x = generate_tone(1000, 0.1, 0.5, 16000)
    with pytest.raises(DomainError):
        decimate_no_aa(x, 16000)
    with pytest.raises(DomainError):
        decimate_with_aa(generate_tone(1000, 0.1, 0.5, 48000), 16000, 9000)


def test_resample_preserves_tone_amplitude():
    x = generate_tone(1000, 0.5, 0.5, 48000)
    y = resample(x, 44100)
    assert y.sample_rate_hz == 44100
    amp, _ = tone_fit(y.samples[2000:-2000], 1000, 44100)
    assert amp == pytest.approx(0.5, rel=1e-3)
    assert resample(x, 48000) is x


# --- io ----------------------------------------------------------------------


def test_float32_round_trip_exact(tmp_path, rng):
    x = rng.uniform(-1, 1, 1000).astype(np.float32).astype(np.float64)
    w = Waveform(x, 44100)
    wav_write(tmp_path / "a.wav", w)
    assert wav_read(tmp_path / "a.wav") == w


def test_pcm16_full_scale_and_clip(tmp_path):
    rep = wav_write(tmp_path / "a.wav", Waveform([1.0], 8000), "pcm16")
    assert rep.clipped == 0
    assert wav_read(tmp_path / "a.wav").samples[0] >= 32766 / 32768
    rep = wav_write(tmp_path / "b.wav", Waveform([2.0, 0.0], 8000), "pcm16")
    assert rep.clipped == 1
    assert wav_read(tmp_path / "b.wav").samples[0] == 32767 / 32768


def test_wav_read_errors(tmp_path):
    from scipy.io import wavfile

    (tmp_path / "junk.wav").write_bytes(b"not a wav file at all")
    with pytest.raises(MalformedWavError):
        wav_read(tmp_path / "junk.wav")
    wavfile.write(tmp_path / "st.wav", 8000, np.zeros((10, 2), dtype=np.int16))
    with pytest.raises(MultichannelWavError):
        wav_read(tmp_path / "st.wav")
    wavfile.write(tmp_path / "i32.wav", 8000, np.zeros(10, dtype=np.int32))
    with pytest.raises(UnsupportedCodecError):
        wav_read(tmp_path / "i32.wav")
    with pytest.raises(FileNotFoundError):
        wav_read(tmp_path / "missing.wav")


def test_wav_read_truncated_data(tmp_path):
    wav_write(tmp_path / "a.wav", generate_tone(1000, 0.1), "pcm16")
    data = (tmp_path / "a.wav").read_bytes()
    (tmp_path / "t.wav").write_bytes(data[:30])
    with pytest.raises(MalformedWavError):
        wav_read(tmp_path / "t.wav")


def test_image_silence_is_black(tmp_path):
    s = stft_spectrogram(silence(0.2), 256, 64)
    p = spectrogram_to_image(s, tmp_path / "s.pgm")
    img = read_pgm(p)
    assert img.shape == (129, s.shape[0])
    assert not np.any(img)


def test_image_tone_is_one_bright_row(tmp_path):
    s = stft_spectrogram(generate_tone(16000, 0.5, 0.8), 1024, 256)
    img = read_pgm(spectrogram_to_image(s, tmp_path / "t.pgm"))
    assert img.shape == (513, s.shape[0])
    rows = np.argmax(img, axis=0)
    expected = 512 - int(np.argmin(np.abs(s.band_freqs_hz - 16000)))
    assert np.all(np.abs(rows - expected) <= 1)


def test_image_header(tmp_path):
    s = stft_spectrogram(generate_tone(1000, 0.1, 0.5), 256, 128)
    p = spectrogram_to_image(s, tmp_path / "h.pgm")
    head = p.read_bytes()[:20]
    assert head.startswith(f"P5\n{s.shape[0]} 129\n255\n".encode())
    assert np.array_equal(read_pgm(p), spectrogram_image(s))
