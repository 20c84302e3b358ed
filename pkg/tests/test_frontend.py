import struct
import wave

import numpy as np
import pytest

from sentasr.errors import FileFormatError
from sentasr.frontend import (AudioBuffer, FrontendConfig, load_wav, log_mel,
                              mel_filterbank)


def _write_wav(path, samples_i16, rate=16000, channels=1, width=2):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(samples_i16.tobytes())


def test_one_second_gives_98_frames():
    audio = AudioBuffer(samples=np.random.default_rng(0).uniform(-0.5, 0.5, 16000),
                        sample_rate=16000)
    seq = log_mel(audio)
    assert seq.values.shape == (98, 80)
    assert seq.frame_period == 0.01
    assert seq.values.dtype == np.float32


def test_frame_count_formula():
    # T = 1 + floor((N - win) / hop) with win=400, hop=160 at 16 kHz
    for n in (400, 401, 559, 560, 561, 8000):
        audio = AudioBuffer(samples=np.zeros(n), sample_rate=16000)
        assert log_mel(audio).length == 1 + (n - 400) // 160


def test_silence_hits_log_floor_exactly():
    audio = AudioBuffer(samples=np.zeros(16000), sample_rate=16000)
    seq = log_mel(audio)
    expect = np.float32(np.log(1e-6))
    assert np.all(seq.values == expect)


def test_too_short_raises():
    audio = AudioBuffer(samples=np.zeros(399), sample_rate=16000)
    with pytest.raises(ValueError, match="shorter"):
        log_mel(audio)


def test_deterministic():
    rng = np.random.default_rng(3)
    audio = AudioBuffer(samples=rng.uniform(-1, 1, 4800), sample_rate=16000)
    a = log_mel(audio).values
    b = log_mel(audio).values
    assert np.array_equal(a, b)


def test_energy_monotone_in_amplitude():
    rng = np.random.default_rng(4)
    base = rng.uniform(-0.1, 0.1, 3200)
    quiet = log_mel(AudioBuffer(samples=base, sample_rate=16000)).values
    loud = log_mel(AudioBuffer(samples=base * 8, sample_rate=16000)).values
    assert loud.mean() > quiet.mean()


def test_tone_concentrates_energy():
    """A pure tone should put its mass in a narrow band of mel bins."""
    t = np.arange(16000) / 16000.0
    tone = 0.5 * np.sin(2 * np.pi * 1000.0 * t)
    seq = log_mel(AudioBuffer(samples=tone, sample_rate=16000))
    mean_per_bin = seq.values.mean(axis=0)
    top = np.argmax(mean_per_bin)
    floor = np.log(1e-6)
    assert mean_per_bin[top] > floor + 5.0
    # far-away bins stay near the floor
    assert mean_per_bin[-1] < mean_per_bin[top] - 5.0


def test_filterbank_shape_and_support():
    fb = mel_filterbank(80, 512, 16000)
    assert fb.shape == (257, 80)
    assert (fb >= 0).all()
    # every filter has some support and peaks at 1 somewhere near its center
    assert (fb.max(axis=0) > 0).all()
    assert fb.max() <= 1.0 + 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        FrontendConfig(window_ms=10.0, hop_ms=10.0)
    with pytest.raises(ValueError):
        FrontendConfig(mel_bins=0)


def test_load_wav_roundtrip(tmp_path):
    rng = np.random.default_rng(5)
    samples = (rng.uniform(-0.5, 0.5, 1000) * 32768).astype("<i2")
    p = tmp_path / "x.wav"
    _write_wav(p, samples)
    audio = load_wav(p)
    assert audio.sample_rate == 16000
    assert len(audio.samples) == 1000
    np.testing.assert_array_equal(audio.samples,
                                  samples.astype(np.float64) / 32768.0)


def test_load_wav_sample_scaling(tmp_path):
    p = tmp_path / "s.wav"
    _write_wav(p, np.array([16384, -32768, 0], dtype="<i2"))
    audio = load_wav(p)
    np.testing.assert_array_equal(audio.samples, [0.5, -1.0, 0.0])


def test_load_wav_rejects_stereo(tmp_path):
    p = tmp_path / "st.wav"
    _write_wav(p, np.zeros(64, dtype="<i2"), channels=2)
    with pytest.raises(FileFormatError, match="mono"):
        load_wav(p)


def test_load_wav_rejects_8bit(tmp_path):
    p = tmp_path / "w8.wav"
    with wave.open(str(p), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(1)
        w.setframerate(16000)
        w.writeframes(b"\x00" * 64)
    with pytest.raises(FileFormatError, match="PCM16"):
        load_wav(p)


def test_load_wav_rejects_garbage(tmp_path):
    p = tmp_path / "g.wav"
    p.write_bytes(b"RIFFgarbage" + b"\x00" * 20)
    with pytest.raises(FileFormatError):
        load_wav(p)


def test_pipeline_from_wav(tmp_path):
    rng = np.random.default_rng(6)
    samples = (rng.uniform(-0.2, 0.2, 16000) * 32768).astype("<i2")
    p = tmp_path / "u.wav"
    _write_wav(p, samples)
    seq = log_mel(load_wav(p))
    assert seq.values.shape == (98, 80)
    assert np.isfinite(seq.values).all()
