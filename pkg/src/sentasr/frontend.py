"""PCM audio to log-mel feature sequences.

80 mel bins from a 25 ms window shifted every 10 ms, Hann-windowed power
spectrum through an HTK-style mel filterbank, log-compressed with a fixed
floor. 16 kHz input is assumed; resampling is out of scope.
"""

import wave
from dataclasses import dataclass

import numpy as np

from .errors import FileFormatError
from .features import FeatureSequence


@dataclass
class AudioBuffer:
    samples: np.ndarray     # float64 in [-1, 1]
    sample_rate: int


@dataclass
class FrontendConfig:
    window_ms: float = 25.0
    hop_ms: float = 10.0
    mel_bins: int = 80
    fft_size: int = 0       # 0 = next power of two >= window length
    log_floor: float = 1e-6
    normalize: bool = False  # per-utterance mean/variance normalization

    def __post_init__(self):
        if not self.window_ms > self.hop_ms > 0:
            raise ValueError("need window_ms > hop_ms > 0")
        if self.mel_bins < 1:
            raise ValueError("mel_bins must be >= 1")


def load_wav(path):
    """Load a mono PCM16 RIFF/WAVE file, scaled to [-1, 1] by 1/32768."""
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            comp = w.getcomptype()
            rate = w.getframerate()
            n = w.getnframes()
            raw = w.readframes(n)
    except (wave.Error, EOFError) as exc:
        raise FileFormatError(f"not a readable WAV file: {path} ({exc})") from exc
    if comp != "NONE":
        raise FileFormatError(f"unsupported WAV compression {comp!r} in {path}")
    if width != 2:
        raise FileFormatError(f"expected PCM16, got {8 * width}-bit samples in {path}")
    if channels != 1:
        raise FileFormatError(f"expected mono audio, got {channels} channels in {path}")
    if len(raw) != 2 * n:
        raise FileFormatError(f"truncated WAV payload in {path}")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    return AudioBuffer(samples=samples, sample_rate=rate)


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + hz / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (mel / 2595.0) - 1.0)


def mel_filterbank(num_bins, fft_size, sample_rate):
    """Triangular HTK-scale filters over the rfft bins, (fft/2+1, num_bins)."""
    nyquist = sample_rate / 2.0
    mel_points = np.linspace(_hz_to_mel(0.0), _hz_to_mel(nyquist), num_bins + 2)
    hz_points = _mel_to_hz(mel_points)
    bin_freqs = np.arange(fft_size // 2 + 1) * (sample_rate / fft_size)
    fb = np.zeros((fft_size // 2 + 1, num_bins))
    for m in range(num_bins):
        lo, mid, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        up = (bin_freqs - lo) / (mid - lo)
        down = (hi - bin_freqs) / (hi - mid)
        fb[:, m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def log_mel(audio, cfg=None):
    """Frame, window, and mel-filter `audio` into a (T, mel_bins) sequence.

    T = 1 + floor((N - win) / hop). Requires at least one full window.
    """
    cfg = cfg or FrontendConfig()
    sr = audio.sample_rate
    win = int(round(sr * cfg.window_ms / 1000.0))
    hop = int(round(sr * cfg.hop_ms / 1000.0))
    n = len(audio.samples)
    if n < win:
        raise ValueError(f"audio shorter than one window ({n} < {win} samples)")
    nfft = cfg.fft_size
    if nfft <= 0:
        nfft = 1
        while nfft < win:
            nfft *= 2

    frames = 1 + (n - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(frames)[:, None]
    # periodic Hann
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(win) / win)
    segs = audio.samples[idx] * window
    spec = np.fft.rfft(segs, n=nfft, axis=1)
    power = (spec.real ** 2 + spec.imag ** 2)
    fb = mel_filterbank(cfg.mel_bins, nfft, sr)
    feats = np.log(power @ fb + cfg.log_floor)
    if cfg.normalize:
        feats = (feats - feats.mean(axis=0)) / (feats.std(axis=0) + 1e-8)
    return FeatureSequence(values=feats.astype(np.float32),
                           frame_period=cfg.hop_ms / 1000.0)
