"""Time-domain signal containers and STFT analysis/synthesis.

All downstream processing (prediction filtering, reference selection,
metrics) operates on one-sided complex spectrograms produced here with
square-root Hann analysis and synthesis windows at 75% overlap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class TimeSignal:
    """Single-channel real signal, nominal amplitude range [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class MultichannelTimeSignal:
    """M synchronized channels sharing sample rate and length."""

    channels: tuple

    def __post_init__(self):
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        if len(channels) < 1:
            raise ValueError("need at least one channel")
        rate = channels[0].sample_rate
        length = len(channels[0])
        for ch in channels[1:]:
            if ch.sample_rate != rate:
                raise ValueError("channels must share sample_rate")
            if len(ch) != length:
                raise ValueError("channels must share length")

    @property
    def num_channels(self):
        return len(self.channels)

    @property
    def sample_rate(self):
        return self.channels[0].sample_rate

    def as_array(self):
        """Stack channels into an (M, T) array."""
        return np.stack([ch.samples for ch in self.channels])

    @classmethod
    def from_array(cls, array, sample_rate):
        array = np.atleast_2d(np.asarray(array, dtype=np.float64))
        return cls(tuple(TimeSignal(row, sample_rate) for row in array))


def sqrt_hann(length):
    """Square-root of the periodic Hann window."""
    n = np.arange(length)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / length))


@dataclass(frozen=True)
class StftConfig:
    frame_size: int = 1024
    shift: int = 256
    window: str = "sqrt_hann"

    def __post_init__(self):
        if self.frame_size < 2 or (self.frame_size & (self.frame_size - 1)) != 0:
            raise ValueError("frame_size must be a power of two")
        if not 0 < self.shift <= self.frame_size:
            raise ValueError("shift must satisfy 0 < shift <= frame_size")
        if self.window != "sqrt_hann":
            raise ValueError(f"unsupported window kind: {self.window!r}")
        # Constant overlap-add of analysis*synthesis product must hold so
        # that synthesis is exact up to edge effects.
        w2 = sqrt_hann(self.frame_size) ** 2
        ola = np.zeros(2 * self.frame_size)
        for start in range(0, self.frame_size + 1, self.shift):
            ola[start:start + self.frame_size] += w2
        interior = ola[self.frame_size - self.shift:self.frame_size]
        if np.ptp(interior) > 1e-10:
            raise ValueError("window pair does not satisfy constant overlap-add")

    @property
    def num_bins(self):
        return self.frame_size // 2 + 1

    def analysis_window(self):
        return sqrt_hann(self.frame_size)


@dataclass(frozen=True)
class Spectrogram:
    """One-sided complex STFT grid of shape (F, N)."""

    bins: np.ndarray
    shift: int
    sample_rate: int
    signal_length: int | None = None

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        object.__setattr__(self, "bins", bins)
        if bins.ndim != 2 or bins.shape[0] < 1 or bins.shape[1] < 1:
            raise ValueError("bins must be a non-empty F x N grid")
        if not np.all(np.isfinite(bins)):
            raise ValueError("bins must be finite")

    @property
    def num_bins(self):
        return self.bins.shape[0]

    @property
    def num_frames(self):
        return self.bins.shape[1]


def stft_analyze(signal: TimeSignal, cfg: StftConfig) -> Spectrogram:
    """One-sided STFT; the tail is zero-padded to a whole frame."""
    x = signal.samples
    if len(x) < cfg.frame_size:
        raise ValueError("signal too short")
    n_frames = 1 + int(np.ceil((len(x) - cfg.frame_size) / cfg.shift))
    padded_len = (n_frames - 1) * cfg.shift + cfg.frame_size
    x = np.pad(x, (0, padded_len - len(x)))
    frames = sliding_window_view(x, cfg.frame_size)[::cfg.shift]
    spec = np.fft.rfft(frames * cfg.analysis_window(), axis=1)
    return Spectrogram(spec.T, cfg.shift, signal.sample_rate,
                       signal_length=len(signal))


def stft_synthesize(spec: Spectrogram, cfg: StftConfig) -> TimeSignal:
    """Weighted overlap-add inverse of :func:`stft_analyze`."""
    if spec.num_bins != cfg.num_bins or spec.shift != cfg.shift:
        raise ValueError("spectrogram dimensions do not match cfg")
    window = cfg.analysis_window()
    frames = np.fft.irfft(spec.bins.T, n=cfg.frame_size, axis=1) * window
    n_frames = spec.num_frames
    out_len = (n_frames - 1) * cfg.shift + cfg.frame_size
    out = np.zeros(out_len)
    norm = np.zeros(out_len)
    w2 = window ** 2
    for i in range(n_frames):
        start = i * cfg.shift
        out[start:start + cfg.frame_size] += frames[i]
        norm[start:start + cfg.frame_size] += w2
    out /= np.maximum(norm, 1e-12)
    if spec.signal_length is not None:
        out = out[:spec.signal_length]
    return TimeSignal(out, spec.sample_rate)


def analyze_channels(signals: MultichannelTimeSignal, cfg: StftConfig):
    """STFT of every channel; returns a list of Spectrograms."""
    return [stft_analyze(ch, cfg) for ch in signals.channels]


def channel_power(spec: Spectrogram) -> float:
    """Mean of |x(f,n)|^2 over all bins and frames."""
    return float(np.mean(np.abs(spec.bins) ** 2))


def speech_like_noise(duration, sample_rate, seed, pause_fraction=0.3):
    """Synthetic dry test signal with speech-like spectral tilt and a
    syllabic on/off envelope (the temporal sparsity that prediction-error
    dereverberation relies on).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    noise = rng.standard_normal(n)
    # Gentle low-pass tilt (~ -6 dB/oct above ~500 Hz).
    from scipy.signal import lfilter

    rho = np.exp(-2.0 * np.pi * 500.0 / sample_rate)
    shaped = lfilter([1.0 - rho], [1.0, -rho], noise)

    # Random syllable segments of 60-250 ms, some silent.
    env = np.zeros(n)
    pos = 0
    while pos < n:
        seg = int(rng.uniform(0.06, 0.25) * sample_rate)
        if rng.uniform() > pause_fraction:
            env[pos:pos + seg] = rng.lognormal(mean=0.0, sigma=0.6)
        pos += seg
    # 20 ms raised-cosine smoothing of the gate.
    ramp = int(0.02 * sample_rate)
    kernel = np.hanning(2 * ramp + 1)
    kernel /= kernel.sum()
    env = np.convolve(env, kernel, mode="same")

    out = shaped * env
    peak = np.max(np.abs(out))
    if peak > 0:
        out = 0.5 * out / peak
    return TimeSignal(out, sample_rate)
