"""WAV ingestion and export (PCM16 and float32, mono or multichannel)."""
from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .signals import MultichannelTimeSignal, TimeSignal


def read_wav(path) -> MultichannelTimeSignal:
    """Read a WAV file into float64 channels normalized to [-1, 1]."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format: {data.dtype}")
    if data.ndim == 1:
        data = data[:, None]
    return MultichannelTimeSignal.from_array(data.T, int(rate))


def write_wav(path, signal, subtype="float32", clamp=False):
    """Write a TimeSignal or MultichannelTimeSignal.

    Samples outside [-1, 1] raise unless clamp=True, in which case they
    are clipped.
    """
    if isinstance(signal, TimeSignal):
        data = signal.samples[None, :]
        rate = signal.sample_rate
    else:
        data = signal.as_array()
        rate = signal.sample_rate
    peak = np.max(np.abs(data)) if data.size else 0.0
    if peak > 1.0:
        if not clamp:
            raise ValueError(
                f"output would clip (peak {peak:.3f}); pass clamp to clip")
        data = np.clip(data, -1.0, 1.0)
    out = data.T
    if out.shape[1] == 1:
        out = out[:, 0]
    if subtype == "float32":
        wavfile.write(path, rate, out.astype(np.float32))
    elif subtype == "pcm16":
        scaled = np.clip(np.round(out * 32767.0), -32768, 32767)
        wavfile.write(path, rate, scaled.astype(np.int16))
    else:
        raise ValueError(f"unsupported subtype: {subtype!r}")
