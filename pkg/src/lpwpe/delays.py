"""TDOA estimation (GCC-PHAT) and microphone-dependent prediction delays.

For spatially distributed microphones a channel that hears the source
earlier carries "future" reverberant information relative to the reference,
so its prediction delay is enlarged; a later channel's delay shrinks, with
a floor of one frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import MultichannelTimeSignal, TimeSignal


@dataclass(frozen=True)
class TdoaMatrix:
    """Antisymmetric arrival-time differences in samples.

    delta[m, r] = arrival time at microphone m minus arrival time at
    microphone r.
    """

    delta: np.ndarray
    search_radius: int

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=np.float64)
        object.__setattr__(self, "delta", delta)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
            raise ValueError("delta must be square")
        if np.any(np.abs(np.diag(delta)) > 0):
            raise ValueError("diagonal must be zero")
        if np.max(np.abs(delta + delta.T)) > 1.0:
            raise ValueError("delta must be antisymmetric within 1 sample")


@dataclass(frozen=True)
class PredictionDelayMatrix:
    """Integer frame delays tau[m, r] for every (microphone, reference)."""

    tau: np.ndarray
    base_delay: int

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.int64)
        object.__setattr__(self, "tau", tau)
        if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
            raise ValueError("tau must be square")
        if np.any(tau < 1):
            raise ValueError("all prediction delays must be >= 1")
        if np.any(np.diag(tau) != self.base_delay):
            raise ValueError("diagonal entries must equal base_delay")

    @classmethod
    def uniform(cls, num_channels, base_delay):
        return cls(np.full((num_channels, num_channels), base_delay), base_delay)


def phat_correlogram(a: TimeSignal, b: TimeSignal, max_lag: int):
    """PHAT-weighted cross-correlation over lags [-max_lag, max_lag].

    Returns (lags, values); values[k] correlates a advanced by lags[k]
    against b, so a leading b produces a negative peak lag.
    """
    if len(a) != len(b):
        raise ValueError("signals must have equal length")
    if len(a) < 4 * max_lag:
        raise ValueError("signals too short for requested max_lag")
    if np.sum(a.samples ** 2) < 1e-12 or np.sum(b.samples ** 2) < 1e-12:
        raise ValueError("silent channel")
    n = int(2 ** np.ceil(np.log2(2 * len(a))))
    A = np.fft.rfft(a.samples, n)
    B = np.fft.rfft(b.samples, n)
    cross = A * np.conj(B)
    cross /= np.maximum(np.abs(cross), 1e-12)
    cc = np.fft.irfft(cross, n)
    lags = np.arange(-max_lag, max_lag + 1)
    return lags, cc[lags % n]


def gcc_phat(a: TimeSignal, b: TimeSignal, max_lag: int) -> float:
    """Integer-lag GCC-PHAT delay of a relative to b, in samples."""
    lags, values = phat_correlogram(a, b, max_lag)
    return float(lags[np.argmax(values)])


def estimate_tdoa_matrix(signals: MultichannelTimeSignal, max_lag: int) -> TdoaMatrix:
    """Pairwise GCC-PHAT delays, symmetrized to an antisymmetric matrix."""
    M = signals.num_channels
    if M < 2:
        raise ValueError("need at least two channels")
    raw = np.zeros((M, M))
    for m in range(M):
        for r in range(m + 1, M):
            raw[m, r] = gcc_phat(signals.channels[m], signals.channels[r], max_lag)
            raw[r, m] = gcc_phat(signals.channels[r], signals.channels[m], max_lag)
    delta = (raw - raw.T) / 2.0
    return TdoaMatrix(delta, max_lag)


def compute_prediction_delays(tdoa: TdoaMatrix, base_delay: int,
                              shift: int) -> PredictionDelayMatrix:
    """Map TDOAs to per-pair frame delays.

    tau[m, r] = max(1, base_delay - round(delta[m, r] / shift)); a channel
    arriving earlier than the reference (negative delta) gets a larger
    delay.  The diagonal is forced to base_delay.
    """
    if base_delay < 1:
        raise ValueError("base_delay must be >= 1")
    rounded = np.round(tdoa.delta / shift).astype(np.int64)
    tau = np.maximum(1, base_delay - rounded)
    np.fill_diagonal(tau, base_delay)
    return PredictionDelayMatrix(tau, base_delay)


def default_max_lag(sample_rate):
    """Default TDOA search radius: 50 ms, roughly 17 m of spacing."""
    return int(0.05 * sample_rate)
