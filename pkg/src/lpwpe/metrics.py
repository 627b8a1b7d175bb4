"""Objective evaluation: frequency-weighted segmental SNR, segmental SNR,
and relative-improvement scoring over candidate references.

The FWSSNR definition is pinned here (framing, band layout, clamps,
weights) so comparisons within this repo are reproducible bit for bit:
25 ms Hann frames at 10 ms hop, 23 mel-spaced triangular bands between
125 Hz and Nyquist, per-band SNR clamped to [-10, 35] dB, band weights
equal to target band energy to the power 0.2, frames active when their
target energy is within 40 dB of the loudest frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signals import TimeSignal

SNR_FLOOR = -10.0
SNR_CEIL = 35.0
NUM_BANDS = 23
BAND_LO_HZ = 125.0
FRAME_MS = 25.0
HOP_MS = 10.0
ACTIVITY_RANGE_DB = 40.0


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)


def mel_filterbank(num_bands, frame_len, sample_rate, lo_hz, hi_hz):
    """Triangular mel-spaced filterbank over a one-sided spectrum."""
    edges_mel = np.linspace(_hz_to_mel(lo_hz), _hz_to_mel(hi_hz), num_bands + 2)
    edges_hz = _mel_to_hz(edges_mel)
    fft_freqs = np.fft.rfftfreq(frame_len, 1.0 / sample_rate)
    bank = np.zeros((num_bands, len(fft_freqs)))
    for b in range(num_bands):
        lo, mid, hi = edges_hz[b], edges_hz[b + 1], edges_hz[b + 2]
        rising = (fft_freqs - lo) / (mid - lo)
        falling = (hi - fft_freqs) / (hi - mid)
        bank[b] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def _frame_pair(estimate, target, sample_rate):
    n = min(len(estimate), len(target))
    est = estimate[:n]
    tgt = target[:n]
    frame_len = int(round(FRAME_MS * sample_rate / 1000.0))
    hop = int(round(HOP_MS * sample_rate / 1000.0))
    if n < frame_len:
        raise ValueError("signals shorter than one metric frame")
    window = np.hanning(frame_len)
    starts = np.arange(0, n - frame_len + 1, hop)
    est_frames = np.stack([est[s:s + frame_len] for s in starts]) * window
    tgt_frames = np.stack([tgt[s:s + frame_len] for s in starts]) * window
    return est_frames, tgt_frames, frame_len


def _active_mask(tgt_frames):
    energies = np.sum(tgt_frames ** 2, axis=1)
    peak = np.max(energies)
    if peak <= 0.0:
        raise ValueError("silent target")
    return energies > peak * 10.0 ** (-ACTIVITY_RANGE_DB / 10.0)


def fwssnr(estimate: TimeSignal, target: TimeSignal) -> float:
    """Frequency-weighted segmental SNR in dB (higher is better)."""
    if estimate.sample_rate != target.sample_rate:
        raise ValueError("sample rates must match")
    fs = estimate.sample_rate
    est_frames, tgt_frames, frame_len = _frame_pair(
        estimate.samples, target.samples, fs)
    active = _active_mask(tgt_frames)

    bank = mel_filterbank(NUM_BANDS, frame_len, fs, BAND_LO_HZ, fs / 2.0)
    tgt_spec = np.abs(np.fft.rfft(tgt_frames[active], axis=1)) ** 2
    err_spec = np.abs(np.fft.rfft(est_frames[active] - tgt_frames[active],
                                  axis=1)) ** 2
    t_band = tgt_spec @ bank.T
    e_band = err_spec @ bank.T

    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(t_band / np.maximum(e_band, 1e-12))
    snr = np.clip(snr, SNR_FLOOR, SNR_CEIL)
    weights = t_band ** 0.2
    denom = np.sum(weights, axis=1)
    valid = denom > 0.0
    frame_scores = np.sum(weights * snr, axis=1)[valid] / denom[valid]
    if len(frame_scores) == 0:
        raise ValueError("silent target")
    return float(np.mean(frame_scores))


def segsnr(estimate: TimeSignal, target: TimeSignal) -> float:
    """Plain segmental SNR in dB over active frames, clamped per frame."""
    if estimate.sample_rate != target.sample_rate:
        raise ValueError("sample rates must match")
    est_frames, tgt_frames, _ = _frame_pair(
        estimate.samples, target.samples, estimate.sample_rate)
    active = _active_mask(tgt_frames)
    t_energy = np.sum(tgt_frames[active] ** 2, axis=1)
    e_energy = np.sum((est_frames[active] - tgt_frames[active]) ** 2, axis=1)
    snr = 10.0 * np.log10(t_energy / np.maximum(e_energy, 1e-12))
    return float(np.mean(np.clip(snr, SNR_FLOOR, SNR_CEIL)))


def relative_improvement(per_mic_scores, chosen: int) -> float:
    """Score at the chosen reference minus the mean over all references."""
    scores = np.asarray(per_mic_scores, dtype=np.float64)
    if scores.ndim != 1 or len(scores) < 1:
        raise ValueError("need at least one score")
    return float(scores[chosen] - np.mean(scores))


@dataclass(frozen=True)
class MetricReport:
    fwssnr: float
    segsnr: float
    per_mic_fwssnr: tuple
    delta_fwssnr: float
    criterion: str
    chosen: int
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = relative_improvement(self.per_mic_fwssnr, self.chosen)
        if abs(self.delta_fwssnr - expected) > 1e-9:
            raise ValueError("delta_fwssnr inconsistent with per-mic scores")

    def to_dict(self):
        doc = {
            "criterion": self.criterion,
            "chosen": self.chosen,
            "fwssnr_db": self.fwssnr,
            "segsnr_db": self.segsnr,
            "delta_fwssnr_db": self.delta_fwssnr,
            "per_mic_fwssnr_db": list(self.per_mic_fwssnr),
        }
        doc.update(self.extra)
        return doc
