"""Multichannel linear-prediction dereverberation core.

Per frequency bin, the late reverberant tail of the reference channel is
modeled as delayed, filtered copies of all channels and subtracted.  The
prediction filter minimizes a sparsity-promoting lp objective (0 < p <= 2)
via iteratively reweighted least squares: each iteration solves a weighted
normal-equations system in closed form, then refreshes the weights
w = |d|^(2-p) + epsilon from the current output d.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signals import Spectrogram


@dataclass(frozen=True)
class WpeConfig:
    filter_length: int = 15
    iterations: int = 10
    p: float = 0.5
    epsilon: float = 1e-7
    base_delay: int = 2
    ridge: float = 1e-10

    def __post_init__(self):
        if self.filter_length < 1:
            raise ValueError("filter_length must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 < self.p <= 2.0:
            raise ValueError("p must lie in (0, 2]")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.base_delay < 1:
            raise ValueError("base_delay must be >= 1")
        if self.ridge < 0.0:
            raise ValueError("ridge must be >= 0")


@dataclass(frozen=True)
class WpeResult:
    output: Spectrogram
    filters: np.ndarray            # (F, M*L_g) stacked channel-major
    cost_trace: np.ndarray         # length iterations_run + 1, raw lp^p cost
    iterations_run: int
    smoothed_cost_trace: np.ndarray | None = None  # surrogate the IRLS decreases


def _delayed_stack(channel_bins, delays_row, filter_length):
    """All-bins delayed convolution tensor of shape (F, N, M*L_g).

    Column block m, tap l holds x_m(f, n - tau_m - l); frame indices
    before the start of the utterance contribute zero.
    """
    M = len(channel_bins)
    F, N = channel_bins[0].shape
    max_delay = int(np.max(delays_row))
    if N <= filter_length + max_delay:
        raise ValueError("utterance too short")
    X = np.zeros((F, N, M * filter_length), dtype=np.complex128)
    for m in range(M):
        tau = int(delays_row[m])
        if tau < 1:
            raise ValueError("prediction delays must be >= 1")
        for l in range(filter_length):
            s = tau + l
            X[:, s:, m * filter_length + l] = channel_bins[m][:, :N - s]
    return X


def build_delayed_convolution(specs, delays_row, filter_length, f):
    """Delayed convolution matrix (N x M*L_g) for one frequency bin."""
    bins = [s.bins[f][None, :] for s in specs]
    return _delayed_stack(bins, delays_row, filter_length)[0]


def solve_weighted_ls(X, x_r, w, ridge=1e-10):
    """Minimize sum_n |x_r(n) - (X g)(n)|^2 / w(n) via normal equations.

    Accepts a single (N, K) system or a batch (..., N, K); weights must be
    strictly positive.  A relative ridge on the Gram diagonal keeps silent
    bins solvable (X = 0 yields g = 0).
    """
    X = np.asarray(X, dtype=np.complex128)
    x_r = np.asarray(x_r, dtype=np.complex128)
    w = np.asarray(w, dtype=np.float64)
    Xw = X / w[..., :, None]
    XwH = np.swapaxes(Xw, -1, -2).conj()
    gram = XwH @ X
    rhs = (XwH @ x_r[..., :, None])[..., 0]
    k = gram.shape[-1]
    diag_mean = np.einsum("...ii->...", gram).real / k
    reg = ridge * diag_mean + 1e-300
    gram = gram + reg[..., None, None] * np.eye(k)
    try:
        g = np.linalg.solve(gram, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate system") from exc
    if not np.all(np.isfinite(g)):
        raise ValueError("degenerate system")
    return g


def update_weights(d_hat, p, epsilon):
    """IRLS weight refresh w(n) = |d(n)|^(2-p) + epsilon, element-wise."""
    if not 0.0 < p <= 2.0:
        raise ValueError("p must lie in (0, 2]")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    return np.abs(d_hat) ** (2.0 - p) + epsilon


def lp_cost(bins, p):
    """Raw broadband cost sum_f sum_n |d(f,n)|^p."""
    return float(np.sum(np.abs(bins) ** p))


def smoothed_lp_cost(bins, p, epsilon):
    """Smoothed surrogate sum_f sum_n (|d|^2 + eps_s)^(p/2).

    eps_s is chosen so the surrogate's majorizer weight at d = 0 matches
    the epsilon-floored IRLS weight; this is the quantity the iteration
    provably decreases.
    """
    if p >= 2.0:
        return float(np.sum(np.abs(bins) ** 2))
    eps_s = epsilon ** (2.0 / (2.0 - p))
    return float(np.sum((np.abs(bins) ** 2 + eps_s) ** (p / 2.0)))


def run_wpe(specs, r, delays, cfg, iterations_override=None) -> WpeResult:
    """Dereverberate reference channel r of the M input spectrograms.

    The prediction filter starts at zero, so iteration 0 returns the raw
    reference channel; cost_trace holds the broadband lp^p cost after each
    iteration including iteration 0.
    """
    M = len(specs)
    if not 0 <= r < M:
        raise ValueError("reference index out of range")
    shape = specs[0].bins.shape
    for s in specs[1:]:
        if s.bins.shape != shape:
            raise ValueError("mismatched spectrogram shapes")
    iters = cfg.iterations if iterations_override is None else iterations_override
    if iterations_override is not None and not 0 <= iterations_override <= cfg.iterations:
        raise ValueError("iterations_override must lie in [0, cfg.iterations]")

    x_r = specs[r].bins
    filters = np.zeros((shape[0], M * cfg.filter_length), dtype=np.complex128)
    d = x_r.copy()
    trace = [lp_cost(d, cfg.p)]
    smoothed = [smoothed_lp_cost(d, cfg.p, cfg.epsilon)]
    if iters > 0:
        X = _delayed_stack([s.bins for s in specs], delays.tau[:, r],
                           cfg.filter_length)
        for _ in range(iters):
            w = update_weights(d, cfg.p, cfg.epsilon)
            filters = solve_weighted_ls(X, x_r, w, cfg.ridge)
            d = x_r - (X @ filters[..., None])[..., 0]
            trace.append(lp_cost(d, cfg.p))
            smoothed.append(smoothed_lp_cost(d, cfg.p, cfg.epsilon))
    ref = specs[r]
    out = Spectrogram(d, ref.shift, ref.sample_rate, ref.signal_length)
    return WpeResult(out, filters, np.asarray(trace), iters,
                     np.asarray(smoothed))
