"""Reference microphone selection.

Scores every candidate reference channel and picks the winner under one of
four strategies: lp-norm of the dereverberated output, its scale-invariant
lp/l2 normalization (both at a configurable iteration budget), largest
average signal power, or largest oracle early-to-late reverberation ratio.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .signals import Spectrogram, channel_power
from .wpe import WpeConfig, run_wpe

LP_NORM = "lp"
NORMALIZED_LP = "normalized_lp"
MAX_POWER = "max_power"
MAX_ORACLE_ELR = "max_oracle_elr"

_NORM_KINDS = (LP_NORM, NORMALIZED_LP)
_ALL_KINDS = _NORM_KINDS + (MAX_POWER, MAX_ORACLE_ELR)


@dataclass(frozen=True)
class SelectionCriterion:
    kind: str
    iterations: int = 0

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown criterion kind: {self.kind!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")

    @property
    def lower_is_better(self):
        return self.kind in _NORM_KINDS

    def label(self):
        if self.kind in _NORM_KINDS:
            return f"{self.kind}_I{self.iterations}"
        return self.kind


@dataclass(frozen=True)
class SelectionResult:
    chosen: int
    scores: np.ndarray
    per_candidate_outputs: dict | None = None


def lp_score(output: Spectrogram, p: float) -> float:
    """Sum over frequencies of the per-frequency lp-norm of the output."""
    if not 0.0 < p <= 2.0:
        raise ValueError("p must lie in (0, 2]")
    row_norms = np.sum(np.abs(output.bins) ** p, axis=1) ** (1.0 / p)
    return float(np.sum(row_norms))


def normalized_lp_score(output: Spectrogram, p: float) -> float:
    """Sum over frequencies of lp-norm / l2-norm (scale invariant).

    Frequencies whose l2-norm falls below 1e-12 of the grid RMS contribute
    zero.
    """
    if not 0.0 < p <= 2.0:
        raise ValueError("p must lie in (0, 2]")
    if p == 2.0:
        warnings.warn("normalized lp score with p = 2 is constant per "
                      "frequency and cannot discriminate candidates")
    mag = np.abs(output.bins)
    row_p = np.sum(mag ** p, axis=1) ** (1.0 / p)
    row_2 = np.sqrt(np.sum(mag ** 2, axis=1))
    rms = np.sqrt(np.mean(mag ** 2))
    active = row_2 > 1e-12 * rms
    if not np.any(active):
        return 0.0
    return float(np.sum(row_p[active] / row_2[active]))


def select_reference(specs, criterion: SelectionCriterion, delays=None,
                     cfg: WpeConfig | None = None, oracle=None,
                     early_ms=32.0) -> SelectionResult:
    """Evaluate all candidate references under the criterion and pick one.

    Norm-based criteria run WPE with the criterion's iteration budget for
    every candidate (a budget of 0 scores the raw channels); ties break to
    the lowest index.  Oracle-ELR selection requires a simulated scene.
    """
    M = len(specs)
    if M < 1:
        raise ValueError("need at least one channel")

    if criterion.kind == MAX_POWER:
        scores = np.array([channel_power(s) for s in specs])
        return SelectionResult(int(np.argmax(scores)), scores)

    if criterion.kind == MAX_ORACLE_ELR:
        if oracle is None:
            raise ValueError("oracle ELR selection requires a RoomScene")
        from .roomsim import elr_oracle

        scores = np.array([elr_oracle(oracle, m, early_ms) for m in range(M)])
        return SelectionResult(int(np.argmax(scores)), scores)

    if cfg is None or delays is None:
        raise ValueError("norm-based selection requires delays and a WpeConfig")
    score_fn = lp_score if criterion.kind == LP_NORM else normalized_lp_score
    outputs = {}
    scores = np.empty(M)
    for r in range(M):
        result = run_wpe(specs, r, delays, cfg,
                         iterations_override=criterion.iterations)
        outputs[r] = result
        scores[r] = score_fn(result.output, cfg.p)
    return SelectionResult(int(np.argmin(scores)), scores, outputs)
