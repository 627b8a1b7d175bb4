"""Multichannel speech dereverberation toolkit.

lp-norm weighted-prediction-error dereverberation with microphone-dependent
prediction delays, reference microphone selection via the normalized
lp-norm, an image-source room simulator, and objective quality metrics.
"""
from .delays import (PredictionDelayMatrix, TdoaMatrix,
                     compute_prediction_delays, estimate_tdoa_matrix,
                     gcc_phat)
from .metrics import MetricReport, fwssnr, relative_improvement, segsnr
from .roomsim import (ImpulseResponse, RoomScene, RoomSpec,
                      direct_early_target, elr_oracle, render_scene,
                      simulate_rir)
from .selection import (SelectionCriterion, SelectionResult, lp_score,
                        normalized_lp_score, select_reference)
from .signals import (MultichannelTimeSignal, Spectrogram, StftConfig,
                      TimeSignal, channel_power, speech_like_noise,
                      stft_analyze, stft_synthesize)
from .wavio import read_wav, write_wav
from .wpe import (WpeConfig, WpeResult, build_delayed_convolution, run_wpe,
                  solve_weighted_ls, update_weights)

__all__ = [
    "TimeSignal", "MultichannelTimeSignal", "StftConfig", "Spectrogram",
    "stft_analyze", "stft_synthesize", "channel_power", "speech_like_noise",
    "WpeConfig", "WpeResult", "build_delayed_convolution",
    "solve_weighted_ls", "update_weights", "run_wpe",
    "TdoaMatrix", "PredictionDelayMatrix", "gcc_phat",
    "estimate_tdoa_matrix", "compute_prediction_delays",
    "SelectionCriterion", "SelectionResult", "lp_score",
    "normalized_lp_score", "select_reference",
    "RoomSpec", "ImpulseResponse", "RoomScene", "simulate_rir",
    "render_scene", "direct_early_target", "elr_oracle",
    "MetricReport", "fwssnr", "segsnr", "relative_improvement",
    "read_wav", "write_wav",
]
__version__ = "0.1.0"
