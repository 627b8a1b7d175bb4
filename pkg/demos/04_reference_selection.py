"""Reference microphone selection strategies compared on one scene.

A near and a far microphone, plus a gain-mismatched copy of the near one
(a hot preamp), show why the scale-invariant normalized lp-norm is the
interesting criterion: raw power selection is fooled by the gain, the raw
lp-norm prefers whichever channel is quietest, and the normalized score
tracks actual dereverberation quality.
"""
import numpy as np

from lpwpe import (MultichannelTimeSignal, PredictionDelayMatrix, RoomSpec,
                   SelectionCriterion, StftConfig, TimeSignal, WpeConfig,
                   render_scene, select_reference, simulate_rir,
                   speech_like_noise, stft_analyze)
from lpwpe.selection import LP_NORM, MAX_ORACLE_ELR, MAX_POWER, NORMALIZED_LP

FS = 16000

spec = RoomSpec(
    dimensions=(6.0, 7.0, 2.7), t60=0.6,
    source_position=(2.0, 3.0, 1.5),
    mic_positions=((2.2, 3.2, 1.5),    # near
                   (5.0, 5.0, 1.5),    # far
                   (2.4, 2.8, 1.5)))   # near, but recorded 12 dB hot
scene = simulate_rir(spec)
dry = speech_like_noise(2.0, FS, seed=11)
mixture = render_scene(scene, dry)
channels = list(mixture.channels)
channels[2] = TimeSignal(channels[2].samples * 10 ** (12 / 20), FS)
mixture = MultichannelTimeSignal(tuple(channels))

stft_cfg = StftConfig()
specs = [stft_analyze(ch, stft_cfg) for ch in mixture.channels]
delays = PredictionDelayMatrix.uniform(3, 2)
cfg = WpeConfig(p=0.05)

for criterion in (SelectionCriterion(NORMALIZED_LP, 10),
                  SelectionCriterion(NORMALIZED_LP, 0),
                  SelectionCriterion(LP_NORM, 10),
                  SelectionCriterion(MAX_POWER),
                  SelectionCriterion(MAX_ORACLE_ELR)):
    res = select_reference(specs, criterion, delays, cfg, oracle=scene)
    scores = ", ".join(f"{s:.3g}" for s in res.scores)
    print(f"{criterion.label():22s} chose mic {res.chosen}  [{scores}]")

print("\nmics 0 and 2 sit at the same distance; only the gain differs.")
print("power picks the hot channel, the raw lp-norm picks the quietest")
print("(the far mic), and the normalized lp-norm ranks both near mics")
print("above the far one no matter the gain, agreeing with the ELR oracle.")
