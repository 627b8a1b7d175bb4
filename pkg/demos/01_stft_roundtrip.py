"""STFT analysis/synthesis walkthrough.

Shows that the square-root Hann analysis/synthesis pair reconstructs a
signal to numerical precision away from the edges, and what the
spectrogram of the synthetic speech-shaped test signal looks like.
"""
import numpy as np

from lpwpe import StftConfig, speech_like_noise, stft_analyze, stft_synthesize

FS = 16000

cfg = StftConfig()  # frame 1024, shift 256, sqrt-Hann pair
sig = speech_like_noise(2.0, FS, seed=0)
print(f"signal: {len(sig)} samples at {FS} Hz")

spec = stft_analyze(sig, cfg)
F, N = spec.bins.shape
print(f"spectrogram: {F} bins x {N} frames")

rec = stft_synthesize(spec, cfg)
core = slice(cfg.frame_size, -cfg.frame_size)
err = (np.linalg.norm(rec.samples[core] - sig.samples[core])
       / np.linalg.norm(sig.samples[core]))
print(f"interior round-trip relative error: {err:.2e}")

# crude text rendering of the log-magnitude grid, low frequencies at the
# bottom, one character per (8 bins x 4 frames) cell
mag = np.abs(spec.bins)
db = 20 * np.log10(mag + 1e-12)
db -= db.max()
cells = db[: F // 8 * 8, : N // 4 * 4].reshape(F // 8, 8, N // 4, 4)
cells = cells.mean(axis=(1, 3))
chars = " .:-=+*#%@"
lo, hi = -70.0, 0.0
for row in cells[::-8]:
    idx = np.clip((row - lo) / (hi - lo) * (len(chars) - 1), 0,
                  len(chars) - 1).astype(int)
    print("".join(chars[i] for i in idx))
