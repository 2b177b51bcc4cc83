"""
Turning images and recordings into spike trains
===============================================

Both senses end up as binary arrays of shape (T, ...) where every entry
is a Bernoulli draw.  Pixels use their intensity as the firing
probability; recordings go through MFCC features that are min-max scaled
per coefficient first.
"""

import tempfile
from pathlib import Path

import numpy as np

from msnn.data import load_idx_dataset, load_wav
from msnn.encoding import EncoderConfig, compute_mfcc, encode_image_bernoulli, encode_spectrogram
from msnn.synth import make_spoken_corpus, make_visual_corpus

root = Path(tempfile.mkdtemp())
paths = make_visual_corpus(root / "vis", 20, 10, seed=0)
wavs = make_spoken_corpus(root / "aud", 1, seed=0)
print("visual files:", sorted(p.name for p in paths.values()))

# --- images ---
images = load_idx_dataset(paths["train_images"], paths["train_labels"])
img = images[0]
cfg = EncoderConfig(T=28)
rng = np.random.default_rng(0)
spikes = encode_image_bernoulli(img, cfg, rng)
print("image label", img.label, "spike array", spikes.shape, spikes.dtype)

# The empirical rate over many ticks approaches the pixel intensity.
long = encode_image_bernoulli(img, EncoderConfig(T=4000), rng)
err = np.abs(long.mean(axis=0) - img.pixels.ravel()).max()
print(f"max |rate - intensity| over 4000 ticks: {err:.3f}")

# --- recordings ---
audio = load_wav(wavs[0], label=int(wavs[0].name[0]))
spec = compute_mfcc(audio, cfg)
print("recording", wavs[0].name, "MFCC matrix", spec.shape, "range", spec.min(), spec.max())
aspikes = encode_spectrogram(spec, cfg, rng)
print("auditory spike array", aspikes.shape, "mean rate", round(float(aspikes.mean()), 3))
