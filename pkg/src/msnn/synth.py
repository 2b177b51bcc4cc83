"""Offline stand-in corpora in the real on-disk formats.

MNIST and TIDigits cannot be fetched here, so two generators write files
the loaders consume unchanged:

* ``make_visual_corpus`` - IDX image/label files built from the 1,797
  handwritten digits bundled with scikit-learn, upscaled to a 20x20 box
  inside a 28x28 canvas (MNIST layout) with random shift, rotation and
  stroke-width jitter.  Train and test draw from disjoint source digits.
* ``make_spoken_corpus`` - 16-bit 20 kHz WAV files ``<label>_<id>.wav``
  from a source-filter formant synthesizer.  Every digit word is a fixed
  phone sequence; speakers vary pitch, vocal-tract length, tempo, onset
  and background noise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage, signal

from .data import write_idx_images, write_idx_labels, write_wav

SAMPLE_RATE = 20000

# (kind, F1, F2, F3, duration ms); kind: V voiced, N nasal, F fricative
# noise with (low, high) band in F1/F2, B burst, G glide from one vowel
# (F1, F2) to (F3, next) - see _render.
_PHONES = {
    "z": ("F", 3500, 7000, 0, 90), "s": ("F", 4500, 8000, 0, 110),
    "f": ("F", 1500, 7500, 0, 90), "th": ("F", 2500, 8500, 0, 90),
    "v": ("VF", 200, 3000, 0, 60), "t": ("B", 3000, 6000, 0, 25),
    "k": ("B", 1500, 3500, 0, 30), "w": ("V", 300, 700, 2300, 60),
    "r": ("V", 450, 1200, 1600, 70), "n": ("N", 250, 1800, 2600, 80),
    "i": ("V", 280, 2250, 2900, 150), "I": ("V", 390, 1990, 2550, 110),
    "e": ("V", 530, 1840, 2480, 130), "u": ("V", 300, 870, 2240, 180),
    "o": ("V", 500, 900, 2400, 170), "a": ("V", 730, 1090, 2440, 90),
    "U": ("V", 640, 1190, 2390, 140), "O": ("V", 570, 840, 2410, 170),
    "@": ("V", 500, 1500, 2500, 70), "ai": ("G", 730, 1090, 2440, 230),
    "ei": ("G", 530, 1840, 2480, 200),
}
_GLIDE_END = {"ai": (300, 2200), "ei": (350, 2250)}

DIGIT_PHONES = {
    0: ["z", "I", "r", "o"],
    1: ["w", "U", "n"],
    2: ["t", "u"],
    3: ["th", "r", "i"],
    4: ["f", "O", "r"],
    5: ["f", "ai", "v"],
    6: ["s", "I", "k", "s"],
    7: ["s", "e", "v", "@", "n"],
    8: ["ei", "t"],
    9: ["n", "ai", "n"],
}


def _resonator(x, freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    theta = 2 * np.pi * freq / fs
    a = [1.0, -2 * r * np.cos(theta), r * r]
    return signal.lfilter([1.0 - r], a, x)


def _voice_source(n, f0, fs, rng):
    jitter = 1.0 + 0.02 * rng.standard_normal(n)
    phase = np.cumsum(f0 * jitter / fs)
    pulses = np.diff(np.floor(phase), prepend=0.0)
    return signal.lfilter([1.0], [1.0, -0.95], pulses)


def _render(phone, f0, scale, tempo, fs, rng):
    kind, a1, a2, a3, dur = _PHONES[phone]
    n = max(8, int(dur * tempo * fs / 1000))
    env = np.hanning(n) ** 0.5
    if kind in ("F", "B"):
        noise = rng.standard_normal(n)
        sos = signal.butter(4, [a1 * scale / (fs / 2), min(a2 * scale, fs / 2 - 100) / (fs / 2)],
                            btype="band", output="sos")
        gain = 0.5 if kind == "F" else 0.9
        return gain * env * signal.sosfilt(sos, noise)
    src = _voice_source(n, f0, fs, rng)
    if kind == "G":
        b1, b2 = _GLIDE_END[phone]
        out = np.zeros(n)
        half = n // 2
        for seg, (f1, f2) in ((slice(0, half), (a1, a2)), (slice(half, n), (b1, b2))):
            part = src[seg]
            out[seg] = _resonator(part, f1 * scale, 80, fs) + 0.6 * _resonator(part, f2 * scale, 120, fs) \
                + 0.3 * _resonator(part, a3 * scale, 160, fs)
        return env * out
    y = (_resonator(src, a1 * scale, 80, fs) + 0.6 * _resonator(src, a2 * scale, 120, fs)
         + 0.3 * _resonator(src, a3 * scale, 160, fs))
    if kind == "N":
        y *= 0.35
    if kind == "VF":
        sos = signal.butter(2, [a1 / (fs / 2), a2 / (fs / 2)], btype="band", output="sos")
        y = 0.5 * y + 0.3 * signal.sosfilt(sos, rng.standard_normal(n))
    return env * y


def synthesize_digit(label: int, rng: np.random.Generator, fs: int = SAMPLE_RATE,
                     seconds: float = 1.0) -> np.ndarray:
    """One utterance of ``label`` by a random speaker, peak-normalized to 0.9."""
    f0 = rng.uniform(90, 260)
    scale = rng.uniform(0.85, 1.2)
    tempo = rng.uniform(0.75, 1.3)
    parts = [_render(ph, f0, scale, tempo * rng.uniform(0.85, 1.15), fs, rng) for ph in DIGIT_PHONES[label]]
    parts = [p / (np.max(np.abs(p)) + 1e-12) * rng.uniform(0.6, 1.0) for p in parts]
    word = np.concatenate(parts)
    total = int(seconds * fs)
    word = word[:total]
    out = np.zeros(total)
    onset = rng.integers(0, max(1, total - len(word)))
    out[onset:onset + len(word)] = word
    out += rng.standard_normal(total) * 10 ** (rng.uniform(-3.0, -2.0))
    return 0.9 * out / np.max(np.abs(out))


def make_spoken_corpus(out_dir, n_per_class: int, seed: int = 0, fs: int = SAMPLE_RATE) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for label in range(10):
        for k in range(n_per_class):
            rng = np.random.default_rng([seed, label, k])
            path = out_dir / f"{label}_{k:05d}.wav"
            write_wav(path, synthesize_digit(label, rng, fs), fs)
            paths.append(path)
    return paths


def _place(digit8: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    img = ndimage.zoom(digit8 / 16.0, 2.5, order=1)
    img = ndimage.rotate(img, rng.uniform(-12, 12), reshape=False, order=1)
    if rng.random() < 0.3:
        img = ndimage.grey_dilation(img, size=(2, 2))
    canvas = np.zeros((28, 28))
    dy, dx = rng.integers(-2, 3, size=2)
    canvas[4 + dy:24 + dy, 4 + dx:24 + dx] = img
    return np.clip(canvas, 0.0, 1.0)


def make_visual_corpus(out_dir, n_train: int, n_test: int, seed: int = 0) -> dict[str, Path]:
    """Write ``train``/``test`` IDX image and label files; returns their paths."""
    from sklearn.datasets import load_digits

    digits = load_digits()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    order = np.random.default_rng([seed, 0]).permutation(len(digits.target))
    cut = int(0.78 * len(order))
    pools = {"train": order[:cut], "test": order[cut:]}
    paths = {}
    for split, n in (("train", n_train), ("test", n_test)):
        rng = np.random.default_rng([seed, 1 if split == "train" else 2])
        pool = pools[split]
        src = pool[np.arange(n) % len(pool)]
        images = np.stack([_place(digits.images[i], rng) for i in src])
        labels = digits.target[src]
        img_path = out_dir / f"{split}-images-idx3-ubyte"
        lab_path = out_dir / f"{split}-labels-idx1-ubyte"
        write_idx_images(img_path, np.round(images * 255).astype(np.uint8))
        write_idx_labels(lab_path, labels)
        paths[f"{split}_images"] = img_path
        paths[f"{split}_labels"] = lab_path
    return paths
