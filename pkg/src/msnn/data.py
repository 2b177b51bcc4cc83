"""Readers and writers for the visual (IDX) and auditory (WAV) corpora."""

from __future__ import annotations

import csv
import re
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import FormatError, RangeError, TruncationError, UnsupportedFormat

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

_WAV_NAME = re.compile(r"^(\d)_(.+)\.wav$", re.IGNORECASE)


@dataclass
class ImageSample:
    pixels: np.ndarray  # float64, values in [0, 1]
    label: int


@dataclass
class AudioSample:
    samples: np.ndarray  # float64, values in [-1, 1]
    sample_rate: int
    label: int


@dataclass
class DatasetManifest:
    """A labeled list of files for one split and one modality.

    Visual entries address a single image inside an IDX file with a
    ``#index`` suffix, e.g. ``train-images.idx3-ubyte#17``.
    """

    split: str
    modality: str
    entries: list[tuple[str, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be train|test, got {self.split!r}")
        if self.modality not in ("visual", "auditory"):
            raise ValueError(f"modality must be visual|auditory, got {self.modality!r}")
        seen = set()
        for path, label in self.entries:
            if not 0 <= int(label) <= 9:
                raise RangeError(f"label {label} out of range for {path}")
            if path in seen:
                raise ValueError(f"duplicate manifest path {path}")
            seen.add(path)

    def __len__(self):
        return len(self.entries)

    def labels(self) -> np.ndarray:
        return np.array([lab for _, lab in self.entries], dtype=np.int64)

    def samples(self) -> Iterator[ImageSample | AudioSample]:
        idx_cache: dict[str, list[ImageSample]] = {}
        for path, label in self.entries:
            if self.modality == "auditory":
                sample = load_wav(path)
                sample.label = int(label)
            else:
                fname, _, k = path.rpartition("#")
                if fname not in idx_cache:
                    idx_cache[fname] = load_idx_images(fname)
                img = idx_cache[fname][int(k)]
                sample = ImageSample(img.pixels, int(label))
            yield sample


def _read_idx(path, magic: int, ndim: int) -> tuple[tuple[int, ...], bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for an IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise TruncationError(f"{path}: truncated IDX dimension header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:header_len])
    payload = raw[header_len:]
    expected = int(np.prod(dims, dtype=np.int64))
    if len(payload) < expected:
        raise TruncationError(f"{path}: payload has {len(payload)} bytes, header declares {expected}")
    if len(payload) > expected:
        raise FormatError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    return dims, payload


def load_idx_images(path) -> list[ImageSample]:
    """Read an IDX3 image file; pixels are scaled by 1/255.

    Labels are not stored in the image file, so every returned sample
    carries label 0 until paired with ``load_idx_labels``.
    """
    (n, rows, cols), payload = _read_idx(path, IDX_IMAGES_MAGIC, 3)
    data = np.frombuffer(payload, dtype=np.uint8).reshape(n, rows, cols)
    return [ImageSample(data[i].astype(np.float64) / 255.0, 0) for i in range(n)]


def load_idx_labels(path) -> list[int]:
    (n,), payload = _read_idx(path, IDX_LABELS_MAGIC, 1)
    labels = np.frombuffer(payload, dtype=np.uint8)
    if n and labels.max() > 9:
        bad = int(np.argmax(labels > 9))
        raise RangeError(f"{path}: label {labels[bad]} at index {bad} is not a digit")
    return [int(x) for x in labels]


def load_idx_dataset(images_path, labels_path) -> list[ImageSample]:
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if len(images) != len(labels):
        raise FormatError(f"{len(images)} images but {len(labels)} labels")
    for img, lab in zip(images, labels):
        img.label = lab
    return images


def write_idx_images(path, images: np.ndarray) -> None:
    """Write a uint8 array of shape (n, rows, cols) as an IDX3 file."""
    images = np.asarray(images)
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("images must be a uint8 array of shape (n, rows, cols)")
    header = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape)
    Path(path).write_bytes(header + images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    header = struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0])
    Path(path).write_bytes(header + labels.tobytes())


def load_wav(path, label: int = 0) -> AudioSample:
    """Read a 16-bit PCM WAV file, averaging stereo frames to mono."""
    try:
        with wave.open(str(path), "rb") as w:
            n_channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except wave.Error as exc:
        if str(exc).startswith("unknown format"):
            raise UnsupportedFormat(f"{path}: {exc}") from exc
        raise FormatError(f"{path}: {exc}") from exc
    except EOFError as exc:
        raise FormatError(f"{path}: truncated header") from exc
    if width != 2:
        raise UnsupportedFormat(f"{path}: {8 * width}-bit samples; only 16-bit PCM is supported")
    if rate <= 0:
        raise FormatError(f"{path}: sample rate {rate}")
    data = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    if n_channels > 1:
        usable = len(data) - len(data) % n_channels
        data = data[:usable].reshape(-1, n_channels).mean(axis=1)
    return AudioSample(data, rate, label)


def write_wav(path, samples, sample_rate: int, n_channels: int = 1) -> None:
    """Write float samples in [-1, 1] (shape (n,) or (n, channels)) as PCM-16."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 2:
        n_channels = arr.shape[1]
    pcm = np.clip(np.round(arr * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(n_channels)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(pcm.tobytes())


def wav_directory_manifest(directory, split: str) -> DatasetManifest:
    """Build an auditory manifest from files named ``<label>_<id>.wav``."""
    entries = []
    for p in sorted(Path(directory).iterdir()):
        m = _WAV_NAME.match(p.name)
        if m:
            entries.append((str(p), int(m.group(1))))
    return DatasetManifest(split, "auditory", entries)


def idx_manifest(images_path, labels_path, split: str) -> DatasetManifest:
    labels = load_idx_labels(labels_path)
    entries = [(f"{images_path}#{i}", lab) for i, lab in enumerate(labels)]
    return DatasetManifest(split, "visual", entries)


def write_manifest(path, manifests: list[DatasetManifest]) -> None:
    """Write ``path,label,modality`` rows; the split is taken from the first manifest."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label", "modality"])
        for m in manifests:
            for p, lab in m.entries:
                writer.writerow([p, lab, m.modality])


def read_manifest(path, split: str = "train") -> dict[str, DatasetManifest]:
    by_modality: dict[str, list[tuple[str, int]]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_modality.setdefault(row["modality"], []).append((row["path"], int(row["label"])))
    return {mod: DatasetManifest(split, mod, entries) for mod, entries in by_modality.items()}
