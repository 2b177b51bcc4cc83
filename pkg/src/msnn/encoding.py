"""Spike encoders for images and audio, and the MFCC front end.

Spike trains are plain ``uint8`` arrays of shape ``(T, C)``; spectrograms
are float arrays of shape ``(T, F)``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import scipy.fft

from .data import AudioSample, ImageSample
from .errors import ConfigError, RangeError, TooShortError

PRE_EMPHASIS = 0.97


@dataclass
class EncoderConfig:
    """Encoder settings.

    ``fft_window`` and ``fft_hop`` are in samples; ``None`` resolves to
    25 ms and 10 ms at the audio's own sample rate.
    """

    T: int = 28
    mfcc_coeffs: int = 28
    fft_window: int | None = None
    fft_hop: int | None = None
    mel_filters: int = 40
    rng_seed: int = 0

    def __post_init__(self):
        if self.T < 1 or self.mfcc_coeffs < 1:
            raise ConfigError("T and mfcc_coeffs must be >= 1")
        if self.mfcc_coeffs > self.mel_filters:
            raise ConfigError("mfcc_coeffs cannot exceed mel_filters")
        if self.fft_window is not None and self.fft_hop is not None:
            if not self.fft_window >= self.fft_hop >= 1:
                raise ConfigError("need fft_window >= fft_hop >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        keys = {"T", "mfcc_coeffs", "fft_window", "fft_hop", "mel_filters", "rng_seed"}
        unknown = set(d) - keys
        if unknown:
            raise ConfigError(f"unknown encoder keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def window_and_hop(self, sample_rate: int) -> tuple[int, int]:
        win = self.fft_window or int(round(0.025 * sample_rate))
        hop = self.fft_hop or max(1, int(round(0.010 * sample_rate)))
        return win, min(hop, win)


def bernoulli_spikes(p: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Rate-code ``p`` (any shape, values in [0, 1]) into T independent draws.

    A leading time axis is added: the result has shape ``(T, *p.shape)``.
    """
    return (rng.random((T,) + p.shape) < p).astype(np.uint8)


def encode_image_bernoulli(img: ImageSample, cfg: EncoderConfig, rng: np.random.Generator) -> np.ndarray:
    pixels = np.asarray(img.pixels, dtype=np.float64).reshape(-1)
    return bernoulli_spikes(pixels, cfg.T, rng)


def mel_filterbank(n_filters: int, nfft: int, sample_rate: int) -> np.ndarray:
    """Triangular filters on the HTK mel scale, shape ``(n_filters, nfft // 2 + 1)``."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mel_points = np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_filters + 2)
    bins = np.floor((nfft + 1) * mel_to_hz(mel_points) / sample_rate).astype(int)
    fbank = np.zeros((n_filters, nfft // 2 + 1))
    for m in range(1, n_filters + 1):
        left, center, right = bins[m - 1], bins[m], bins[m + 1]
        for k in range(left, center):
            fbank[m - 1, k] = (k - left) / (center - left)
        for k in range(center, right):
            fbank[m - 1, k] = (right - k) / (right - center)
    return fbank


def mfcc_frames(audio: AudioSample, cfg: EncoderConfig) -> np.ndarray:
    """Raw MFCC matrix of shape ``(n_frames, mfcc_coeffs)``, before resampling."""
    x = np.asarray(audio.samples, dtype=np.float64)
    win, hop = cfg.window_and_hop(audio.sample_rate)
    if len(x) < win:
        raise TooShortError(f"audio has {len(x)} samples, window needs {win}")
    emphasized = np.append(x[0], x[1:] - PRE_EMPHASIS * x[:-1])
    n_frames = 1 + (len(x) - win) // hop
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = emphasized[idx] * np.hamming(win)
    nfft = 1 << (win - 1).bit_length()
    power = np.abs(np.fft.rfft(frames, nfft)) ** 2 / nfft
    energies = power @ mel_filterbank(cfg.mel_filters, nfft, audio.sample_rate).T
    log_energies = np.log(np.maximum(energies, np.finfo(np.float64).eps))
    return scipy.fft.dct(log_energies, type=2, axis=1, norm="ortho")[:, : cfg.mfcc_coeffs]


def resample_frames(frames: np.ndarray, T: int) -> np.ndarray:
    """Linearly interpolate along time to exactly T frames."""
    n = frames.shape[0]
    if n == 1:
        return np.repeat(frames, T, axis=0)
    src = np.arange(n)
    dst = np.linspace(0.0, n - 1, T)
    return np.stack([np.interp(dst, src, frames[:, j]) for j in range(frames.shape[1])], axis=1)


def minmax_columns(spec: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; zero-range columns become 0."""
    lo = spec.min(axis=0)
    span = spec.max(axis=0) - lo
    out = np.zeros_like(spec)
    ok = span > 0
    out[:, ok] = (spec[:, ok] - lo[ok]) / span[ok]
    return out


def compute_mfcc(audio: AudioSample, cfg: EncoderConfig) -> np.ndarray:
    """Normalized ``(T, mfcc_coeffs)`` spectrogram with values in [0, 1]."""
    return minmax_columns(resample_frames(mfcc_frames(audio, cfg), cfg.T))


def encode_spectrogram(spec: np.ndarray, cfg: EncoderConfig, rng: np.random.Generator) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.float64)
    if spec.size and (spec.min() < 0.0 or spec.max() > 1.0):
        raise RangeError("spectrogram values must lie in [0, 1]")
    return (rng.random(spec.shape) < spec).astype(np.uint8)
