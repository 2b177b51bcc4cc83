"""Four-layer spiking network: spike input, spiking convolution, a
mask-gated recurrent integration layer, and a non-spiking readout.

Each modality has its own convolution and projection branch; projected
currents are summed into the shared integration layer.  The visual branch
sees the whole 28x28 spike image every tick.  The auditory branch sees a
sliding window of the last ``audio_context`` spectrogram rows, so a 5x5
kernel can slide over time-frequency patches as frames arrive.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, fields, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, ShapeError
from .neuron import LayerState, LifParams, adapt_threshold, fire_and_reset, heaviside, lif_integrate

MODALITIES = ("visual", "auditory", "multi")


@dataclass(frozen=True)
class NetworkConfig:
    hidden_size: int = 200
    conv_kernel: int = 5
    conv_channels: int = 8
    conv_stride: int = 2
    n_classes: int = 10
    modality: str = "visual"
    T: int = 28
    image_side: int = 28
    audio_coeffs: int = 28
    audio_context: int = 5
    readout_g: float | None = 0.05  # None: same leak as the LIF layers
    recurrent: bool = True  # False gives the feed-forward control network

    def __post_init__(self):
        if self.hidden_size < 3:
            raise ConfigError("hidden_size must be >= 3")
        if self.modality not in MODALITIES:
            raise ConfigError(f"modality must be one of {MODALITIES}")
        if self.conv_kernel > self.image_side:
            raise ConfigError("conv kernel larger than the image")
        if self.conv_kernel > min(self.audio_context, self.audio_coeffs) and self.uses("auditory"):
            raise ConfigError("conv kernel larger than the auditory context window")
        if self.T < 1 or self.conv_stride < 1 or self.conv_channels < 1:
            raise ConfigError("T, conv_stride and conv_channels must be >= 1")

    def uses(self, modality: str) -> bool:
        return self.modality in (modality, "multi")

    @property
    def branches(self) -> tuple[str, ...]:
        return tuple(m for m in ("v", "a") if self.uses({"v": "visual", "a": "auditory"}[m]))

    def input_shape(self, branch: str) -> tuple[int, int]:
        if branch == "v":
            return (self.image_side, self.image_side)
        return (self.audio_context, self.audio_coeffs)

    def conv_grid(self, branch: str) -> tuple[int, int]:
        h, w = self.input_shape(branch)
        k, s = self.conv_kernel, self.conv_stride
        return ((h - k) // s + 1, (w - k) // s + 1)

    def conv_size(self, branch: str) -> int:
        oh, ow = self.conv_grid(branch)
        return oh * ow * self.conv_channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown model keys: {sorted(unknown)}")
        return cls(**d)


WEIGHT_NAMES = ("W_conv_v", "W_conv_a", "W_proj_v", "W_proj_a", "W_rec", "W_out")


@dataclass
class Weights:
    """Learnable matrices.  Branch weights of an unused modality are None.

    ``W_rec[i, j]`` is the synapse i -> j; the current into j is
    ``S @ (W_rec * mask)``.
    """

    W_rec: np.ndarray
    W_out: np.ndarray
    W_conv_v: np.ndarray | None = None
    W_conv_a: np.ndarray | None = None
    W_proj_v: np.ndarray | None = None
    W_proj_a: np.ndarray | None = None

    def items(self):
        for name in WEIGHT_NAMES:
            value = getattr(self, name)
            if value is not None:
                yield name, value

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.items()})

    def zeros_like(self):
        return type(self)(**{k: np.zeros_like(v) for k, v in self.items()})

    def parameter_count(self, mask=None, recurrent: bool = True) -> int:
        n = 0
        for name, value in self.items():
            if name == "W_rec":
                if not recurrent:
                    continue
                if mask is not None:
                    n += int(np.count_nonzero(np.asarray(mask)))
                    continue
                n += value.size - value.shape[0]
            else:
                n += value.size
        return n


def init_weights(cfg: NetworkConfig, rng: np.random.Generator, dtype=np.float32) -> Weights:
    """Random initial weights, scaled so a fresh network spikes sparsely."""
    H, K = cfg.hidden_size, cfg.n_classes
    kk = cfg.conv_kernel ** 2
    w = {}
    for b in cfg.branches:
        w[f"W_conv_{b}"] = rng.uniform(-1.0, 1.0, (kk, cfg.conv_channels)) * (2.0 / np.sqrt(kk))
        n_in = cfg.conv_size(b)
        w[f"W_proj_{b}"] = rng.normal(0.0, 1.0, (n_in, H)) * (1.5 / np.sqrt(n_in))
    W_rec = rng.uniform(-1.0, 1.0, (H, H)) * (0.5 / np.sqrt(H))
    np.fill_diagonal(W_rec, 0.0)
    w["W_rec"] = W_rec
    w["W_out"] = rng.uniform(-1.0, 1.0, (H, K)) * (10.0 / np.sqrt(H))
    return Weights(**{k: v.astype(dtype) for k, v in w.items()})


def full_mask(n: int) -> np.ndarray:
    m = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(m, 0)
    return m


def conv_params(p: LifParams) -> LifParams:
    """Convolution neurons use a fixed threshold (no adaptation)."""
    return replace(p, beta=0.0, gamma=0.0)


def im2col(images: np.ndarray, k: int, s: int) -> np.ndarray:
    """(B, H, W) -> (B, positions, k*k) patches, row-major positions."""
    win = sliding_window_view(images, (k, k), axis=(-2, -1))[..., ::s, ::s, :, :]
    lead = win.shape[:-4]
    return win.reshape(*lead, win.shape[-4] * win.shape[-3], k * k)


@dataclass
class NetworkState:
    hidden: LayerState
    U: np.ndarray
    conv: dict
    audio_buffer: np.ndarray | None


def initial_state(cfg: NetworkConfig, p: LifParams, batch: int, dtype=np.float32) -> NetworkState:
    conv = {b: LayerState.zeros((batch, cfg.conv_size(b)), dtype, V0=p.V_rest) for b in cfg.branches}
    buf = None
    if "a" in cfg.branches:
        buf = np.zeros((batch, cfg.audio_context, cfg.audio_coeffs), dtype=dtype)
    return NetworkState(
        hidden=LayerState.zeros((batch, cfg.hidden_size), dtype, V0=p.V_rest),
        U=np.zeros((batch, cfg.n_classes), dtype=dtype),
        conv=conv,
        audio_buffer=buf,
    )


def _check_row(x, expected: int, name: str, batch: int):
    if x.ndim != 2 or x.shape != (batch, expected):
        raise ShapeError(f"{name} row has shape {x.shape}, expected ({batch}, {expected})")


def forward_tick(x_v, x_a, state: NetworkState, weights: Weights, mask, p: LifParams,
                 cfg: NetworkConfig, spike_fn=heaviside):
    """Advance the network by one tick.

    ``x_v`` is a batch of flattened spike images ``(B, side*side)`` and
    ``x_a`` a batch of spectrogram spike rows ``(B, audio_coeffs)``; either
    may be None.  Returns the new state and a dict of per-tick quantities
    that the backward passes consume.
    """
    if x_v is None and x_a is None:
        raise ShapeError("at least one modality must be present")
    mask = np.asarray(mask)
    H = cfg.hidden_size
    if mask.shape != (H, H):
        raise ShapeError(f"mask shape {mask.shape} != ({H}, {H})")
    B = state.U.shape[0]
    dtype = state.U.dtype
    pc = conv_params(p)
    row = {}
    I_ff = np.zeros((B, H), dtype=dtype)
    conv_new = dict(state.conv)
    audio_buffer = state.audio_buffer
    for b, x in (("v", x_v), ("a", x_a)):
        if b not in cfg.branches:
            if x is not None:
                raise ShapeError(f"network modality {cfg.modality!r} has no {b} branch")
            continue
        if b == "a":
            if x is None:
                x = np.zeros((B, cfg.audio_coeffs), dtype=dtype)
            _check_row(np.asarray(x), cfg.audio_coeffs, "auditory", B)
            audio_buffer = np.concatenate([audio_buffer[:, 1:], np.asarray(x, dtype=dtype)[:, None]], axis=1)
            img = audio_buffer
        else:
            if x is None:
                x = np.zeros((B, cfg.image_side ** 2), dtype=dtype)
            _check_row(np.asarray(x), cfg.image_side ** 2, "visual", B)
            img = np.asarray(x, dtype=dtype).reshape(B, cfg.image_side, cfg.image_side)
        patches = im2col(img, cfg.conv_kernel, cfg.conv_stride)
        Ic = (patches @ getattr(weights, f"W_conv_{b}")).reshape(B, -1)
        new, row[f"conv_{b}"] = _layer_tick(state.conv[b], Ic, None, pc, spike_fn)
        conv_new[b] = new
        I_ff += new.S_f @ getattr(weights, f"W_proj_{b}")
        row[f"patches_{b}"] = patches
    hid = state.hidden
    S_prev = hid.S
    if cfg.recurrent:
        I_rec = S_prev @ (weights.W_rec * mask.astype(dtype))
    else:
        I_rec = np.zeros_like(I_ff)
    new_h, row["hidden"] = _layer_tick(hid, I_ff, I_rec, p, spike_fn)
    row["S_prev"] = S_prev
    S = new_h.S
    lam = 1.0 - (p.dt / p.C) * (p.g if cfg.readout_g is None else cfg.readout_g)
    U = lam * state.U + S @ weights.W_out
    row["S"] = S
    row["U"] = U
    return NetworkState(new_h, U.astype(dtype), conv_new, audio_buffer), row


def _layer_tick(prev: LayerState, I_ff, I_rec, p: LifParams, spike_fn):
    """One layer tick; ``I_rec=None`` marks a layer whose recurrent channel is idle."""
    idle = I_rec is None
    integ = lif_integrate(prev, I_ff, np.zeros_like(I_ff) if idle else I_rec, p)
    new = adapt_threshold(fire_and_reset(integ, p, spike_fn), p)
    row = {
        "I_ff": I_ff, "Vf_prev": prev.V_f, "Vf_pre": integ.V_f,
        "Sf_prev": prev.S_f, "Sr_prev": prev.S_r, "a_prev": prev.a,
        "Sf": new.S_f, "act_f": prev.ref_clock_f == 0,
    }
    if not idle:
        row.update(I_rec=I_rec, Vr_pre=integ.V_r, Sr=new.S_r, act_r=prev.ref_clock_r == 0)
    return new, row


@dataclass
class ForwardTrace:
    """Per-tick quantities stacked along axis 1 (shape ``(B, T, ...)``)."""

    ticks: dict
    logits: np.ndarray
    T: int

    def __len__(self):
        return self.T

    def layer(self, name: str) -> dict:
        return self.ticks[name]


def _stack(rows: list[dict]) -> dict:
    out = {}
    for key, value in rows[0].items():
        if isinstance(value, dict):
            out[key] = _stack([r[key] for r in rows])
        else:
            out[key] = np.stack([r[key] for r in rows], axis=1)
    return out


def _as_batch(x, cfg: NetworkConfig, width: int):
    if x is None:
        return None
    x = np.asarray(x)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1] != cfg.T or x.shape[2] != width:
        raise ShapeError(f"spike train shape {x.shape} != (B, {cfg.T}, {width})")
    return x


def forward_sequence(x_v, x_a, weights: Weights, mask, cfg: NetworkConfig, p: LifParams,
                     train: bool = False, spike_fn=heaviside, dtype=np.float32):
    """Run T ticks; return ``(logits, trace)`` with ``trace`` None unless training.

    Spike trains are ``(B, T, C)`` (or ``(T, C)`` for a single sample).
    Logits are the readout accumulator at the last tick divided by T.
    """
    x_v = _as_batch(x_v, cfg, cfg.image_side ** 2)
    x_a = _as_batch(x_a, cfg, cfg.audio_coeffs)
    present = [x for x in (x_v, x_a) if x is not None]
    if not present:
        raise ShapeError("at least one modality must be present")
    B = present[0].shape[0]
    state = initial_state(cfg, p, B, dtype)
    rows = []
    for t in range(cfg.T):
        state, row = forward_tick(
            None if x_v is None else x_v[:, t].astype(dtype),
            None if x_a is None else x_a[:, t].astype(dtype),
            state, weights, mask, p, cfg, spike_fn,
        )
        if train:
            rows.append(row)
    logits = state.U / cfg.T
    trace = ForwardTrace(_stack(rows), logits, cfg.T) if train else None
    return logits, trace


def predict(logits) -> np.ndarray | int:
    """Argmax over the last axis; ties resolve to the lowest index."""
    logits = np.asarray(logits)
    out = np.argmax(logits, axis=-1)
    return int(out) if out.ndim == 0 else out


def hidden_rates(trace: ForwardTrace) -> np.ndarray:
    """Time-averaged combined spike rate of the integration layer, ``(B, H)``."""
    return trace.ticks["S"].mean(axis=1)
