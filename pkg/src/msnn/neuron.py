"""Leaky integrate-and-fire dynamics with two potential channels and an
adaptive threshold.

All functions are vectorized over arbitrary leading (batch) dimensions and
return fresh ``LayerState`` objects; nothing is updated in place.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

import numpy as np

from .errors import ConfigError, NumericsError


@dataclass(frozen=True)
class LifParams:
    C: float = 1.0
    g: float = 0.2
    V_rest: float = 0.0
    V_reset: float = 0.0
    V_th: float = 0.5
    tau_ref: float = 1.0
    dt: float = 1.0
    alpha: float = 0.9
    beta: float = 0.1
    gamma: float = 1.0

    def __post_init__(self):
        if self.C <= 0 or self.dt <= 0:
            raise ConfigError("C and dt must be positive")
        if self.V_th <= self.V_reset:
            raise ConfigError("V_th must exceed V_reset")
        if not 0 <= self.alpha < 1:
            raise ConfigError("alpha must lie in [0, 1)")
        if self.beta < 0 or self.gamma < 0:
            raise ConfigError("beta and gamma must be non-negative")

    @property
    def ref_ticks(self) -> int:
        return int(round(self.tau_ref / self.dt))

    @property
    def threshold_fixed_point_per_spike(self) -> float:
        return self.beta / (1.0 - self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LayerState:
    V_f: np.ndarray
    V_r: np.ndarray
    a: np.ndarray
    S_f: np.ndarray
    S_r: np.ndarray
    ref_clock_f: np.ndarray
    ref_clock_r: np.ndarray

    @classmethod
    def zeros(cls, shape, dtype=np.float64, V0: float = 0.0) -> "LayerState":
        def z():
            return np.zeros(shape, dtype=dtype)

        return cls(
            V_f=np.full(shape, V0, dtype=dtype),
            V_r=np.full(shape, V0, dtype=dtype),
            a=z(), S_f=z(), S_r=z(),
            ref_clock_f=np.zeros(shape, dtype=np.int32),
            ref_clock_r=np.zeros(shape, dtype=np.int32),
        )

    @property
    def S(self) -> np.ndarray:
        """Combined spike flag: 1 if either channel fired."""
        return self.S_f + self.S_r - self.S_f * self.S_r

    def copy(self) -> "LayerState":
        return LayerState(**{k: v.copy() for k, v in self.__dict__.items()})


def heaviside(v: np.ndarray, thr: np.ndarray) -> np.ndarray:
    return (v >= thr).astype(v.dtype)


def ramp(v_win: float):
    """Continuous relaxation of the spike whose slope equals the boxcar
    surrogate: 1 inside ``|v - thr| < v_win`` and 0 outside.

    Only used to make the network differentiable for gradient checks.
    """
    def fn(v, thr):
        return np.clip(v - thr + v_win, 0.0, 2.0 * v_win)

    return fn


def lif_integrate(state: LayerState, I_ff, I_rec, p: LifParams) -> LayerState:
    """One Euler step of both potentials; refractory neurons sit at V_reset."""
    I_ff = np.asarray(I_ff)
    I_rec = np.asarray(I_rec)
    if I_ff.shape != state.V_f.shape or I_rec.shape != state.V_r.shape:
        raise ValueError(f"current shapes {I_ff.shape}/{I_rec.shape} do not match layer {state.V_f.shape}")
    if not (np.all(np.isfinite(I_ff)) and np.all(np.isfinite(I_rec))):
        raise NumericsError("non-finite input current")
    k = p.dt / p.C
    leak = -p.g * (state.V_f - p.V_rest) * (1.0 - state.S_f - state.S_r)
    V_f = state.V_f + k * (leak + I_ff - p.gamma * state.a)
    V_r = state.V_r + k * I_rec
    V_f = np.where(state.ref_clock_f > 0, p.V_reset, V_f).astype(state.V_f.dtype)
    V_r = np.where(state.ref_clock_r > 0, p.V_reset, V_r).astype(state.V_r.dtype)
    return replace(state, V_f=V_f, V_r=V_r)


def fire_and_reset(state: LayerState, p: LifParams, spike_fn=heaviside) -> LayerState:
    """Fire each channel against the effective threshold ``V_th + gamma * a``."""
    thr = p.V_th + p.gamma * state.a
    out = {}
    for ch in ("f", "r"):
        V = getattr(state, f"V_{ch}")
        clock = getattr(state, f"ref_clock_{ch}")
        S = spike_fn(V, thr)
        fired = V >= thr
        out[f"S_{ch}"] = S
        out[f"V_{ch}"] = V * (1.0 - S) + p.V_reset * S
        out[f"ref_clock_{ch}"] = np.where(fired, p.ref_ticks, np.maximum(clock - 1, 0)).astype(np.int32)
    return replace(state, **out)


def adapt_threshold(state: LayerState, p: LifParams) -> LayerState:
    a = state.a + p.dt * ((p.alpha - 1.0) * state.a + p.beta * (state.S_f + state.S_r))
    return replace(state, a=a)


def step(state: LayerState, I_ff, I_rec, p: LifParams, spike_fn=heaviside) -> LayerState:
    """Integrate, fire, then adapt: one full tick of the layer."""
    return adapt_threshold(fire_and_reset(lif_integrate(state, I_ff, I_rec, p), p, spike_fn), p)
