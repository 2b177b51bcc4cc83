"""Training rules: surrogate-gradient BPTT and global reward learning.

Both backward passes return a ``GradientSet`` of unscaled gradients (the
direction of steepest ascent of their objective); ``apply_updates`` takes
the descent step ``W <- W - lr * grad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericsError, TraceError
from .network import ForwardTrace, NetworkConfig, Weights, conv_params
from .neuron import LifParams

# Orientation of the hidden reward gradient: rate minus target, so that
# the descent step moves the layer rate toward its expectation vector.
REWARD_ORIENTATION = "state-minus-target"
ORIENTATIONS = ("state-minus-target", "target-minus-state")


@dataclass(frozen=True)
class SurrogateConfig:
    V_win: float = 0.5
    lr: float = 1e-4

    def __post_init__(self):
        if self.V_win <= 0 or self.lr <= 0:
            raise ConfigError("V_win and lr must be positive")


class GradientSet(Weights):
    """Gradients with the same fields and shapes as ``Weights``."""


def surrogate_grad(V, p: LifParams, cfg: SurrogateConfig, a=0.0):
    """Boxcar pseudo-derivative of the spike w.r.t. the potential.

    The window is centred on the effective threshold ``V_th + gamma * a``.
    """
    V = np.asarray(V)
    thr = p.V_th + p.gamma * np.asarray(a)
    return (np.abs(V - thr) < cfg.V_win).astype(V.dtype if V.dtype.kind == "f" else np.float64)


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, target) -> float:
    """Mean cross-entropy of softmax(logits) against integer targets."""
    logits = np.atleast_2d(logits).astype(np.float64)
    target = np.atleast_1d(target)
    z = logits - logits.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(len(target)), target].mean())


def _onehot(target, k: int, dtype) -> np.ndarray:
    target = np.atleast_1d(target)
    out = np.zeros((len(target), k), dtype=dtype)
    out[np.arange(len(target)), target] = 1
    return out


def _readout_decay(p: LifParams, net: NetworkConfig) -> float:
    return 1.0 - (p.dt / p.C) * (p.g if net.readout_g is None else net.readout_g)


def _check_trace(trace: ForwardTrace, net: NetworkConfig):
    if trace is None or len(trace) != net.T or trace.ticks["S"].shape[1] != net.T:
        raise TraceError(f"trace length does not match T={net.T}")


def _layer_backward(layer: dict, g_S_in: np.ndarray, p: LifParams, cfg: SurrogateConfig,
                    two_channel: bool, g_S_rec=None):
    """Reverse a layer through time.

    ``g_S_in`` is dL/dS from downstream per tick ``(B, T, N)``.  For the
    integration layer, ``g_S_rec(t, g_Irec)`` returns the extra gradient that
    the recurrent current at tick t sends to S at tick t-1 and accumulates
    weight gradients.  Returns dL/dI_ff per tick.
    """
    k = p.dt / p.C
    B, T, N = g_S_in.shape
    dtype = g_S_in.dtype
    g_Iff = np.zeros_like(g_S_in)
    gVf = np.zeros((B, N), dtype)
    gVr = np.zeros((B, N), dtype)
    ga = np.zeros((B, N), dtype)
    gSf_c = np.zeros((B, N), dtype)
    gSr_c = np.zeros((B, N), dtype)
    gS_c = np.zeros((B, N), dtype)
    for t in range(T - 1, -1, -1):
        Sf = layer["Sf"][:, t]
        a_prev = layer["a_prev"][:, t]
        thr = p.V_th + p.gamma * a_prev
        Vf_pre = layer["Vf_pre"][:, t]
        gS = g_S_in[:, t] + gS_c
        if two_channel:
            Sr = layer["Sr"][:, t]
            gSf = gS * (1.0 - Sr) + gSf_c + ga * (p.dt * p.beta)
            gSr = gS * (1.0 - Sf) + gSr_c + ga * (p.dt * p.beta)
        else:
            gSf = gS + gSf_c + ga * (p.dt * p.beta)
        ga_prev = ga * (1.0 + p.dt * (p.alpha - 1.0))
        # reset: V_post = V_pre (1 - S) + V_reset S
        gVf_pre = gVf * (1.0 - Sf)
        gSf = gSf + gVf * (p.V_reset - Vf_pre)
        sf = (np.abs(Vf_pre - thr) < cfg.V_win).astype(dtype)
        gVf_pre = gVf_pre + gSf * sf
        gthr = -gSf * sf
        if two_channel:
            Vr_pre = layer["Vr_pre"][:, t]
            gVr_pre = gVr * (1.0 - Sr)
            gSr = gSr + gVr * (p.V_reset - Vr_pre)
            sr = (np.abs(Vr_pre - thr) < cfg.V_win).astype(dtype)
            gVr_pre = gVr_pre + gSr * sr
            gthr = gthr - gSr * sr
        ga_prev = ga_prev + p.gamma * gthr
        # integration, suppressed while refractory
        gVf_pre = gVf_pre * layer["act_f"][:, t]
        g_Iff[:, t] = gVf_pre * k
        leak_gate = 1.0 - layer["Sf_prev"][:, t] - layer["Sr_prev"][:, t]
        gVf = gVf_pre * (1.0 - k * p.g * leak_gate)
        gSf_c = gVf_pre * (k * p.g) * (layer["Vf_prev"][:, t] - p.V_rest)
        gSr_c = gSf_c
        ga_prev = ga_prev - gVf_pre * (k * p.gamma)
        ga = ga_prev
        if two_channel:
            gVr_pre = gVr_pre * layer["act_r"][:, t]
            gVr = gVr_pre
            gS_c = g_S_rec(t, gVr_pre * k) if g_S_rec is not None else np.zeros_like(gS)
        else:
            gS_c = np.zeros_like(gS)
    return g_Iff


def bptt_backward(trace: ForwardTrace, target, weights: Weights, mask, p: LifParams,
                  net: NetworkConfig, cfg: SurrogateConfig = SurrogateConfig()) -> GradientSet:
    """Gradient of the mean cross-entropy through time, using the boxcar
    surrogate at every spike.  Recurrent gradients are gated by the mask."""
    _check_trace(trace, net)
    ticks = trace.ticks
    S = ticks["S"]
    B, T, H = S.shape
    dtype = S.dtype
    grads = weights.zeros_like()
    grads = GradientSet(**dict(grads.items()))
    mask_f = np.asarray(mask).astype(dtype)
    dlogits = (softmax(trace.logits) - _onehot(target, net.n_classes, dtype)) / B
    lam = _readout_decay(p, net)
    # readout: U_t = lam U_{t-1} + S_t W_out; logits = U_{T-1} / T
    decay = (lam ** np.arange(T - 1, -1, -1)).astype(dtype) / T
    gU = dlogits[:, None, :] * decay[None, :, None]  # (B, T, K)
    grads.W_out = np.einsum("bth,btk->hk", S, gU)
    g_S_out = gU @ weights.W_out.T

    Wm = weights.W_rec * mask_f
    S_prev = ticks["S_prev"]
    dWm = np.zeros_like(Wm)

    def g_S_rec(t, g_Irec):
        nonlocal dWm
        if not net.recurrent:
            return np.zeros_like(g_Irec)
        dWm += S_prev[:, t].T @ g_Irec
        return g_Irec @ Wm.T

    g_Iff = _layer_backward(ticks["hidden"], g_S_out.astype(dtype), p, cfg, True, g_S_rec)
    W_rec = dWm * mask_f
    np.fill_diagonal(W_rec, 0.0)
    grads.W_rec = W_rec

    pc = conv_params(p)
    flat_g = g_Iff.reshape(B * T, H)
    for b in net.branches:
        conv = ticks[f"conv_{b}"]
        Sc = conv["Sf"]
        Nc = Sc.shape[-1]
        W_proj = getattr(weights, f"W_proj_{b}")
        setattr(grads, f"W_proj_{b}", Sc.reshape(B * T, Nc).T @ flat_g)
        g_Sc = (flat_g @ W_proj.T).reshape(B, T, Nc)
        g_Ic = _layer_backward(conv, g_Sc, pc, cfg, False)
        patches = ticks[f"patches_{b}"]  # (B, T, P, kk)
        g_Ic = g_Ic.reshape(B, T, patches.shape[2], -1)
        setattr(grads, f"W_conv_{b}", np.einsum("btpk,btpc->kc", patches, g_Ic))
    return grads


@dataclass
class RewardConfig:
    """Fixed random projections for reward learning.

    ``B_rand`` maps an expectation vector to a per-neuron target rate, one
    matrix per hidden layer (``"hidden"`` and ``"conv_v"``/``"conv_a"``).
    ``R_embed[c]`` is the expectation vector of class c.
    """

    B_rand: dict
    R_embed: np.ndarray
    orientation: str = REWARD_ORIENTATION

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ConfigError(f"orientation must be one of {ORIENTATIONS}")

    @property
    def sign(self) -> float:
        return 1.0 if self.orientation == ORIENTATIONS[0] else -1.0

    @classmethod
    def create(cls, net: NetworkConfig, rng: np.random.Generator, target_rate: float = 1.0,
               embed_dim: int | None = None, dtype=np.float32) -> "RewardConfig":
        E = embed_dim or net.n_classes
        if E < net.n_classes:
            raise ConfigError("embedding must have at least one dimension per class")
        R = np.zeros((net.n_classes, E), dtype=dtype)
        R[np.arange(net.n_classes), np.arange(net.n_classes)] = target_rate
        sizes = {"hidden": net.hidden_size}
        for b in net.branches:
            sizes[f"conv_{b}"] = net.conv_size(b)
        B_rand = {name: (rng.uniform(-1.0, 1.0, (n, E)) / np.sqrt(E)).astype(dtype)
                  for name, n in sizes.items()}
        return cls(B_rand, R)

    def target(self, layer: str, target) -> np.ndarray:
        target = np.atleast_1d(target)
        if np.any(target < 0) or np.any(target >= self.R_embed.shape[0]):
            raise ConfigError(f"no expectation vector for classes {target}")
        return self.R_embed[target] @ self.B_rand[layer].T


def reward_backward(trace: ForwardTrace, target, weights: Weights, mask, p: LifParams,
                    net: NetworkConfig, rcfg: RewardConfig,
                    cfg: SurrogateConfig = SurrogateConfig()) -> GradientSet:
    """Reward-learning gradients: every hidden layer gets its error directly
    from a fixed random projection of the class expectation vector; only
    the readout sees the output error."""
    _check_trace(trace, net)
    ticks = trace.ticks
    S = ticks["S"]
    B, T, H = S.shape
    dtype = S.dtype
    grads = GradientSet(**dict(weights.zeros_like().items()))
    mask_f = np.asarray(mask).astype(dtype)

    e = softmax(trace.logits) - _onehot(target, net.n_classes, dtype)
    lam = _readout_decay(p, net)
    decay = (lam ** np.arange(T - 1, -1, -1)).astype(dtype) / T
    readout_in = np.einsum("bth,t->bh", S, decay)
    grads.W_out = readout_in.T @ e / B  # identity feedback at the last layer

    h = S.mean(axis=1)
    grad_h = (rcfg.sign * (h - rcfg.target("hidden", target))).astype(dtype)
    for b in net.branches:
        conv = ticks[f"conv_{b}"]
        x_rate = conv["Sf"].mean(axis=1)
        setattr(grads, f"W_proj_{b}", x_rate.T @ grad_h / B)
        c_rate = x_rate
        grad_c = (rcfg.sign * (c_rate - rcfg.target(f"conv_{b}", target))).astype(dtype)
        patches = ticks[f"patches_{b}"].mean(axis=1)  # (B, P, kk)
        C = getattr(weights, f"W_conv_{b}").shape[1]
        grad_c = grad_c.reshape(B, patches.shape[1], C)
        setattr(grads, f"W_conv_{b}", np.einsum("bpk,bpc->kc", patches, grad_c) / B)

    if net.recurrent:
        hid = ticks["hidden"]
        S_prev = ticks["S_prev"]
        thr = p.V_th + p.gamma * hid["a_prev"]
        sr = (np.abs(hid["Vr_pre"] - thr) < cfg.V_win) & hid["act_r"]
        # one-step temporal gradient through the recurrent potential
        g_next = np.einsum("bti,btj->ij", S_prev, grad_h[:, None, :] * sr) / (B * T)
        g_reward = S_prev.mean(axis=1).T @ grad_h / B
        W_rec = (g_next + g_reward) * mask_f
        np.fill_diagonal(W_rec, 0.0)
        grads.W_rec = W_rec.astype(dtype)
    return grads


def reward_objective(trace: ForwardTrace, target, net: NetworkConfig, rcfg: RewardConfig) -> float:
    """The quantity the reward rule descends: readout cross-entropy plus, for
    every hidden layer, half the squared distance between its time-averaged
    rates and the projected expectation vector (batch mean)."""
    ticks = trace.ticks
    B = ticks["S"].shape[0]
    rates = {"hidden": ticks["S"].mean(axis=1)}
    for b in net.branches:
        rates[f"conv_{b}"] = ticks[f"conv_{b}"]["Sf"].mean(axis=1).reshape(B, -1)
    total = cross_entropy(trace.logits, target)
    for layer, r in rates.items():
        d = r.astype(np.float64) - rcfg.target(layer, target)
        total += 0.5 * float(np.sum(d * d)) / B
    return total


def clip_grad_norm(grads: GradientSet, max_norm: float) -> GradientSet:
    """Rescale all gradients together so their global L2 norm is at most
    ``max_norm``; ``max_norm <= 0`` leaves them unchanged."""
    if max_norm <= 0:
        return grads
    sq = sum(float(np.sum(np.square(g, dtype=np.float64))) for _, g in grads.items() if g is not None)
    norm = np.sqrt(sq)
    if not np.isfinite(norm):
        raise NumericsError("non-finite gradient norm")
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return GradientSet(**{n: None if g is None else (g * scale).astype(g.dtype) for n, g in grads.items()})


def apply_updates(weights: Weights, grads: GradientSet, lr: float) -> Weights:
    """Plain SGD; the recurrent diagonal is kept at zero."""
    out = {}
    for name, W in weights.items():
        g = getattr(grads, name)
        if g is None:
            out[name] = W.copy()
            continue
        if g.shape != W.shape:
            raise ValueError(f"gradient shape {g.shape} != weight shape {W.shape} for {name}")
        delta = -lr * g
        if not np.all(np.isfinite(delta)):
            raise NumericsError(f"non-finite update for {name}")
        out[name] = (W + delta).astype(W.dtype)
    np.fill_diagonal(out["W_rec"], 0.0)
    return Weights(**out)
