"""Dataset containers, seeded batch encoding and the epoch loop."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .encoding import bernoulli_spikes
from .errors import ConfigError, ShapeError
from .learning import (RewardConfig, SurrogateConfig, apply_updates, bptt_backward, clip_grad_norm,
                       cross_entropy, reward_backward)
from .network import NetworkConfig, Weights, forward_sequence, full_mask, init_weights, predict
from .neuron import LifParams

log = logging.getLogger(__name__)

RULES = ("bp", "reward")

# Stream tags keep training, evaluation and initialization draws disjoint.
_TRAIN_STREAM, _EVAL_STREAM, _SHUFFLE_STREAM, _INIT_STREAM = 1, 2, 3, 4


@dataclass
class Dataset:
    """Normalized (pre-encoding) inputs.

    ``visual`` is ``(N, side*side)`` pixel intensities, ``auditory`` is
    ``(N, T, F)`` normalized spectrograms; values lie in [0, 1].
    """

    labels: np.ndarray
    visual: np.ndarray | None = None
    auditory: np.ndarray | None = None

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.labels)
        for arr in (self.visual, self.auditory):
            if arr is not None and len(arr) != n:
                raise ShapeError("modalities and labels differ in length")

    def __len__(self):
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.labels[idx],
            None if self.visual is None else self.visual[idx],
            None if self.auditory is None else self.auditory[idx],
        )

    def only(self, modality: str) -> "Dataset":
        if modality == "visual":
            return Dataset(self.labels, self.visual, None)
        if modality == "auditory":
            return Dataset(self.labels, None, self.auditory)
        return self


def sample_rng(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def encode_batch(ds: Dataset, idx, T: int, rng_keys: tuple) -> tuple:
    """Bernoulli-encode samples ``idx``; sample i draws from its own stream
    ``(*rng_keys, i)`` so results do not depend on batch composition."""
    x_v = x_a = None
    if ds.visual is not None:
        x_v = np.stack([bernoulli_spikes(ds.visual[i], T, sample_rng(*rng_keys, int(i))) for i in idx])
    if ds.auditory is not None:
        x_a = np.stack([
            (sample_rng(*rng_keys, int(i), 1).random(ds.auditory[i].shape) < ds.auditory[i]).astype(np.uint8)
            for i in idx
        ])
    return x_v, x_a


@dataclass
class Model:
    net: NetworkConfig
    lif: LifParams
    weights: Weights
    mask: np.ndarray
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    reward: RewardConfig | None = None
    epochs_trained: int = 0

    @classmethod
    def create(cls, net: NetworkConfig, seed: int, lif: LifParams | None = None, mask=None,
               surrogate: SurrogateConfig | None = None, with_reward: bool = True) -> "Model":
        rng = sample_rng(seed, _INIT_STREAM)
        weights = init_weights(net, rng)
        if mask is None:
            mask = full_mask(net.hidden_size) if net.recurrent else np.zeros((net.hidden_size,) * 2, np.uint8)
        mask = np.asarray(mask, dtype=np.uint8)
        reward = RewardConfig.create(net, rng) if with_reward else None
        return cls(net, lif or LifParams(), weights, mask, surrogate or SurrogateConfig(), reward)

    def forward(self, x_v, x_a, train=False):
        return forward_sequence(x_v, x_a, self.weights, self.mask, self.net, self.lif, train=train)

    def parameter_count(self) -> int:
        return self.weights.parameter_count(self.mask if self.net.recurrent else None, self.net.recurrent)


@dataclass
class EpochRecord:
    epoch: int
    train_acc: float
    test_acc: float | None
    loss: float
    seconds: float


def _batches(n: int, batch_size: int, order=None):
    order = np.arange(n) if order is None else order
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


def train_step(model: Model, x_v, x_a, y, rule: str, lr: float,
               clip: float = 0.0) -> tuple[float, np.ndarray]:
    """One SGD step; ``clip > 0`` caps the global gradient norm."""
    logits, trace = model.forward(x_v, x_a, train=True)
    if rule == "bp":
        grads = bptt_backward(trace, y, model.weights, model.mask, model.lif, model.net, model.surrogate)
    elif rule == "reward":
        if model.reward is None:
            raise ConfigError("reward rule needs a RewardConfig")
        grads = reward_backward(trace, y, model.weights, model.mask, model.lif, model.net,
                                model.reward, model.surrogate)
    else:
        raise ConfigError(f"rule must be one of {RULES}")
    model.weights = apply_updates(model.weights, clip_grad_norm(grads, clip), lr)
    return cross_entropy(logits, y), logits


def evaluate(model: Model, ds: Dataset, seed: int, batch_size: int = 250,
             features: bool = False):
    """Accuracy on ``ds``; with ``features`` also return hidden rates ``(N, H)``."""
    correct = 0
    feats = []
    for idx in _batches(len(ds), batch_size):
        x_v, x_a = encode_batch(ds, idx, model.net.T, (seed, _EVAL_STREAM))
        logits, trace = model.forward(x_v, x_a, train=features)
        correct += int(np.sum(predict(logits) == ds.labels[idx]))
        if features:
            feats.append(trace.ticks["S"].mean(axis=1))
    acc = correct / max(len(ds), 1)
    if features:
        return acc, np.concatenate(feats) if feats else np.zeros((0, model.net.hidden_size))
    return acc


def fit(model: Model, train, epochs: int, batch_size: int, lr: float, seed: int,
        rule: str = "bp", test: Dataset | None = None, callback=None,
        clip: float = 0.0) -> list[EpochRecord]:
    """Train in place for ``epochs`` epochs and return one record per epoch.

    ``train`` is a Dataset or a callable mapping the epoch index to one,
    e.g. to redraw input noise every epoch.  ``clip`` is passed to
    ``train_step``.
    """
    if rule not in RULES:
        raise ConfigError(f"rule must be one of {RULES}")
    history = []
    source = train
    for epoch in range(epochs):
        train = source(epoch) if callable(source) else source
        t0 = time.perf_counter()
        order = sample_rng(seed, _SHUFFLE_STREAM, epoch).permutation(len(train))
        losses, correct = [], 0
        for idx in _batches(len(train), batch_size, order):
            x_v, x_a = encode_batch(train, idx, model.net.T, (seed, _TRAIN_STREAM, epoch))
            loss, logits = train_step(model, x_v, x_a, train.labels[idx], rule, lr, clip)
            losses.append(loss * len(idx))
            correct += int(np.sum(predict(logits) == train.labels[idx]))
        test_acc = evaluate(model, test, seed) if test is not None else None
        rec = EpochRecord(epoch + 1, correct / len(train), test_acc,
                          float(np.sum(losses) / len(train)), time.perf_counter() - t0)
        log.info("epoch %d train_acc=%.4f test_acc=%s loss=%.4f (%.1fs)", rec.epoch, rec.train_acc,
                 "-" if test_acc is None else f"{test_acc:.4f}", rec.loss, rec.seconds)
        history.append(rec)
        model.epochs_trained += 1
        if callback is not None:
            callback(rec)
    return history
