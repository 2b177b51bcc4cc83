"""Binary checkpoint files.

Layout (all integers little-endian)::

    b"MSNN"  u16 version
    u32 length, config JSON (UTF-8, sorted keys)
    u32 tensor count, then per tensor:
        u16 name length, name, u8 ndim, u32 dims..., float32 data (C order)
    u32 mask size n, u32 edge count, then (u32 i, u32 j) per edge
    u32 seed count, u64 seeds...
    u8 reward orientation (0 state-minus-target, 1 target-minus-state)
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .learning import ORIENTATIONS, RewardConfig, SurrogateConfig
from .motif import MotifMask
from .network import NetworkConfig, Weights
from .neuron import LifParams
from .training import Model

MAGIC = b"MSNN"
VERSION = 1


@dataclass
class Checkpoint:
    config: dict
    tensors: dict  # name -> float32 array
    mask: MotifMask
    seeds: list = field(default_factory=list)
    orientation: str = ORIENTATIONS[0]

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise CheckpointError(f"unknown orientation {self.orientation!r}")
        self.tensors = {k: np.ascontiguousarray(v, dtype="<f4") for k, v in self.tensors.items()}


def _config_bytes(config: dict) -> bytes:
    return json.dumps(config, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    out = bytearray(MAGIC)
    out += struct.pack("<H", VERSION)
    blob = _config_bytes(ckpt.config)
    out += struct.pack("<I", len(blob)) + blob
    out += struct.pack("<I", len(ckpt.tensors))
    for name in sorted(ckpt.tensors):
        arr = ckpt.tensors[name]
        key = name.encode("utf-8")
        out += struct.pack("<H", len(key)) + key
        out += struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.astype("<f4").tobytes()
    edges = ckpt.mask.edges()
    out += struct.pack("<II", ckpt.mask.n, len(edges))
    for i, j in edges:
        out += struct.pack("<II", i, j)
    out += struct.pack("<I", len(ckpt.seeds))
    out += struct.pack(f"<{len(ckpt.seeds)}Q", *[int(s) for s in ckpt.seeds])
    out += struct.pack("<B", ORIENTATIONS.index(ckpt.orientation))
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("checkpoint truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> Checkpoint:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {VERSION}")
    (n,) = r.unpack("<I")
    try:
        config = json.loads(r.take(n).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: bad config blob ({exc})") from None
    (count,) = r.unpack("<I")
    tensors = {}
    for _ in range(count):
        (klen,) = r.unpack("<H")
        try:
            name = r.take(klen).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(f"{path}: bad tensor name") from None
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        size = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(r.take(4 * size), dtype="<f4").reshape(shape).copy()
    n_nodes, n_edges = r.unpack("<II")
    adj = np.zeros((n_nodes, n_nodes), dtype=np.uint8)
    for _ in range(n_edges):
        i, j = r.unpack("<II")
        if i >= n_nodes or j >= n_nodes or i == j:
            raise CheckpointError(f"{path}: invalid mask edge ({i}, {j})")
        adj[i, j] = 1
    (n_seeds,) = r.unpack("<I")
    seeds = list(r.unpack(f"<{n_seeds}Q"))
    (orient,) = r.unpack("<B")
    if orient >= len(ORIENTATIONS):
        raise CheckpointError(f"{path}: unknown orientation flag {orient}")
    if r.pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - r.pos} trailing bytes")
    return Checkpoint(config, tensors, MotifMask(adj), seeds, ORIENTATIONS[orient])


def checkpoint_from_model(model: Model, seeds=(), extra: dict | None = None) -> Checkpoint:
    config = {
        "network": model.net.to_dict(),
        "neuron": asdict(model.lif),
        "surrogate": asdict(model.surrogate),
        "epochs_trained": model.epochs_trained,
    }
    if extra:
        config.update(extra)
    tensors = dict(model.weights.items())
    orientation = ORIENTATIONS[0]
    if model.reward is not None:
        tensors["R_embed"] = model.reward.R_embed
        for name, B in model.reward.B_rand.items():
            tensors[f"B_rand/{name}"] = B
        orientation = model.reward.orientation
    return Checkpoint(config, tensors, MotifMask(model.mask), list(seeds), orientation)


def model_from_checkpoint(ckpt: Checkpoint) -> Model:
    try:
        net = NetworkConfig.from_dict(ckpt.config["network"])
        lif = LifParams(**ckpt.config["neuron"])
        surrogate = SurrogateConfig(**ckpt.config["surrogate"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint config incomplete: {exc}") from None
    t = ckpt.tensors
    names = [k for k in t if k.startswith("W_")]
    weights = Weights(**{k: t[k].astype(np.float32) for k in names})
    reward = None
    if "R_embed" in t:
        B = {k.split("/", 1)[1]: v.astype(np.float32) for k, v in t.items() if k.startswith("B_rand/")}
        reward = RewardConfig(B, t["R_embed"].astype(np.float32), ckpt.orientation)
    if ckpt.mask.n != net.hidden_size:
        raise CheckpointError(f"mask has {ckpt.mask.n} nodes, network {net.hidden_size}")
    return Model(net, lif, weights, ckpt.mask.adj.copy(), surrogate, reward,
                 int(ckpt.config.get("epochs_trained", 0)))
