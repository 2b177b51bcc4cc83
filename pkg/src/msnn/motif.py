"""Motif masks: extraction from recurrent weights, 3-node motif census,
significance against random controls, and mask union.

The 13 weakly connected 3-node directed motif classes are numbered 1-13
as listed in ``MOTIF_CLASSES``; each entry gives one canonical edge set on
nodes 0, 1, 2 and its MAN (mutual/asymmetric/null) triad code.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, MaskError, ShapeError

MOTIF_CLASSES = (
    ("021U", ((0, 1), (2, 1))),
    ("021D", ((1, 0), (1, 2))),
    ("021C", ((0, 1), (1, 2))),
    ("111D", ((0, 1), (1, 0), (2, 1))),
    ("111U", ((0, 1), (1, 0), (1, 2))),
    ("030T", ((0, 1), (1, 2), (0, 2))),
    ("030C", ((0, 1), (1, 2), (2, 0))),
    ("201", ((0, 1), (1, 0), (1, 2), (2, 1))),
    ("120D", ((0, 1), (1, 0), (2, 0), (2, 1))),
    ("120U", ((0, 1), (1, 0), (0, 2), (1, 2))),
    ("120C", ((0, 1), (1, 0), (1, 2), (2, 0))),
    ("210", ((0, 1), (1, 0), (1, 2), (2, 1), (0, 2))),
    ("300", ((0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0))),
)
N_CLASSES = len(MOTIF_CLASSES)

# Bit layout of a triple (a, b, c): a->b, b->a, a->c, c->a, b->c, c->b.
_BITS = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1))


def canonical_edges(class_id: int) -> str:
    return ";".join(f"{i}>{j}" for i, j in MOTIF_CLASSES[class_id - 1][1])


def _canonical_key(adj3: np.ndarray) -> int:
    best = None
    for perm in itertools.permutations(range(3)):
        p = adj3[np.ix_(perm, perm)]
        key = int("".join(str(int(v)) for v in p.reshape(-1)), 2)
        best = key if best is None else min(best, key)
    return best


def _build_code_table() -> np.ndarray:
    by_key = {}
    for cid, (_, edges) in enumerate(MOTIF_CLASSES, start=1):
        adj = np.zeros((3, 3), dtype=int)
        for i, j in edges:
            adj[i, j] = 1
        by_key[_canonical_key(adj)] = cid
    table = np.zeros(64, dtype=np.int64)
    for code in range(64):
        adj = np.zeros((3, 3), dtype=int)
        for bit, (i, j) in enumerate(_BITS):
            adj[i, j] = (code >> bit) & 1
        und = adj | adj.T
        linked_pairs = und[0, 1] + und[0, 2] + und[1, 2]
        table[code] = by_key[_canonical_key(adj)] if linked_pairs >= 2 else 0
    return table


CODE_TO_CLASS = _build_code_table()


@dataclass(frozen=True)
class MotifMask:
    """Binary directed adjacency; ``adj[i, j] == 1`` enables edge i -> j."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise MaskError(f"mask must be square, got shape {adj.shape}")
        if not np.isin(adj, (0, 1)).all():
            raise MaskError("mask entries must be 0 or 1")
        if np.any(np.diagonal(adj)):
            raise MaskError("mask diagonal must be zero")
        object.__setattr__(self, "adj", adj.astype(np.uint8))

    def __array__(self, dtype=None, copy=None):
        return self.adj if dtype is None else self.adj.astype(dtype)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self.adj.sum())

    @property
    def density(self) -> float:
        n = self.n
        return self.edge_count / (n * (n - 1)) if n > 1 else 0.0

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.adj))]

    @classmethod
    def from_edges(cls, n: int, edges) -> "MotifMask":
        adj = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            adj[i, j] = 1
        return cls(adj)

    @classmethod
    def empty(cls, n: int) -> "MotifMask":
        return cls(np.zeros((n, n), dtype=np.uint8))


def _offdiag_abs(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = np.abs(np.asarray(W, dtype=np.float64))
    off = ~np.eye(A.shape[0], dtype=bool)
    return A, off


def binarize(W_rec, rule: str = "mean-abs") -> MotifMask:
    """Threshold recurrent weights into a mask.

    Rules: ``mean-abs`` keeps ``|w| >= mean(|w|)`` over off-diagonal entries;
    ``topk:<fraction>`` keeps the largest fraction of off-diagonal
    magnitudes; ``abs:<theta>`` keeps ``|w| >= theta``.  Exact zeros are
    never kept.
    """
    W = np.asarray(W_rec)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ShapeError(f"W_rec must be square, got {W.shape}")
    A, off = _offdiag_abs(W)
    vals = A[off]
    if vals.size == 0:
        return MotifMask.empty(W.shape[0])
    if rule == "mean-abs":
        # clamp guards against the mean rounding above a constant input
        theta = min(float(vals.mean()), float(vals.max()))
    elif rule.startswith("topk:"):
        frac = float(rule[5:])
        if not 0.0 <= frac <= 1.0:
            raise ValueError("topk fraction must lie in [0, 1]")
        k = int(round(frac * vals.size))
        if k == 0:
            return MotifMask.empty(W.shape[0])
        theta = float(np.sort(vals)[::-1][k - 1])
    elif rule.startswith("abs:"):
        theta = float(rule[4:])
    else:
        raise ValueError(f"unknown binarization rule {rule!r}")
    adj = (A >= theta) & (A > 0) & off
    return MotifMask(adj.astype(np.uint8))


def _validated(mask) -> np.ndarray:
    if isinstance(mask, MotifMask):
        return mask.adj
    return MotifMask(np.asarray(mask)).adj


def triad_census(mask) -> np.ndarray:
    """Counts of the 13 connected motif classes over all node triples.

    Each triple is visited once, rooted at its smallest node, and only if
    the root touches at least one of the other two nodes.
    """
    A = _validated(mask).astype(np.int64)
    n = A.shape[0]
    U = (A | A.T).astype(bool)
    counts = np.zeros(N_CLASSES + 1, dtype=np.int64)
    for i in range(n - 2):
        later = np.arange(i + 1, n)
        touch = U[i, later]
        nb = later[touch]
        other = later[~touch]
        if nb.size == 0:
            continue
        r, c = np.triu_indices(nb.size, 1)
        js = np.concatenate([nb[r], np.repeat(nb, other.size)])
        ks = np.concatenate([nb[c], np.tile(other, nb.size)])
        code = (A[i, js] | (A[js, i] << 1) | (A[i, ks] << 2)
                | (A[ks, i] << 3) | (A[js, ks] << 4) | (A[ks, js] << 5))
        counts += np.bincount(CODE_TO_CLASS[code], minlength=N_CLASSES + 1)
    return counts[1:]


@dataclass
class EnsembleConfig:
    n_controls: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_controls < 1:
            raise ValueError("n_controls must be >= 1")


@dataclass
class MotifCensus:
    counts: np.ndarray
    p_values: np.ndarray | None = None

    @property
    def frequency(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            return np.zeros(N_CLASSES)
        return self.counts / total

    @property
    def plausible_freq(self) -> np.ndarray | None:
        if self.p_values is None:
            return None
        return self.frequency * (1.0 - self.p_values)

    def rows(self) -> list[dict]:
        freq = self.frequency
        pf = self.plausible_freq
        out = []
        for k in range(N_CLASSES):
            out.append({
                "class_id": k + 1,
                "canonical_edges": canonical_edges(k + 1),
                "count": int(self.counts[k]),
                "frequency": repr(float(freq[k])),
                "p_value": "" if self.p_values is None else repr(float(self.p_values[k])),
                "plausible_frequency": "" if pf is None else repr(float(pf[k])),
            })
        return out

    def to_csv(self, path) -> None:
        rows = self.rows()
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)


def random_control(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform directed graph with n nodes and exactly m edges, no self-loops."""
    slots = rng.choice(n * (n - 1), size=m, replace=False)
    i = slots // (n - 1)
    j = slots % (n - 1)
    j = j + (j >= i)
    adj = np.zeros((n, n), dtype=np.uint8)
    adj[i, j] = 1
    return adj


def significance(mask, census: MotifCensus | np.ndarray | None = None,
                 cfg: EnsembleConfig = EnsembleConfig(), controls=None) -> MotifCensus:
    """Attach p-values: the fraction of controls whose count of each class
    is at least the observed count.

    Controls are random graphs with the same node and edge count, control c
    drawn from seed ``(cfg.seed, c)``; pass ``controls`` to supply them.
    """
    adj = _validated(mask)
    if census is None:
        counts = triad_census(adj)
    else:
        counts = census.counts if isinstance(census, MotifCensus) else np.asarray(census)
    if controls is None:
        n, m = adj.shape[0], int(adj.sum())
        controls = (random_control(n, m, np.random.default_rng([cfg.seed, c])) for c in range(cfg.n_controls))
    hits = np.zeros(N_CLASSES, dtype=np.int64)
    total = 0
    for ctrl in controls:
        hits += triad_census(ctrl) >= counts
        total += 1
    return MotifCensus(np.asarray(counts, dtype=np.int64), hits / total)


def integrate(mask_s, mask_t) -> MotifMask:
    """Union of two masks."""
    a, b = _validated(mask_s), _validated(mask_t)
    if a.shape != b.shape:
        raise ShapeError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return MotifMask(a | b)


class MaskFileError(FormatError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def write_mask(path, mask) -> None:
    """Text format: first line ``n``, then one ``i j`` pair per edge."""
    m = mask if isinstance(mask, MotifMask) else MotifMask(np.asarray(mask))
    lines = [str(m.n)] + [f"{i} {j}" for i, j in m.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mask(path) -> MotifMask:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise MaskFileError("empty file, expected node count", 1)
    try:
        n = int(lines[0].strip())
    except ValueError:
        raise MaskFileError(f"bad node count {lines[0]!r}", 1) from None
    if n < 0:
        raise MaskFileError("negative node count", 1)
    adj = np.zeros((n, n), dtype=np.uint8)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        try:
            i, j = (int(x) for x in parts)
        except ValueError:
            raise MaskFileError(f"expected 'i j', got {line!r}", lineno) from None
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise MaskFileError(f"edge ({i}, {j}) invalid for {n} nodes", lineno)
        adj[i, j] = 1
    return MotifMask(adj)
