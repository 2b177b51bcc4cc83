"""Desk-scale experiment protocols: cocktail-party noise sweeps, McGurk
inconsistent-input clustering and the epochs-times-parameters training cost.

The pipeline behind every protocol is the same: train a visual and an
auditory network with full recurrence, binarize their recurrent weights
into masks, take the union, then train the multisensory network with the
integrated mask (M-SNN) next to a feed-forward control (F-SNN).
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from math import gcd
from pathlib import Path

import numpy as np
from scipy import signal

from .config import ExperimentConfig
from .data import AudioSample, load_idx_dataset, load_wav, wav_directory_manifest
from .encoding import compute_mfcc
from .errors import ConfigError, DataError, FormatError, GridError, RangeError, StateError
from .motif import MotifMask, binarize, integrate
from .learning import SurrogateConfig
from .training import Dataset, EpochRecord, Model, evaluate, fit, sample_rng

log = logging.getLogger(__name__)

MODELS = ("M-SNN", "F-SNN")
_NOISE_STREAM = 7

_IDX_NAMES = {
    "train": [("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
              ("train-images.idx3-ubyte", "train-labels.idx1-ubyte")],
    "test": [("test-images-idx3-ubyte", "test-labels-idx1-ubyte"),
             ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
             ("t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte")],
}


# ---------------------------------------------------------------- noise

@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "uniform"
    proportion: float = 0.0
    interferer: AudioSample | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "voice"):
            raise ConfigError(f"noise kind must be uniform|voice, got {self.kind!r}")
        if not 0.0 <= self.proportion <= 0.9 + 1e-12:
            raise RangeError(f"noise proportion {self.proportion} outside [0, 0.9]")


def inject_uniform_noise(x, p: float, rng: np.random.Generator) -> np.ndarray:
    """``clip((1 - p) x + p u, 0, 1)`` with ``u ~ U(0, 1)`` per element."""
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"noise proportion {p} outside [0, 1]")
    x = np.asarray(x)
    if p == 0.0:
        return x.copy()
    u = rng.random(x.shape)
    return np.clip((1.0 - p) * x + p * u, 0.0, 1.0).astype(x.dtype if x.dtype.kind == "f" else np.float64)


def _to_rate(audio: AudioSample, rate: int) -> np.ndarray:
    if audio.sample_rate == rate:
        return np.asarray(audio.samples, dtype=np.float64)
    g = gcd(int(rate), int(audio.sample_rate))
    return signal.resample_poly(audio.samples, rate // g, audio.sample_rate // g)


def mix_voice(target: AudioSample, interferer: AudioSample, p: float) -> AudioSample:
    """Amplitude mix ``(1 - p) target + p interferer`` rescaled to unit peak.

    The interferer is resampled to the target's rate and looped or cut to
    its length.  An all-zero mix stays silent.
    """
    if not 0.0 <= p <= 1.0:
        raise RangeError(f"mixing proportion {p} outside [0, 1]")
    if interferer is None or len(interferer.samples) == 0:
        raise ConfigError("interferer has no samples")
    x = np.asarray(target.samples, dtype=np.float64)
    noise = _to_rate(interferer, target.sample_rate)
    if len(noise) == 0:
        raise ConfigError("interferer has no samples after resampling")
    noise = np.resize(noise, len(x))
    out = (1.0 - p) * x + p * noise
    peak = np.max(np.abs(out)) if len(out) else 0.0
    if peak > 1e-12:
        out = out / peak
    else:
        out = np.zeros_like(out)
    return AudioSample(out, target.sample_rate, target.label)


# ---------------------------------------------------------------- corpus

@dataclass
class Corpus:
    """Paired audio-visual train/test sets.

    Row i of a split pairs an image with a spoken digit of the same label;
    ``test_audio[i]`` keeps the raw waveform behind ``test.auditory[i]``
    so it can be re-mixed with an interferer.
    """

    train: Dataset
    test: Dataset
    test_audio: list
    audio_pool: dict = field(default_factory=dict)  # (split, label) -> [AudioSample]


def _find_idx(directory: Path, split: str):
    for img, lab in _IDX_NAMES[split]:
        if (directory / img).exists() and (directory / lab).exists():
            return directory / img, directory / lab
    raise DataError(f"no {split} IDX image/label pair in {directory}")


def _audio_pools(audio_dir: Path, test_fraction: float) -> dict:
    if not audio_dir.is_dir():
        raise DataError(f"audio directory {audio_dir} not found")
    manifest = wav_directory_manifest(audio_dir, "train")
    by_label: dict = {}
    for path, label in manifest.entries:
        by_label.setdefault(label, []).append(path)
    pools = {}
    for label in range(10):
        paths = by_label.get(label, [])
        if len(paths) < 2:
            raise DataError(f"need at least two recordings of digit {label} in {audio_dir}")
        n_test = min(len(paths) - 1, max(1, int(round(test_fraction * len(paths)))))
        pools[("train", label)] = paths[:len(paths) - n_test]
        pools[("test", label)] = paths[len(paths) - n_test:]
    return pools


def load_corpus(cfg: ExperimentConfig) -> Corpus:
    """Read IDX images and ``<label>_<id>.wav`` recordings and pair them.

    The first ``n_train``/``n_test`` images of each split are used.  Each
    digit's recordings are split (sorted by name) into train and test
    pools; the k-th image of label c takes the k-th recording of c's pool,
    cycling when the pool is shorter.
    """
    d = cfg.data
    if d.visual_dir is None or d.audio_dir is None:
        raise DataError("config [data] needs visual_dir and audio_dir")
    vdir, adir = Path(d.visual_dir), Path(d.audio_dir)
    if not vdir.is_dir():
        raise DataError(f"visual directory {vdir} not found")
    paths = _audio_pools(adir, d.audio_test_fraction)
    try:
        pool = {key: [load_wav(p, key[1]) for p in ps] for key, ps in paths.items()}
    except FormatError as exc:
        raise DataError(str(exc)) from exc
    spec_cache: dict = {}

    def spectrogram(key, k):
        if (key, k) not in spec_cache:
            spec_cache[key, k] = compute_mfcc(pool[key][k], cfg.encoder).astype(np.float32)
        return spec_cache[key, k]

    out = {}
    test_audio = []
    for split, n in (("train", d.n_train), ("test", d.n_test)):
        images = load_idx_dataset(*_find_idx(vdir, split))[:n]
        if len(images) < n:
            raise DataError(f"{split} split has {len(images)} images, {n} requested")
        labels = np.array([img.label for img in images], dtype=np.int64)
        seen: dict = {}
        specs = []
        for lab in labels:
            key = (split, int(lab))
            k = seen.get(lab, 0) % len(pool[key])
            seen[lab] = seen.get(lab, 0) + 1
            specs.append(spectrogram(key, k))
            if split == "test":
                test_audio.append(pool[key][k])
        visual = np.stack([img.pixels.reshape(-1) for img in images]).astype(np.float32) if n else \
            np.zeros((0, cfg.model.image_side ** 2), np.float32)
        auditory = np.stack(specs) if n else np.zeros((0, cfg.encoder.T, cfg.encoder.mfcc_coeffs), np.float32)
        out[split] = Dataset(labels, visual, auditory)
    return Corpus(out["train"], out["test"], test_audio, pool)


def default_interferer(corpus: Corpus, label: int = 8) -> AudioSample:
    """First held-out recording of ``label``."""
    return corpus.audio_pool[("test", label)][0]


def noisy_dataset(ds: Dataset, p: float, seed: int, split: str, draw: int = 0) -> Dataset:
    """Uniform noise on both modalities, drawn per sample from the stream
    ``(seed, split, draw, sample)``."""
    if p == 0.0:
        return ds
    tag = (0 if split == "train" else 1, draw)
    vis = aud = None
    if ds.visual is not None:
        vis = np.stack([inject_uniform_noise(x, p, sample_rng(seed, _NOISE_STREAM, *tag, i, 0))
                        for i, x in enumerate(ds.visual)]) if len(ds) else ds.visual
    if ds.auditory is not None:
        aud = np.stack([inject_uniform_noise(x, p, sample_rng(seed, _NOISE_STREAM, *tag, i, 1))
                        for i, x in enumerate(ds.auditory)]) if len(ds) else ds.auditory
    return Dataset(ds.labels, vis, aud)


def _epoch_noise(ds: Dataset, p: float, seed: int):
    if p == 0.0:
        return ds
    return lambda epoch: noisy_dataset(ds, p, seed, "train", epoch)


def voice_test_set(corpus: Corpus, interferer: AudioSample, p: float, cfg: ExperimentConfig) -> Dataset:
    """Clean images with every test recording mixed against ``interferer``."""
    if p == 0.0:
        return corpus.test
    specs = np.stack([compute_mfcc(mix_voice(a, interferer, p), cfg.encoder).astype(np.float32)
                      for a in corpus.test_audio])
    return Dataset(corpus.test.labels, corpus.test.visual, specs)


# ---------------------------------------------------------------- masks

@dataclass
class MaskSet:
    visual: MotifMask
    auditory: MotifMask
    integrated: MotifMask
    models: dict = field(default_factory=dict)


def _model(cfg: ExperimentConfig, seed: int, modality: str, recurrent: bool = True, mask=None,
           n_classes: int | None = None) -> Model:
    net = replace(cfg.model, modality=modality, recurrent=recurrent,
                  n_classes=n_classes or cfg.model.n_classes)
    return Model.create(net, seed, lif=cfg.neuron, mask=mask, surrogate=SurrogateConfig(V_win=cfg.train.v_win,
                                                                                           lr=cfg.train.lr))


def learn_masks(cfg: ExperimentConfig, corpus: Corpus, seed: int) -> MaskSet:
    """Train each single-sense network with full recurrence and BP, then
    binarize and integrate their recurrent weights."""
    t = cfg.train
    models = {}
    masks = {}
    for modality in ("visual", "auditory"):
        model = _model(cfg, seed, modality)
        fit(model, corpus.train.only(modality), t.pretrain_epochs, t.batch_size, t.lr, seed, "bp",
            clip=t.grad_clip)
        models[modality] = model
        masks[modality] = binarize(model.weights.W_rec, t.binarize)
        log.info("seed %d %s mask density %.4f", seed, modality, masks[modality].density)
    return MaskSet(masks["visual"], masks["auditory"],
                   integrate(masks["visual"], masks["auditory"]), models)


# ---------------------------------------------------------------- cocktail

@dataclass
class RunRecord:
    model: str
    noise: NoiseSpec
    seeds: list
    histories: list  # one list of EpochRecord per seed
    seconds: float
    parameter_count: int

    def __post_init__(self):
        if len(self.seeds) < 1 or len(self.seeds) != len(self.histories):
            raise ConfigError("a run needs one history per seed and at least one seed")

    @property
    def repeats(self) -> int:
        return len(self.seeds)

    @property
    def final_accs(self) -> np.ndarray:
        return np.array([h[-1].test_acc if h else np.nan for h in self.histories], dtype=np.float64)

    @property
    def acc_mean(self) -> float:
        return float(np.mean(self.final_accs))

    @property
    def acc_std(self) -> float | None:
        if self.repeats < 2:
            return None
        return float(np.std(self.final_accs, ddof=1))

    def test_curve(self) -> list[tuple[int, float]]:
        """Seed-averaged test accuracy per epoch."""
        n = min(len(h) for h in self.histories)
        return [(e + 1, float(np.mean([h[e].test_acc for h in self.histories]))) for e in range(n)]


def _cocktail_run(cfg, corpus, masks, model_name, spec, seed, train_ds, test_ds):
    mask = masks.integrated.adj if model_name == "M-SNN" else None
    model = _model(cfg, seed, "multi", recurrent=model_name == "M-SNN", mask=mask)
    hist = fit(model, train_ds, cfg.train.epochs, cfg.train.batch_size, cfg.train.lr, seed, "bp", test_ds,
               clip=cfg.train.grad_clip)
    return model, hist


def run_cocktail(cfg: ExperimentConfig, levels=None, repeats: int | None = None, kind: str | None = None,
                 corpus: Corpus | None = None, masks: dict | None = None, out_dir=None,
                 models=MODELS) -> list[RunRecord]:
    """Train M-SNN and F-SNN at every noise level and seed.

    Uniform noise is applied to train and test inputs alike; voice noise
    only to the test recordings, training stays clean.  ``masks`` may map
    seeds to precomputed ``MaskSet``s.
    """
    kind = kind or cfg.noise.kind
    levels = list(cfg.noise.levels if levels is None else levels)
    seeds = cfg.train.seeds if repeats is None else [cfg.train.seed + r for r in range(repeats)]
    corpus = corpus or load_corpus(cfg)
    masks = dict(masks or {})
    interferer = default_interferer(corpus, cfg.noise.interferer_label) if kind == "voice" else None
    specs = [NoiseSpec(kind, float(p), interferer) for p in levels]
    runs = {(m, i): ([], 0.0, 0) for m in models for i in range(len(specs))}
    for seed in seeds:
        if "M-SNN" in models and seed not in masks:
            masks[seed] = learn_masks(cfg, corpus, seed)
        for i, spec in enumerate(specs):
            if kind == "uniform":
                # fresh training noise every epoch; the test noise is fixed
                train_ds = _epoch_noise(corpus.train, spec.proportion, seed)
                test_ds = noisy_dataset(corpus.test, spec.proportion, seed, "test")
            else:
                train_ds = corpus.train  # voice noise never reaches training
                test_ds = voice_test_set(corpus, interferer, spec.proportion, cfg)
            for name in models:
                t0 = time.perf_counter()
                model, hist = _cocktail_run(cfg, corpus, masks.get(seed), name, spec, seed, train_ds, test_ds)
                hists, secs, _ = runs[name, i]
                hists.append(hist)
                runs[name, i] = (hists, secs + time.perf_counter() - t0, model.parameter_count())
                log.info("%s p=%.1f seed %d test_acc %.4f", name, spec.proportion, seed,
                         hist[-1].test_acc if hist else float("nan"))
                if out_dir is not None:
                    write_epoch_csv(Path(out_dir) / f"run_{name}_{kind}_{spec.proportion:.2f}_seed{seed}.csv", hist)
    records = [RunRecord(name, specs[i], list(seeds), hists, secs, n)
               for (name, i), (hists, secs, n) in runs.items()]
    if out_dir is not None:
        write_summary_csv(Path(out_dir) / f"summary_{kind}.csv", records)
    return records


def write_epoch_csv(path, history: list[EpochRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_acc", "test_acc"])
        for r in history:
            w.writerow([r.epoch, repr(float(r.train_acc)), "" if r.test_acc is None else repr(float(r.test_acc))])


def write_summary_csv(path, records: list[RunRecord]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "noise", "acc_mean", "acc_std"])
        for r in records:
            std = r.acc_std
            w.writerow([r.model, f"{r.noise.proportion:.2f}", repr(r.acc_mean), "" if std is None else repr(std)])


# ---------------------------------------------------------------- McGurk

@dataclass
class McGurkResult:
    rule: str
    features: np.ndarray  # (N, 2) PCA coordinates
    vis_labels: np.ndarray
    aud_labels: np.ndarray
    assignment: list
    tau_novel: float
    centroids: dict

    def histogram(self, vis: int, aud: int) -> dict:
        sel = (self.vis_labels == vis) & (self.aud_labels == aud)
        out = {str(c): 0 for c in self.centroids}
        out["novel"] = 0
        for a, s in zip(self.assignment, sel):
            if s:
                out[a] += 1
        return out

    def novel_fraction(self, vis: int, aud: int) -> float:
        h = self.histogram(vis, aud)
        total = sum(h.values())
        return h["novel"] / total if total else 0.0

    def to_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sample_id", "vis_label", "aud_label", "pc1", "pc2", "assignment"])
            for i, (pc, v, a, asg) in enumerate(zip(self.features, self.vis_labels, self.aud_labels,
                                                     self.assignment)):
                w.writerow([i, int(v), int(a), repr(float(pc[0])), repr(float(pc[1])), asg])


def pca_2d(fit_on: np.ndarray, data: np.ndarray) -> np.ndarray:
    """Project ``data`` on the top two principal axes of ``fit_on``.

    Axis signs are fixed so the largest-magnitude loading is positive;
    missing axes (rank < 2) project to zero.
    """
    X = np.asarray(fit_on, dtype=np.float64)
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    axes = np.zeros((2, X.shape[1]))
    tol = (s[0] if s.size else 0.0) * 1e-9
    for k in range(min(2, len(s))):
        if s[k] > tol and s[k] > 0:
            v = vt[k]
            axes[k] = v * np.sign(v[np.argmax(np.abs(v))])
    return (np.asarray(data, dtype=np.float64) - mean) @ axes.T


def assign_clusters(points: np.ndarray, consistent: np.ndarray, classes) -> tuple[list, float, dict]:
    """Nearest-centroid assignment with a novelty radius.

    Centroids and 95th-percentile radii come from the points flagged in
    ``consistent`` (an array of class labels, -1 for other points).  A
    point is "novel" when it lies farther than the mean radius from every
    centroid.
    """
    centroids, radii = {}, []
    for c in classes:
        own = points[consistent == c]
        if len(own) == 0:
            raise DataError(f"no consistent samples of class {c}")
        centroids[c] = own.mean(axis=0)
        radii.append(np.percentile(np.linalg.norm(own - centroids[c], axis=1), 95))
    tau = float(np.mean(radii))
    dist = np.stack([np.linalg.norm(points - centroids[c], axis=1) for c in classes], axis=1)
    out = []
    for row in dist:
        out.append("novel" if np.all(row > tau) else str(classes[int(np.argmin(row))]))
    return out, tau, centroids


def mcgurk_inputs(corpus: Corpus, classes, inconsistent) -> tuple[Dataset, np.ndarray, np.ndarray]:
    """Consistent test pairs of ``classes`` followed by inconsistent pairs.

    An inconsistent pair (v, a) takes every test image of v and the test
    spectrograms of a in order, cycling.
    """
    test = corpus.test
    vis, aud, vl, al = [], [], [], []
    for c in classes:
        idx = np.flatnonzero(test.labels == c)
        vis.append(test.visual[idx])
        aud.append(test.auditory[idx])
        vl += [c] * len(idx)
        al += [c] * len(idx)
    for v, a in inconsistent:
        iv = np.flatnonzero(test.labels == v)
        ia = np.flatnonzero(test.labels == a)
        if len(iv) == 0 or len(ia) == 0:
            raise DataError(f"no test samples for pair ({v}, {a})")
        vis.append(test.visual[iv])
        aud.append(test.auditory[ia[np.arange(len(iv)) % len(ia)]])
        vl += [v] * len(iv)
        al += [a] * len(iv)
    vl, al = np.array(vl), np.array(al)
    return Dataset(vl, np.concatenate(vis), np.concatenate(aud)), vl, al


def mcgurk_features(model: Model, ds: Dataset, seed: int) -> np.ndarray:
    """Time-summed hidden spike counts, ``(N, hidden_size)``."""
    if model.epochs_trained < 1:
        raise StateError("model has not been trained")
    _, rates = evaluate(model, ds, seed, features=True)
    return rates * model.net.T


def analyze_mcgurk(model: Model, corpus: Corpus, classes, inconsistent, seed: int, rule: str) -> McGurkResult:
    ds, vl, al = mcgurk_inputs(corpus, classes, inconsistent)
    feats = mcgurk_features(model, ds, seed)
    consistent = np.where(vl == al, vl, -1)
    pts = pca_2d(feats[consistent >= 0], feats)
    assignment, tau, centroids = assign_clusters(pts, consistent, list(classes))
    return McGurkResult(rule, pts, vl, al, assignment, tau, centroids)


def train_mcgurk_model(cfg: ExperimentConfig, corpus: Corpus, mask, rule: str, seed: int) -> Model:
    """Multisensory M-SNN trained on consistent pairs of the two classes."""
    m = cfg.mcgurk
    sel = np.flatnonzero(np.isin(corpus.train.labels, m.classes))
    model = _model(cfg, seed, "multi", mask=mask)
    lr = m.lr_bp if rule == "bp" else m.lr_reward
    fit(model, corpus.train.subset(sel), m.epochs, cfg.train.batch_size, lr, seed, rule,
        clip=cfg.train.grad_clip)
    return model


def run_mcgurk(cfg: ExperimentConfig, corpus: Corpus | None = None, masks: dict | None = None,
               models: dict | None = None, seeds=None, out_dir=None) -> dict:
    """Reward- and BP-trained models on the same inputs, per seed.

    ``models`` may map ``(rule, seed)`` to trained models; missing ones are
    trained here.  Returns ``{(rule, seed): McGurkResult}``.
    """
    corpus = corpus or load_corpus(cfg)
    masks = dict(masks or {})
    models = dict(models or {})
    seeds = cfg.train.seeds if seeds is None else list(seeds)
    pairs = [tuple(p) for p in cfg.mcgurk.inconsistent]
    out = {}
    for seed in seeds:
        for rule in ("reward", "bp"):
            if (rule, seed) not in models:
                if seed not in masks:
                    masks[seed] = learn_masks(cfg, corpus, seed)
                models[rule, seed] = train_mcgurk_model(cfg, corpus, masks[seed].integrated.adj, rule, seed)
            res = analyze_mcgurk(models[rule, seed], corpus, cfg.mcgurk.classes, pairs, seed, rule)
            out[rule, seed] = res
            if out_dir is not None:
                res.to_csv(Path(out_dir) / f"mcgurk_{rule}_seed{seed}.csv")
    if out_dir is not None:
        write_mcgurk_histograms(Path(out_dir) / "mcgurk_histograms.csv", out, cfg)
    return out


def write_mcgurk_histograms(path, results: dict, cfg: ExperimentConfig) -> None:
    classes = [str(c) for c in cfg.mcgurk.classes]
    conditions = [(c, c) for c in cfg.mcgurk.classes] + [tuple(p) for p in cfg.mcgurk.inconsistent]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rule", "seed", "vis_label", "aud_label", *[f"cluster_{c}" for c in classes], "novel"])
        for (rule, seed), res in results.items():
            for v, a in conditions:
                h = res.histogram(v, a)
                w.writerow([rule, seed, v, a, *[h[c] for c in classes], h["novel"]])


# ---------------------------------------------------------------- cost

@dataclass
class CostReport:
    names: list
    mean_epochs: dict
    parameter_counts: dict
    costs: dict
    levels: np.ndarray

    @property
    def savings(self) -> float:
        """``1 - Cost_first / Cost_second``."""
        a, b = self.costs[self.names[0]], self.costs[self.names[1]]
        if b == 0:
            raise GridError("second algorithm has zero cost")
        return 1.0 - a / b

    def to_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["algorithm", "mean_epoch", "parameters", "cost", "savings"])
            for i, name in enumerate(self.names):
                w.writerow([name, repr(self.mean_epochs[name]), self.parameter_counts[name],
                            repr(self.costs[name]), repr(self.savings) if i == 0 else ""])


def _curve(points) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(points, dict):
        points = sorted(points.items())
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise GridError("a curve is a non-empty list of (epoch, accuracy) pairs")
    order = np.argsort(pts[:, 0], kind="stable")
    x, y = pts[order, 0], pts[order, 1]
    return x, np.maximum.accumulate(y)


def first_reach(x: np.ndarray, y: np.ndarray, level: float) -> float:
    """Smallest epoch at which the (monotone, piecewise linear) curve
    reaches ``level``."""
    hit = np.flatnonzero(y >= level - 1e-12)
    if hit.size == 0:
        raise GridError(f"curve never reaches {level}")
    i = int(hit[0])
    if i == 0 or y[i] <= level:
        return float(x[i])
    frac = (level - y[i - 1]) / (y[i] - y[i - 1])
    return float(x[i - 1] + frac * (x[i] - x[i - 1]))


def training_cost(curves: dict, param_counts: dict, n_levels: int = 20, levels=None) -> CostReport:
    """Mean epochs-to-accuracy over a shared grid times parameter count.

    ``curves`` maps algorithm names to ``{epoch: accuracy}`` or lists of
    pairs; the first two names define the savings ratio.  The default grid
    has ``n_levels`` points spanning the overlap of the curves' ranges.
    """
    names = list(curves)
    if len(names) < 2:
        raise GridError("training cost compares at least two algorithms")
    parsed = {n: _curve(curves[n]) for n in names}
    if levels is None:
        lo = max(y.min() for _, y in parsed.values())
        hi = min(y.max() for _, y in parsed.values())
        if lo > hi:
            raise GridError(f"accuracy ranges do not overlap ({lo:.4f} > {hi:.4f})")
        levels = np.linspace(lo, hi, n_levels)
    levels = np.asarray(levels, dtype=np.float64)
    mean_epochs, costs, counts = {}, {}, {}
    for n in names:
        x, y = parsed[n]
        reach = [first_reach(x, y, lvl) for lvl in levels]
        mean_epochs[n] = float(np.mean(reach))
        counts[n] = param_counts[n]
        costs[n] = mean_epochs[n] * param_counts[n]
    return CostReport(names, mean_epochs, counts, costs, levels)


def cost_from_runs(records: list[RunRecord], proportion: float, n_levels: int = 20) -> CostReport:
    """M-SNN versus F-SNN cost at one noise level of a cocktail sweep."""
    pick = {r.model: r for r in records if abs(r.noise.proportion - proportion) < 1e-9}
    if not all(m in pick for m in MODELS):
        raise GridError(f"no M-SNN/F-SNN pair at noise {proportion}")
    curves = {m: pick[m].test_curve() for m in MODELS}
    return training_cost(curves, {m: pick[m].parameter_count for m in MODELS}, n_levels)


def read_curve_csv(path) -> list[tuple[int, float]]:
    """``epoch,train_acc,test_acc`` file to ``(epoch, test_acc)`` pairs."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [(int(r["epoch"]), float(r["test_acc"])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: not an epoch CSV ({exc})") from None
