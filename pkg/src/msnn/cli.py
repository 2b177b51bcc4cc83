"""``msnn`` command-line tool.

Exit codes: 0 success, 2 usage or config error, 3 missing data or state,
4 checkpoint error, 5 file parse error, 6 ill-defined experiment.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import nullcontext
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checkpoint import checkpoint_from_model, load_checkpoint, model_from_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_config
from .errors import (CheckpointError, ConfigError, DataError, FormatError, GridError, MaskError, MsnnError,
                     RangeError, StateError)
from .experiments import (MaskSet, load_corpus, noisy_dataset, read_curve_csv, run_cocktail, run_mcgurk,
                          training_cost, write_epoch_csv)
from .learning import SurrogateConfig
from .motif import (EnsembleConfig, MotifCensus, MotifMask, binarize, integrate, read_mask, significance,
                    triad_census, write_mask)
from .training import Model, evaluate, fit

log = logging.getLogger("msnn")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CHECKPOINT, EXIT_PARSE, EXIT_EXPERIMENT = 0, 2, 3, 4, 5, 6


class UsageError(Exception):
    pass


def _global_options(p: argparse.ArgumentParser, default):
    p.add_argument("--config", default=default, help="experiment TOML/JSON file")
    p.add_argument("--seed", type=int, default=default, help="base seed (overrides [train] seed)")
    p.add_argument("--threads", type=int, default=default, help="cap on BLAS threads")
    p.add_argument("--out", default=default, help="output directory (default: current)")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msnn", description="Motif-masked spiking networks.")
    _global_options(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)

    p = sub.add_parser("train", parents=[common], help="train one network and write a checkpoint")
    p.add_argument("--modality", choices=("visual", "auditory", "multi"), default="visual")
    p.add_argument("--rule", choices=("bp", "reward"), default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--mask", help="mask file gating the recurrence (required for multi)")
    p.add_argument("--feedforward", action="store_true", help="drop the recurrence (F-SNN)")
    p.add_argument("--classes", help="comma-separated labels to train on, e.g. 2,3")
    p.add_argument("--name", help="output file stem (default: <modality>_<rule>)")

    p = sub.add_parser("extract-mask", parents=[common], help="binarize a checkpoint's recurrent weights")
    p.add_argument("checkpoint")
    p.add_argument("--rule", default=None, help="mean-abs | topk:<fraction> | abs:<theta>")
    p.add_argument("--output", help="mask file (default: <out>/mask_<checkpoint stem>.txt)")

    p = sub.add_parser("integrate", parents=[common], help="union of two mask files")
    p.add_argument("mask_s")
    p.add_argument("mask_t")
    p.add_argument("--output", help="mask file (default: <out>/mask_integrated.txt)")

    p = sub.add_parser("census", parents=[common], help="3-node motif census of a mask file")
    p.add_argument("mask")
    p.add_argument("--controls", type=int, default=0, help="random controls for p-values (0: none)")
    p.add_argument("--output", help="CSV file (default: <out>/census.csv)")

    p = sub.add_parser("simulate", parents=[common], help="run an experiment protocol")
    p.add_argument("kind", choices=("cocktail", "mcgurk", "cost"))
    p.add_argument("--mask", help="cocktail: integrated mask used for every seed")
    p.add_argument("--levels", help="cocktail: comma-separated noise proportions")
    p.add_argument("--noise-kind", choices=("uniform", "voice"))
    p.add_argument("--repeats", type=int)
    p.add_argument("--reward", help="mcgurk: reward-trained checkpoint")
    p.add_argument("--bp", help="mcgurk: BP-trained checkpoint")
    p.add_argument("--curve", action="append", default=[], help="cost: NAME=epoch CSV (repeatable)")
    p.add_argument("--params", action="append", default=[], help="cost: NAME=parameter count")

    p = sub.add_parser("eval", parents=[common], help="test accuracy of a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--noise", type=float, default=0.0, help="uniform noise proportion")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed))
    return cfg


def _out(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_mask_file(path) -> MotifMask:
    if not Path(path).exists():
        raise DataError(f"mask file {path} not found")
    return read_mask(path)


def _load_model(path) -> tuple[Model, object]:
    if not Path(path).exists():
        raise DataError(f"checkpoint {path} not found")
    ckpt = load_checkpoint(path)
    return model_from_checkpoint(ckpt), ckpt


def cmd_train(args, cfg: ExperimentConfig) -> None:
    if args.modality == "multi" and not args.mask and not args.feedforward:
        raise UsageError("train --modality multi needs --mask (or --feedforward)")
    t = cfg.train
    rule = args.rule or t.rule
    epochs = t.epochs if args.epochs is None else args.epochs
    if epochs < 0:
        raise UsageError("--epochs must be >= 0")
    net = replace(cfg.model, modality=args.modality, recurrent=not args.feedforward)
    mask = None
    if args.mask and not args.feedforward:
        mask = _read_mask_file(args.mask)
        if mask.n != net.hidden_size:
            raise ConfigError(f"mask has {mask.n} nodes, network {net.hidden_size}")
        mask = mask.adj
    corpus = load_corpus(cfg)
    train, test = corpus.train.only(args.modality), corpus.test.only(args.modality)
    if args.classes:
        keep = [int(c) for c in args.classes.split(",")]
        train = train.subset(np.flatnonzero(np.isin(train.labels, keep)))
        test = test.subset(np.flatnonzero(np.isin(test.labels, keep)))
    model = Model.create(net, t.seed, lif=cfg.neuron, mask=mask, surrogate=SurrogateConfig(t.v_win, t.lr))
    history = fit(model, train, epochs, t.batch_size, t.lr, t.seed, rule, test if len(test) else None,
                  clip=t.grad_clip)
    stem = args.name or f"{args.modality}_{rule}"
    out = _out(args)
    ckpt = checkpoint_from_model(model, [t.seed], {"rule": rule, "experiment": cfg.to_dict()})
    save_checkpoint(out / f"{stem}.ckpt", ckpt)
    write_epoch_csv(out / f"{stem}_epochs.csv", history)
    print(f"wrote {out / f'{stem}.ckpt'}")


def cmd_extract_mask(args, cfg: ExperimentConfig) -> None:
    model, ckpt = _load_model(args.checkpoint)
    mask = binarize(model.weights.W_rec, args.rule or cfg.train.binarize)
    path = Path(args.output) if args.output else _out(args) / f"mask_{Path(args.checkpoint).stem}.txt"
    write_mask(path, mask)
    print(f"density {mask.density:.6f} ({mask.edge_count} edges) -> {path}")


def cmd_integrate(args, cfg: ExperimentConfig) -> None:
    merged = integrate(_read_mask_file(args.mask_s), _read_mask_file(args.mask_t))
    path = Path(args.output) if args.output else _out(args) / "mask_integrated.txt"
    write_mask(path, merged)
    print(f"{merged.edge_count} edges -> {path}")


def cmd_census(args, cfg: ExperimentConfig) -> None:
    mask = _read_mask_file(args.mask)
    if args.controls < 0:
        raise UsageError("--controls must be >= 0")
    if args.controls:
        seed = cfg.train.seed if args.seed is None else args.seed
        census = significance(mask, cfg=EnsembleConfig(args.controls, seed))
    else:
        census = MotifCensus(triad_census(mask))
    path = Path(args.output) if args.output else _out(args) / "census.csv"
    census.to_csv(path)
    print(f"census of {mask.n} nodes, {mask.edge_count} edges -> {path}")


def _levels(args, cfg):
    if args.levels:
        try:
            return [float(x) for x in args.levels.split(",")]
        except ValueError:
            raise UsageError(f"bad --levels {args.levels!r}") from None
    return list(cfg.noise.levels)


def cmd_simulate(args, cfg: ExperimentConfig) -> None:
    out = _out(args)
    if args.kind == "cocktail":
        kind = args.noise_kind or cfg.noise.kind
        corpus = load_corpus(cfg)
        repeats = args.repeats or cfg.train.repeats
        masks = None
        if args.mask:
            m = _read_mask_file(args.mask)
            masks = {cfg.train.seed + r: MaskSet(m, m, m) for r in range(repeats)}
        records = run_cocktail(cfg, _levels(args, cfg), repeats, kind, corpus, masks, out)
        for r in records:
            std = "" if r.acc_std is None else f" +- {r.acc_std:.4f}"
            print(f"{r.model} p={r.noise.proportion:.2f} acc {r.acc_mean:.4f}{std}")
    elif args.kind == "mcgurk":
        if not args.reward or not args.bp:
            raise DataError("mcgurk needs --reward and --bp checkpoints")
        corpus = load_corpus(cfg)
        models = {}
        for rule, path in (("reward", args.reward), ("bp", args.bp)):
            models[rule, cfg.train.seed], _ = _load_model(path)
        results = run_mcgurk(cfg, corpus, models=models, seeds=[cfg.train.seed], out_dir=out)
        for (rule, seed), res in results.items():
            for v, a in [tuple(p) for p in cfg.mcgurk.inconsistent]:
                print(f"{rule} ({v},{a}) novel fraction {res.novel_fraction(v, a):.4f}")
    else:
        curves, params = {}, {}
        for item in args.curve:
            name, _, path = item.partition("=")
            if not path:
                raise UsageError(f"--curve expects NAME=path, got {item!r}")
            if not Path(path).exists():
                raise DataError(f"curve file {path} not found")
            curves[name] = read_curve_csv(path)
        for item in args.params:
            name, _, count = item.partition("=")
            try:
                params[name] = int(count)
            except ValueError:
                raise UsageError(f"--params expects NAME=int, got {item!r}") from None
        missing = set(curves) - set(params)
        if missing:
            raise UsageError(f"no --params for {sorted(missing)}")
        report = training_cost(curves, params, cfg.cost.n_levels)
        report.to_csv(out / "cost.csv")
        print(f"savings {report.savings:.4f}")


def cmd_eval(args, cfg: ExperimentConfig) -> None:
    model, ckpt = _load_model(args.checkpoint)
    corpus = load_corpus(cfg)
    seed = cfg.train.seed
    test = noisy_dataset(corpus.test, args.noise, seed, "test").only(model.net.modality)
    acc = evaluate(model, test, seed)
    path = _out(args) / f"eval_{Path(args.checkpoint).stem}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["checkpoint", "noise", "accuracy"])
        w.writerow([Path(args.checkpoint).name, f"{args.noise:.2f}", repr(acc)])
    print(f"accuracy {acc:.4f} -> {path}")


COMMANDS = {
    "train": cmd_train,
    "extract-mask": cmd_extract_mask,
    "integrate": cmd_integrate,
    "census": cmd_census,
    "simulate": cmd_simulate,
    "eval": cmd_eval,
}


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=max(1, n))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        with _thread_limit(args.threads):
            COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError, RangeError) as exc:
        print(f"msnn: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, StateError) as exc:
        print(f"msnn: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CheckpointError as exc:
        print(f"msnn: checkpoint error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (FormatError, MaskError) as exc:
        print(f"msnn: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GridError as exc:
        print(f"msnn: experiment error: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    except MsnnError as exc:
        print(f"msnn: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
