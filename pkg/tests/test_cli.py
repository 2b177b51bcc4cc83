import csv

import numpy as np
import pytest

from msnn.checkpoint import load_checkpoint, model_from_checkpoint
from msnn.cli import main
from msnn.motif import MotifMask, read_mask, triad_census, write_mask
from msnn.training import Model


@pytest.fixture(scope="module")
def cfg_file(tiny_dirs, tmp_path_factory):
    vis, aud = tiny_dirs
    path = tmp_path_factory.mktemp("cfg") / "tiny.toml"
    path.write_text(f"""
[data]
visual_dir = "{vis}"
audio_dir = "{aud}"
n_train = 20
n_test = 40
T = 5
audio_test_fraction = 0.34

[model]
hidden_size = 10
conv_channels = 2

[train]
epochs = 1
pretrain_epochs = 1
repeats = 1
batch_size = 10

[noise]
levels = [0.0]

[mcgurk]
epochs = 1
""")
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def trained(cfg_file, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    for mod in ("visual", "auditory"):
        assert run("train", "--config", cfg_file, "--modality", mod, "--seed", 1, "--out", out) == 0
    return out


def test_train_writes_checkpoint_and_csv(trained):
    ck = load_checkpoint(trained / "visual_bp.ckpt")
    assert ck.config["rule"] == "bp" and ck.seeds == [1]
    rows = list(csv.reader(open(trained / "visual_bp_epochs.csv")))
    assert rows[0] == ["epoch", "train_acc", "test_acc"] and len(rows) == 2


def test_train_is_deterministic(cfg_file, trained, tmp_path):
    assert run("train", "--config", cfg_file, "--modality", "visual", "--seed", 1, "--out", tmp_path) == 0
    for name in ("visual_bp.ckpt", "visual_bp_epochs.csv"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes()
    assert run("train", "--config", cfg_file, "--modality", "visual", "--seed", 2, "--out", tmp_path) == 0
    assert (tmp_path / "visual_bp.ckpt").read_bytes() != (trained / "visual_bp.ckpt").read_bytes()


def test_zero_epochs_is_initialization(cfg_file, tmp_path):
    assert run("train", "--config", cfg_file, "--epochs", 0, "--seed", 3, "--out", tmp_path) == 0
    m = model_from_checkpoint(load_checkpoint(tmp_path / "visual_bp.ckpt"))
    init = Model.create(m.net, 3, lif=m.lif)
    for name, W in init.weights.items():
        np.testing.assert_array_equal(getattr(m.weights, name), W.astype(np.float32))


def test_train_usage_errors(cfg_file, tmp_path):
    assert run("train", "--config", cfg_file, "--modality", "multi", "--out", tmp_path) == 2
    assert run("train", "--config", cfg_file, "--epochs", -1, "--out", tmp_path) == 2
    assert run("train", "--config", tmp_path / "none.toml", "--out", tmp_path) == 2
    assert run("train", "--bogus") == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[train]\nlr = -1\n")
    assert run("train", "--config", bad, "--out", tmp_path) == 2


def test_train_missing_data(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'[data]\nvisual_dir = "{tmp_path}/v"\naudio_dir = "{tmp_path}/a"\n')
    assert run("train", "--config", cfg, "--out", tmp_path) == 3


def test_pipeline_extract_integrate_multi(cfg_file, trained, tmp_path):
    assert run("extract-mask", trained / "visual_bp.ckpt", "--output", tmp_path / "mv.txt") == 0
    assert run("extract-mask", trained / "auditory_bp.ckpt", "--output", tmp_path / "ma.txt") == 0
    assert run("integrate", tmp_path / "mv.txt", tmp_path / "ma.txt", "--output", tmp_path / "m.txt") == 0
    mv, ma, m = (read_mask(tmp_path / f) for f in ("mv.txt", "ma.txt", "m.txt"))
    np.testing.assert_array_equal(m.adj, mv.adj | ma.adj)
    assert run("train", "--config", cfg_file, "--modality", "multi", "--mask", tmp_path / "m.txt",
               "--out", tmp_path, "--name", "msnn") == 0
    model = model_from_checkpoint(load_checkpoint(tmp_path / "msnn.ckpt"))
    np.testing.assert_array_equal(model.mask, m.adj)
    assert run("eval", tmp_path / "msnn.ckpt", "--config", cfg_file, "--out", tmp_path) == 0
    rows = list(csv.reader(open(tmp_path / "eval_msnn.csv")))
    assert rows[0] == ["checkpoint", "noise", "accuracy"] and 0.0 <= float(rows[1][2]) <= 1.0
    assert run("eval", tmp_path / "msnn.ckpt", "--config", cfg_file, "--noise", 1.5, "--out", tmp_path) == 2


def test_extract_mask_examples(tmp_path, trained):
    ck = load_checkpoint(trained / "visual_bp.ckpt")
    ck.tensors["W_rec"] = np.zeros_like(ck.tensors["W_rec"])
    from msnn.checkpoint import save_checkpoint
    save_checkpoint(tmp_path / "zero.ckpt", ck)
    assert run("extract-mask", tmp_path / "zero.ckpt", "--output", tmp_path / "z.txt") == 0
    assert read_mask(tmp_path / "z.txt").edge_count == 0
    W = np.zeros((10, 10), np.float32)
    W[0, 1], W[2, 3], W[4, 5] = 3.0, -2.0, 0.01  # mean |w| over 90 entries is 0.0557
    ck.tensors["W_rec"] = W
    save_checkpoint(tmp_path / "k.ckpt", ck)
    assert run("extract-mask", tmp_path / "k.ckpt", "--output", tmp_path / "k.txt") == 0
    assert read_mask(tmp_path / "k.txt").edges() == [(0, 1), (2, 3)]
    raw = (tmp_path / "k.ckpt").read_bytes()
    (tmp_path / "bad.ckpt").write_bytes(b"XXXX" + raw[4:])
    assert run("extract-mask", tmp_path / "bad.ckpt") == 4
    (tmp_path / "v.ckpt").write_bytes(raw[:4] + b"\x09\x00" + raw[6:])
    assert run("extract-mask", tmp_path / "v.ckpt") == 4
    assert run("extract-mask", tmp_path / "missing.ckpt") == 3


def test_integrate_examples(tmp_path):
    rng = np.random.default_rng(0)
    a = (rng.random((8, 8)) < 0.3).astype(np.uint8)
    np.fill_diagonal(a, 0)
    write_mask(tmp_path / "a.txt", MotifMask(a))
    write_mask(tmp_path / "e.txt", MotifMask(np.zeros((8, 8))))
    for other in ("a.txt", "e.txt"):
        assert run("integrate", tmp_path / "a.txt", tmp_path / other, "--output", tmp_path / "u.txt") == 0
        np.testing.assert_array_equal(read_mask(tmp_path / "u.txt").adj, a)
    b = np.zeros((8, 8), np.uint8)
    b[a == 0] = 1
    np.fill_diagonal(b, 0)
    b[rng.random((8, 8)) < 0.5] = 0
    write_mask(tmp_path / "b.txt", MotifMask(b))
    assert run("integrate", tmp_path / "a.txt", tmp_path / "b.txt", "--output", tmp_path / "u.txt") == 0
    assert read_mask(tmp_path / "u.txt").edge_count == a.sum() + b.sum()
    write_mask(tmp_path / "s.txt", MotifMask(np.zeros((5, 5))))
    assert run("integrate", tmp_path / "a.txt", tmp_path / "s.txt", "--output", tmp_path / "u.txt") != 0


def test_census(tmp_path):
    write_mask(tmp_path / "empty.txt", MotifMask(np.zeros((6, 6))))
    assert run("census", tmp_path / "empty.txt", "--output", tmp_path / "e.csv") == 0
    rows = list(csv.DictReader(open(tmp_path / "e.csv")))
    assert len(rows) == 13 and all(int(r["count"]) == 0 for r in rows)
    chain = np.zeros((3, 3), np.uint8)
    chain[0, 1] = chain[1, 2] = 1
    write_mask(tmp_path / "chain.txt", MotifMask(chain))
    assert run("census", tmp_path / "chain.txt", "--output", tmp_path / "c.csv") == 0
    rows = list(csv.DictReader(open(tmp_path / "c.csv")))
    assert sum(int(r["count"]) > 0 for r in rows) == 1
    rng = np.random.default_rng(4)
    g = (rng.random((12, 12)) < 0.3).astype(np.uint8)
    np.fill_diagonal(g, 0)
    write_mask(tmp_path / "g.txt", MotifMask(g))
    assert run("census", tmp_path / "g.txt", "--controls", 20, "--seed", 5, "--output", tmp_path / "g1.csv") == 0
    assert run("census", tmp_path / "g.txt", "--controls", 20, "--seed", 5, "--output", tmp_path / "g2.csv") == 0
    assert (tmp_path / "g1.csv").read_bytes() == (tmp_path / "g2.csv").read_bytes()
    counts = [int(r["count"]) for r in csv.DictReader(open(tmp_path / "g1.csv"))]
    assert counts == list(triad_census(MotifMask(g)))
    (tmp_path / "broken.txt").write_text("4\n0 1\n1 x\n")
    assert run("census", tmp_path / "broken.txt") == 5


def test_census_reports_line_number(tmp_path, capsys):
    (tmp_path / "broken.txt").write_text("4\n0 1\n1 x\n")
    assert run("census", tmp_path / "broken.txt", "--out", tmp_path) == 5
    assert "line 3" in capsys.readouterr().err


def test_simulate_cocktail(cfg_file, tmp_path):
    assert run("simulate", "cocktail", "--config", cfg_file, "--out", tmp_path) == 0
    rows = list(csv.reader(open(tmp_path / "summary_uniform.csv")))
    assert {r[0] for r in rows[1:]} == {"M-SNN", "F-SNN"}


def test_simulate_mcgurk_needs_checkpoints(cfg_file, trained, tmp_path):
    assert run("simulate", "mcgurk", "--config", cfg_file, "--out", tmp_path) == 3
    assert run("simulate", "mcgurk", "--config", cfg_file, "--bp", trained / "visual_bp.ckpt",
               "--reward", tmp_path / "none.ckpt", "--out", tmp_path) == 3


def test_simulate_cost(tmp_path):
    (tmp_path / "a.csv").write_text("epoch,train_acc,test_acc\n1,0.5,0.5\n2,0.9,0.9\n")
    (tmp_path / "b.csv").write_text("epoch,train_acc,test_acc\n1,0.5,0.5\n2,0.7,0.7\n3,0.9,0.9\n")
    assert run("simulate", "cost", "--curve", f"A={tmp_path / 'a.csv'}", "--params", "A=100",
               "--curve", f"B={tmp_path / 'b.csv'}", "--params", "B=100", "--out", tmp_path) == 0
    rows = list(csv.DictReader(open(tmp_path / "cost.csv")))
    assert rows[0]["algorithm"] == "A" and float(rows[0]["cost"]) < float(rows[1]["cost"])
    assert run("simulate", "cost", "--curve", f"A={tmp_path / 'a.csv'}", "--params", "A=100",
               "--out", tmp_path) == 6
    (tmp_path / "junk.csv").write_text("x,y\n1,2\n")
    assert run("simulate", "cost", "--curve", f"A={tmp_path / 'junk.csv'}", "--params", "A=1",
               "--curve", f"B={tmp_path / 'b.csv'}", "--params", "B=1", "--out", tmp_path) == 5


def test_threads_flag(cfg_file, tmp_path):
    assert run("--threads", 1, "census", "--help") == 0
    write_mask(tmp_path / "e.txt", MotifMask(np.zeros((4, 4))))
    assert run("census", tmp_path / "e.txt", "--threads", 1, "--out", tmp_path) == 0
