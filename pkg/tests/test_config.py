import json

import pytest

from msnn.config import ExperimentConfig, load_config
from msnn.errors import ConfigError

TOML = """
[data]
visual_dir = "vis"
audio_dir = "aud"
n_train = 100
T = 12
mfcc_coeffs = 20

[model]
hidden_size = 50

[model.neuron]
V_th = 0.6

[train]
rule = "reward"
epochs = 4
seed = 5
repeats = 2

[noise]
levels = [0.0, 0.9]

[mcgurk]
classes = [2, 3]

[cost]
n_levels = 10
"""


def test_toml(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(TOML)
    cfg = load_config(p)
    assert cfg.data.n_train == 100 and cfg.encoder.T == 12 and cfg.model.T == 12
    assert cfg.model.audio_coeffs == 20 and cfg.model.hidden_size == 50
    assert cfg.neuron.V_th == 0.6 and cfg.train.rule == "reward"
    assert cfg.train.seeds == [5, 6] and cfg.noise.levels == [0.0, 0.9] and cfg.cost.n_levels == 10


def test_json_round_trip(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(TOML)
    cfg = load_config(p)
    j = tmp_path / "c.json"
    j.write_text(json.dumps(cfg.to_dict()))
    assert load_config(j) == cfg


def test_defaults():
    cfg = ExperimentConfig.from_dict({})
    assert cfg.data.n_train == 2000 and cfg.data.n_test == 500
    assert cfg.train.epochs == 30 and cfg.train.repeats == 3
    assert cfg.model.hidden_size == 200


@pytest.mark.parametrize("bad", [
    {"extra": {}},
    {"train": {"momentum": 0.9}},
    {"train": {"rule": "adam"}},
    {"data": {"n_train": -1}},
    {"noise": {"kind": "pink"}},
    {"model": {"neuron": {"alpha": 2.0}}},
    {"mcgurk": {"classes": [1, 2, 3]}},
    {"data": {"T": 0}},
    {"train": {"grad_clip": -1.0}},
])
def test_rejections(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_unreadable(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.toml")
    p = tmp_path / "broken.toml"
    p.write_text("[data\n")
    with pytest.raises(ConfigError):
        load_config(p)
