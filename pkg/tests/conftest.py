import pytest

from msnn.config import ExperimentConfig
from msnn.synth import make_spoken_corpus, make_visual_corpus


@pytest.fixture(scope="session")
def tiny_dirs(tmp_path_factory):
    """A few dozen images and three recordings per digit."""
    root = tmp_path_factory.mktemp("tiny")
    make_visual_corpus(root / "vis", 40, 40, seed=1)
    make_spoken_corpus(root / "aud", 3, seed=1)
    return root / "vis", root / "aud"


def tiny_config(dirs, **sections) -> ExperimentConfig:
    vis, aud = dirs
    d = {"data": {"visual_dir": str(vis), "audio_dir": str(aud), "n_train": 40, "n_test": 40, "T": 6,
                  "audio_test_fraction": 0.34},
         "model": {"hidden_size": 12, "conv_channels": 2},
         "train": {"epochs": 2, "pretrain_epochs": 1, "repeats": 1, "batch_size": 10},
         "mcgurk": {"epochs": 1}}
    for k, v in sections.items():
        d.setdefault(k, {}).update(v)
    return ExperimentConfig.from_dict(d)


@pytest.fixture
def tiny_cfg(tiny_dirs):
    return tiny_config(tiny_dirs)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
