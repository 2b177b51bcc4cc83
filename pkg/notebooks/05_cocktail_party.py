"""
Cocktail party: motif-masked versus feed-forward networks under noise
=====================================================================

Each run first learns a recurrent mask per sense (one BP-trained
single-sense network each), integrates the two masks, then trains the
masked multisensory network (M-SNN) and a control without recurrence
(F-SNN) on the same noisy data.  The epoch curves then feed the
training-cost comparison.

This is a desk-sized version that runs in a few minutes; the real
settings are the defaults of ExperimentConfig.
"""

import tempfile
from pathlib import Path

from msnn import experiments as ex
from msnn.config import ExperimentConfig
from msnn.synth import make_spoken_corpus, make_visual_corpus


root = Path(tempfile.mkdtemp())
make_visual_corpus(root / "vis", 300, 100, seed=0)
make_spoken_corpus(root / "aud", 8, seed=0)

cfg = ExperimentConfig.from_dict({
    "data": {"visual_dir": str(root / "vis"), "audio_dir": str(root / "aud"),
             "n_train": 300, "n_test": 100, "T": 12},
    "model": {"hidden_size": 60, "conv_channels": 4},
    "train": {"epochs": 4, "pretrain_epochs": 2, "repeats": 1},
})
corpus = ex.load_corpus(cfg)
masks = {0: ex.learn_masks(cfg, corpus, seed=0)}
ms = masks[0]
print(f"mask density: visual {ms.visual.density:.3f}, auditory {ms.auditory.density:.3f}, "
      f"integrated {ms.integrated.density:.3f}")

# --- uniform noise on both senses ---
records = ex.run_cocktail(cfg, levels=[0.0, 0.5], corpus=corpus, masks=masks, out_dir=root / "out")
for r in records:
    print(f"{r.model:6s} p={r.noise.proportion:.1f} test acc {r.acc_mean:.3f}  params {r.parameter_count}")

# --- a competing voice mixed into the test recordings only ---
voice = ex.run_cocktail(cfg, levels=[0.5], kind="voice", corpus=corpus, masks=masks)
for r in voice:
    print(f"{r.model:6s} voice p={r.noise.proportion:.1f} test acc {r.acc_mean:.3f}")

# --- training cost at one noise level ---
# The mean epoch to reach each accuracy on a shared grid, times the
# parameter count.  The M-SNN counts only the recurrent weights its mask keeps.
report = ex.cost_from_runs(records, 0.0)
for name in report.names:
    print(f"{name}: mean epoch {report.mean_epochs[name]:.2f} x {report.parameter_counts[name]} params")
print(f"savings of M-SNN over F-SNN: {report.savings:.3f}")
print("CSV files written to", root / "out")
