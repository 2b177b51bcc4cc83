"""Spiking networks with motif-masked recurrence.

Modules: ``data`` (IDX/WAV readers and manifests), ``encoding`` (spike
encoders, MFCC), ``neuron`` (LIF dynamics), ``network`` (forward pass),
``learning`` (surrogate BPTT and reward learning), ``training`` (epoch
loop), ``motif`` (masks and motif census), ``experiments`` (noise, McGurk
and cost protocols), ``checkpoint`` and ``cli``.
"""

from .errors import MsnnError
from .neuron import LifParams
from .network import NetworkConfig, Weights, forward_sequence, init_weights
from .learning import RewardConfig, SurrogateConfig, bptt_backward, reward_backward
from .motif import MotifMask, binarize, integrate, significance, triad_census
from .training import Dataset, Model, evaluate, fit
from .config import ExperimentConfig, load_config

__version__ = "0.1.0"

__all__ = [
    "MsnnError", "LifParams", "NetworkConfig", "Weights", "forward_sequence", "init_weights",
    "RewardConfig", "SurrogateConfig", "bptt_backward", "reward_backward", "MotifMask", "binarize",
    "integrate", "significance", "triad_census", "Dataset", "Model", "evaluate", "fit",
    "ExperimentConfig", "load_config",
]
