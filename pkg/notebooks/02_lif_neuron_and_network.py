"""
A single LIF layer, then the full two-branch network
====================================================

Each neuron keeps two potentials: one driven by feed-forward input and
one driven by recurrent input.  Either can fire.  Every spike raises an
adaptive threshold that decays back by a factor alpha per tick, and a
neuron that fired sits at V_reset for tau_ref ticks.
"""

import numpy as np

from msnn.network import NetworkConfig, full_mask, init_weights, forward_sequence, hidden_rates
from msnn.neuron import LayerState, LifParams, step

# --- one neuron under constant drive ---
p = LifParams()
state = LayerState.zeros((1,))
trace = []
for t in range(30):
    state = step(state, np.array([0.4]), np.array([0.0]), p)
    trace.append((float(state.V_f[0]), float(state.S[0]), float(state.a[0])))
spikes = [t for t, (_, s, _) in enumerate(trace) if s]
print("spike ticks under constant drive:", spikes)
print("threshold variable after 30 ticks: %.3f" % trace[-1][2])
# Intervals stretch as the threshold builds up, then settle.
print("inter-spike intervals:", np.diff(spikes).tolist())

# --- the whole network on random spike trains ---
net = NetworkConfig(hidden_size=50, conv_channels=4, modality="multi", T=20)
rng = np.random.default_rng(1)
weights = init_weights(net, rng)
x_v = (rng.random((3, net.T, net.image_side ** 2)) < 0.2).astype(np.uint8)
x_a = (rng.random((3, net.T, net.audio_coeffs)) < 0.5).astype(np.uint8)

logits, tr = forward_sequence(x_v, x_a, weights, full_mask(net.hidden_size), net, p, train=True)
print("logits", logits.shape, "recorded tensors:", sorted(tr.ticks))
print("mean hidden rate per sample:", hidden_rates(tr).mean(axis=1).round(3))

# With an empty recurrent mask the recurrent potentials never move.
empty = np.zeros((net.hidden_size, net.hidden_size), np.uint8)
logits0, _ = forward_sequence(x_v, x_a, weights, empty, net, p)
print("logit change from removing recurrence: %.4f" % np.abs(logits - logits0).max())
