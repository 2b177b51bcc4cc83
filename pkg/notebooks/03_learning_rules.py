"""
Two ways to train the same network
==================================

"bp" unrolls the network over time and backpropagates the readout
cross-entropy with a boxcar surrogate for the spike derivative.

"reward" never sends an error backwards through the layers.  Each layer
gets a target drawn from the label through a fixed random projection and
learns from the gap between its own firing rate and that target.

Both rules only touch recurrent weights that the mask allows.
"""

import numpy as np

from msnn.learning import reward_objective
from msnn.network import NetworkConfig
from msnn.training import Model, train_step

# Four classes, each a fixed random firing pattern plus Bernoulli jitter.
net = NetworkConfig(hidden_size=60, conv_channels=2, modality="visual", T=20, n_classes=4)
rng = np.random.default_rng(0)
protos = rng.random((4, net.image_side ** 2)) < 0.15
y = np.repeat(np.arange(4), 8)
x = (rng.random((len(y), net.T, protos.shape[1])) < 0.8 * protos[y][:, None]).astype(np.uint8)

# The reward rule only sees the output error at the readout, so it wants
# a larger step to fit the same data in the same number of updates.
for rule, lr in (("bp", 0.2), ("reward", 1.0)):
    model = Model.create(net, seed=3)
    _, tr = model.forward(x, None, train=True)
    obj0 = reward_objective(tr, y, net, model.reward)
    ce = []
    for epoch in range(30):
        loss, logits = train_step(model, x, None, y, rule, lr=lr)
        ce.append(loss)
    acc = float(np.mean(logits.argmax(axis=1) == y))
    print(f"{rule:6s} cross-entropy {ce[0]:.3f} -> {ce[-1]:.3f}, train acc {acc:.2f}")
    if rule == "reward":
        # the quantity this rule actually descends
        _, tr = model.forward(x, None, train=True)
        obj = reward_objective(tr, y, net, model.reward)
        print(f"       layer-target objective {obj0:.3f} -> {obj:.3f}")

# A sparse mask freezes every forbidden recurrent weight.
mask = (rng.random((60, 60)) < 0.1).astype(np.uint8)
np.fill_diagonal(mask, 0)
model = Model.create(net, seed=3, mask=mask)
before = model.weights.W_rec.copy()
train_step(model, x, None, y, "bp", lr=0.2)
moved = np.abs(model.weights.W_rec - before) > 0
print("updated entries outside the mask:", int((moved & (mask == 0)).sum()))
