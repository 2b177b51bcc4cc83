"""
From trained recurrent weights to a motif mask
==============================================

A recurrent weight matrix is reduced to a directed graph by keeping the
connections whose magnitude is at least the mean magnitude.  The 3-node
motif census of that graph is compared with random graphs that have the
same number of nodes and edges, and masks from two senses are merged by
taking the union of their edges.
"""

import numpy as np

from msnn.motif import (EnsembleConfig, MotifMask, binarize, canonical_edges, integrate,
                        significance, triad_census)

# --- binarization ---
W = np.array([[0.0, 0.9, -0.1],
              [0.05, 0.0, -0.7],
              [0.3, 0.0, 0.0]])
m = binarize(W)
print("kept edges:", m.edges(), "density %.2f" % m.density)

# --- census of a small graph ---
# A feed-forward loop: 0 -> 1, 1 -> 2, 0 -> 2.
ffl = MotifMask.from_edges(3, [(0, 1), (1, 2), (0, 2)])
counts = triad_census(ffl)
k = int(np.argmax(counts))
print("the loop is motif class", k + 1, "with canonical edges", canonical_edges(k + 1))

# --- significance against random controls ---
rng = np.random.default_rng(0)
n = 30
adj = np.zeros((n, n), np.uint8)
# plant feed-forward loops on top of sparse background edges
for _ in range(25):
    a, b, c = rng.choice(n, 3, replace=False)
    adj[a, b] = adj[b, c] = adj[a, c] = 1
adj |= (rng.random((n, n)) < 0.02).astype(np.uint8)
np.fill_diagonal(adj, 0)
census = significance(MotifMask(adj), cfg=EnsembleConfig(n_controls=200, seed=1))
print("\nclass  edges                 count  p-value")
for row in census.rows():
    print(f"{row['class_id']:5d}  {row['canonical_edges']:20s} {row['count']:6d}  {float(row['p_value']):.3f}")

# --- integration ---
vis = binarize(rng.standard_normal((8, 8)))
aud = binarize(rng.standard_normal((8, 8)))
both = integrate(vis, aud)
print(f"\nvisual {vis.edge_count} edges, auditory {aud.edge_count}, union {both.edge_count}")
