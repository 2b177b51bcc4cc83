import itertools

import networkx as nx
import numpy as np
import pytest

from msnn.errors import MaskError, ShapeError
from msnn.motif import (CODE_TO_CLASS, MOTIF_CLASSES, EnsembleConfig, MaskFileError, MotifCensus,
                        MotifMask, binarize, canonical_edges, integrate, random_control, read_mask,
                        significance, triad_census, write_mask)


def random_graph(n, density, rng):
    adj = (rng.random((n, n)) < density).astype(np.uint8)
    np.fill_diagonal(adj, 0)
    return adj


def brute_force_census(adj):
    """All-triples count; each induced subgraph is matched to a class by
    trying every relabeling against the canonical edge sets."""
    canon = []
    for _, edges in MOTIF_CLASSES:
        canon.append(frozenset(edges))
    counts = np.zeros(13, dtype=np.int64)
    n = adj.shape[0]
    for tri in itertools.combinations(range(n), 3):
        edges = {(a, b) for a in range(3) for b in range(3) if a != b and adj[tri[a], tri[b]]}
        for perm in itertools.permutations(range(3)):
            relabeled = frozenset((perm[a], perm[b]) for a, b in edges)
            if relabeled in canon:
                counts[canon.index(relabeled)] += 1
                break
    return counts


def networkx_census(adj):
    g = nx.DiGraph()
    g.add_nodes_from(range(adj.shape[0]))
    g.add_edges_from(zip(*np.nonzero(adj)))
    tc = nx.triadic_census(g)
    return np.array([tc[name] for name, _ in MOTIF_CLASSES])


def test_class_table_covers_all_codes():
    # 10 codes are disconnected (empty, one edge, one mutual pair)
    assert np.sum(CODE_TO_CLASS == 0) == 10
    sizes = np.bincount(CODE_TO_CLASS, minlength=14)[1:]
    assert sizes.sum() == 54
    assert sizes[12] == 1  # 300 is the only fully mutual code


def test_canonical_edges_string():
    assert canonical_edges(1) == "0>1;2>1"
    assert canonical_edges(13).count(">") == 6


@pytest.mark.parametrize("cid", range(1, 14))
def test_each_canonical_motif_counts_once(cid):
    adj = np.zeros((3, 3), dtype=np.uint8)
    for i, j in MOTIF_CLASSES[cid - 1][1]:
        adj[i, j] = 1
    counts = triad_census(adj)
    assert counts[cid - 1] == 1 and counts.sum() == 1


def test_chain_single_row():
    counts = triad_census(MotifMask.from_edges(3, [(0, 1), (1, 2)]))
    assert np.flatnonzero(counts).tolist() == [2]  # 021C


def test_empty_and_tiny():
    assert triad_census(np.zeros((5, 5), np.uint8)).sum() == 0
    assert triad_census(np.zeros((2, 2), np.uint8)).sum() == 0
    # single edge and a mutual pair are not weakly connected triads
    assert triad_census(MotifMask.from_edges(4, [(0, 1), (1, 0)])).sum() == 0


def test_matches_brute_force_and_networkx():
    rng = np.random.default_rng(11)
    for trial in range(30):
        n = int(rng.integers(3, 11))
        adj = random_graph(n, rng.uniform(0.05, 0.9), rng)
        got = triad_census(adj)
        np.testing.assert_array_equal(got, brute_force_census(adj))
        np.testing.assert_array_equal(got, networkx_census(adj))


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    adj = random_graph(25, 0.2, rng)
    perm = rng.permutation(25)
    np.testing.assert_array_equal(triad_census(adj), triad_census(adj[np.ix_(perm, perm)]))


def test_complete_graph():
    n = 7
    adj = np.ones((n, n), np.uint8) - np.eye(n, dtype=np.uint8)
    counts = triad_census(adj)
    assert counts[-1] == 35 and counts[:-1].sum() == 0


def test_mask_validation():
    with pytest.raises(MaskError):
        MotifMask(np.ones((3, 3), np.uint8))
    with pytest.raises(MaskError):
        MotifMask(np.array([[0, 2], [0, 0]]))
    with pytest.raises(MaskError):
        MotifMask(np.zeros((2, 3)))
    m = MotifMask.from_edges(4, [(0, 1), (2, 3)])
    assert m.edge_count == 2 and m.density == pytest.approx(2 / 12)


def test_binarize_mean_abs():
    W = np.array([[0.0, 0.9, -0.1],
                  [0.2, 0.0, -0.8],
                  [0.05, 0.6, 0.0]])
    # mean |w| over off-diagonal = 2.65 / 6
    m = binarize(W)
    assert sorted(m.edges()) == [(0, 1), (1, 2), (2, 1)]


def test_binarize_rules():
    W = np.arange(16, dtype=float).reshape(4, 4)
    np.fill_diagonal(W, 0)
    assert binarize(np.zeros((4, 4))).edge_count == 0
    assert binarize(W, "topk:0.25").edge_count == 3
    assert binarize(W, "topk:0").edge_count == 0
    assert binarize(W, "abs:13.5").edges() == [(3, 2)]
    # constant magnitudes: everything kept
    C = np.full((4, 4), 0.3)
    assert binarize(C).edge_count == 12
    with pytest.raises(ValueError):
        binarize(W, "median")
    with pytest.raises(ShapeError):
        binarize(np.zeros((3, 4)))


def test_binarize_is_sign_blind():
    rng = np.random.default_rng(0)
    W = rng.normal(size=(20, 20))
    assert binarize(W).edges() == binarize(-W).edges()


def test_integrate_union():
    a = MotifMask.from_edges(5, [(0, 1), (1, 2)])
    b = MotifMask.from_edges(5, [(3, 4)])
    assert integrate(a, a).edges() == a.edges()
    assert integrate(a, MotifMask.empty(5)).edges() == a.edges()
    assert integrate(a, b).edge_count == 3
    with pytest.raises(ShapeError):
        integrate(a, MotifMask.empty(4))


def test_random_control_has_exact_edge_count():
    rng = np.random.default_rng(0)
    adj = random_control(30, 200, rng)
    assert adj.sum() == 200 and not np.any(np.diagonal(adj))


def test_significance_deterministic_and_bounded():
    rng = np.random.default_rng(1)
    adj = random_graph(15, 0.2, rng)
    a = significance(adj, cfg=EnsembleConfig(n_controls=50, seed=4))
    b = significance(adj, cfg=EnsembleConfig(n_controls=50, seed=4))
    np.testing.assert_array_equal(a.p_values, b.p_values)
    assert np.all((a.p_values >= 0) & (a.p_values <= 1))
    pf = a.plausible_freq
    assert np.all(pf <= a.frequency + 1e-15) and np.all(pf >= 0)


def test_planted_feed_forward_loops_are_significant():
    # disjoint 030T triangles on top of a sparse random background
    n = 60
    rng = np.random.default_rng(2)
    adj = random_graph(n, 0.02, rng)
    for k in range(0, 60, 3):
        adj[k, k + 1] = adj[k + 1, k + 2] = adj[k, k + 2] = 1
        adj[k + 1, k] = adj[k + 2, k + 1] = adj[k + 2, k] = 0
    census = significance(adj, cfg=EnsembleConfig(n_controls=200, seed=0))
    ffl = [name for name, _ in MOTIF_CLASSES].index("030T")
    assert census.p_values[ffl] <= 0.01


def test_census_csv(tmp_path):
    c = MotifCensus(triad_census(MotifMask.from_edges(3, [(0, 1), (1, 2)])))
    c.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "class_id,canonical_edges,count,frequency,p_value,plausible_frequency"
    assert len(lines) == 14
    assert lines[3].startswith("3,0>1;1>2,1,1.0,")


def test_mask_file_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    m = MotifMask(random_graph(12, 0.3, rng))
    write_mask(tmp_path / "m.txt", m)
    np.testing.assert_array_equal(read_mask(tmp_path / "m.txt").adj, m.adj)
    write_mask(tmp_path / "e.txt", MotifMask.empty(4))
    assert read_mask(tmp_path / "e.txt").edge_count == 0


@pytest.mark.parametrize("text,line", [("", 1), ("abc\n", 1), ("3\n0 1\n1\n", 3), ("3\n0 5\n", 2),
                                       ("3\n1 1\n", 2)])
def test_mask_file_errors_carry_line(tmp_path, text, line):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(MaskFileError) as info:
        read_mask(p)
    assert info.value.line == line
