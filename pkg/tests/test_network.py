from dataclasses import replace

import numpy as np
import pytest

from msnn.errors import ConfigError, ShapeError
from msnn.network import (NetworkConfig, Weights, forward_sequence, forward_tick, full_mask, im2col,
                          init_weights, initial_state, predict)
from msnn.neuron import LifParams

P = LifParams()


def small(modality="visual", **kw):
    return NetworkConfig(hidden_size=12, conv_channels=2, modality=modality, T=6, image_side=9,
                         audio_coeffs=7, audio_context=5, **kw)


def spikes(rng, B, T, C, rate=0.4):
    return (rng.random((B, T, C)) < rate).astype(np.uint8)


def test_config_validation():
    with pytest.raises(ConfigError):
        NetworkConfig(hidden_size=2)
    with pytest.raises(ConfigError):
        NetworkConfig(modality="tactile")
    with pytest.raises(ConfigError):
        NetworkConfig(conv_kernel=30)
    with pytest.raises(ConfigError):
        NetworkConfig.from_dict({"hidden": 3})
    cfg = NetworkConfig()
    assert NetworkConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.conv_grid("v") == (12, 12) and cfg.conv_size("v") == 1152


def test_init_weights_shapes_and_diagonal():
    cfg = NetworkConfig(modality="multi")
    w = init_weights(cfg, np.random.default_rng(0))
    assert w.W_conv_v.shape == (25, 8) and w.W_proj_v.shape == (1152, 200)
    assert w.W_proj_a.shape == (cfg.conv_size("a"), 200)
    assert w.W_rec.shape == (200, 200) and not np.any(np.diagonal(w.W_rec))
    assert w.W_out.shape == (200, 10)
    v = init_weights(NetworkConfig(), np.random.default_rng(0))
    assert v.W_conv_a is None and v.W_proj_a is None


def test_parameter_count():
    cfg = small()
    w = init_weights(cfg, np.random.default_rng(0))
    ff = w.W_conv_v.size + w.W_proj_v.size + w.W_out.size
    assert w.parameter_count(recurrent=False) == ff
    mask = np.zeros((12, 12), np.uint8)
    mask[0, 1] = mask[3, 2] = 1
    assert w.parameter_count(mask) == ff + 2
    assert w.parameter_count() == ff + 12 * 11


def test_im2col_matches_direct_convolution():
    rng = np.random.default_rng(1)
    img = rng.random((2, 9, 9))
    k, s = 5, 2
    patches = im2col(img, k, s)
    kern = rng.random(k * k)
    got = (patches @ kern).reshape(2, 3, 3)
    for b in range(2):
        for i in range(3):
            for j in range(3):
                ref = np.sum(img[b, i * s:i * s + k, j * s:j * s + k].reshape(-1) * kern)
                assert got[b, i, j] == pytest.approx(ref)


def test_zero_input_is_quiescent():
    cfg = small("multi")
    w = init_weights(cfg, np.random.default_rng(0))
    logits, trace = forward_sequence(np.zeros((2, 6, 81)), np.zeros((2, 6, 7)), w, full_mask(12), cfg, P,
                                     train=True)
    assert np.all(logits == 0)
    assert not trace.ticks["S"].any() and not trace.ticks["conv_v"]["Sf"].any()


def test_zero_mask_equals_zero_recurrent_weights():
    cfg = small()
    rng = np.random.default_rng(2)
    w = init_weights(cfg, rng)
    w.W_proj_v *= 3
    x = spikes(rng, 4, 6, 81)
    a, _ = forward_sequence(x, None, w, np.zeros((12, 12)), cfg, P)
    w0 = w.copy()
    w0.W_rec[:] = 0
    b, _ = forward_sequence(x, None, w0, full_mask(12), cfg, P)
    np.testing.assert_array_equal(a, b)


def test_recurrent_edge_raises_target_potential():
    cfg = NetworkConfig(hidden_size=3, conv_channels=1, T=2, image_side=5)
    H = 3
    w = Weights(W_rec=np.zeros((H, H)), W_out=np.zeros((H, 10)), W_conv_v=np.ones((25, 1)),
                W_proj_v=np.array([[5.0, 0.0, 0.0]]))
    w.W_rec[0, 1] = 2.0
    mask = np.zeros((H, H), np.uint8)
    mask[0, 1] = 1
    state = initial_state(cfg, P, 1, np.float64)
    x = np.ones((1, 25))
    state, row = forward_tick(x, None, state, w, mask, P, cfg)
    assert state.hidden.S_f[0, 0] == 1 and state.hidden.V_r[0, 1] == 0.0
    state, row = forward_tick(np.zeros((1, 25)), None, state, w, mask, P, cfg)
    assert row["hidden"]["I_rec"][0, 1] == pytest.approx(2.0)
    assert row["hidden"]["Vr_pre"][0, 1] == pytest.approx(2.0)
    assert row["hidden"]["I_rec"][0, 2] == 0.0


def test_determinism():
    cfg = small()
    rng = np.random.default_rng(3)
    x = spikes(rng, 1, 6, 81)
    w = init_weights(cfg, np.random.default_rng(7))
    a, _ = forward_sequence(x, None, w, full_mask(12), cfg, P)
    b, _ = forward_sequence(x, None, init_weights(cfg, np.random.default_rng(7)), full_mask(12), cfg, P)
    assert a.tobytes() == b.tobytes()


def test_missing_audio_equals_visual_only():
    rng = np.random.default_rng(4)
    multi = small("multi")
    w = init_weights(multi, rng)
    w.W_proj_v *= 3
    x = spikes(rng, 3, 6, 81)
    m, _ = forward_sequence(x, np.zeros((3, 6, 7)), w, full_mask(12), multi, P)
    vis = replace(multi, modality="visual")
    wv = Weights(W_rec=w.W_rec, W_out=w.W_out, W_conv_v=w.W_conv_v, W_proj_v=w.W_proj_v)
    v, _ = forward_sequence(x, None, wv, full_mask(12), vis, P)
    np.testing.assert_array_equal(m, v)


def test_branch_swap_symmetry():
    # 5x5 images on both branches; the visual stream replays the audio
    # branch's 5-frame context window so both convolutions see the same data
    cfg = NetworkConfig(hidden_size=6, conv_channels=2, modality="multi", T=8, image_side=5,
                        audio_coeffs=5, audio_context=5, conv_stride=1)
    rng = np.random.default_rng(5)
    w = init_weights(cfg, rng)
    w.W_conv_a = w.W_conv_v.copy()
    sw = w.copy()
    sw.W_proj_v, sw.W_proj_a = w.W_proj_a.copy(), w.W_proj_v.copy()
    A = (rng.random((8, 5)) < 0.6).astype(np.float32)
    B = (rng.random((8, 5)) < 0.6).astype(np.float32)

    def window(frames, t):
        buf = np.zeros((5, 5), np.float32)
        recent = frames[max(0, t - 4):t + 1]
        buf[5 - len(recent):] = recent
        return buf.reshape(1, 25)

    s1, s2 = initial_state(cfg, P, 1), initial_state(cfg, P, 1)
    for t in range(8):
        s1, r1 = forward_tick(window(A, t), B[t:t + 1], s1, w, full_mask(6), P, cfg)
        s2, r2 = forward_tick(window(B, t), A[t:t + 1], s2, sw, full_mask(6), P, cfg)
        np.testing.assert_array_equal(r1["conv_v"]["Sf"], r2["conv_a"]["Sf"])
        np.testing.assert_allclose(r1["hidden"]["I_ff"], r2["hidden"]["I_ff"], rtol=1e-6, atol=1e-6)


def test_mask_gates_forward_influence():
    cfg = small()
    rng = np.random.default_rng(6)
    w = init_weights(cfg, rng)
    w.W_proj_v *= 3
    x = spikes(rng, 4, 6, 81)
    mask = (rng.random((12, 12)) < 0.5).astype(np.uint8)
    np.fill_diagonal(mask, 0)
    base, _ = forward_sequence(x, None, w, mask, cfg, P)
    for i, j in zip(*np.nonzero(mask == 0)):
        w2 = w.copy()
        w2.W_rec[i, j] += 5.0
        out, _ = forward_sequence(x, None, w2, mask, cfg, P)
        np.testing.assert_array_equal(out, base)


def test_trace_recomputes_currents():
    cfg = small()
    rng = np.random.default_rng(8)
    w = init_weights(cfg, rng)
    w.W_proj_v *= 3
    mask = full_mask(12)
    x = spikes(rng, 2, 6, 81)
    _, tr = forward_sequence(x, None, w, mask, cfg, P, train=True)
    assert len(tr) == cfg.T
    t = 4
    conv_spikes = tr.ticks["conv_v"]["Sf"][:, t]
    np.testing.assert_allclose(tr.ticks["hidden"]["I_ff"][:, t], conv_spikes @ w.W_proj_v, rtol=1e-5)
    np.testing.assert_allclose(tr.ticks["hidden"]["I_rec"][:, t], tr.ticks["S_prev"][:, t] @ (w.W_rec * mask),
                               rtol=1e-5, atol=1e-6)
    patches = tr.ticks["patches_v"][:, t]
    np.testing.assert_allclose(tr.ticks["conv_v"]["I_ff"][:, t], (patches @ w.W_conv_v).reshape(2, -1),
                               rtol=1e-5)


def test_shape_errors():
    cfg = small()
    w = init_weights(cfg, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        forward_sequence(np.zeros((1, 5, 81)), None, w, full_mask(12), cfg, P)
    with pytest.raises(ShapeError):
        forward_sequence(None, None, w, full_mask(12), cfg, P)
    with pytest.raises(ShapeError):
        forward_sequence(np.zeros((1, 6, 81)), None, w, full_mask(11), cfg, P)
    with pytest.raises(ShapeError):
        forward_sequence(np.zeros((1, 6, 81)), np.zeros((1, 6, 7)), w, full_mask(12), cfg, P)


def test_predict():
    assert predict(np.zeros(10)) == 0
    assert predict(np.array([0.1, 0.9, 0.2])) == 1
    for k in range(10):
        assert predict(np.eye(10)[k]) == k
    assert predict(np.array([[0.0, 1.0], [2.0, 2.0]])).tolist() == [1, 0]
