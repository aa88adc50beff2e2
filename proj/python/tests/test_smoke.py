import math

import numpy as np
import pytest

import grudepth as gd


def test_conv2d_identity_kernel():
    x = np.random.default_rng(0).standard_normal((2, 5, 5)).astype(np.float32)
    w = np.zeros((2, 2, 1, 1), dtype=np.float32)
    w[0, 0, 0, 0] = 1.0
    w[1, 1, 0, 0] = 1.0
    y = gd.conv2d(x, w)
    np.testing.assert_allclose(y, x, rtol=0, atol=0)


def test_conv2d_matches_numpy_reference():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 8, 8)).astype(np.float32)
    w = rng.standard_normal((4, 3, 3, 3)).astype(np.float32)
    b = rng.standard_normal(4).astype(np.float32)
    y = gd.conv2d(x, w, b, stride=2, pad=1)
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    ref = np.empty((4, 4, 4), dtype=np.float64)
    for o in range(4):
        for i in range(4):
            for j in range(4):
                patch = xp[:, 2 * i : 2 * i + 3, 2 * j : 2 * j + 3]
                ref[o, i, j] = np.sum(patch.astype(np.float64) * w[o]) + b[o]
    np.testing.assert_allclose(y, ref, atol=1e-4)


def test_conv2d_rejects_channel_mismatch():
    x = np.zeros((2, 4, 4), dtype=np.float32)
    w = np.zeros((1, 3, 1, 1), dtype=np.float32)
    with pytest.raises(ValueError):
        gd.conv2d(x, w)


def test_depth_to_space_round_trip():
    x = np.random.default_rng(2).standard_normal((8, 3, 3)).astype(np.float32)
    y = gd.depth_to_space(x)
    assert y.shape == (2, 6, 6)
    np.testing.assert_array_equal(gd.space_to_depth(y), x)


def test_lrelu_variants():
    x = np.array([-1.0, 0.0, 2.0], dtype=np.float32)
    np.testing.assert_allclose(gd.lrelu(x, alpha=0.1), [-0.1, 0.0, 2.0])
    np.testing.assert_allclose(
        gd.lrelu(x, alpha=0.1, variant="paper_verbatim"), [0.9, 0.0, 0.2]
    )


def test_quantize_depth_endpoints():
    assert gd.quantize_depth(0.0, 50.0) == 0
    assert gd.quantize_depth(50.0, 50.0) == 255
    assert gd.quantize_depth(1e9, 50.0) == 255


def test_evaluate_worked_example():
    real = np.full((1, 4, 4), 10, dtype=np.uint8)
    pred = np.full((1, 4, 4), 13, dtype=np.uint8)
    rep = gd.evaluate(real, pred)
    assert rep["mse"] == pytest.approx(9.0)
    assert rep["ae"] == pytest.approx(3.0)
    assert rep["n_images"] == 1


def test_evaluate_rmsle_extremes():
    real = np.zeros((1, 2, 2), dtype=np.uint8)
    pred = np.full((1, 2, 2), 255, dtype=np.uint8)
    assert gd.evaluate(real, pred)["rmsle"] == pytest.approx(math.log(256.0))


def test_net_forward_is_stateful():
    net = gd.Net(width_num=1, width_den=8, input_h=32, input_w=32, seed=3)
    frame = np.random.default_rng(3).uniform(-1, 1, (3, 32, 32)).astype(np.float32)
    first = net.forward(frame)
    second = net.forward(frame)
    assert first.shape == (3, 32, 32)
    assert np.abs(first).max() <= 1.0
    assert not np.array_equal(first, second)  # recurrent state advanced

    net.reset()
    np.testing.assert_array_equal(net.forward(frame), first)


def test_net_full_width_parameter_count():
    net = gd.Net()
    assert net.parameter_count == 41_633_539


def test_net_rejects_bad_input_size():
    with pytest.raises(ValueError):
        gd.Net(input_h=30, input_w=30)
