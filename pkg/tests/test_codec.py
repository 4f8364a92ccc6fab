import numpy as np
import pytest

from tryon_flow.codec import MID, TokenGrid, decode, encode


def test_shape_arithmetic():
    g = encode(np.zeros((64, 64, 3), dtype=np.float32), 4)
    assert (g.h, g.w, g.d) == (16, 16, 48)


def test_constant_image_gives_equal_tokens():
    g = encode(np.full((16, 16, 3), 0.5, dtype=np.float32), 4)
    assert np.all(g.tokens == g.tokens[0, 0, 0])


def test_roundtrip_bit_exact():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.random((32, 48, 3), dtype=np.float32)
        y = decode(encode(x, 4), 4)
        assert np.array_equal(y.astype(np.float32), x)
        assert np.array_equal(y, x.astype(np.float64))


def test_degenerate_patch_is_pixelwise_denormalization():
    rng = np.random.default_rng(1)
    tokens = rng.standard_normal((5, 7, 3))
    img = decode(TokenGrid(tokens), 1)
    # inverse affine by hand: pixel = token / 2 + 0.5
    assert np.array_equal(img, tokens / 2.0 + 0.5)


def test_zero_grid_decodes_to_midpoint():
    img = decode(TokenGrid(np.zeros((4, 4, 48))), 4)
    assert img.shape == (16, 16, 3)
    assert np.all(img == MID)


def test_patch_layout_matches_manual_slicing():
    rng = np.random.default_rng(2)
    x = rng.random((8, 12, 3), dtype=np.float32)
    g = encode(x, 4)
    patch = x[4:8, 8:12, :].astype(np.float64)
    assert np.array_equal(g.tokens[1, 2], ((patch - 0.5) * 2.0).ravel())


def test_linearity_up_to_shift():
    rng = np.random.default_rng(3)
    x = rng.random((16, 16, 3))
    y = rng.random((16, 16, 3))
    a, b = 0.3, 0.6
    shift = encode(np.zeros((16, 16, 3)), 4).tokens
    lhs = encode(a * x + b * y, 4).tokens - shift
    rhs = a * (encode(x, 4).tokens - shift) + b * (encode(y, 4).tokens - shift)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_dimension_errors():
    with pytest.raises(ValueError):
        encode(np.zeros((10, 16, 3)), 4)
    with pytest.raises(ValueError):
        decode(TokenGrid(np.zeros((2, 2, 47))), 4)
