import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from tryon_flow.rope3d import (
    GARMENT,
    SPATIAL,
    ConditionGroup,
    apply_rope,
    coords_for_condition,
    coords_for_latent,
    rope_tables,
    rotate,
)

coord = st.tuples(*[st.floats(-20, 20, allow_nan=False)] * 3)


@settings(max_examples=100, deadline=None)
@given(coord, coord, st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 2**31 - 1))
def test_score_depends_only_on_offset(a, b, dt, dx, dy, seed):
    rng = np.random.default_rng(seed)
    q, k = rng.standard_normal(24), rng.standard_normal(24)
    shift = np.array([dt, dx, dy])
    s1 = apply_rope(q, a) @ apply_rope(k, b)
    s2 = apply_rope(q, np.add(a, shift)) @ apply_rope(k, np.add(b, shift))
    assert abs(s1 - s2) <= 1e-9 * max(1.0, abs(s1))


def test_rotation_preserves_norm_and_zero_is_identity():
    v = np.random.default_rng(0).standard_normal(12)
    np.testing.assert_allclose(np.linalg.norm(apply_rope(v, (3, 1, 2))), np.linalg.norm(v))
    np.testing.assert_array_equal(apply_rope(v, (0, 0, 0)), v)


def test_torch_tables_match_numpy_reference():
    rng = np.random.default_rng(1)
    coords = rng.uniform(-5, 5, size=(7, 3))
    x = rng.standard_normal((7, 18))
    cos, sin = rope_tables(coords, 18, dtype=torch.float64)
    got = rotate(torch.from_numpy(x), cos, sin).numpy()
    want = np.stack([apply_rope(x[i], coords[i]) for i in range(7)])
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_head_dim_must_split_into_three_axes():
    with pytest.raises(ValueError):
        apply_rope(np.zeros(8), (0, 0, 0))


def test_latent_and_condition_coordinates():
    lat = coords_for_latent(2, 3)
    assert lat.shape == (6, 3)
    np.testing.assert_array_equal(lat[4], [0, 1, 1])
    full = coords_for_condition(1, SPATIAL, 4, 4, (4, 4), 4)
    assert np.array_equal(full[:, 1:], coords_for_latent(4, 4)[:, 1:]) and np.all(full[:, 0] == 1)
    half = coords_for_condition(2, SPATIAL, 2, 2, (4, 4), 4)
    np.testing.assert_array_equal(half[3], [2, 2.5, 2.5])
    gar = coords_for_condition(3, GARMENT, 2, 2, (4, 4), 4)
    np.testing.assert_array_equal(gar[:, 2], [4, 4, 5, 5])
    assert gar[:, 2].min() >= 4  # beyond the latent's y range


def test_distinct_groups_get_distinct_coordinates():
    z = (8, 8)
    tok = torch.zeros(1, 4, 4, 6)
    a = ConditionGroup.build(3, GARMENT, tok, z)
    b = ConditionGroup.build(4, GARMENT, tok, z)
    assert not np.any(np.all(a.coords[:, None] == b.coords[None], axis=-1))


def test_bad_spatial_shape_and_id():
    with pytest.raises(ValueError):
        coords_for_condition(1, SPATIAL, 3, 3, (8, 8), 8)
    with pytest.raises(ValueError):
        coords_for_condition(0, GARMENT, 2, 2, (8, 8), 8)
    with pytest.raises(ValueError):
        coords_for_condition(1, "text", 2, 2, (8, 8), 8)
