import numpy as np
import pytest
import torch

from conftest import make_conditions, make_model
from gradcheck import fd_gradient_check
from tryon_flow.codec import TokenGrid
from tryon_flow.dit import (
    ModelConfig,
    TryOnDiT,
    flow_interpolate,
    load_checkpoint,
    make_flow_pair,
    model_from_checkpoint,
    model_meta,
    model_tensors,
    save_checkpoint,
    weighted_fm_loss,
)
from tryon_flow.spatial import region_weight_map

Z = (4, 4)
STYLE = torch.tensor([[3, 5, 7, 9]])


def test_fresh_model_predicts_zero():
    torch.manual_seed(0)
    m = TryOnDiT(ModelConfig(token_dim=12, d_model=24, n_layers=2, text_len=4, style_vocab=40))
    conds = make_conditions(Z, 2)
    v = m(torch.randn(1, *Z, 12), 0.5, STYLE, conds)
    assert v.shape == (1, *Z, 12) and torch.all(v == 0)


def test_config_rejects_bad_head_dim():
    with pytest.raises(ValueError):
        ModelConfig(d_model=32, n_heads=2)
    with pytest.raises(ValueError):
        ModelConfig(d_model=25, n_heads=2)


def test_duplicate_group_ids_rejected(tiny_model):
    conds = make_conditions(Z, 1)
    conds[2].id = conds[1].id
    with pytest.raises(ValueError):
        tiny_model(torch.zeros(1, *Z, 12), 0.5, STYLE, conds)


def test_condition_states_ignore_latent():
    m = make_model(seed=1, n_layers=5)
    conds = make_conditions(Z, 2, seed=1)
    z = torch.randn(2, *Z, 12)
    _, s1 = m(z, 0.4, STYLE, conds, return_states=True)
    _, s2 = m(z + torch.randn_like(z), 0.4, STYLE, conds, return_states=True)
    n_live = Z[0] * Z[1] + STYLE.shape[1]
    for layer in range(5):
        assert torch.equal(s1[layer][:, n_live:], s2[layer][:, n_live:])
        assert not torch.equal(s1[layer][:, :n_live], s2[layer][:, :n_live])


def test_conditions_influence_latent():
    m = make_model(seed=2)
    z = torch.randn(1, *Z, 12)
    a = m(z, 0.4, STYLE, make_conditions(Z, 1, seed=0))
    b = m(z, 0.4, STYLE, make_conditions(Z, 1, seed=1))
    assert (a - b).abs().max() > 1e-4


def test_condition_rope_switch():
    m = make_model(cond_rope=False)
    plan = m.plan(Z, 4, make_conditions(Z, 1))
    n = plan.layout.n_live
    assert torch.all(plan.cos[n:] == 1) and torch.all(plan.sin[n:] == 0)
    assert not torch.all(plan.sin[:n] == 0)


def test_gradients_match_finite_differences():
    m = make_model(seed=3, dtype=torch.float64, freq_dim=16)
    conds = make_conditions(Z, 1, dtype=torch.float64, seed=3)
    g = torch.Generator().manual_seed(3)
    z = torch.randn(1, *Z, 12, generator=g, dtype=torch.float64)
    target = torch.randn(1, *Z, 12, generator=g, dtype=torch.float64)
    weights = torch.rand(*Z, generator=g, dtype=torch.float64) + 0.5
    rel = fd_gradient_check(m, (z, 0.3, STYLE, conds), {}, target, weights)
    assert (rel <= 1e-3).double().mean() >= 0.99


# --- flow matching --------------------------------------------------------


def test_flow_endpoints_and_velocity():
    rng = np.random.default_rng(0)
    z0, eps = TokenGrid(rng.standard_normal((2, 2, 3))), TokenGrid(rng.standard_normal((2, 2, 3)))
    assert np.array_equal(make_flow_pair(z0, eps, 0.0).z_t.tokens, z0.tokens)
    assert np.array_equal(make_flow_pair(z0, eps, 1.0).z_t.tokens, eps.tokens)
    # straight path: finite difference in t reproduces the target velocity
    a, _ = flow_interpolate(z0.tokens, eps.tokens, 0.3)
    b, v = flow_interpolate(z0.tokens, eps.tokens, 0.4)
    np.testing.assert_allclose((b - a) / 0.1, v, atol=1e-12)
    with pytest.raises(ValueError):
        make_flow_pair(z0, eps, 1.5)


def test_loss_worked_examples():
    pred = torch.zeros(1, 2, 2, 1)
    target = torch.tensor([[[[1.0], [2.0]], [[0.0], [3.0]]]])
    assert weighted_fm_loss(pred, target, torch.ones(2, 2)).item() == pytest.approx(14 / 4)
    w = torch.tensor([[1.5, 0.5], [1.0, 1.0]])
    assert weighted_fm_loss(pred, target, w).item() == pytest.approx((1.5 + 2.0 + 0 + 9.0) / 4)
    with pytest.raises(ValueError):
        weighted_fm_loss(pred, target, torch.ones(3, 3))


def test_unit_weights_give_plain_mse():
    rng = np.random.default_rng(1)
    p, t = torch.from_numpy(rng.standard_normal((3, 4, 4, 5))), torch.from_numpy(rng.standard_normal((3, 4, 4, 5)))
    assert torch.allclose(weighted_fm_loss(p, t, torch.ones(4, 4, dtype=torch.float64)), torch.mean((p - t) ** 2))


def test_lambda_raises_loss_when_error_is_on_body():
    parsing = np.zeros((8, 8))
    parsing[:4] = 1
    err = torch.zeros(1, 4, 4, 2)
    err[:, :2] = 1.0  # error only on the body half
    losses = [
        weighted_fm_loss(err, torch.zeros_like(err), region_weight_map(parsing, lam, (4, 4)).weights).item()
        for lam in (0.0, 0.25, 0.5, 0.75)
    ]
    assert all(a < b for a, b in zip(losses, losses[1:]))


# --- checkpoints ------------------------------------------------------------


def test_checkpoint_roundtrip(tmp_path, tiny_model):
    path = tmp_path / "m.prmc"
    save_checkpoint(path, model_tensors(tiny_model), {**model_meta(tiny_model), "config_hash": "abc", "step": 7})
    assert not list(tmp_path.glob("*.tmp"))
    assert path.read_bytes()[:4] == b"PRMC"
    m2, meta = model_from_checkpoint(path, expected_hash="abc")
    assert meta["step"] == 7
    conds = make_conditions(Z, 1)
    z = torch.randn(1, *Z, 12)
    assert torch.equal(tiny_model(z, 0.2, STYLE, conds), m2(z, 0.2, STYLE, conds))
    with pytest.raises(ValueError):
        model_from_checkpoint(path, expected_hash="other")


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "bad.prmc"
    p.write_bytes(b"NOPE" + bytes(16))
    with pytest.raises(ValueError):
        load_checkpoint(p)
