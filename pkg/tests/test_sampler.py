import pytest
import torch

from conftest import make_conditions, make_model
from tryon_flow.sampler import (
    SamplerConfig,
    Workload,
    bench_inference,
    cached_sample,
    euler_sample,
    initial_noise,
    sample,
)

Z = (4, 4)


@pytest.mark.parametrize("n_garments", [1, 3])
@pytest.mark.parametrize("with_style", [True, False])
def test_cached_equals_frozen_reference(n_garments, with_style):
    m = make_model(seed=n_garments)
    conds = make_conditions(Z, n_garments, seed=n_garments)
    style = torch.tensor([[1, 2, 3, 4]]) if with_style else None
    cfg = SamplerConfig(steps=8, seed=5)
    a = cached_sample(m, conds, style, cfg, Z)
    b = euler_sample(m, conds, style, cfg, Z, freeze_conditions=True)
    assert (a - b).abs().max().item() <= 1e-5


def test_cached_differs_from_unfrozen_run():
    m = make_model(seed=4)
    conds = make_conditions(Z, 1)
    cfg = SamplerConfig(steps=6)
    a = cached_sample(m, conds, None, cfg, Z)
    b = euler_sample(m, conds, None, cfg, Z)
    assert (a - b).abs().max().item() > 1e-6


def test_trace_shows_cond_tokens_computed_once():
    m = make_model()
    conds = make_conditions(Z, 2)
    trace = []
    cached_sample(m, conds, torch.tensor([[1, 2, 3, 4]]), SamplerConfig(steps=5), Z, trace=trace)
    n_live = 16 + 4
    total = n_live + sum(g.n_tokens for g in conds)
    assert trace[0] == (0, total, total)
    assert all(q == n_live and k == total for _, q, k in trace[1:])


def test_zero_velocity_model_returns_noise():
    torch.manual_seed(0)
    from tryon_flow.dit import ModelConfig, TryOnDiT

    m = TryOnDiT(ModelConfig(token_dim=12, d_model=24, n_layers=1, text_len=4, style_vocab=40))
    cfg = SamplerConfig(steps=3, seed=9)
    out = sample(m, make_conditions(Z, 1), None, cfg, Z)
    assert torch.equal(out, initial_noise((1, *Z, 12), 9))


def test_schedule_validation():
    assert SamplerConfig(steps=4).timesteps() == [1.0, 0.75, 0.5, 0.25, 0.0]
    assert SamplerConfig(steps=2, schedule=(1.0, 0.3, 0.0)).timesteps() == [1.0, 0.3, 0.0]
    for bad in (
        SamplerConfig(steps=0),
        SamplerConfig(mode="fast"),
        SamplerConfig(steps=2, schedule=(1.0, 0.0)),
        SamplerConfig(steps=2, schedule=(1.0, 1.0, 0.0)),
    ):
        with pytest.raises(ValueError):
            bad.timesteps()


def test_noise_is_seeded():
    assert torch.equal(initial_noise((2, 3), 1), initial_noise((2, 3), 1))
    assert not torch.equal(initial_noise((2, 3), 1), initial_noise((2, 3), 2))


def test_bench_record_fields():
    m = make_model()
    w = Workload("tiny", Z, make_conditions(Z, 1), torch.tensor([[1, 2, 3, 4]]))
    full = bench_inference(m, w, SamplerConfig(steps=3, mode="full"), runs=2)
    cached = bench_inference(m, w, SamplerConfig(steps=3, mode="cached"), runs=2)
    assert full["tokens_cond"] == w.tokens_cond == 16 + 4 + 4
    assert cached["query_tokens_per_cached_step"] == 20
    assert cached["attention_flops"] < full["attention_flops"]
    assert len(full["wall_ms_all"]) == 2


def test_single_step_cached_equals_plain_euler():
    m = make_model(seed=6)
    conds = make_conditions(Z, 2)
    cfg = SamplerConfig(steps=1, seed=2)
    a = cached_sample(m, conds, None, cfg, Z)
    b = euler_sample(m, conds, None, cfg, Z)
    assert torch.equal(a, b)
    # one Euler step from t=1: z_0 = z_T - v(z_T, 1)
    z = initial_noise((1, *Z, 12), 2)
    assert torch.allclose(a, z - m(z, 1.0, None, conds), atol=1e-6)


def test_same_seed_same_mode_is_deterministic():
    m = make_model(seed=7)
    conds = make_conditions(Z, 1)
    for mode in ("full", "cached"):
        cfg = SamplerConfig(steps=4, mode=mode, seed=3)
        assert torch.equal(sample(m, conds, None, cfg, Z), sample(m, conds, None, cfg, Z))


def test_doubling_conditions_keeps_cached_query_count():
    m = make_model()
    base = make_conditions(Z, 1)
    doubled = make_conditions(Z, 4)
    counts = []
    for conds in (base, doubled):
        trace = []
        cached_sample(m, conds, None, SamplerConfig(steps=3), Z, trace=trace)
        counts.append([q for _, q, _ in trace[1:]])
    assert counts[0] == counts[1] == [16, 16]
    assert sum(g.n_tokens for g in doubled) > sum(g.n_tokens for g in base)
