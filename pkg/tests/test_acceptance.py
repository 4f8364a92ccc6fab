"""Acceptance criteria, each measured at its stated tolerance.

One PASS/FAIL line per criterion is printed in the terminal summary.
The training criteria share two module-scoped runs (full model and the
no_rope_groups ablation); together they take roughly half an hour on one core.
"""
import time

import numpy as np
import pytest
import torch

from conftest import make_conditions, make_model, record
from gradcheck import fd_gradient_check
from tryon_flow.attention import SegmentLayout, build_group_mask, masked_attention
from tryon_flow.codec import decode, encode
from tryon_flow.config import RunConfig
from tryon_flow.dit import TryOnDiT
from tryon_flow.harness import bench_workloads, cmd_train, eval_seeds, generate, load_samples
from tryon_flow.metrics import garment_assignment_acc
from tryon_flow.pipeline import build_conditions
from tryon_flow.sampler import SamplerConfig, bench_inference, cached_sample, euler_sample, speedup
from tryon_flow.spatial import region_weight_map
from tryon_flow.synth import SynthConfig, gen_sample

from test_attention import random_layout, reference_attention


def test_codec_identity():
    rng = np.random.default_rng(2024)
    bad = 0
    for i in range(1000):
        h, w = 4 * int(rng.integers(1, 17)), 4 * int(rng.integers(1, 17))
        x = rng.random((h, w, 3), dtype=np.float32)
        y = decode(encode(x, 4), 4)
        bad += not np.array_equal(y.astype(np.float32), x)
    record("codec identity", bad == 0, f"{1000 - bad}/1000 bit-exact")
    assert bad == 0


def test_attention_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(200):
        layout = random_layout(rng)
        d = int(rng.choice([4, 6, 8, 12]))
        q, k, v = (rng.standard_normal((2, layout.total, d)) for _ in range(3))
        got = masked_attention(*(torch.from_numpy(a) for a in (q, k, v)), build_group_mask(layout)).numpy()
        worst = max(worst, float(np.abs(got - reference_attention(q, k, v, layout)).max()))
    record("attention oracle", worst <= 1e-6, f"max-abs {worst:.2e} over 200 cases (tol 1e-6)")
    assert worst <= 1e-6


def test_cache_equivalence():
    z = (4, 4)
    worst = 0.0
    for n_garments in (1, 2, 3):
        for with_style in (False, True):
            m = make_model(seed=10 + n_garments)
            conds = make_conditions(z, n_garments, seed=n_garments)
            style = torch.tensor([[2, 3, 5, 7]]) if with_style else None
            cfg = SamplerConfig(steps=20, seed=n_garments)
            a = cached_sample(m, conds, style, cfg, z)
            b = euler_sample(m, conds, style, cfg, z, freeze_conditions=True)
            worst = max(worst, float((a - b).abs().max()))
    record("cache equivalence", worst <= 1e-5, f"max-abs {worst:.2e} over 6 settings, 20 steps (tol 1e-5)")
    assert worst <= 1e-5


def test_condition_isolation():
    n_layers = 6
    m = make_model(seed=3, n_layers=n_layers)
    z = (4, 4)
    conds = make_conditions(z, 2, seed=3)
    style = torch.tensor([[1, 2, 3, 4]])
    g = torch.Generator().manual_seed(0)
    zt = torch.randn(1, *z, 12, generator=g)
    _, s1 = m(zt, 0.6, style, conds, return_states=True)
    _, s2 = m(zt + torch.randn(zt.shape, generator=g), 0.6, style, conds, return_states=True)
    layers = sorted(np.random.default_rng(0).choice(n_layers, 3, replace=False).tolist())
    n_live = z[0] * z[1] + style.shape[1]
    same = all(torch.equal(s1[l][:, n_live:], s2[l][:, n_live:]) for l in layers)
    record("condition isolation", same, f"condition states bit-identical at layers {layers}")
    assert same


def test_token_accounting():
    s = gen_sample(0, SynthConfig(height=64, width=64))
    merged = build_conditions(s, 4, merge=True)
    naive = build_conditions(s, 4, merge=False)
    N = 16 * 16
    naive_spatial = sum(g.n_tokens for g in naive[1:3])  # mask + pose
    merged_spatial = merged[1].n_tokens
    ok = naive_spatial == 2 * N == 512 and merged_spatial == N // 4 == 64
    record("token accounting", ok, f"{naive_spatial} naive -> {merged_spatial} merged at 64x64, p=4")
    assert ok


def test_weight_map():
    lam = 0.5
    body = region_weight_map(np.ones((8, 8)), lam, (2, 2)).weights
    bg = region_weight_map(np.zeros((8, 8)), lam, (2, 2)).weights
    half_mask = np.zeros((8, 8))
    half_mask[::2] = 1
    half = region_weight_map(half_mask, lam, (2, 2)).weights
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        parsing = (rng.random((64, 64)) > rng.random()).astype(np.uint8)
        W = region_weight_map(parsing, lam, (16, 16)).weights
        worst = max(worst, abs(W.mean() - (1 - lam + 2 * lam * parsing.mean())))
    ok = np.all(body == 1.5) and np.all(bg == 0.5) and np.all(half == 1.0) and worst <= 1e-9
    record("weight map", ok, f"body 1.5, background 0.5, half 1.0; mean identity err {worst:.1e}")
    assert ok


def test_gradient_check():
    t0 = time.perf_counter()
    m = make_model(seed=5, dtype=torch.float64, freq_dim=16)
    z = (4, 4)
    conds = make_conditions(z, 1, dtype=torch.float64, seed=5)
    g = torch.Generator().manual_seed(5)
    zt = torch.randn(1, *z, 12, generator=g, dtype=torch.float64)
    target = torch.randn(1, *z, 12, generator=g, dtype=torch.float64)
    weights = torch.rand(*z, generator=g, dtype=torch.float64) + 0.5
    rel = fd_gradient_check(m, (zt, 0.4, torch.tensor([[1, 2, 3, 4]]), conds), {}, target, weights)
    frac = float((rel <= 1e-3).double().mean())
    elapsed = time.perf_counter() - t0
    ok = frac >= 0.99 and elapsed < 60
    record("gradient check", ok, f"{frac:.4f} of {rel.numel()} coords within 1e-3, {elapsed:.1f}s")
    assert ok


def test_inference_speedup():
    cfg = RunConfig(height=64, width=64)
    torch.manual_seed(0)
    model = TryOnDiT(cfg.model()).eval()
    merged, unmerged = bench_workloads(cfg, model.cfg.token_dim)
    assert merged.tokens_latent == 256 and merged.tokens_cond == 320
    runs = {}
    for wl, mode in ((merged, "cached"), (merged, "full"), (unmerged, "full")):
        runs[wl.name, mode] = bench_inference(model, wl, SamplerConfig(steps=20, mode=mode), runs=20)
    same_workload = speedup(runs["merged", "full"], runs["merged", "cached"])
    vs_unmerged = speedup(runs["unmerged", "full"], runs["merged", "cached"])
    ok = same_workload >= 1.3
    record(
        "inference speedup",
        ok,
        f"cached vs full on the 320-token workload {same_workload:.2f}x; "
        f"vs full+unmerged {vs_unmerged:.2f}x (need >= 1.3)",
    )
    assert ok


# --- training-based criteria --------------------------------------------------

SMOKE = RunConfig()


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    t0 = time.perf_counter()
    res = cmd_train(SMOKE, tmp_path_factory.mktemp("full"))
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def held_out():
    return load_samples(SMOKE, eval_seeds(SMOKE), style_null_rate=0.0)


@pytest.fixture(scope="module")
def prompted_acc(full_run, held_out):
    outs = generate(full_run[0].model, SMOKE, held_out, style="sample")
    return [garment_assignment_acc(o, s) for o, s in zip(outs, held_out)]


def _two_garment_mean(accs, samples):
    return float(np.mean([a for a, s in zip(accs, samples) if s.n_garments == 2]))


def test_smoke_training(full_run, prompted_acc):
    res, elapsed = full_run
    first, last = float(np.mean(res.losses[:100])), float(np.mean(res.losses[-100:]))
    acc = float(np.mean(prompted_acc))
    ok = last <= 0.5 * first and acc >= 0.9 and elapsed <= 30 * 60
    record(
        "smoke training",
        ok,
        f"loss {first:.3f} -> {last:.3f} (ratio {last / first:.2f}), "
        f"garment_assignment_acc {acc:.3f} on {len(prompted_acc)} seeds, {elapsed / 60:.1f} min",
    )
    assert ok


def test_ablation_direction(full_run, prompted_acc, held_out, tmp_path_factory):
    cfg = SMOKE.replace(no_rope_groups=True)
    res = cmd_train(cfg, tmp_path_factory.mktemp("no_rope_groups"))
    outs = generate(res.model, cfg, held_out, style="sample")
    ablated = _two_garment_mean([garment_assignment_acc(o, s) for o, s in zip(outs, held_out)], held_out)
    full = _two_garment_mean(prompted_acc, held_out)
    ok = ablated < full
    record("ablation direction", ok, f"two-garment acc full {full:.3f} vs no_rope_groups {ablated:.3f}")
    assert ok


def test_null_prompt(full_run, prompted_acc, held_out):
    outs = generate(full_run[0].model, SMOKE, held_out, style="null")
    null = float(np.mean([garment_assignment_acc(o, s) for o, s in zip(outs, held_out)]))
    prompted = float(np.mean(prompted_acc))
    ok = abs(null - prompted) <= 0.15
    record("null prompt", ok, f"null {null:.3f} vs prompted {prompted:.3f} (tol 0.15)")
    assert ok
