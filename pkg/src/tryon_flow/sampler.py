"""Euler sampling of the learned flow, with optional condition KV caching.

In cached mode the first step runs the full sequence and stores every
layer's condition keys/values; the remaining steps query with the latent and
style tokens only. Because condition tokens never read other segments, the
cached trajectory equals an uncached one in which condition tokens are kept
at the first step's timestep (``freeze_conditions=True``).
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from .dit import TryOnDiT
from .rope3d import ConditionGroup

FULL = "full"
CACHED = "cached"


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 20
    mode: str = CACHED
    seed: int = 0
    schedule: Optional[tuple[float, ...]] = None

    def timesteps(self) -> list[float]:
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.mode not in (FULL, CACHED):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.schedule is None:
            return [1.0 - k / self.steps for k in range(self.steps)] + [0.0]
        ts = [float(t) for t in self.schedule]
        if len(ts) != self.steps + 1 or ts[0] != 1.0 or ts[-1] != 0.0:
            raise ValueError("schedule must have steps+1 entries running from 1 to 0")
        if any(a <= b for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule must be strictly decreasing")
        return ts


def initial_noise(shape: tuple[int, ...], seed: int, dtype=torch.float32) -> torch.Tensor:
    g = torch.Generator().manual_seed(int(seed))
    return torch.randn(*shape, generator=g, dtype=torch.float64).to(dtype)


@torch.no_grad()
def euler_sample(
    model: TryOnDiT,
    conditions: Sequence[ConditionGroup],
    style,
    cfg: SamplerConfig,
    z_shape: tuple[int, int],
    batch: int = 1,
    freeze_conditions: bool = False,
    z_init: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Uncached Euler integration from t=1 (noise) to t=0.

    Returns the (B, h, w, d) latent. With ``freeze_conditions`` the condition
    tokens see the first timestep at every step.
    """
    ts = cfg.timesteps()
    dtype = model.x_embed.weight.dtype
    z = z_init if z_init is not None else initial_noise((batch, *z_shape, model.cfg.token_dim), cfg.seed, dtype)
    n_style = 0 if style is None else torch.as_tensor(style).shape[-1]
    plan = model.plan(z_shape, n_style, conditions)
    for t_k, t_next in zip(ts[:-1], ts[1:]):
        cond_t = ts[0] if freeze_conditions else None
        v = model(z, t_k, style, conditions, cond_t=cond_t, plan=plan)
        z = z - (t_k - t_next) * v
    return z


@torch.no_grad()
def cached_sample(
    model: TryOnDiT,
    conditions: Sequence[ConditionGroup],
    style,
    cfg: SamplerConfig,
    z_shape: tuple[int, int],
    batch: int = 1,
    z_init: Optional[torch.Tensor] = None,
    trace: Optional[list] = None,
) -> torch.Tensor:
    """Euler integration reusing first-step condition KV at every later step.

    If ``trace`` is a list, one (step, n_query_tokens, n_key_tokens) tuple is
    appended per step.
    """
    ts = cfg.timesteps()
    dtype = model.x_embed.weight.dtype
    z = z_init if z_init is not None else initial_noise((batch, *z_shape, model.cfg.token_dim), cfg.seed, dtype)
    n_style = 0 if style is None else torch.as_tensor(style).shape[-1]
    plan = model.plan(z_shape, n_style, conditions)
    caches = None
    for k, (t_k, t_next) in enumerate(zip(ts[:-1], ts[1:])):
        if caches is None:
            v, caches = model(z, t_k, style, conditions, plan=plan, capture=True)
            n_q = plan.layout.total
        else:
            v = model.forward_cached(z, t_k, style, caches, plan)
            n_q = plan.layout.n_live
        if trace is not None:
            trace.append((k, n_q, plan.layout.total))
        z = z - (t_k - t_next) * v
    return z


def sample(model, conditions, style, cfg: SamplerConfig, z_shape, batch=1, z_init=None) -> torch.Tensor:
    if cfg.mode == CACHED:
        return cached_sample(model, conditions, style, cfg, z_shape, batch=batch, z_init=z_init)
    return euler_sample(model, conditions, style, cfg, z_shape, batch=batch, z_init=z_init)


# ---------------------------------------------------------------------------
# benchmarking


@dataclass
class Workload:
    name: str
    z_shape: tuple[int, int]
    conditions: list[ConditionGroup]
    style: Optional[torch.Tensor]

    @property
    def tokens_latent(self) -> int:
        return self.z_shape[0] * self.z_shape[1]

    @property
    def tokens_text(self) -> int:
        return 0 if self.style is None else int(torch.as_tensor(self.style).shape[-1])

    @property
    def tokens_cond(self) -> int:
        return sum(g.n_tokens for g in self.conditions)


def attention_flops(n_query: int, n_key: int, d_model: int, n_layers: int) -> int:
    """Multiply-adds of QK^T and AV summed over heads and layers."""
    return 2 * n_query * n_key * d_model * n_layers


def bench_inference(
    model: TryOnDiT, workload: Workload, cfg: SamplerConfig, runs: int = 20, warmup: int = 1
) -> dict:
    """Median wall time of ``runs`` complete sampling trajectories in ``cfg.mode``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    fn = cached_sample if cfg.mode == CACHED else euler_sample
    for _ in range(warmup):
        fn(model, workload.conditions, workload.style, cfg, workload.z_shape)
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn(model, workload.conditions, workload.style, cfg, workload.z_shape)
        times.append((time.perf_counter() - t0) * 1000.0)
    n_live = workload.tokens_latent + workload.tokens_text
    total = n_live + workload.tokens_cond
    dm, nl = model.cfg.d_model, model.cfg.n_layers
    if cfg.mode == CACHED:
        flops = attention_flops(total, total, dm, nl) + (cfg.steps - 1) * attention_flops(n_live, total, dm, nl)
        query_per_step = n_live if cfg.steps > 1 else total
    else:
        flops = cfg.steps * attention_flops(total, total, dm, nl)
        query_per_step = total
    return {
        "workload": workload.name,
        "mode": cfg.mode,
        "steps": cfg.steps,
        "runs": runs,
        "tokens_latent": workload.tokens_latent,
        "tokens_text": workload.tokens_text,
        "tokens_cond": workload.tokens_cond,
        "query_tokens_per_cached_step": query_per_step,
        "attention_flops": flops,
        "wall_ms_median": statistics.median(times),
        "wall_ms_all": times,
    }


def speedup(baseline: dict, candidate: dict) -> float:
    return baseline["wall_ms_median"] / candidate["wall_ms_median"]


def random_workload(
    name: str, z_shape: tuple[int, int], cond_shapes: Sequence[tuple[str, int, int]], text_len: int, token_dim: int, seed: int = 0
) -> Workload:
    """Workload with random condition tokens. ``cond_shapes`` holds (kind, h_c, w_c)."""
    rng = np.random.default_rng(seed)
    groups = []
    for i, (kind, hc, wc) in enumerate(cond_shapes, start=1):
        tok = torch.as_tensor(rng.standard_normal((1, hc, wc, token_dim)), dtype=torch.float32)
        groups.append(ConditionGroup.build(i, kind, tok, z_shape))
    style = torch.zeros(1, text_len, dtype=torch.long) if text_len else None
    return Workload(name, z_shape, groups, style)
