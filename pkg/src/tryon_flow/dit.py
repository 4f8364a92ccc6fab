"""Velocity-prediction transformer over concatenated latent, style and
condition tokens, with flow-matching targets and the region-weighted loss."""
from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
import torch.nn as nn

from .attention import (
    LayerKVCache,
    SegmentLayout,
    attend_with_cache,
    build_group_mask,
    capture_cache,
    masked_attention,
)
from .codec import TokenGrid
from .rope3d import ConditionGroup, coords_for_latent, rope_tables, rotate
from .synth import STYLE_TEXT_LEN, STYLE_VOCAB_SIZE


@dataclass(frozen=True)
class ModelConfig:
    token_dim: int = 48
    d_model: int = 96
    n_heads: int = 2
    n_layers: int = 4
    mlp_ratio: float = 4.0
    style_vocab: int = STYLE_VOCAB_SIZE
    text_len: int = STYLE_TEXT_LEN
    rope_theta: float = 10000.0
    cond_rope: bool = True  # False drops positional encoding from condition tokens
    freq_dim: int = 128

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")
        if (self.d_model // self.n_heads) % 6:
            raise ValueError(f"head dim {self.d_model // self.n_heads} must be divisible by 6")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


def modulate(x, shift, scale):
    return x * (1 + scale) + shift


class TimestepEmbedder(nn.Module):
    def __init__(self, d_model: int, freq_dim: int = 128):
        super().__init__()
        self.freq_dim = freq_dim
        self.mlp = nn.Sequential(nn.Linear(freq_dim, d_model), nn.SiLU(), nn.Linear(d_model, d_model))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.freq_dim // 2
        freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / half)
        args = (1000.0 * t)[:, None] * freqs[None]
        return self.mlp(torch.cat([torch.cos(args), torch.sin(args)], dim=-1))


class Plan:
    """Everything about a forward pass that depends only on shapes and ids."""

    def __init__(self, layout: SegmentLayout, cos, sin, mask, z_shape):
        self.layout = layout
        self.cos, self.sin = cos, sin
        self.mask = mask
        self.z_shape = z_shape

    @property
    def live_tables(self):
        n = self.layout.n_live
        return self.cos[:n], self.sin[:n]


class DiTBlock(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.n_heads = cfg.n_heads
        self.norm1 = nn.LayerNorm(d, elementwise_affine=False, eps=1e-6)
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)
        self.norm2 = nn.LayerNorm(d, elementwise_affine=False, eps=1e-6)
        hidden = int(d * cfg.mlp_ratio)
        self.mlp = nn.Sequential(nn.Linear(d, hidden), nn.GELU(approximate="tanh"), nn.Linear(hidden, d))
        self.ada = nn.Sequential(nn.SiLU(), nn.Linear(d, 6 * d))
        nn.init.zeros_(self.ada[1].weight)
        nn.init.zeros_(self.ada[1].bias)

    def _mods(self, c_live, c_cond, n_live, S):
        ml = self.ada(c_live).unsqueeze(1)
        if S == n_live:
            return ml.chunk(6, dim=-1)
        mc = self.ada(c_cond).unsqueeze(1)
        B = ml.shape[0]
        m = torch.cat([ml.expand(B, n_live, -1), mc.expand(B, S - n_live, -1)], dim=1)
        return m.chunk(6, dim=-1)

    def forward(self, x, c_live, c_cond, plan: Plan, cache: Optional[LayerKVCache] = None, capture=False):
        B, S, D = x.shape
        layout = plan.layout
        shift1, scale1, gate1, shift2, scale2, gate2 = self._mods(c_live, c_cond, layout.n_live, S)
        h = modulate(self.norm1(x), shift1, scale1)
        qkv = self.qkv(h).view(B, S, 3, self.n_heads, D // self.n_heads).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        new_cache = None
        if cache is not None:
            cos, sin = plan.live_tables
            q, k = rotate(q, cos, sin), rotate(k, cos, sin)
            a = attend_with_cache(q, k, v, cache, layout)
        else:
            q, k = rotate(q, plan.cos, plan.sin), rotate(k, plan.cos, plan.sin)
            a = masked_attention(q, k, v, plan.mask)
            if capture:
                new_cache = capture_cache(k, v, layout)
        a = a.transpose(1, 2).reshape(B, S, D)
        x = x + gate1 * self.proj(a)
        x = x + gate2 * self.mlp(modulate(self.norm2(x), shift2, scale2))
        return x, new_cache


class FinalLayer(nn.Module):
    def __init__(self, d_model: int, out_dim: int):
        super().__init__()
        self.norm = nn.LayerNorm(d_model, elementwise_affine=False, eps=1e-6)
        self.ada = nn.Sequential(nn.SiLU(), nn.Linear(d_model, 2 * d_model))
        self.linear = nn.Linear(d_model, out_dim)
        for m in (self.ada[1], self.linear):
            nn.init.zeros_(m.weight)
            nn.init.zeros_(m.bias)

    def forward(self, x, c):
        shift, scale = self.ada(c).unsqueeze(1).chunk(2, dim=-1)
        return self.linear(modulate(self.norm(x), shift, scale))


def _as_batched(tokens, dtype) -> torch.Tensor:
    if isinstance(tokens, TokenGrid):
        tokens = tokens.tokens
    t = torch.as_tensor(np.asarray(tokens) if not torch.is_tensor(tokens) else tokens, dtype=dtype)
    return t.unsqueeze(0) if t.dim() == 3 else t


class TryOnDiT(nn.Module):
    """Shared-weight transformer over [z_t, style, C_1..C_n].

    Condition tokens go through the same blocks as the latent; the group mask
    keeps each condition attending only to itself, which is what makes their
    keys/values cacheable across sampling steps.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.x_embed = nn.Linear(cfg.token_dim, cfg.d_model)
        self.style_embed = nn.Embedding(cfg.style_vocab, cfg.d_model)
        nn.init.normal_(self.style_embed.weight, std=0.02)
        self.t_embed = TimestepEmbedder(cfg.d_model, cfg.freq_dim)
        self.blocks = nn.ModuleList([DiTBlock(cfg) for _ in range(cfg.n_layers)])
        self.final = FinalLayer(cfg.d_model, cfg.token_dim)

    # -- planning -----------------------------------------------------------

    def plan(self, z_shape: tuple[int, int], n_style: int, conditions: Sequence[ConditionGroup]) -> Plan:
        ids = [g.id for g in conditions]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate condition group ids {ids}")
        h, w = z_shape
        layout = SegmentLayout.build(h * w, n_style, [(f"C{g.id}", g.n_tokens) for g in conditions])
        parts = [coords_for_latent(h, w), np.zeros((n_style, 3))]
        parts += [g.coords for g in conditions]
        coords = np.concatenate(parts, axis=0)
        dtype = self.x_embed.weight.dtype
        cos, sin = rope_tables(coords, self.cfg.head_dim, self.cfg.rope_theta, dtype=dtype)
        if not self.cfg.cond_rope:
            n = layout.n_live
            cos[n:] = 1.0
            sin[n:] = 0.0
        return Plan(layout, cos, sin, build_group_mask(layout), z_shape)

    # -- embedding ----------------------------------------------------------

    def _timestep(self, t, B, dtype):
        t = torch.as_tensor(t, dtype=dtype)
        if t.dim() == 0:
            t = t.expand(B)
        return self.t_embed(t)

    def _embed_live(self, z, style):
        B, h, w, d = z.shape
        x = self.x_embed(z.reshape(B, h * w, d))
        if style is not None:
            x = torch.cat([x, self.style_embed(style)], dim=1)
        return x

    def _embed_conditions(self, conditions, dtype, B):
        xs = []
        for g in conditions:
            tok = _as_batched(g.tokens, dtype)
            if tok.shape[0] == 1 and B > 1:
                tok = tok.expand(B, *tok.shape[1:])
            elif tok.shape[0] != B:
                raise ValueError(f"condition group {g.id} has batch {tok.shape[0]}, latent has {B}")
            xs.append(self.x_embed(tok.reshape(tok.shape[0], -1, tok.shape[-1])))
        return xs

    @staticmethod
    def _style(style, B):
        if style is None:
            return None
        s = torch.as_tensor(style, dtype=torch.long)
        if s.dim() == 1:
            s = s.unsqueeze(0)
        return s.expand(B, -1) if s.shape[0] == 1 and B > 1 else s

    # -- forward passes -----------------------------------------------------

    def forward(
        self,
        z,
        t,
        style=None,
        conditions: Sequence[ConditionGroup] = (),
        cond_t=None,
        plan: Optional[Plan] = None,
        return_states: bool = False,
        capture: bool = False,
    ):
        """Predict velocity on the latent tokens.

        ``cond_t`` pins the timestep seen by condition tokens (defaults to
        ``t``). With ``capture`` the per-layer condition KV caches are
        returned alongside the velocity; with ``return_states`` the hidden
        state of every token after every block is returned.
        """
        dtype = self.x_embed.weight.dtype
        z = _as_batched(z, dtype)
        B, h, w, _ = z.shape
        style = self._style(style, B)
        n_style = 0 if style is None else style.shape[1]
        if plan is None:
            plan = self.plan((h, w), n_style, conditions)
        x = torch.cat([self._embed_live(z, style)] + self._embed_conditions(conditions, dtype, B), dim=1)
        c_live = self._timestep(t, B, dtype)
        c_cond = c_live if cond_t is None else self._timestep(cond_t, B, dtype)

        states, caches = [], []
        for blk in self.blocks:
            x, cache = blk(x, c_live, c_cond, plan, capture=capture)
            caches.append(cache)
            if return_states:
                states.append(x)
        v = self.final(x[:, : h * w], c_live).reshape(B, h, w, -1)
        if capture:
            return v, caches
        if return_states:
            return v, states
        return v

    def forward_cached(self, z, t, style, caches: Sequence[LayerKVCache], plan: Plan):
        """Velocity using live (latent + style) queries against cached condition KV."""
        dtype = self.x_embed.weight.dtype
        z = _as_batched(z, dtype)
        B, h, w, _ = z.shape
        style = self._style(style, B)
        n_live = h * w + (0 if style is None else style.shape[1])
        if n_live != plan.layout.n_live:
            raise ValueError(f"live token count {n_live} does not match plan {plan.layout.n_live}")
        x = self._embed_live(z, style)
        c = self._timestep(t, B, dtype)
        for blk, cache in zip(self.blocks, caches):
            x, _ = blk(x, c, c, plan, cache=cache)
        return self.final(x[:, : h * w], c).reshape(B, h, w, -1)


# ---------------------------------------------------------------------------
# flow matching


@dataclass
class FlowPair:
    z_t: TokenGrid
    t: float
    target_v: TokenGrid


def flow_interpolate(z0, eps, t):
    """z_t = (1 - t) z0 + t eps and v = eps - z0; works on arrays and tensors."""
    return (1 - t) * z0 + t * eps, eps - z0


def make_flow_pair(z0: TokenGrid, eps: TokenGrid, t: float) -> FlowPair:
    if z0.tokens.shape != eps.tokens.shape:
        raise ValueError(f"z0 {z0.tokens.shape} and eps {eps.tokens.shape} differ")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    zt, v = flow_interpolate(z0.tokens, eps.tokens, t)
    return FlowPair(TokenGrid(zt), float(t), TokenGrid(v))


def weighted_fm_loss(pred, target, weights) -> torch.Tensor:
    """Mean over tokens and channels of ``W * (pred - target)^2``.

    ``weights`` is an (h, w) or (B, h, w) array, or a WeightMap.
    """
    pred = pred.tokens if isinstance(pred, TokenGrid) else pred
    target = target.tokens if isinstance(target, TokenGrid) else target
    weights = getattr(weights, "weights", weights)
    pred = torch.as_tensor(pred)
    target = torch.as_tensor(target, dtype=pred.dtype)
    weights = torch.as_tensor(weights, dtype=pred.dtype)
    if pred.shape != target.shape:
        raise ValueError(f"pred {tuple(pred.shape)} and target {tuple(target.shape)} differ")
    grid = tuple(pred.shape[:-1])
    if tuple(weights.shape) not in (grid, grid[-2:]):
        raise ValueError(f"weights {tuple(weights.shape)} do not match token grid {tuple(pred.shape)}")
    return (weights.unsqueeze(-1) * (pred - target) ** 2).mean()


# ---------------------------------------------------------------------------
# checkpoint container
#
#   b"PRMC" | u16 version | u32 meta_len | meta (UTF-8 JSON: model config,
#   config hash, step, ...) | u32 n_tensors | per tensor: u16 name_len, name,
#   u8 ndim, u32 dims[ndim], f32 data (little-endian, C order)

CKPT_MAGIC = b"PRMC"
CKPT_VERSION = 1


def save_checkpoint(path, tensors: dict[str, torch.Tensor], meta: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = json.dumps(meta, sort_keys=True).encode()
    parts = [struct.pack("<4sHI", CKPT_MAGIC, CKPT_VERSION, len(blob)), blob, struct.pack("<I", len(tensors))]
    for name, t in tensors.items():
        arr = np.ascontiguousarray(t.detach().cpu().numpy(), dtype="<f4")
        key = name.encode()
        parts.append(struct.pack("<H", len(key)) + key + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(b"".join(parts))
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[dict[str, torch.Tensor], dict]:
    buf = Path(path).read_bytes()
    magic, version, meta_len = struct.unpack_from("<4sHI", buf, 0)
    if magic != CKPT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != CKPT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = struct.calcsize("<4sHI")
    meta = json.loads(buf[off : off + meta_len])
    off += meta_len
    (n,) = struct.unpack_from("<I", buf, off)
    off += 4
    tensors = {}
    for _ in range(n):
        (klen,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = buf[off : off + klen].decode()
        off += klen
        (ndim,) = struct.unpack_from("<B", buf, off)
        off += 1
        shape = struct.unpack_from(f"<{ndim}I", buf, off)
        off += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(buf, dtype="<f4", count=count, offset=off).reshape(shape)
        off += 4 * count
        tensors[name] = torch.from_numpy(arr.astype(np.float32))
    return tensors, meta


def model_from_checkpoint(path, expected_hash: Optional[str] = None) -> tuple[TryOnDiT, dict]:
    tensors, meta = load_checkpoint(path)
    if expected_hash is not None and meta.get("config_hash") != expected_hash:
        raise ValueError(
            f"checkpoint config hash {meta.get('config_hash')} does not match run config {expected_hash}"
        )
    model = TryOnDiT(ModelConfig(**meta["model"]))
    state = {k[len("model/") :]: v for k, v in tensors.items() if k.startswith("model/")}
    model.load_state_dict(state)
    return model, meta


def model_tensors(model: TryOnDiT) -> dict[str, torch.Tensor]:
    return {f"model/{k}": v for k, v in model.state_dict().items()}


def model_meta(model: TryOnDiT) -> dict:
    return {"model": asdict(model.cfg)}
