"""Joint attention over [latent, style, C_1..C_n] with group visibility, plus
the condition key/value cache used for self-referenced sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import torch

LATENT = "latent"
STYLE = "style"
CONDITION = "condition"

MASK_BIAS = -1e9


@dataclass(frozen=True)
class Segment:
    name: str
    kind: str
    length: int


@dataclass(frozen=True)
class SegmentLayout:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        kinds = [s.kind for s in self.segments]
        if kinds.count(LATENT) != 1:
            raise ValueError("layout needs exactly one latent segment")
        if kinds.count(STYLE) > 1:
            raise ValueError("layout allows at most one style segment")
        if any(k not in (LATENT, STYLE, CONDITION) for k in kinds):
            raise ValueError(f"unknown segment kind in {kinds}")
        # live (latent/style) segments come first so cached queries are a prefix
        seen_cond = False
        for k in kinds:
            if k == CONDITION:
                seen_cond = True
            elif seen_cond:
                raise ValueError("latent/style segments must precede condition segments")
        names = [s.name for s in self.segments]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate segment names {names}")
        if any(s.length < 0 for s in self.segments):
            raise ValueError("segment lengths must be non-negative")
        if any(s.kind != STYLE and s.length == 0 for s in self.segments):
            raise ValueError("latent and condition segments must be non-empty")

    @classmethod
    def build(cls, n_latent: int, n_style: int, conditions: Sequence[tuple[str, int]]) -> "SegmentLayout":
        segs = [Segment("z_t", LATENT, n_latent)]
        if n_style:
            segs.append(Segment("style", STYLE, n_style))
        segs += [Segment(name, CONDITION, n) for name, n in conditions]
        return cls(tuple(segs))

    @property
    def total(self) -> int:
        return sum(s.length for s in self.segments)

    @property
    def offsets(self) -> list[int]:
        out, acc = [], 0
        for s in self.segments:
            out.append(acc)
            acc += s.length
        return out

    def span(self, name: str) -> slice:
        for s, off in zip(self.segments, self.offsets):
            if s.name == name:
                return slice(off, off + s.length)
        raise KeyError(name)

    @property
    def n_live(self) -> int:
        return sum(s.length for s in self.segments if s.kind != CONDITION)

    @property
    def n_condition(self) -> int:
        return self.total - self.n_live

    @property
    def conditions(self) -> tuple[Segment, ...]:
        return tuple(s for s in self.segments if s.kind == CONDITION)


def build_group_mask(layout: SegmentLayout) -> torch.Tensor:
    """S x S visibility: live rows see everything, condition rows only their own block."""
    S = layout.total
    mask = torch.zeros(S, S, dtype=torch.bool)
    mask[: layout.n_live] = True
    for seg, off in zip(layout.segments, layout.offsets):
        if seg.kind == CONDITION:
            mask[off : off + seg.length, off : off + seg.length] = True
    return mask


def masked_attention(q: torch.Tensor, k: torch.Tensor, v: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Scaled dot-product attention over (..., S_q, d) queries restricted to ``mask``.

    Masked logits get an additive ``MASK_BIAS``; a query row with no visible
    key is rejected rather than silently averaged.
    """
    if mask.shape != (q.shape[-2], k.shape[-2]):
        raise ValueError(f"mask {tuple(mask.shape)} does not match ({q.shape[-2]}, {k.shape[-2]})")
    if not bool(mask.any(dim=-1).all()):
        raise ValueError("every query row needs at least one visible key")
    bias = torch.zeros(mask.shape, dtype=q.dtype, device=q.device).masked_fill(~mask, MASK_BIAS)
    logits = q @ k.transpose(-2, -1) * (1.0 / math.sqrt(q.shape[-1])) + bias
    return torch.softmax(logits, dim=-1) @ v


@dataclass(frozen=True)
class LayerKVCache:
    """Condition keys/values of one layer, (B, heads, N_cond, head_dim) each."""

    k: torch.Tensor
    v: torch.Tensor
    layout: SegmentLayout


def capture_cache(k: torch.Tensor, v: torch.Tensor, layout: SegmentLayout) -> LayerKVCache:
    """Copy out the condition columns of full-sequence keys/values."""
    if k.shape[-2] != layout.total or v.shape[-2] != layout.total:
        raise ValueError(f"k/v length {k.shape[-2]} does not match layout total {layout.total}")
    n = layout.n_live
    return LayerKVCache(k[..., n:, :].detach().clone(), v[..., n:, :].detach().clone(), layout)


def attend_with_cache(
    q_live: torch.Tensor,
    k_live: torch.Tensor,
    v_live: torch.Tensor,
    cache: LayerKVCache,
    layout: SegmentLayout,
) -> torch.Tensor:
    """Live-row attention against [live keys || cached condition keys]."""
    if cache.layout != layout:
        raise ValueError("cache was captured for a different segment layout")
    n = layout.n_live
    if q_live.shape[-2] != n or k_live.shape[-2] != n or v_live.shape[-2] != n:
        raise ValueError(f"live tensors must cover exactly the {n} latent+style rows")
    k = torch.cat([k_live, cache.k], dim=-2)
    v = torch.cat([v_live, cache.v], dim=-2)
    return masked_attention(q_live, k, v, build_group_mask(layout)[:n])
