"""Turn a TryOnSample into the token segments the transformer consumes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from .codec import TokenGrid, decode, encode
from .rope3d import GARMENT, SPATIAL, ConditionGroup
from .spatial import make_agnostic, merge_spatial, region_weight_map
from .synth import StyleAttrs, TryOnSample, style_to_tokens


@dataclass
class ModelInputs:
    z0: TokenGrid  # encoded target
    conditions: list[ConditionGroup]
    style_tokens: np.ndarray  # (L_text,) int64
    weights: np.ndarray  # (h_lat, w_lat)


def build_conditions(sample: TryOnSample, p: int, merge: bool = True) -> list[ConditionGroup]:
    """Condition groups in id order: masked person, spatial (merged or mask + pose), garments."""
    H, W = sample.person.shape[:2]
    z_shape = (H // p, W // p)
    agnostic = make_agnostic(sample.person, sample.agnostic_mask)
    groups = [ConditionGroup.build(1, SPATIAL, encode(agnostic, p), z_shape)]
    if merge:
        groups.append(ConditionGroup.build(2, SPATIAL, encode(merge_spatial(agnostic, sample.pose_map), p), z_shape))
    else:
        mask_img = np.repeat(sample.agnostic_mask[..., None].astype(np.float32), 3, axis=-1)
        groups.append(ConditionGroup.build(2, SPATIAL, encode(mask_img, p), z_shape))
        groups.append(ConditionGroup.build(3, SPATIAL, encode(sample.pose_map, p), z_shape))
    next_id = len(groups) + 1
    for i, g in enumerate(sample.garments):
        groups.append(ConditionGroup.build(next_id + i, GARMENT, encode(g, p), z_shape))
    return groups


def build_inputs(
    sample: TryOnSample,
    p: int,
    lam: float,
    merge: bool = True,
    style: Optional[StyleAttrs] | str = "sample",
) -> ModelInputs:
    """``style="sample"`` uses the sample's own (possibly null) style; pass
    ``None`` to force the null prompt or a StyleAttrs to override it."""
    z0 = encode(sample.target, p)
    st = sample.style if isinstance(style, str) and style == "sample" else style
    w = region_weight_map(sample.parsing_mask, lam, (z0.h, z0.w)).weights
    return ModelInputs(z0, build_conditions(sample, p, merge), np.asarray(style_to_tokens(st), dtype=np.int64), w)


def collate(items: Sequence[ModelInputs], dtype=torch.float32):
    """Stack inputs that share a condition layout into batched tensors.

    Returns (z0, conditions, style, weights) with batched condition groups.
    """
    first = items[0].conditions
    for it in items[1:]:
        if [(g.id, g.kind, g.n_tokens) for g in it.conditions] != [(g.id, g.kind, g.n_tokens) for g in first]:
            raise ValueError("cannot collate samples with different condition layouts")
    z0 = torch.as_tensor(np.stack([it.z0.tokens for it in items]), dtype=dtype)
    conds = []
    for j, g in enumerate(first):
        tok = torch.as_tensor(np.stack([it.conditions[j].tokens.tokens for it in items]), dtype=dtype)
        conds.append(ConditionGroup(g.id, g.kind, tok, g.coords))
    style = torch.as_tensor(np.stack([it.style_tokens for it in items]))
    weights = torch.as_tensor(np.stack([it.weights for it in items]), dtype=dtype)
    return z0, conds, style, weights


def latent_to_image(z: torch.Tensor | np.ndarray, p: int) -> np.ndarray:
    """Decode a (h, w, d) latent into a clipped [0, 1] image."""
    arr = z.detach().cpu().numpy() if torch.is_tensor(z) else np.asarray(z)
    return np.clip(decode(TokenGrid(arr.astype(np.float64)), p), 0.0, 1.0).astype(np.float32)
