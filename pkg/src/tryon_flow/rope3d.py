"""Three-axis rotary coordinates (t, x, y) with t used as a condition-group id.

Latent tokens sit at t=0 on their integer grid. Condition group ``i`` gets
t=i; spatial groups share the latent's (x, y) frame and garment groups are
shifted by ``delta`` along y so they never collide with the latent extent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .codec import TokenGrid

SPATIAL = "spatial"
GARMENT = "garment"


def coords_for_latent(h: int, w: int) -> np.ndarray:
    """(h*w, 3) array of (t, x, y), row-major over y then x."""
    ys, xs = np.mgrid[0:h, 0:w]
    return np.stack([np.zeros(h * w), xs.ravel(), ys.ravel()], axis=1).astype(np.float64)


def coords_for_condition(
    group_id: int, kind: str, h_c: int, w_c: int, z_shape: tuple[int, int], delta: float
) -> np.ndarray:
    """Coordinates for one condition group.

    Spatial groups must be either latent-sized or exactly half the latent
    size (after merging); the half-size tokens are placed at the center of the
    2x2 latent cells they cover.
    """
    if group_id < 1:
        raise ValueError(f"group id must be >= 1, got {group_id}")
    ys, xs = np.mgrid[0:h_c, 0:w_c]
    xs = xs.ravel().astype(np.float64)
    ys = ys.ravel().astype(np.float64)
    if kind == SPATIAL:
        zh, zw = z_shape
        if (h_c, w_c) == (zh, zw):
            pass
        elif 2 * h_c == zh and 2 * w_c == zw:
            xs, ys = 2.0 * xs + 0.5, 2.0 * ys + 0.5
        else:
            raise ValueError(f"spatial group {h_c}x{w_c} does not align with latent {zh}x{zw}")
    elif kind == GARMENT:
        ys = ys + delta
    else:
        raise ValueError(f"unknown condition kind {kind!r}")
    t = np.full_like(xs, float(group_id))
    return np.stack([t, xs, ys], axis=1)


@dataclass
class ConditionGroup:
    """One conditioning input. ``tokens`` is a TokenGrid, or a batched
    (B, h, w, d) tensor when groups are assembled for training."""

    id: int
    kind: str
    tokens: object
    coords: np.ndarray

    @classmethod
    def build(cls, group_id, kind, tokens, z_shape, delta=None):
        shape = tokens.tokens.shape if isinstance(tokens, TokenGrid) else tuple(tokens.shape)[-3:]
        h_c, w_c = shape[0], shape[1]
        if delta is None:
            delta = float(z_shape[0])
        return cls(group_id, kind, tokens, coords_for_condition(group_id, kind, h_c, w_c, z_shape, delta))

    @property
    def n_tokens(self) -> int:
        return len(self.coords)


def axis_frequencies(head_dim: int, theta: float = 10000.0) -> np.ndarray:
    if head_dim % 6:
        raise ValueError(f"head dim {head_dim} must be divisible by 6 for three rotary axes")
    axis_dim = head_dim // 3
    return theta ** (-np.arange(0, axis_dim, 2, dtype=np.float64) / axis_dim)


def rope_angles(coords: np.ndarray, head_dim: int, theta: float = 10000.0) -> np.ndarray:
    """Rotation angle for every (token, rotation pair): shape (S, head_dim // 2).

    Pairs are laid out axis by axis: the first head_dim/6 pairs rotate with t,
    then x, then y.
    """
    freqs = axis_frequencies(head_dim, theta)
    coords = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    return np.concatenate([coords[:, a : a + 1] * freqs[None, :] for a in range(3)], axis=1)


def apply_rope(vec: np.ndarray, coord, theta: float = 10000.0) -> np.ndarray:
    """Rotate a single d-dim vector by the angles of one (t, x, y) coordinate."""
    vec = np.asarray(vec, dtype=np.float64)
    d = vec.shape[-1]
    ang = rope_angles(np.asarray(coord, dtype=np.float64)[None], d, theta)[0]
    x0, x1 = vec[0::2], vec[1::2]
    c, s = np.cos(ang), np.sin(ang)
    out = np.empty_like(vec)
    out[0::2] = x0 * c - x1 * s
    out[1::2] = x0 * s + x1 * c
    return out


def rope_tables(coords: np.ndarray, head_dim: int, theta: float = 10000.0, dtype=torch.float32):
    ang = torch.from_numpy(rope_angles(coords, head_dim, theta))
    return torch.cos(ang).to(dtype), torch.sin(ang).to(dtype)


def rotate(x: torch.Tensor, cos: torch.Tensor, sin: torch.Tensor) -> torch.Tensor:
    """Apply precomputed rotations to (..., S, head_dim) with (S, head_dim // 2) tables."""
    x0, x1 = x[..., 0::2], x[..., 1::2]
    r0 = x0 * cos - x1 * sin
    r1 = x0 * sin + x1 * cos
    return torch.stack([r0, r1], dim=-1).flatten(-2)
