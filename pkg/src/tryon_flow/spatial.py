"""Spatial condition construction and the region-aware loss weight map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class WeightMap:
    weights: np.ndarray  # (h_lat, w_lat)
    lam: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape


def make_agnostic(person: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Erase the edit region: ``person * (1 - mask)``."""
    if person.shape[:2] != mask.shape[:2]:
        raise ValueError(f"person {person.shape} and mask {mask.shape} differ in size")
    keep = (np.asarray(mask) == 0).astype(person.dtype)
    if person.ndim == 3:
        keep = keep[..., None]
    return person * keep


def area_pool(img: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping ``factor x factor`` blocks of an (H, W[, C]) array."""
    H, W = img.shape[:2]
    if H % factor or W % factor:
        raise ValueError(f"{H}x{W} is not divisible by pooling factor {factor}")
    x = np.asarray(img, dtype=np.float64)
    x = x.reshape(H // factor, factor, W // factor, factor, *img.shape[2:])
    return x.mean(axis=(1, 3))


def merge_spatial(agnostic: np.ndarray, pose: np.ndarray) -> np.ndarray:
    """Paste the pose skeleton onto the agnostic image, then 2x area-downsample.

    Encoding the result gives a quarter of the tokens of either full-resolution
    input, so the pair costs 1/8 of its unmerged token count.
    """
    if agnostic.shape != pose.shape:
        raise ValueError(f"agnostic {agnostic.shape} and pose {pose.shape} differ")
    H, W = agnostic.shape[:2]
    if H % 2 or W % 2:
        raise ValueError(f"merge needs even H and W, got {H}x{W}")
    on_pose = np.any(pose > 0, axis=-1, keepdims=True)
    overlay = np.where(on_pose, pose, agnostic)
    return area_pool(overlay, 2).astype(agnostic.dtype)


def region_weight_map(parsing: np.ndarray, lam: float, latent_shape: tuple[int, int]) -> WeightMap:
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda must lie in [0, 1), got {lam}")
    H, W = parsing.shape
    h, w = latent_shape
    if H % h or W % w or H // h != W // w:
        raise ValueError(f"parsing {H}x{W} cannot be pooled onto a {h}x{w} latent by one integer factor")
    m = area_pool((np.asarray(parsing) > 0).astype(np.float64), H // h)
    return WeightMap(1.0 + lam * (2.0 * m - 1.0), float(lam))
