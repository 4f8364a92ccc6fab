"""Exact patchify codec standing in for a learned image autoencoder.

``encode`` is space-to-depth followed by a fixed per-channel affine map to
zero-mean, unit-scale values; ``decode`` undoes both. Arithmetic is float64 and
the affine constants are powers of two, so any float32-representable image
survives a round trip bit-for-bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# per-channel normalization: token = (pixel - MID) * SCALE
MID = np.array([0.5, 0.5, 0.5])
SCALE = np.array([2.0, 2.0, 2.0])


@dataclass
class TokenGrid:
    tokens: np.ndarray  # (h, w, d)

    def __post_init__(self):
        if self.tokens.ndim != 3:
            raise ValueError(f"tokens must be (h, w, d), got shape {self.tokens.shape}")

    @property
    def h(self) -> int:
        return self.tokens.shape[0]

    @property
    def w(self) -> int:
        return self.tokens.shape[1]

    @property
    def d(self) -> int:
        return self.tokens.shape[2]

    @property
    def n_tokens(self) -> int:
        return self.h * self.w


def encode(img: np.ndarray, p: int) -> TokenGrid:
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 image, got shape {img.shape}")
    H, W, C = img.shape
    if H % p or W % p:
        raise ValueError(f"image {H}x{W} is not divisible by patch size {p}")
    x = (np.asarray(img, dtype=np.float64) - MID) * SCALE
    x = x.reshape(H // p, p, W // p, p, C).transpose(0, 2, 1, 3, 4)
    return TokenGrid(x.reshape(H // p, W // p, p * p * C))


def decode(grid: TokenGrid, p: int) -> np.ndarray:
    h, w, d = grid.tokens.shape
    if d != 3 * p * p:
        raise ValueError(f"token dim {d} does not match 3*p^2 = {3 * p * p}")
    x = np.asarray(grid.tokens, dtype=np.float64).reshape(h, w, p, p, 3)
    x = x.transpose(0, 2, 1, 3, 4).reshape(h * p, w * p, 3)
    return x / SCALE + MID
