"""Paired image metrics and rule-based try-on accuracies."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import convolve2d

from .synth import INK, PALETTE, SKIN, TryOnSample

K1, K2 = 0.01, 0.03
WIN, SIGMA = 11, 1.5


def _gaussian_window(size: int = WIN, sigma: float = SIGMA) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim_channel(a, b, win, data_range):
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2

    def filt(x):
        return convolve2d(x, win, mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    s_aa = filt(a * a) - mu_a**2
    s_bb = filt(b * b) - mu_b**2
    s_ab = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * s_ab + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (s_aa + s_bb + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), averaged over channels.

    Only windows fully inside the image are scored.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[:2]) < WIN:
        raise ValueError(f"images must be at least {WIN}x{WIN}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a, b = a[..., None], b[..., None]
    win = _gaussian_window()
    return float(np.mean([_ssim_channel(a[..., c], b[..., c], win, data_range) for c in range(a.shape[2])]))


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical images give ``math.inf``."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(data_range**2 / mse)


# nearest-color classes: palette entries first, then non-garment references
_NON_GARMENT = np.array([SKIN, INK, [0.85, 0.85, 0.85], [0.0, 0.0, 0.0]], dtype=np.float64)
_CLASSES = np.concatenate([PALETTE.astype(np.float64), _NON_GARMENT], axis=0)


def classify_colors(pixels: np.ndarray) -> np.ndarray:
    """Index of the nearest reference color for each (..., 3) pixel; values
    >= len(PALETTE) mean "not a garment color"."""
    d = ((pixels[..., None, :].astype(np.float64) - _CLASSES) ** 2).sum(-1)
    return np.argmin(d, axis=-1)


def dominant_color(img: np.ndarray, region: np.ndarray) -> int:
    """Most frequent palette color inside ``region``, or -1 if none is present."""
    labels = classify_colors(img[np.asarray(region).astype(bool)])
    labels = labels[labels < len(PALETTE)]
    if labels.size == 0:
        return -1
    return int(np.bincount(labels, minlength=len(PALETTE)).argmax())


def garment_assignment_acc(output: np.ndarray, sample: TryOnSample) -> float:
    if output.shape != sample.target.shape:
        raise ValueError(f"output {output.shape} does not match target {sample.target.shape}")
    hits = [
        dominant_color(output, m) == a.color_id
        for a, m in zip(sample.garment_attrs, sample.garment_masks)
    ]
    return float(np.mean(hits)) if hits else 1.0


def color_extent(img: np.ndarray, color_id: int, min_pixels: int = 2) -> int:
    """Number of rows between the first and last row holding at least
    ``min_pixels`` pixels of palette color ``color_id``."""
    rows = np.flatnonzero((classify_colors(img) == color_id).sum(axis=1) >= min_pixels)
    return 0 if rows.size == 0 else int(rows[-1] - rows[0] + 1)


def style_compliance_acc(output: np.ndarray, sample: TryOnSample, tol: float = 0.1) -> float:
    """Fraction of conditioned garments rendered at the right length.

    Length and tuck both move a garment's hem, so a garment complies when the
    vertical extent of its color in ``output`` is within ``tol * H`` rows of
    its extent in the target.
    """
    H = output.shape[0]
    hits = [
        abs(color_extent(output, a.color_id) - color_extent(sample.target, a.color_id)) <= tol * H
        for a in sample.garment_attrs
    ]
    return float(np.mean(hits)) if hits else 1.0


@dataclass
class EvalReport:
    ssim: float
    psnr: float
    garment_assignment_acc: float
    style_compliance_acc: float
    n: int

    def to_record(self, **extra) -> str:
        d = asdict(self)
        if math.isinf(d["psnr"]):
            d["psnr"] = "inf"
        d.update(extra)
        return json.dumps(d, sort_keys=True)


def evaluate(outputs, samples) -> EvalReport:
    outputs, samples = list(outputs), list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    s = [ssim(o, smp.target) for o, smp in zip(outputs, samples)]
    p = [psnr(o, smp.target) for o, smp in zip(outputs, samples)]
    g = [garment_assignment_acc(o, smp) for o, smp in zip(outputs, samples)]
    c = [style_compliance_acc(o, smp) for o, smp in zip(outputs, samples)]
    mean_psnr = math.inf if all(math.isinf(x) for x in p) else float(np.mean([x for x in p if not math.isinf(x)]))
    return EvalReport(float(np.mean(s)), mean_psnr, float(np.mean(g)), float(np.mean(c)), len(samples))
