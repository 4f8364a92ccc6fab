"""Run configuration: a flat ``key = value`` text file mapped onto RunConfig."""
from __future__ import annotations

import dataclasses
import hashlib
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .dit import ModelConfig
from .synth import STYLE_TEXT_LEN, SynthConfig

FLAGS = ("no_rope_groups", "no_weighted_loss", "no_merge", "no_cache")

# Fields that only affect inference or bookkeeping; everything else
# determines the trained weights and goes into the config hash.
_UNHASHED = {
    "out_dir",
    "sample_steps",
    "sample_mode",
    "no_cache",
    "bench_runs",
    "eval_seed_start",
    "n_eval",
    "ablate_flags",
    "checkpoint_every",
    "dataset_dir",
}


@dataclass(frozen=True)
class RunConfig:
    # dataset
    height: int = 32
    width: int = 32
    garment_size: int = 16
    n_max: int = 2
    patch_size: int = 4
    data_seed_start: int = 0
    n_train: int = 4000
    eval_seed_start: int = 1_000_000
    n_eval: int = 100
    dataset_dir: str = ""
    # model
    n_layers: int = 4
    d_model: int = 96
    n_heads: int = 2
    text_len: int = STYLE_TEXT_LEN
    # training
    batch: int = 16
    train_steps: int = 2000
    lam: float = 0.5
    style_dropout: float = 0.1
    lr: float = 1e-3
    warmup_steps: int = 100
    lr_schedule: str = "cosine"
    min_lr_ratio: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    grad_clip: float = 1.0
    train_seed: int = 0
    checkpoint_every: int = 500
    # sampler
    sample_steps: int = 20
    sample_mode: str = "cached"
    bench_runs: int = 20
    # ablation flags
    no_rope_groups: bool = False
    no_weighted_loss: bool = False
    no_merge: bool = False
    no_cache: bool = False
    ablate_flags: str = "none,no_rope_groups"
    # output
    out_dir: str = "runs/default"

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"lam must lie in [0, 1), got {self.lam}")
        if self.text_len != STYLE_TEXT_LEN:
            raise ValueError(f"text_len is fixed by the style schema at {STYLE_TEXT_LEN}")
        if self.sample_mode not in ("full", "cached"):
            raise ValueError(f"sample_mode must be full or cached, got {self.sample_mode!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")

    # -- derived configs ----------------------------------------------------

    def synth(self, style_null_rate: Optional[float] = None) -> SynthConfig:
        rate = self.style_dropout if style_null_rate is None else style_null_rate
        return SynthConfig(self.height, self.width, self.garment_size, self.n_max, rate, self.patch_size)

    def model(self) -> ModelConfig:
        return ModelConfig(
            token_dim=3 * self.patch_size**2,
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers=self.n_layers,
            text_len=self.text_len,
            cond_rope=not self.no_rope_groups,
        )

    @property
    def effective_lam(self) -> float:
        return 0.0 if self.no_weighted_loss else self.lam

    @property
    def mode(self) -> str:
        return "full" if self.no_cache else self.sample_mode

    @property
    def merge(self) -> bool:
        return not self.no_merge

    @property
    def z_shape(self) -> tuple[int, int]:
        return self.height // self.patch_size, self.width // self.patch_size

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    # -- hashing / io -------------------------------------------------------

    def hash(self) -> str:
        items = sorted((f.name, getattr(self, f.name)) for f in fields(self) if f.name not in _UNHASHED)
        text = "\n".join(f"{k}={v!r}" for k, v in items)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_text(self) -> str:
        return "".join(f"{f.name} = {_fmt(getattr(self, f.name))}\n" for f in fields(self))

    def output_dir(self) -> Path:
        return Path(os.environ.get("PROMO_OUT") or self.out_dir)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(kind, raw: str, key: str):
    if kind is bool or kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    if kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)
    return raw.strip()


def parse_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        updates[key] = _coerce(types[key], raw, key)
    return dataclasses.replace(base, **updates)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
