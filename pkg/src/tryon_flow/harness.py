"""Train / sample / eval / bench / ablate, each a function of (config, checkpoint, seeds)."""
from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import torch
from PIL import Image

from .config import FLAGS, RunConfig
from .dit import (
    TryOnDiT,
    flow_interpolate,
    load_checkpoint,
    model_from_checkpoint,
    model_meta,
    model_tensors,
    save_checkpoint,
    weighted_fm_loss,
)
from .metrics import EvalReport, evaluate, garment_assignment_acc
from .pipeline import ModelInputs, build_inputs, collate, latent_to_image
from .rope3d import SPATIAL
from .sampler import SamplerConfig, bench_inference, cached_sample, euler_sample, initial_noise, random_workload, speedup
from .synth import TryOnSample, gen_sample, read_sample

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.prmc"
LOSS_LOG_NAME = "loss.jsonl"


# ---------------------------------------------------------------------------
# data


def load_samples(cfg: RunConfig, seeds: Sequence[int], style_null_rate: Optional[float] = None) -> list[TryOnSample]:
    """Samples for ``seeds``, read from ``cfg.dataset_dir`` when set, else generated."""
    if cfg.dataset_dir:
        d = Path(cfg.dataset_dir)
        return [read_sample(d / f"{int(s):08d}.prmo") for s in seeds]
    scfg = cfg.synth(style_null_rate)
    return [gen_sample(s, scfg) for s in seeds]


class TrainingPool:
    """Encoded training inputs bucketed by condition layout (garment count)."""

    def __init__(self, cfg: RunConfig):
        seeds = range(cfg.data_seed_start, cfg.data_seed_start + cfg.n_train)
        buckets: dict[int, list[ModelInputs]] = defaultdict(list)
        for s in load_samples(cfg, seeds):
            buckets[s.n_garments].append(build_inputs(s, cfg.patch_size, cfg.effective_lam, cfg.merge))
        self.keys = sorted(buckets)
        self.buckets = [buckets[k] for k in self.keys]
        sizes = np.array([len(b) for b in self.buckets], dtype=np.float64)
        self.probs = sizes / sizes.sum()

    def batch(self, rng: np.random.Generator, size: int):
        b = self.buckets[rng.choice(len(self.buckets), p=self.probs)]
        idx = rng.integers(len(b), size=size)
        return collate([b[i] for i in idx])


# ---------------------------------------------------------------------------
# training


def lr_factor(cfg: RunConfig, step: int) -> float:
    if step < cfg.warmup_steps:
        return (step + 1) / cfg.warmup_steps
    if cfg.lr_schedule == "constant":
        return 1.0
    span = max(1, cfg.train_steps - cfg.warmup_steps)
    prog = min(1.0, (step - cfg.warmup_steps) / span)
    return cfg.min_lr_ratio + (1 - cfg.min_lr_ratio) * 0.5 * (1 + math.cos(math.pi * prog))


def _optim_tensors(opt: torch.optim.Optimizer) -> dict[str, torch.Tensor]:
    out = {}
    for i, st in opt.state_dict()["state"].items():
        out[f"optim/{i}/exp_avg"] = st["exp_avg"]
        out[f"optim/{i}/exp_avg_sq"] = st["exp_avg_sq"]
        out[f"optim/{i}/step"] = torch.as_tensor(float(st["step"])).reshape(1)
    return out


def _load_optim(opt: torch.optim.Optimizer, tensors: dict[str, torch.Tensor]) -> None:
    sd = opt.state_dict()
    state = {}
    for i in range(len(sd["param_groups"][0]["params"])):
        if f"optim/{i}/exp_avg" in tensors:
            state[i] = {
                "step": torch.tensor(float(tensors[f"optim/{i}/step"][0])),
                "exp_avg": tensors[f"optim/{i}/exp_avg"].clone(),
                "exp_avg_sq": tensors[f"optim/{i}/exp_avg_sq"].clone(),
            }
    sd["state"] = state
    opt.load_state_dict(sd)


def write_checkpoint(path, model: TryOnDiT, cfg: RunConfig, step: int, opt=None) -> None:
    tensors = model_tensors(model)
    if opt is not None:
        tensors.update(_optim_tensors(opt))
    meta = model_meta(model) | {"config_hash": cfg.hash(), "step": step, "config": cfg.to_text()}
    save_checkpoint(path, tensors, meta)


@dataclass
class TrainResult:
    model: TryOnDiT
    losses: list[float]
    checkpoint: Path


def cmd_train(
    cfg: RunConfig,
    out_dir: Optional[Path] = None,
    resume: bool = False,
    progress: Optional[Callable[[int, float], None]] = None,
) -> TrainResult:
    """Train from scratch (or resume) and write checkpoint + one loss record per step.

    Determinism: every step draws its batch, timesteps and noise from
    generators seeded by (train_seed, step), so a resumed run continues the
    exact trajectory of an uninterrupted one.
    """
    out = Path(out_dir) if out_dir is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    ckpt_path = out / CHECKPOINT_NAME
    log_path = out / LOSS_LOG_NAME

    torch.manual_seed(cfg.train_seed)
    model = TryOnDiT(cfg.model())
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2))
    start = 0
    losses: list[float] = []
    if resume and ckpt_path.exists():
        tensors, meta = load_checkpoint(ckpt_path)
        if meta.get("config_hash") != cfg.hash():
            raise ValueError(f"refusing to resume: checkpoint hash {meta.get('config_hash')} != config {cfg.hash()}")
        model.load_state_dict({k[6:]: v for k, v in tensors.items() if k.startswith("model/")})
        _load_optim(opt, tensors)
        start = int(meta["step"])
        if log_path.exists():
            losses = [json.loads(l)["loss"] for l in log_path.read_text().splitlines()][:start]
    log_path.write_text("".join(json.dumps({"step": i, "loss": l}) + "\n" for i, l in enumerate(losses)))

    pool = TrainingPool(cfg) if start < cfg.train_steps else None
    model.train()
    with open(log_path, "a") as logf:
        for step in range(start, cfg.train_steps):
            rng = np.random.default_rng([cfg.train_seed, step])
            gen = torch.Generator().manual_seed(cfg.train_seed * 1_000_003 + step)
            z0, conds, style, weights = pool.batch(rng, cfg.batch)
            t = torch.rand(z0.shape[0], generator=gen)
            eps = torch.randn(z0.shape, generator=gen)
            zt, v = flow_interpolate(z0, eps, t[:, None, None, None])
            lr = cfg.lr * lr_factor(cfg, step)
            for g in opt.param_groups:
                g["lr"] = lr
            loss = weighted_fm_loss(model(zt, t, style, conds), v, weights)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            if cfg.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            opt.step()
            val = float(loss.detach())
            losses.append(val)
            logf.write(json.dumps({"step": step, "loss": val, "lr": lr, "config_hash": cfg.hash()}) + "\n")
            if progress is not None:
                progress(step, val)
            if cfg.checkpoint_every and (step + 1) % cfg.checkpoint_every == 0 and step + 1 < cfg.train_steps:
                logf.flush()
                write_checkpoint(ckpt_path, model, cfg, step + 1, opt)
    write_checkpoint(ckpt_path, model, cfg, cfg.train_steps, opt)
    model.eval()
    return TrainResult(model, losses, ckpt_path)


def load_model(cfg: RunConfig, checkpoint) -> TryOnDiT:
    if checkpoint is None or not Path(checkpoint).exists():
        raise FileNotFoundError(f"checkpoint not found: {checkpoint}")
    model, _ = model_from_checkpoint(checkpoint, expected_hash=cfg.hash())
    model.eval()
    return model


# ---------------------------------------------------------------------------
# generation and evaluation


def generate(
    model: TryOnDiT,
    cfg: RunConfig,
    samples: Sequence[TryOnSample],
    style: str = "sample",
    mode: Optional[str] = None,
    batch: int = 25,
) -> list[np.ndarray]:
    """Try-on outputs for ``samples``; noise for each is seeded by its sample seed.

    ``style`` is "sample" (use each sample's prompt) or "null".
    """
    mode = mode or cfg.mode
    scfg = SamplerConfig(steps=cfg.sample_steps, mode=mode)
    st = None if style == "null" else "sample"
    inputs = [build_inputs(s, cfg.patch_size, 0.0, cfg.merge, style=st) for s in samples]
    outputs: list[Optional[np.ndarray]] = [None] * len(samples)
    groups: dict[int, list[int]] = defaultdict(list)
    for i, s in enumerate(samples):
        groups[s.n_garments].append(i)
    if mode == "cached":
        fn = cached_sample
    else:
        # the uncached path recomputes conditions every step but pins their
        # timestep to t_0, so both modes produce the same images
        fn = partial(euler_sample, freeze_conditions=True)
    for idxs in groups.values():
        for k in range(0, len(idxs), batch):
            chunk = idxs[k : k + batch]
            _, conds, style_t, _ = collate([inputs[i] for i in chunk])
            z_init = torch.cat([initial_noise((1, *cfg.z_shape, model.cfg.token_dim), samples[i].seed) for i in chunk])
            z = fn(model, conds, style_t, scfg, cfg.z_shape, z_init=z_init)
            for j, i in enumerate(chunk):
                outputs[i] = latent_to_image(z[j], cfg.patch_size)
    return outputs


def eval_seeds(cfg: RunConfig) -> list[int]:
    return list(range(cfg.eval_seed_start, cfg.eval_seed_start + cfg.n_eval))


def cmd_eval(
    cfg: RunConfig,
    checkpoint=None,
    model: Optional[TryOnDiT] = None,
    style: str = "sample",
    seeds: Optional[Sequence[int]] = None,
    outputs: Optional[Sequence[np.ndarray]] = None,
    min_garments: int = 1,
) -> EvalReport:
    """Score outputs on held-out seeds (prompted styles; ``style="null"`` drops them).

    ``outputs`` may be supplied to score precomputed images instead of sampling.
    ``min_garments`` restricts scoring to samples with at least that many garments.
    """
    seeds = eval_seeds(cfg) if seeds is None else list(seeds)
    samples = load_samples(cfg, seeds, style_null_rate=0.0)
    keep = [i for i, s in enumerate(samples) if s.n_garments >= min_garments]
    samples = [samples[i] for i in keep]
    if outputs is None:
        model = model if model is not None else load_model(cfg, checkpoint)
        outputs = generate(model, cfg, samples, style=style)
    else:
        outputs = [outputs[i] for i in keep]
    return evaluate(outputs, samples)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def comparison_row(sample: TryOnSample, output: np.ndarray, n_max: int) -> np.ndarray:
    """person | garments (padded to n_max) | target | output, all at person height."""
    H, W = sample.person.shape[:2]
    tiles = [sample.person]
    for i in range(n_max):
        tile = np.ones((H, W, 3), dtype=np.float32)
        if i < len(sample.garments):
            g = sample.garments[i]
            tile[: g.shape[0], : g.shape[1]] = g
        tiles.append(tile)
    tiles += [sample.target, output]
    return np.concatenate(tiles, axis=1)


def cmd_sample(
    cfg: RunConfig,
    checkpoint=None,
    seeds: Sequence[int] = (0,),
    model: Optional[TryOnDiT] = None,
    out_dir: Optional[Path] = None,
    mode: Optional[str] = None,
    style: str = "sample",
) -> dict[int, np.ndarray]:
    """Write one PNG per seed plus a comparison grid; returns the output images."""
    model = model if model is not None else load_model(cfg, checkpoint)
    samples = load_samples(cfg, seeds, style_null_rate=0.0)
    outputs = generate(model, cfg, samples, style=style, mode=mode)
    out = Path(out_dir) if out_dir is not None else cfg.output_dir() / "samples"
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    mode = mode or cfg.mode
    for s, o in zip(samples, outputs):
        _save_png(out / f"{s.seed:08d}_{mode}_{h}.png", o, h)
    grid = np.concatenate([comparison_row(s, o, cfg.n_max) for s, o in zip(samples, outputs)], axis=0)
    _save_png(out / f"grid_{mode}_{h}.png", grid, h)
    return {s.seed: o for s, o in zip(samples, outputs)}


def _save_png(path: Path, img: np.ndarray, config_hash: str) -> None:
    from PIL.PngImagePlugin import PngInfo

    info = PngInfo()
    info.add_text("config_hash", config_hash)
    Image.fromarray(to_uint8(img)).save(path, pnginfo=info)


def png_config_hash(path) -> Optional[str]:
    with Image.open(path) as im:
        return im.text.get("config_hash")


# ---------------------------------------------------------------------------
# benchmark


def bench_workloads(cfg: RunConfig, token_dim: int):
    """Merged and unmerged workloads for the configured image size.

    Merged: masked person (full res) + merged mask/pose (quarter tokens), so
    a 16x16 latent carries 256 + 64 = 320 condition tokens.
    Unmerged: masked person + separate mask and pose maps (full res each).
    """
    h, w = cfg.z_shape
    merged = [(SPATIAL, h, w), (SPATIAL, h // 2, w // 2)]
    unmerged = [(SPATIAL, h, w), (SPATIAL, h, w), (SPATIAL, h, w)]
    return (
        random_workload("merged", (h, w), merged, cfg.text_len, token_dim),
        random_workload("unmerged", (h, w), unmerged, cfg.text_len, token_dim),
    )


def cmd_bench(cfg: RunConfig, checkpoint=None, model: Optional[TryOnDiT] = None, runs: Optional[int] = None) -> list[dict]:
    """Cached+merged against full+unmerged (and the two single-mechanism variants).

    Returns line-delimited-ready records; the last one summarizes speedups.
    """
    model = model if model is not None else load_model(cfg, checkpoint)
    runs = runs or cfg.bench_runs
    merged, unmerged = bench_workloads(cfg, model.cfg.token_dim)
    records = []
    for wl in (unmerged, merged):
        for mode in ("full", "cached"):
            rec = bench_inference(model, wl, SamplerConfig(steps=cfg.sample_steps, mode=mode), runs=runs)
            rec["config_hash"] = cfg.hash()
            records.append(rec)
    by = {(r["workload"], r["mode"]): r for r in records}
    records.append(
        {
            "summary": True,
            "config_hash": cfg.hash(),
            "speedup_cached_merged_vs_full_unmerged": speedup(by["unmerged", "full"], by["merged", "cached"]),
            "speedup_cache_only": speedup(by["unmerged", "full"], by["unmerged", "cached"]),
            "speedup_merge_only": speedup(by["unmerged", "full"], by["merged", "full"]),
        }
    )
    return records


# ---------------------------------------------------------------------------
# ablation


def parse_flag_sets(text: str) -> list[tuple[str, ...]]:
    """"none,no_rope_groups,no_merge+no_weighted_loss" -> [(), ("no_rope_groups",), (...)]"""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        flags = () if item == "none" else tuple(sorted(f.strip() for f in item.split("+")))
        for f in flags:
            if f not in FLAGS:
                raise ValueError(f"unknown ablation flag {f!r}")
        out.append(flags)
    return out


def cmd_ablate(cfg: RunConfig, out_dir: Optional[Path] = None, flag_sets=None, train_fn=None) -> list[dict]:
    """Train and evaluate one model per flag combination; one row per combination."""
    out = Path(out_dir) if out_dir is not None else cfg.output_dir() / "ablate"
    flag_sets = parse_flag_sets(cfg.ablate_flags) if flag_sets is None else flag_sets
    train_fn = train_fn or cmd_train
    rows = []
    base = cfg.replace(**{f: False for f in FLAGS})
    for flags in flag_sets:
        run_cfg = base.replace(**{f: True for f in flags})
        name = "+".join(flags) or "full"
        result = train_fn(run_cfg, out / name)
        seeds = eval_seeds(run_cfg)
        samples = load_samples(run_cfg, seeds, style_null_rate=0.0)
        outputs = generate(result.model, run_cfg, samples)
        rep = evaluate(outputs, samples)
        two = [i for i, s in enumerate(samples) if s.n_garments >= 2]
        two_acc = float(np.mean([garment_assignment_acc(outputs[i], samples[i]) for i in two])) if two else float("nan")
        row = json.loads(rep.to_record(flags=name, config_hash=run_cfg.hash(), two_garment_acc=two_acc))
        rows.append(row)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.jsonl").write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    return rows
