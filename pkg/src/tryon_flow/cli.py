"""Command-line entry point: ``tryon-flow train|sample|eval|bench|ablate|gendata``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import FLAGS, RunConfig, load_config
from .harness import (
    CHECKPOINT_NAME,
    cmd_ablate,
    cmd_bench,
    cmd_eval,
    cmd_sample,
    cmd_train,
)
from .synth import write_dataset

log = logging.getLogger("tryon_flow")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tryon-flow", description=__doc__)
    p.add_argument("command", choices=["train", "sample", "eval", "bench", "ablate", "gendata"])
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--checkpoint", type=Path, help="checkpoint to load (default: <out>/checkpoint.prmc)")
    p.add_argument("--seed", type=int, help="train: training seed; sample/eval/gendata: first data seed")
    p.add_argument("--count", type=int, help="number of seeds for sample/eval/gendata")
    p.add_argument("--mode", choices=["full", "cached"], help="sampler mode")
    p.add_argument("--null-style", action="store_true", help="sample/eval with the null prompt")
    p.add_argument("--resume", action="store_true", help="train: continue from the existing checkpoint")
    p.add_argument("--out", type=Path, help="output directory (PROMO_OUT takes precedence over the config)")
    for flag in FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), action="store_true", dest=flag)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {f: True for f in FLAGS if getattr(args, f)}
    if args.mode is not None:
        if args.mode == "cached" and (cfg.no_cache or args.no_cache):
            raise ValueError("--mode cached conflicts with no_cache")
        updates["sample_mode"] = args.mode
    if args.out is not None:
        updates["out_dir"] = str(args.out)
    if args.seed is not None and args.command == "train":
        updates["train_seed"] = args.seed
    return cfg.replace(**updates)


def _seeds(args, cfg: RunConfig, default_start: int, default_count: int) -> list[int]:
    start = default_start if args.seed is None else args.seed
    count = default_count if args.count is None else args.count
    return list(range(start, start + count))


def _emit(records, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [r if isinstance(r, str) else json.dumps(r, sort_keys=True) for r in records]
    path.write_text("".join(l + "\n" for l in lines))
    for l in lines:
        print(l)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    cfg = resolve_config(args)
    out = cfg.output_dir()
    ckpt = args.checkpoint or out / CHECKPOINT_NAME
    style = "null" if args.null_style else "sample"

    if args.command == "train":
        res = cmd_train(cfg, out, resume=args.resume, progress=lambda s, l: log.info("step %d loss %.4f", s, l))
        print(json.dumps({"checkpoint": str(res.checkpoint), "steps": len(res.losses), "config_hash": cfg.hash()}))
    elif args.command == "sample":
        seeds = _seeds(args, cfg, cfg.eval_seed_start, 8)
        cmd_sample(cfg, ckpt, seeds, out_dir=out / "samples", mode=cfg.mode, style=style)
        print(json.dumps({"samples": str(out / "samples"), "n": len(seeds), "config_hash": cfg.hash()}))
    elif args.command == "eval":
        seeds = _seeds(args, cfg, cfg.eval_seed_start, cfg.n_eval)
        rep = cmd_eval(cfg, ckpt, style=style, seeds=seeds)
        _emit([rep.to_record(config_hash=cfg.hash(), style=style, mode=cfg.mode)], out / f"eval_{style}.jsonl")
    elif args.command == "bench":
        _emit(cmd_bench(cfg, ckpt), out / "bench.jsonl")
    elif args.command == "ablate":
        rows = cmd_ablate(cfg, out / "ablate")
        for r in rows:
            print(json.dumps(r, sort_keys=True))
    elif args.command == "gendata":
        seeds = _seeds(args, cfg, cfg.data_seed_start, cfg.n_train)
        target = Path(cfg.dataset_dir) if cfg.dataset_dir else out / "dataset"
        paths = write_dataset(target, seeds, cfg.synth())
        print(json.dumps({"dataset": str(target), "n": len(paths)}))
    return 0


def main(argv=None) -> None:
    try:
        sys.exit(run(argv))
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(2)


if __name__ == "__main__":
    main()
