"""Command-line entry point for training, evaluation, and tracing."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import FLAT, RANDOMIZED, load_config
from .env import Mode
from .errors import CheckpointError, ConfigError, ContractViolationError
from .evaluation import (Policy, SweepSpec, ZeroPolicy, ablation_suite,
                         eval_episode_lengths, record_grf, record_phase_trace,
                         rollout_trace)
from .training import train_phase

MODES = {"forward": Mode.FORWARD, "inplace": Mode.INPLACE, "standing": Mode.STANDING}


def _add_common(parser):
    parser.add_argument("--config", type=Path, default=None,
                        help="TOML config file (defaults used if omitted)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("runs/out"),
                        help="output directory")


def _load(args):
    cfg = load_config(args.config)
    cfg.train.seed = args.seed
    return cfg


def _policy(path, fallback_dim: int = 6):
    if path is None:
        return ZeroPolicy(fallback_dim)
    return Policy.from_checkpoint(path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planarwalk",
        description="Planar biped locomotion: training and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="phase 1: flat-floor pretraining")
    _add_common(p)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--clock-control", action="store_true",
                   help="enable the clock-offset action channel")

    p = sub.add_parser("finetune", help="phase 2: terrain-randomized finetune")
    _add_common(p)
    p.add_argument("--from", dest="from_ckpt", type=Path, required=True,
                   help="phase-1 checkpoint to start from")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--clock-control", action="store_true")

    p = sub.add_parser("eval-sweep", help="episode-length sweep over heights")
    _add_common(p)
    p.add_argument("--heights", type=str, default="0.04,0.05,0.06,0.07",
                   help="comma-separated peak heights in meters")
    p.add_argument("--checkpoint", action="append", required=True,
                   metavar="NAME=PATH", help="policy checkpoint (repeatable)")
    p.add_argument("--episodes", type=int, default=100)

    p = sub.add_parser("ablation", help="four-variant terrain ablation grid")
    _add_common(p)
    for variant in ("flat-only", "uneven-rigid", "fixed-compliance",
                    "terrain-randomized"):
        p.add_argument(f"--{variant}", type=Path, default=None)
    p.add_argument("--episodes", type=int, default=20)

    p = sub.add_parser("trace-grf", help="record vertical GRF per foot")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--peak", type=float, default=0.02)
    p.add_argument("--mode", choices=sorted(MODES), default="inplace")

    p = sub.add_parser("trace-phase", help="record the phase variable")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--mode", choices=("forward", "inplace"), default="forward")
    p.add_argument("--reference", type=float, default=0.4)
    p.add_argument("--duration", type=float, default=20.0)

    p = sub.add_parser("rollout", help="dump one deterministic episode as CSV")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, default=None,
                   help="policy checkpoint (zero-action policy if omitted)")
    return parser


def _cmd_train(args) -> int:
    cfg = _load(args)
    if args.clock_control:
        cfg.env = dataclasses.replace(cfg.env, clock_control=True)
    iterations = args.iterations or cfg.train.phase1_iterations
    result = train_phase(cfg, FLAT, args.out, args.seed, iterations,
                         tag="phase1", log_cb=print)
    print(f"checkpoint: {result.checkpoint}")
    print(f"reward curve: {result.reward_csv}")
    return 0


def _cmd_finetune(args) -> int:
    cfg = _load(args)
    if args.clock_control:
        cfg.env = dataclasses.replace(cfg.env, clock_control=True)
    iterations = args.iterations or cfg.train.phase2_iterations
    result = train_phase(cfg, RANDOMIZED, args.out, args.seed, iterations,
                         from_checkpoint=args.from_ckpt, tag="phase2",
                         log_cb=print)
    print(f"checkpoint: {result.checkpoint}")
    print(f"reward curve: {result.reward_csv}")
    return 0


def _cmd_eval_sweep(args) -> int:
    cfg = _load(args)
    heights = tuple(float(h) for h in args.heights.split(",") if h)
    checkpoints = {}
    for item in args.checkpoint:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        checkpoints[name] = Path(path)
    spec = SweepSpec(checkpoints=checkpoints, heights=heights,
                     episodes_per_cell=args.episodes, seed_base=args.seed)
    out_csv = args.out / "sweep.csv"
    rows = eval_episode_lengths(spec, cfg, out_csv=out_csv)
    print(f"{'height':>8} {'policy':>20} {'mean_s':>8} {'se':>7} {'n':>5}")
    for row in rows:
        print(f"{row['height']:8.3f} {row['policy']:>20} "
              f"{row['mean_length_s']:8.3f} {row['stderr_s']:7.3f} "
              f"{row['episodes']:5d}")
    print(f"wrote {out_csv}")
    return 0


def _cmd_ablation(args) -> int:
    cfg = _load(args)
    checkpoints = {
        "flat_only": args.flat_only,
        "uneven_rigid": args.uneven_rigid,
        "fixed_compliance": args.fixed_compliance,
        "terrain_randomized": args.terrain_randomized,
    }
    out_csv = args.out / "ablation.csv"
    rows = ablation_suite(checkpoints, cfg, episodes=args.episodes,
                          seed_base=args.seed, out_csv=out_csv)
    for row in rows:
        mean = ("-" if row["mean_length_s"] is None
                else f"{row['mean_length_s']:.3f}")
        print(f"{row['variant']:>20} {row['cell']:>24} {mean:>8}")
    print(f"wrote {out_csv}")
    return 0


def _cmd_trace_grf(args) -> int:
    cfg = _load(args)
    policy = _policy(args.checkpoint)
    out_csv = args.out / "grf.csv"
    result = record_grf(cfg, policy, duration_s=args.duration,
                        terrain_peak=args.peak, seed=args.seed,
                        out_csv=out_csv, command=(MODES[args.mode], 0.0))
    print(json.dumps(result["summary"], indent=2))
    print(f"wrote {out_csv}")
    return 0


def _cmd_trace_phase(args) -> int:
    cfg = _load(args)
    policy = Policy.from_checkpoint(args.checkpoint)
    out_csv = args.out / "phase.csv"
    result = record_phase_trace(cfg, policy, MODES[args.mode],
                                duration_s=args.duration,
                                reference=args.reference, seed=args.seed,
                                out_csv=out_csv)
    print(json.dumps(result["summary"], indent=2))
    print(f"wrote {out_csv}")
    return 0


def _cmd_rollout(args) -> int:
    cfg = _load(args)
    fallback = 7 if cfg.env.clock_control else 6
    policy = _policy(args.checkpoint, fallback)
    out_csv = args.out / "rollout.csv"
    rows = rollout_trace(cfg, policy, seed=args.seed, out_csv=out_csv)
    last = rows[-1]
    print(f"episode: {len(rows)} steps, termination="
          f"{last['termination'] or 'timeout'}")
    print(f"wrote {out_csv}")
    return 0


COMMANDS = {
    "train": _cmd_train,
    "finetune": _cmd_finetune,
    "eval-sweep": _cmd_eval_sweep,
    "ablation": _cmd_ablation,
    "trace-grf": _cmd_trace_grf,
    "trace-phase": _cmd_trace_phase,
    "rollout": _cmd_rollout,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ContractViolationError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
