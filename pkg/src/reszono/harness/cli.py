"""Command line entry point: ``reszono {run,sweep,snapshot,check}``.

Exit status is 0 only when every runtime invariant held (or, for ``check``,
when every assumption passed).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..errors import ReszonoError
from ..model import validate_assumptions
from .config import load_config, with_overrides
from .emit import emit_all, emit_svg_snapshot, load_jsonl
from .simulate import run_scenario

log = logging.getLogger("reszono")


def _seed_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return range(int(lo), int(lo) + 1)
        return range(int(lo), int(hi) + 1)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None


def _dims(text: str) -> tuple:
    try:
        i, j = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected I,J, got {text!r}") from None
    return i, j


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reszono", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p):
        p.add_argument("--config", required=True, help="scenario JSON (bundled names are resolved too)")
        p.add_argument("--steps", type=int)
        p.add_argument("--prune", help="none | drop_empty_and_contained | merge_intersecting | "
                                       "overbound_all | budget | budget(N)")
        p.add_argument("--max-sets", type=int, dest="max_sets", help="member budget (implies budget policy)")
        p.add_argument("--attack", help="override the attack policy kind")

    run = sub.add_parser("run", help="simulate one seed and write JSONL/CSV/summary")
    scenario_flags(run)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="output directory (default: the config's output.dir)")
    run.add_argument("--snapshots", default="", help="comma-separated steps to render as SVG")

    sweep = sub.add_parser("sweep", help="run a seed range and aggregate inclusion rates")
    scenario_flags(sweep)
    sweep.add_argument("--seeds", type=_seed_range, required=True, help="inclusive range A..B")
    sweep.add_argument("--jobs", type=int, default=1)

    snap = sub.add_parser("snapshot", help="render one step of a JSONL report as SVG")
    snap.add_argument("--report", required=True)
    snap.add_argument("--k", type=int, required=True)
    snap.add_argument("--out", required=True)
    snap.add_argument("--dims", type=_dims, default=(0, 1))

    check = sub.add_parser("check", help="print the assumption report only")
    check.add_argument("--config", required=True)
    return parser


def _configure(args, seed=None):
    cfg = load_config(args.config)
    attack = {"kind": args.attack} if getattr(args, "attack", None) else None
    if any(v is not None for v in (seed, args.steps, args.prune, args.max_sets, attack)):
        cfg = with_overrides(cfg, seed=seed, steps=args.steps, prune=args.prune,
                             max_members=args.max_sets, attack=attack)
    return cfg


def _run_one(payload):
    args, seed = payload
    report = run_scenario(_configure(args, seed))
    return report.summary()


def cmd_run(args) -> int:
    cfg = _configure(args, args.seed)
    report = run_scenario(cfg)
    out = Path(args.out or cfg.output_dir)
    snaps = [int(s) for s in args.snapshots.split(",") if s.strip()]
    paths = emit_all(report, out, snaps, dims=cfg.plot_dims)
    summary = report.summary()
    print(json.dumps(summary, indent=2))
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0 if report.invariants_ok else 1


def cmd_sweep(args) -> int:
    payloads = [(args, seed) for seed in args.seeds]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_run_one, payloads))
    else:
        summaries = [_run_one(p) for p in payloads]
    total_steps = sum(s["steps"] for s in summaries)
    included = sum(s["inclusion_rate"] * s["steps"] for s in summaries)
    bad = [s["seed"] for s in summaries if not s["invariants_ok"]]
    print(f"seeds {args.seeds.start}..{args.seeds.stop - 1}: {len(summaries)} runs, {total_steps} steps")
    print(f"inclusion rate {included / max(total_steps, 1):.6f}")
    print(f"max members {max(s['max_members'] for s in summaries)}")
    print("all invariants held" if not bad else f"invariant failures for seeds {bad}")
    return 0 if not bad else 1


def cmd_snapshot(args) -> int:
    emit_svg_snapshot(load_jsonl(args.report), args.k, args.out, dims=args.dims)
    print(f"wrote {args.out}")
    return 0


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = validate_assumptions(cfg.system, cfg.q)
    for line in report.lines():
        print(line)
    print(f"state bound source: {cfg.state_bound_source}")
    print("all assumptions hold" if report.ok else "assumption failures: " + "; ".join(report.failures))
    return 0 if report.ok else 1


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ZS_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "snapshot": cmd_snapshot, "check": cmd_check}
    try:
        return handlers[args.command](args)
    except ReszonoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


cli = main

if __name__ == "__main__":
    sys.exit(main())
