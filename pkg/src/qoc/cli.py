"""Command-line interface.

    qoc train --env cartpole --variant hybrid_f --seeds 5 --steps 60000 --out runs/
    qoc summarize --in runs/
    qoc plot --in runs/ --out curves.svg
    qoc gradcheck

train executes one multi-seed experiment (seeds 0..K-1). summarize prints
mean/SD episode reward per run and the ratio to the classical baseline.
plot renders every aggregate curve under a directory into one SVG.
gradcheck cross-validates the circuit gradients and exits nonzero on any
tolerance failure. QOC_WORKERS sets the number of seed worker processes.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import expkit
from .trainer import TrainConfig


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qoc", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="run a multi-seed training experiment")
    tr.add_argument("--env", required=True, choices=("cartpole", "acrobot"))
    tr.add_argument("--variant", required=True, choices=expkit.VARIANT_CHOICES)
    tr.add_argument("--options", type=int, default=2, metavar="N")
    tr.add_argument("--seeds", type=int, default=5, metavar="K", help="runs seeds 0..K-1")
    tr.add_argument("--steps", type=int, default=100_000, metavar="N")
    tr.add_argument("--out", required=True, type=Path, metavar="DIR")
    tr.add_argument("--fe-width", type=int, default=8, metavar="W",
                    help="classical feature-extractor hidden width")
    tr.add_argument("--depth-delta", type=int, default=0, metavar="D",
                    help="adjust the quantum feature extractor's layer count")
    tr.add_argument("--no-scaling", action="store_true",
                    help="fix the circuit input scalings at 1")
    tr.add_argument("--no-entangle", action="store_true",
                    help="drop the CNOT rings from every circuit")
    tr.add_argument("--window", type=int, default=2000,
                    help="trailing smoothing window (steps)")
    tr.add_argument("--checkpoint-every", type=int, default=None, metavar="N")

    su = sub.add_parser("summarize", help="tabulate runs against the classical baseline")
    su.add_argument("--in", dest="in_dir", required=True, type=Path, metavar="DIR")

    pl = sub.add_parser("plot", help="render aggregate curves to SVG")
    pl.add_argument("--in", dest="in_dir", required=True, type=Path, metavar="DIR")
    pl.add_argument("--out", required=True, type=Path, metavar="FILE.svg")

    gc = sub.add_parser("gradcheck", help="run the gradient cross-check suites")
    gc.add_argument("--circuits", type=int, default=100)
    gc.add_argument("--composed", type=int, default=20)
    gc.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_train(args) -> int:
    config = expkit.RunConfig(
        env=args.env,
        variant=args.variant,
        n_options=args.options,
        fe_width=args.fe_width,
        depth_delta=args.depth_delta,
        scaling=not args.no_scaling,
        entangling=not args.no_entangle,
        train=TrainConfig(total_steps=args.steps),
        seeds=tuple(range(args.seeds)),
        out_dir=args.out,
        smooth_window=args.window,
        checkpoint_every=args.checkpoint_every,
    )
    result = expkit.run_experiment(config)
    print(f"run: {config.run_name()} -> {result.directory}")
    for sr, end in zip(result.seed_results, result.end_values()):
        n_ep = len(sr.episodes)
        print(f"  seed {sr.seed}: {n_ep} episodes, end smoothed return {end:.2f}")
    return 0


def _cmd_summarize(args) -> int:
    rows = expkit.summarize(args.in_dir)
    width = max(len(r.label) for r in rows)
    print(f"{'run':<{width}}  {'mean':>10}  {'sd':>10}  {'relative':>8}")
    for r in rows:
        print(f"{r.label:<{width}}  {r.mean:>10.2f}  {r.sd:>10.2f}  {r.relative:>7.2f}x")
    return 0


def _cmd_plot(args) -> int:
    curves = []
    for run_dir in sorted(Path(args.in_dir).iterdir()):
        agg = run_dir / "aggregate.csv"
        if not agg.is_file():
            continue
        manifest = json.loads((run_dir / "manifest.json").read_text())
        curves.append((manifest["run_name"], expkit.read_curve_csv(agg)))
    if not curves:
        print(f"no aggregate curves under {args.in_dir}", file=sys.stderr)
        return 1
    expkit.render_svg(curves, args.out, title=str(args.in_dir))
    print(f"wrote {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    ok, lines = expkit.gradcheck_report(args.circuits, args.composed, args.seed)
    print("\n".join(lines))
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "summarize": _cmd_summarize,
        "plot": _cmd_plot,
        "gradcheck": _cmd_gradcheck,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
