"""Command-line entry point: ``gmmgan {trajectory,heatmap,theorem1,plot}``.

Exit status is 0 on success, 2 for an invalid configuration and 3 when a file
cannot be read or written.
"""

from __future__ import annotations

import argparse
import sys

from ..dynamics import Variant
from ..errors import InvalidConfig, UnknownFigure
from . import io, svg
from .experiments import HeatmapConfig, reproduce_trajectory, run_heatmap, theorem1_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

FIGURE_CHOICES = ["1a", "1b", "1c", "1d", "3"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gmmgan", description="GAN dynamics on two-component Gaussian mixtures.")
    sub = p.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("trajectory", help="reproduce a figure trajectory as CSV")
    tr.add_argument("--figure", required=True, choices=FIGURE_CHOICES)
    tr.add_argument("--eta", type=float, help="step size for generator and discriminator")
    tr.add_argument("--iters", type=int, help="number of steps (0 keeps only the initial state)")
    tr.add_argument("--out", required=True)

    hm = sub.add_parser("heatmap", help="success probability over a grid of initialisations")
    hm.add_argument("--variant", default="optimal", choices=[v.value for v in Variant])
    hm.add_argument("--unroll-k", type=int, default=5)
    hm.add_argument("--grid-n", type=int, default=41)
    hm.add_argument("--grid-lo", type=float, default=-1.0)
    hm.add_argument("--grid-hi", type=float, default=1.0)
    hm.add_argument("--trials", type=int, default=120)
    hm.add_argument("--eta", type=float, default=0.3)
    hm.add_argument("--iters", type=int, default=3000)
    hm.add_argument("--success-tv", type=float, default=0.1)
    hm.add_argument("--disc-lo", type=float, default=-2.0)
    hm.add_argument("--disc-hi", type=float, default=2.0)
    hm.add_argument("--seed", type=int, default=0)
    hm.add_argument("--workers", type=int, default=1, help="process pool size (output is unaffected)")
    hm.add_argument("--out", required=True)

    th = sub.add_parser("theorem1", help="optimal-discriminator sweep over bounded, separated instances")
    th.add_argument("--runs", type=int, required=True)
    th.add_argument("--c", type=float, required=True)
    th.add_argument("--delta", type=float, required=True)
    th.add_argument("--seed", type=int, default=0)
    th.add_argument("--eta", type=float, default=0.01)
    th.add_argument("--max-iter", type=int, default=100_000)
    th.add_argument("--noise", type=float, default=1e-12)
    th.add_argument("--at-target", action="store_true", help="start every run at its target")
    th.add_argument("--workers", type=int, default=1)
    th.add_argument("--out", required=True)

    pl = sub.add_parser("plot", help="render a trajectory or heatmap CSV as SVG")
    pl.add_argument("--in", dest="inp", required=True)
    pl.add_argument("--out", required=True)
    return p


def _cmd_trajectory(args) -> None:
    overrides = {}
    if args.eta is not None:
        overrides["eta"] = args.eta
    if args.iters is not None:
        overrides["iterations"] = args.iters
    traj = reproduce_trajectory(args.figure, overrides)
    io.write_text(args.out, io.trajectory_to_csv(traj, traj.meta))


def _cmd_heatmap(args) -> None:
    cfg = HeatmapConfig(
        grid_lo=args.grid_lo,
        grid_hi=args.grid_hi,
        grid_n=args.grid_n,
        trials=args.trials,
        variant=args.variant,
        eta_g=args.eta,
        eta_d=args.eta,
        iterations=args.iters,
        unroll_k=args.unroll_k,
        success_tv=args.success_tv,
        disc_init_lo=args.disc_lo,
        disc_init_hi=args.disc_hi,
        seed=args.seed,
    )
    if args.workers < 1:
        raise InvalidConfig("--workers must be >= 1")
    result = run_heatmap(cfg, workers=args.workers)
    io.write_text(args.out, io.heatmap_to_csv(result, cfg.echo()))


def _cmd_theorem1(args) -> None:
    if args.runs < 1 or args.max_iter < 1 or args.workers < 1:
        raise InvalidConfig("--runs, --max-iter and --workers must be >= 1")
    summary = theorem1_sweep(
        args.runs,
        args.c,
        args.delta,
        seed=args.seed,
        eta=args.eta,
        max_iter=args.max_iter,
        noise=args.noise,
        init_at_target=args.at_target,
        workers=args.workers,
    )
    io.write_text(args.out, io.summary_to_json(summary))


def _cmd_plot(args) -> None:
    try:
        meta, cols = io.read_table(args.inp)
        text = svg.render(meta, cols)
    except (ValueError, KeyError, IndexError) as exc:
        raise OSError(f"cannot plot {args.inp}: {exc}") from exc
    io.write_text(args.out, text)


COMMANDS = {
    "trajectory": _cmd_trajectory,
    "heatmap": _cmd_heatmap,
    "theorem1": _cmd_theorem1,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (InvalidConfig, UnknownFigure) as exc:
        print(f"gmmgan: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"gmmgan: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
