"""Command-line surface: sample | train | map | eval | oracle | plot.

Exit codes: 0 success, 2 usage error, 3 configuration validation error,
4 runtime failure. Diagnostics go to stderr; all outputs are
deterministic functions of (inputs, seed, config).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, SphereOtError
from .evaluation import BinGrid, coverage, dual_gap, tv_binned
from .geometry import PointCloud, unit_rows
from .icnn import load_checkpoint, save_checkpoint
from .oracle import cost_matrix, oracle_value, solve_assignment
from .pointfile import read_points, write_points
from .runconfig import parse_config, task_samplers, task_target_support
from .sot import transport_rows, wasserstein_estimate
from .svgplot import emit_plot
from .trainer import train


def _build_parser():
    parser = argparse.ArgumentParser(prog="sphereot",
                                     description="Spherical optimal transport maps")
    parser.add_argument("--version", action="version", version=f"sphereot {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="emit synthetic source/target clouds")
    p.add_argument("--config", help="run config file (task kinds synthetic-1/2)")
    p.add_argument("--task", choices=("synthetic-1", "synthetic-2"),
                   help="task kind shortcut when no config file is given")
    p.add_argument("--kappa", type=float, default=50.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="train the potential pair on a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override [output] dir")

    p = sub.add_parser("map", help="transport a point file through a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="renormalized mapped points")
    p.add_argument("--raw-out", help="also write raw (non-unit) mapped points")
    p.add_argument("--renormalize", action="store_true",
                   help="renormalize input rows outside tolerance")

    p = sub.add_parser("eval", help="metric table for a trained pair")
    p.add_argument("--config", required=True)
    p.add_argument("--f-ckpt", required=True)
    p.add_argument("--g-ckpt", required=True)
    p.add_argument("--n", type=int, default=10000, help="fresh sample size for coverage/tv")
    p.add_argument("--oracle-n", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("oracle", help="exact discrete transport between two point files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--matching", action="store_true", help="print the optimal matching")

    p = sub.add_parser("plot", help="SVG scatter of up to three clouds")
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--mapped")
    p.add_argument("--projection", choices=("mollweide", "vertical"), default="mollweide")
    p.add_argument("--meridian", type=float, default=0.0, help="central meridian (radians)")
    p.add_argument("--out", required=True)
    return parser


def _cmd_sample(args):
    if args.config:
        cfg = parse_config(args.config)
        kappa_note = cfg.config_hash
        src, tgt = task_samplers(cfg)
    else:
        if not args.task:
            raise ConfigError("either --config or --task is required")
        from .runconfig import RunConfig
        from .trainer import TrainConfig
        cfg = RunConfig(kind=args.task, train=TrainConfig(total_outer_iters=1),
                        kappa=args.kappa, config_hash="cli-args")
        kappa_note = cfg.config_hash
        src, tgt = task_samplers(cfg)
    os.makedirs(args.out, exist_ok=True)
    write_points(PointCloud(src(args.n, args.seed)), os.path.join(args.out, "source.pts"))
    write_points(PointCloud(tgt(args.n, args.seed + 1)), os.path.join(args.out, "target.pts"))
    print(f"config_hash={kappa_note}")
    print(f"wrote {args.out}/source.pts and {args.out}/target.pts (n={args.n})")
    return 0


def _cmd_train(args):
    cfg = parse_config(args.config)
    out_dir = args.out or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    tc = cfg.train
    tc.log_path = os.path.join(out_dir, "history.jsonl")
    tc.checkpoint_dir = out_dir
    if cfg.kind == "feature-align":
        x_cloud, _ = read_points(cfg.source_path, cfg.renormalize)
        y_cloud, _ = read_points(cfg.target_path, cfg.renormalize)
        pairs = (x_cloud.points, y_cloud.points)
        f, g, hist = train(None, None, pairs=pairs, cfg=tc)
    else:
        src, tgt = task_samplers(cfg)
        f, g, hist = train(src, tgt, cfg=tc)
    save_checkpoint(f, os.path.join(out_dir, "f.sotpot"), config_hash=cfg.config_hash,
                    iterations=tc.total_outer_iters)
    save_checkpoint(g, os.path.join(out_dir, "g.sotpot"), config_hash=cfg.config_hash,
                    iterations=tc.total_outer_iters)
    last = hist.records[-1]
    print(f"config_hash={cfg.config_hash}")
    print(f"iterations={last.iteration}")
    print(f"loss_f={last.loss_f:.6f}")
    print(f"dual_total={last.dual_total:.6f}")
    print(f"checkpoints={out_dir}/f.sotpot,{out_dir}/g.sotpot")
    return 0


def _cmd_map(args):
    pot = load_checkpoint(args.ckpt)
    cloud, n_fixed = read_points(args.infile, args.renormalize)
    if n_fixed:
        print(f"renormalized {n_fixed} rows", file=sys.stderr)
    raw, _, clamped = transport_rows(pot, cloud.points)
    write_points(PointCloud(unit_rows(raw)), args.out)
    if args.raw_out:
        n, dim = raw.shape
        with open(args.raw_out, "w") as fh:
            fh.write(f"SOTRAW1 {dim} {n}\n")
            for row in raw:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    print(f"mapped {len(cloud)} points (denominator clamps: {clamped})")
    return 0


def _cmd_eval(args):
    cfg = parse_config(args.config)
    f = load_checkpoint(args.f_ckpt)
    g = load_checkpoint(args.g_ckpt)
    if cfg.kind == "feature-align":
        x_cloud, _ = read_points(cfg.source_path, cfg.renormalize)
        y_cloud, _ = read_points(cfg.target_path, cfg.renormalize)
        x, y = x_cloud.points, y_cloud.points
        rng = np.random.default_rng(args.seed)
        idx = rng.choice(len(x), size=min(args.oracle_n, len(x)), replace=False)
        xo, yo = x[idx], y[idx]
    else:
        src, tgt = task_samplers(cfg)
        x, y = src(args.n, args.seed), tgt(args.n, args.seed + 1)
        xo, yo = src(args.oracle_n, args.seed + 2), tgt(args.oracle_n, args.seed + 3)
    raw, _, clamped = transport_rows(f, x)
    mapped = unit_rows(raw)
    support = task_target_support(cfg)
    cov = coverage(mapped, support if support is not None else y)
    tv = tv_binned(mapped, y) if x.shape[1] == 3 else float("nan")
    est = wasserstein_estimate(f, g, xo, yo)
    ov = oracle_value(xo, yo)
    print(f"config_hash={cfg.config_hash}")
    print(f"n_eval={len(x)}")
    print(f"coverage={cov:.6f}")
    print(f"tv_binned={tv:.6f}")
    print(f"dual_term_g={est.term_g:.6f}")
    print(f"dual_term_v={est.term_v:.6f}")
    print(f"dual_total={est.total:.6f}")
    print(f"oracle_value={ov:.6f}")
    print(f"dual_gap={ov - est.total:.6f}")
    print(f"clamp_count={clamped}")
    return 0


def _cmd_oracle(args):
    xc, _ = read_points(args.x)
    yc, _ = read_points(args.y)
    value = oracle_value(xc, yc)
    print(f"value={value:.12g}")
    if args.matching:
        assignment = solve_assignment(cost_matrix(xc, yc))
        for i, j in enumerate(assignment.permutation):
            print(f"{i} {j}")
    return 0


def _cmd_plot(args):
    clouds = {}
    for role, path in (("source", args.source), ("target", args.target),
                       ("mapped", args.mapped)):
        if path:
            cloud, _ = read_points(path, renormalize=True)
            clouds[role] = cloud
    emit_plot(clouds, args.projection, args.out, central_meridian=args.meridian)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "train": _cmd_train,
    "map": _cmd_map,
    "eval": _cmd_eval,
    "oracle": _cmd_oracle,
    "plot": _cmd_plot,
}


def run_cli(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except SphereOtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 4


def main():
    sys.exit(run_cli())
