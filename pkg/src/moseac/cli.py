"""Command-line entry point: ``moseac {train,eval,compare,env-trace,plot}``.

Verbosity follows ``MOSEAC_LOG`` (``error``, ``info`` or ``debug``).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config
from .env import run_trace
from .errors import MoseacError
from .evaluation import compare_report, evaluate, read_records, summarize, write_records
from .svg import line_chart, moving_average
from .train import METRICS_HEADER, train

log = logging.getLogger("moseac")


# --- training curves ---------------------------------------------------------

def read_metrics(path) -> dict[str, np.ndarray]:
    """Columns of a metrics CSV; malformed rows are reported by line number."""
    cols = METRICS_HEADER.split(",")
    data: dict[str, list] = {c: [] for c in cols}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != cols:
            raise MoseacError(f"{path}:1: unexpected metrics header {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(cols):
                raise MoseacError(f"{path}:{lineno}: expected {len(cols)} fields, got {len(row)}")
            for c, v in zip(cols, row):
                try:
                    data[c].append(float(v) if v != "" else np.nan)
                except ValueError:
                    raise MoseacError(f"{path}:{lineno}: column {c!r} is not numeric: {v!r}") from None
    return {c: np.asarray(v) for c, v in data.items()}


def plot_curves(metrics_csvs, out_svg, window: int = 100, labels=None) -> list[Path]:
    """Episode return and episode steps against global step, one curve per run.

    Writes ``out_svg`` (returns) and a sibling ``*_steps.svg`` (energy).
    """
    if isinstance(metrics_csvs, (str, Path)):
        metrics_csvs = [metrics_csvs]
    labels = labels or [Path(p).parent.name or Path(p).stem for p in metrics_csvs]
    runs = [read_metrics(p) for p in metrics_csvs]
    out_svg = Path(out_svg)
    outputs = []
    for column, suffix, ylabel in (("ep_return", "", "episode return"),
                                   ("ep_steps", "_steps", "episode steps (energy)")):
        series = []
        for lab, m in zip(labels, runs):
            ys = moving_average(m[column], window)
            xs = m["global_step"][len(m["global_step"]) - len(ys):] if len(ys) else []
            series.append((lab, xs, ys))
        path = out_svg if not suffix else out_svg.with_name(out_svg.stem + suffix + out_svg.suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(line_chart(series, title=f"{ylabel} (moving average, {window} episodes)",
                                   xlabel="environment steps", ylabel=ylabel))
        outputs.append(path)
    return outputs


# --- subcommands --------------------------------------------------------------

def _load_config(args) -> RunConfig:
    cfg = parse_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "variant", None):
        changes["variant"] = args.variant
    if getattr(args, "fixed_dt", None) is not None:
        changes["fixed_dt"] = args.fixed_dt
    return cfg.replace(**changes) if changes else cfg


def cmd_train(args) -> int:
    cfg = _load_config(args)
    result = train(cfg, args.out, progress_every=args.progress)
    print(f"trained {result.global_step} steps, {result.episodes} episodes, "
          f"{result.n_updates} updates; alpha_m = {result.params.alpha_m!r}; run dir {result.out_dir}")
    return 0


def cmd_eval(args) -> int:
    records = evaluate(args.checkpoint, n_tasks=args.tasks, base_seed=args.seed or 0,
                       workers=args.workers)
    path = write_records(records, Path(args.out) / "eval.csv")
    s = summarize(records)
    print(f"{s['n']} tasks: goal rate {s['goal_rate']:.3f}, crash {s['crash']}, timeout "
          f"{s['timeout']}, mean energy {s['mean_energy']:.3f} steps, mean time "
          f"{s['mean_time']:.3f} s -> {path}")
    return 0


def cmd_compare(args) -> int:
    a, b = read_records(args.eval_a), read_records(args.eval_b)
    labels = tuple(args.labels.split(",")) if args.labels else ("A", "B")
    paths = compare_report(a, b, args.out, labels)
    print(f"report written to {paths['report']}")
    return 0


def _read_actions(path):
    actions = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(v) for v in line.replace(",", " ").split()]
        except ValueError:
            raise MoseacError(f"{path}:{lineno}: expected 'D Fx Fy'") from None
        if len(vals) != 3:
            raise MoseacError(f"{path}:{lineno}: expected 3 numbers, got {len(vals)}")
        actions.append(vals)
    return actions


def cmd_env_trace(args) -> int:
    cfg = _load_config(args)
    env_cfg = cfg.env
    if args.actions:
        actions = _read_actions(args.actions)
    else:
        actions = [[args.duration, args.force[0], args.force[1]]] * env_cfg.max_episode_steps
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "trace.csv"
    with open(path, "w") as fh:
        outcomes = run_trace(env_cfg, args.seed or 0, actions, fh)
    last = outcomes[-1] if outcomes else None
    print(f"{len(outcomes)} steps, final event {last.event.value if last else 'none'} -> {path}")
    return 0


def cmd_plot(args) -> int:
    out = Path(args.out)
    labels = args.labels.split(",") if args.labels else None
    paths = plot_curves(args.metrics, out / "curves.svg", window=args.window, labels=labels)
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moseac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", required=True, help="output directory")

    sp = sub.add_parser("train", help="train one agent")
    common(sp)
    sp.add_argument("--variant", choices=("moseac", "seac", "sac"))
    sp.add_argument("--fixed-dt", type=float, dest="fixed_dt", help="action duration for variant sac")
    sp.add_argument("--progress", type=int, default=0, help="log every N steps")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint on paired tasks")
    common(sp, config=False)
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--tasks", type=int, default=300)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("compare", help="paired statistics report from two eval CSVs")
    sp.add_argument("eval_a")
    sp.add_argument("eval_b")
    sp.add_argument("--out", required=True)
    sp.add_argument("--labels", help="comma-separated names for the two runs")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("env-trace", help="dump one scripted episode")
    common(sp)
    sp.add_argument("--actions", help="file with one 'D Fx Fy' action per line")
    sp.add_argument("--duration", type=float, default=0.1)
    sp.add_argument("--force", type=float, nargs=2, default=(100.0, 100.0))
    sp.set_defaults(func=cmd_env_trace)

    sp = sub.add_parser("plot", help="SVG training curves from metrics CSVs")
    sp.add_argument("metrics", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument("--window", type=int, default=100)
    sp.add_argument("--labels")
    sp.set_defaults(func=cmd_plot)
    return p


def dispatch(argv=None) -> int:
    level = os.environ.get("MOSEAC_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MoseacError, OSError) as exc:
        print(f"moseac {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
