"""Desk-scale learning check: MOSEAC against a fixed 60 Hz SAC baseline.

For each seed both variants are trained for the same number of steps on the
default environment, then evaluated deterministically on the same tasks. A
seed passes when MOSEAC reaches the goal-rate threshold and takes fewer
decision steps per task on average than the baseline. The verdict needs a
majority of seeds. Finished runs are reused, so the script can be restarted.

    python3 scripts/run_desk_learning.py --out results/desk
"""

import argparse
import json
import logging
import time
from pathlib import Path

from moseac.config import RunConfig, parse_value
from moseac.evaluation import evaluate, summarize, write_records
from moseac.train import train

EVAL_BASE_SEED = 1_000_000


def run_one(cfg, run_dir, n_tasks, log):
    final = run_dir / "final.ckpt"
    if final.exists():
        log.info("reusing %s", final)
    else:
        t0 = time.time()
        train(cfg, run_dir, progress_every=10_000)
        log.info("trained %s in %.0f s", run_dir.name, time.time() - t0)
    records = evaluate(final, n_tasks=n_tasks, base_seed=EVAL_BASE_SEED)
    write_records(records, run_dir / "eval.csv")
    return summarize(records)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/desk")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--steps", type=int, default=300_000)
    ap.add_argument("--tasks", type=int, default=100)
    ap.add_argument("--goal-rate", type=float, default=0.7)
    ap.add_argument("--baseline-dt", type=float, default=1 / 60)
    ap.add_argument("--set", nargs="*", default=["precision=float32"], metavar="KEY=VALUE",
                    help="config overrides applied to both variants")
    args = ap.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    log = logging.getLogger("desk")
    overrides = {k: parse_value(k, v) for k, v in (kv.split("=", 1) for kv in args.set)}
    out = Path(args.out)
    seeds = []
    for seed in args.seeds:
        base = RunConfig(total_steps=args.steps, seed=seed, **overrides)
        variants = {"moseac": base,
                    "sac_fixed": base.replace(variant="sac", fixed_dt=args.baseline_dt)}
        summary = {name: run_one(cfg, out / f"{name}_seed{seed}", args.tasks, log)
                   for name, cfg in variants.items()}
        m, s = summary["moseac"], summary["sac_fixed"]
        passed = m["goal_rate"] >= args.goal_rate and m["mean_energy"] < s["mean_energy"]
        seeds.append({"seed": seed, "moseac": m, "sac_fixed": s, "pass": bool(passed)})
        log.info("seed %d: moseac goal %.2f energy %.1f | sac goal %.2f energy %.1f -> %s", seed,
                 m["goal_rate"], m["mean_energy"], s["goal_rate"], s["mean_energy"],
                 "pass" if passed else "fail")
    n_pass = sum(s["pass"] for s in seeds)
    result = {"steps": args.steps, "tasks": args.tasks, "goal_rate_threshold": args.goal_rate,
              "baseline_dt": args.baseline_dt, "overrides": args.set, "seeds": seeds,
              "n_pass": n_pass, "pass": n_pass >= len(seeds) // 2 + 1}
    (out / "results.json").write_text(json.dumps(result, indent=2))
    print(json.dumps({k: result[k] for k in ("n_pass", "pass")}))
    return result


if __name__ == "__main__":
    main()
