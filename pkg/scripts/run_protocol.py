"""Paired evaluation of two checkpoints on shared task seeds, with the report.

    python3 scripts/run_protocol.py A.ckpt B.ckpt --labels MOSEAC,SAC --out results/protocol
"""

import argparse
import time
from pathlib import Path

from moseac.evaluation import check_pairing, compare_report, evaluate, summarize, write_records


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("checkpoint_a")
    ap.add_argument("checkpoint_b")
    ap.add_argument("--tasks", type=int, default=300)
    ap.add_argument("--base-seed", type=int, default=0)
    ap.add_argument("--labels", default="A,B")
    ap.add_argument("--out", default="results/protocol")
    args = ap.parse_args(argv)

    out = Path(args.out)
    labels = tuple(args.labels.split(","))
    t0 = time.time()
    ra = evaluate(args.checkpoint_a, args.tasks, args.base_seed)
    rb = evaluate(args.checkpoint_b, args.tasks, args.base_seed)
    check_pairing(ra, rb)
    write_records(ra, out / "eval_a.csv")
    write_records(rb, out / "eval_b.csv")
    paths = compare_report(ra, rb, out, labels)
    for lab, recs in zip(labels, (ra, rb)):
        s = summarize(recs)
        print(f"{lab}: goal rate {s['goal_rate']:.3f}, mean energy {s['mean_energy']:.2f}, "
              f"mean time {s['mean_time']:.3f} s")
    print(f"{paths['report']} ({time.time() - t0:.0f} s)")
    return paths


if __name__ == "__main__":
    main()
