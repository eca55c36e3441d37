"""Paired task evaluation of trained policies and the comparison report.

Task ``i`` is the environment reset with seed ``base_seed + i``, so two
checkpoints evaluated with the same base seed face identical layouts. The
report compares energy (decision steps) and time (simulated seconds) with a
Wilcoxon signed-rank test, Shapiro-Wilk on the paired differences, and
per-measure descriptives.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import Checkpoint, checkpoint_load
from .env import Event, env_reset, env_step
from .errors import DegenerateData, InsufficientData, MoseacError, PairingError
from .sac import SacAgent
from .stats import descriptives, shapiro_wilk, wilcoxon_signed_rank
from .svg import box_chart, line_chart

OUTCOMES = ("Goal", "Crash", "Timeout")
RECORD_FIELDS = ("task_seed", "outcome", "energy", "time", "return", "start_x", "start_y",
                 "goal_x", "goal_y", "obstacle_x", "obstacle_y")


@dataclass(frozen=True)
class EvalRecord:
    task_seed: int
    outcome: str
    energy: int
    time: float
    ret: float
    layout: tuple[float, ...] = ()

    def row(self) -> list[str]:
        return [str(self.task_seed), self.outcome, str(self.energy), repr(self.time),
                repr(self.ret), *(repr(float(v)) for v in self.layout)]


def rollout(ckpt: Checkpoint, task_seed: int) -> EvalRecord:
    cfg = ckpt.config
    env_cfg = cfg.env
    agent = SacAgent(ckpt.nets, cfg.sac_hyper, cfg.action_scale)
    state, obs = env_reset(env_cfg, task_seed)
    layout = state.layout()
    steps, sim_time, ret = 0, 0.0, 0.0
    outcome = "Timeout"
    while True:
        action = agent.act(obs, rng=None, deterministic=True)
        out = env_step(state, action, env_cfg)
        steps += 1
        sim_time += out.sim_time_elapsed
        ret += out.task_reward
        state, obs = out.state, out.observation
        if out.terminated:
            outcome = "Goal" if out.event is Event.GOAL else "Crash"
            break
        if out.truncated:
            break
    return EvalRecord(int(task_seed), outcome, steps, sim_time, ret, tuple(float(v) for v in layout))


def evaluate(checkpoint, n_tasks: int = 300, base_seed: int = 0, workers: int = 1) -> list[EvalRecord]:
    """Deterministic-policy rollouts on tasks ``base_seed .. base_seed + n_tasks - 1``."""
    if n_tasks < 1:
        raise InsufficientData("n_tasks must be at least 1")
    ckpt = checkpoint if isinstance(checkpoint, Checkpoint) else checkpoint_load(checkpoint)
    seeds = [base_seed + i for i in range(n_tasks)]
    if workers <= 1:
        records = [rollout(ckpt, s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda s: rollout(ckpt, s), seeds))
    return sorted(records, key=lambda r: r.task_seed)


def write_records(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in records:
            w.writerow(r.row())
    return path


def read_records(path) -> list[EvalRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames[:5]) != list(RECORD_FIELDS[:5]):
            raise MoseacError(f"{path}: not an evaluation CSV (header {reader.fieldnames})")
        for lineno, row in enumerate(reader, start=2):
            try:
                layout = tuple(float(row[k]) for k in RECORD_FIELDS[5:] if row.get(k) not in (None, ""))
                out.append(EvalRecord(int(row["task_seed"]), row["outcome"], int(row["energy"]),
                                      float(row["time"]), float(row["return"]), layout))
            except (KeyError, ValueError) as exc:
                raise MoseacError(f"{path}:{lineno}: malformed record ({exc})") from None
    return out


def summarize(records) -> dict:
    n = len(records)
    counts = {o: sum(r.outcome == o for r in records) for o in OUTCOMES}
    return {"n": n, **{o.lower(): c for o, c in counts.items()},
            "goal_rate": counts["Goal"] / n if n else float("nan"),
            "mean_energy": float(np.mean([r.energy for r in records])) if n else float("nan"),
            "mean_time": float(np.mean([r.time for r in records])) if n else float("nan")}


def check_pairing(records_a, records_b) -> None:
    if len(records_a) != len(records_b):
        raise PairingError(f"runs have {len(records_a)} and {len(records_b)} tasks")
    for a, b in zip(records_a, records_b):
        if a.task_seed != b.task_seed:
            raise PairingError(f"task seeds differ ({a.task_seed} vs {b.task_seed}); "
                               "runs were not evaluated on the same tasks")
        if a.layout and b.layout and a.layout != b.layout:
            raise PairingError(f"task {a.task_seed}: layouts differ between runs")


# --- report tables ----------------------------------------------------------

def _f3(v):
    return "n/a" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.3f}"


def _p(v):
    return "< .001" if v < 0.001 else f"{v:.3f}"


def _table(header, rows, align):
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join(":---" if a == "l" else "---:" for a in align) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines)


def report_tables(records_a, records_b, labels=("A", "B")) -> dict[str, str]:
    """Markdown for the paired test, normality and descriptives tables."""
    la, lb = labels
    measures = (("Energy Cost", "energy"), ("Time Cost", "time"))
    paired_rows, normal_rows, desc_rows = [], [], []
    for title, key in measures:
        xa = np.array([getattr(r, key) for r in records_a], dtype=float)
        xb = np.array([getattr(r, key) for r in records_b], dtype=float)
        m1, m2 = f"{la} {title}", f"{lb} {title}"
        try:
            res = wilcoxon_signed_rank(xa, xb)
            paired_rows.append([m1, "-", m2, _f3(res.W), _f3(res.z), _p(res.p)])
        except DegenerateData:
            paired_rows.append([m1, "-", m2, "n/a", "n/a", "n/a (all differences zero)"])
        except InsufficientData as exc:
            paired_rows.append([m1, "-", m2, "n/a", "n/a", f"n/a ({exc})"])
        try:
            w, p = shapiro_wilk(xa - xb)
            normal_rows.append([m1, "-", m2, _f3(w), _p(p)])
        except (DegenerateData, InsufficientData):
            normal_rows.append([m1, "-", m2, "n/a", "n/a (constant differences)"])
    for title, key in measures:
        for lab, recs in ((la, records_a), (lb, records_b)):
            d = descriptives([getattr(r, key) for r in recs])
            desc_rows.append([f"{lab} {title}", str(d.n), _f3(d.mean), _f3(d.sd), _f3(d.se),
                              _f3(d.cov)])
    return {
        "paired": _table(["Measure 1", "", "Measure 2", "W", "z", "p"], paired_rows, "lllrrr"),
        "normality": _table(["", "", "", "W", "p"], normal_rows, "lllrr"),
        "descriptives": _table(["", "N", "Mean", "SD", "SE", "Coefficient of variation"],
                               desc_rows, "lrrrrr"),
    }


def compare_report(records_a, records_b, out_dir, labels=("A", "B")) -> dict[str, Path]:
    """Write ``paired.csv``, ``report.md`` and SVG summaries; refuses unpaired runs."""
    check_pairing(records_a, records_b)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    la, lb = labels
    paths = {}

    paths["paired"] = out / "paired.csv"
    with open(paths["paired"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["task_seed", "a_energy", "b_energy", "a_time", "b_time", "a_outcome", "b_outcome"])
        for a, b in zip(records_a, records_b):
            w.writerow([a.task_seed, a.energy, b.energy, repr(a.time), repr(b.time), a.outcome,
                        b.outcome])

    t = report_tables(records_a, records_b, labels)
    sa, sb = summarize(records_a), summarize(records_b)
    text = [f"# {la} vs {lb}: paired evaluation on {len(records_a)} tasks", "",
            f"Goal rate: {la} {sa['goal_rate']:.3f}, {lb} {sb['goal_rate']:.3f}", "",
            "## Paired samples test (Wilcoxon signed-rank)", "", t["paired"], "",
            "## Test of normality (Shapiro-Wilk) on paired differences", "", t["normality"], "",
            "## Descriptives", "", t["descriptives"], "",
            "Zero differences are dropped before ranking; p is one-sided in the observed "
            "direction (exact enumeration for n <= 12, otherwise tie- and continuity-corrected "
            "normal approximation). Energy is the number of decision steps; time is simulated "
            "seconds.", ""]
    paths["report"] = out / "report.md"
    paths["report"].write_text("\n".join(text))

    seeds = [r.task_seed for r in records_a]
    for key, unit in (("energy", "steps"), ("time", "seconds")):
        svg = line_chart([(la, seeds, [getattr(r, key) for r in records_a]),
                          (lb, seeds, [getattr(r, key) for r in records_b])],
                         title=f"{key.capitalize()} cost per task", xlabel="task seed",
                         ylabel=unit)
        paths[f"{key}_svg"] = out / f"{key}.svg"
        paths[f"{key}_svg"].write_text(svg)
    box = box_chart([(f"{la} energy", [r.energy for r in records_a]),
                     (f"{lb} energy", [r.energy for r in records_b])],
                    title="Energy cost distribution", ylabel="steps")
    paths["box_svg"] = out / "energy_box.svg"
    paths["box_svg"].write_text(box)
    box = box_chart([(f"{la} time", [r.time for r in records_a]),
                     (f"{lb} time", [r.time for r in records_b])],
                    title="Time cost distribution", ylabel="seconds")
    paths["time_box_svg"] = out / "time_box.svg"
    paths["time_box_svg"].write_text(box)
    return paths
