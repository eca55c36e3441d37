import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from moseac.checkpoint import checkpoint_load, checkpoint_save
from moseac.config import RunConfig
from moseac.errors import MoseacError, PairingError
from moseac.evaluation import EvalRecord, check_pairing, compare_report, evaluate, read_records, \
    report_tables, summarize, write_records
from moseac.reward import RewardParams
from moseac.sac import make_nets
from moseac.svg import box_chart, line_chart, moving_average

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def ckpts(tmp_path_factory):
    d = tmp_path_factory.mktemp("ck")
    cfg = RunConfig(net_shape=(8, 8), max_steps=40)
    a = checkpoint_save(make_nets(11, (8, 8), 1), cfg, RewardParams(), 0, d / "a.ckpt")
    b = checkpoint_save(make_nets(11, (8, 8), 2), cfg.replace(variant="sac", fixed_dt=1 / 60),
                        RewardParams(), 0, d / "b.ckpt")
    return a, b


def fake(seed, energy, time, outcome="Goal", layout=(0.1, 0.2, 1.0, 1.0, 1.5, 0.5)):
    return EvalRecord(seed, outcome, energy, time, 0.0, layout)


def test_evaluate_is_deterministic_and_paired(ckpts):
    a, b = ckpts
    ra = evaluate(a, n_tasks=6, base_seed=10)
    assert [r.task_seed for r in ra] == list(range(10, 16))
    assert ra == evaluate(checkpoint_load(a), n_tasks=6, base_seed=10, workers=2)
    rb = evaluate(b, n_tasks=6, base_seed=10)
    check_pairing(ra, rb)
    for r in ra + rb:
        assert r.outcome in ("Goal", "Crash", "Timeout")
        assert 1 <= r.energy <= 40
    # the fixed-duration policy spends exactly 1/60 s per decision unless an event cuts it short
    for r in rb:
        if r.outcome == "Timeout":
            assert r.time == pytest.approx(r.energy / 60)


def test_records_round_trip(tmp_path):
    recs = [fake(i, 10 + i, 1.5 * i) for i in range(4)]
    assert read_records(write_records(recs, tmp_path / "e.csv")) == recs


def test_malformed_records_report_line(tmp_path):
    p = tmp_path / "bad.csv"
    write_records([fake(0, 3, 1.0), fake(1, 4, 2.0)], p)
    lines = p.read_text().splitlines()
    lines[2] = lines[2].replace(",4,", ",four,")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(MoseacError, match=":3:"):
        read_records(p)


def test_pairing_errors():
    a = [fake(0, 3, 1.0), fake(1, 3, 1.0)]
    with pytest.raises(PairingError):
        check_pairing(a, a[:1])
    with pytest.raises(PairingError):
        check_pairing(a, [fake(0, 3, 1.0), fake(2, 3, 1.0)])
    with pytest.raises(PairingError):
        check_pairing(a, [fake(0, 3, 1.0), fake(1, 3, 1.0, layout=(0.0,) * 6)])


def test_summary():
    s = summarize([fake(0, 2, 1.0), fake(1, 4, 3.0, "Crash"), fake(2, 6, 2.0, "Timeout"),
                   fake(3, 8, 2.0)])
    assert (s["goal"], s["crash"], s["timeout"], s["goal_rate"]) == (2, 1, 1, 0.5)
    assert (s["mean_energy"], s["mean_time"]) == (5.0, 2.0)


def test_report_tables_shape():
    rng = np.random.default_rng(0)
    a = [fake(i, int(rng.integers(2, 6)), float(rng.uniform(1, 2))) for i in range(40)]
    b = [fake(i, int(rng.integers(4, 9)), float(rng.uniform(1.5, 3))) for i in range(40)]
    t = report_tables(a, b, ("MOSEAC", "SAC"))
    paired = t["paired"].splitlines()
    assert paired[0] == "| Measure 1 |  | Measure 2 | W | z | p |"
    assert paired[2].startswith("| MOSEAC Energy Cost | - | SAC Energy Cost |")
    assert len(paired) == 4 and len(t["normality"].splitlines()) == 4
    desc = t["descriptives"].splitlines()
    assert len(desc) == 6 and desc[2].startswith("| MOSEAC Energy Cost | 40 |")


def test_report_handles_identical_runs():
    a = [fake(i, 3, 1.0) for i in range(10)]
    t = report_tables(a, a)
    assert "all differences zero" in t["paired"]


def test_compare_report_files(tmp_path):
    a = [fake(i, 3 + i % 3, 1.0 + 0.1 * i) for i in range(20)]
    b = [fake(i, 5 + i % 4, 1.5 + 0.1 * i) for i in range(20)]
    paths = compare_report(a, b, tmp_path, ("A", "B"))
    with open(paths["paired"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20 and rows[0]["a_energy"] == "3"
    text = paths["report"].read_text()
    assert text.count("| Measure 1 |") == 1 and "Shapiro-Wilk" in text
    for key in ("energy_svg", "time_svg", "box_svg", "time_box_svg"):
        ET.fromstring(paths[key].read_text())


def test_moving_average():
    np.testing.assert_allclose(moving_average([1, 2, 3, 4], 2), [1.5, 2.5, 3.5])
    np.testing.assert_allclose(moving_average([1, 2, 3], 10), [2.0])
    assert moving_average([], 5).size == 0


def test_svg_structure():
    root = ET.fromstring(line_chart([("run a", [0, 1, 2], [1, 3, 2]), ("run b", [0, 2], [0, 1])],
                                    title="t", xlabel="x", ylabel="y"))
    assert len(root.findall(f".//{SVG}polyline[@class='series']")) == 2
    assert [t.text for t in root.findall(f".//{SVG}text[@class='legend']")] == ["run a", "run b"]
    box = ET.fromstring(box_chart([("a", [1, 2, 3, 4, 50]), ("b", [2, 2, 2])]))
    assert len(box.findall(f".//{SVG}rect[@class='box']")) == 2
    ET.fromstring(line_chart([("empty", [], [])], title="none"))
