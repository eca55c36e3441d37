"""Freeze reference Shapiro-Wilk statistics from SciPy into tests/data.

SciPy's Fortran routine is an implementation independent of ``moseac.stats``;
its outputs are stored once so the test suite compares against fixed numbers.
Run from the repository root:  python3 scripts/generate_shapiro_fixtures.py
"""

import json
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "shapiro_fixtures.json"


def main():
    rng = np.random.default_rng(20240607)
    cases = []
    draws = {
        "normal": lambda n: rng.normal(3.0, 2.0, n),
        "uniform": lambda n: rng.uniform(-1.0, 1.0, n),
        "exponential": lambda n: rng.exponential(1.0, n),
        "integers": lambda n: rng.integers(0, 12, n).astype(float),
    }
    for n in (3, 4, 5, 6, 7, 8, 10, 11, 12, 15, 20, 30, 50, 100, 300, 1000):
        for kind, draw in draws.items():
            x = draw(n)
            if np.ptp(x) == 0:
                continue
            w, p = stats.shapiro(x)
            cases.append({"kind": kind, "n": n, "sample": [float(v) for v in x],
                          "W": float(w), "p": float(p)})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"generator": "scipy.stats.shapiro", "scipy": scipy.__version__,
                               "cases": cases}, indent=1))
    print(f"{len(cases)} cases -> {OUT}")


if __name__ == "__main__":
    main()
