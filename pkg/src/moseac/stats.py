"""Paired nonparametric statistics for comparing two policies task by task."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np
from scipy.stats import rankdata

from .errors import ContractError, DegenerateData, InsufficientData

EXACT_MAX_N = 12
_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class PairedResult:
    W: float
    z: float
    p: float
    n_effective: int
    w_plus: float
    w_minus: float
    direction: str      # "x<y", "x>y" or "none"
    method: str         # "exact" or "normal"
    two_sided: bool = False


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def signed_rank_null(ranks) -> np.ndarray:
    """W+ for every one of the ``2^n`` sign assignments of ``ranks``."""
    ranks = np.asarray(ranks, dtype=np.float64)
    n = len(ranks)
    if n > 20:
        raise ContractError(f"full enumeration of 2^{n} sign patterns refused")
    codes = np.arange(2 ** n, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(n)) & 1
    return bits @ ranks


def wilcoxon_signed_rank(x, y, two_sided: bool = False, method: str = "auto") -> PairedResult:
    """Wilcoxon signed-rank test on ``d = x - y`` with zero differences dropped.

    ``W = min(W+, W-)``. The default p is one-sided in the observed direction,
    ``P(T <= W)`` under the null; ``two_sided`` doubles it (capped at 1).
    ``method`` is ``"exact"`` (enumeration, n <= 20), ``"normal"`` (tie- and
    continuity-corrected), or ``"auto"`` (exact up to n = 12).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError(f"paired samples must be equal-length vectors, got {x.shape}, {y.shape}")
    d = x - y
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise DegenerateData("all paired differences are zero")
    if n < 5:
        raise InsufficientData(f"only {n} non-zero differences; need at least 5")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    direction = "x<y" if w_plus < w_minus else ("x>y" if w_plus > w_minus else "none")

    mean = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(counts ** 3 - counts)) / 48.0
    z = (w - mean + 0.5) / math.sqrt(var)

    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        null = signed_rank_null(ranks)
        p = float(np.count_nonzero(null <= w + 1e-9)) / len(null)
    elif method == "normal":
        p = _norm_cdf(z)
    else:
        raise ContractError(f"unknown method {method!r}")
    if two_sided:
        p = 2.0 * p
    return PairedResult(w, z, min(p, 1.0), n, w_plus, w_minus, direction, method, two_sided)


# --- Shapiro-Wilk (Royston 1995, algorithm AS R94) ------------------------

def _poly(coeffs, x):
    result = 0.0
    for c in reversed(coeffs):
        result = result * x + c
    return result


_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def shapiro_wilk_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights for the sorted sample, length ``n``, unit norm."""
    if n < 3:
        raise InsufficientData("Shapiro-Wilk needs at least 3 observations")
    half = n // 2
    a = np.zeros(half)
    if n == 3:
        a[0] = math.sqrt(0.5)
    else:
        an25 = n + 0.25
        m = np.array([_STD_NORMAL.inv_cdf((i - 0.375) / an25) for i in range(1, half + 1)])
        summ2 = 2.0 * float(m @ m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = _poly(_C1, rsn) - m[0] / ssumm2
        if n > 5:
            first = 2
            a2 = -m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2 - 2.0 * m[1] ** 2)
                            / (1.0 - 2.0 * a1 ** 2 - 2.0 * a2 ** 2))
            a[1] = a2
        else:
            first = 1
            fac = math.sqrt((summ2 - 2.0 * m[0] ** 2) / (1.0 - 2.0 * a1 ** 2))
        a[0] = a1
        a[first:] = -m[first:] / fac
    full = np.zeros(n)
    full[:half] = -a
    full[n - half:] = a[::-1]
    return full


def shapiro_wilk(sample) -> tuple[float, float]:
    """Shapiro-Wilk ``(W, p)`` for 3 <= n <= 5000."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    n = len(x)
    if n < 3:
        raise InsufficientData("Shapiro-Wilk needs at least 3 observations")
    if n > 5000:
        raise ContractError("Shapiro-Wilk p-values are only calibrated up to n = 5000")
    rng_ = x[-1] - x[0]
    if rng_ < 1e-19 * max(1.0, abs(x[0])):
        raise DegenerateData("sample is constant")
    a = shapiro_wilk_coefficients(n)
    xs = x / rng_
    xs = xs - xs.mean()
    aa = a - a.mean()
    ssa, ssx, sax = float(aa @ aa), float(xs @ xs), float(aa @ xs)
    root = math.sqrt(ssa * ssx)
    w1 = (root - sax) * (root + sax) / (ssa * ssx)
    w = 1.0 - w1
    if n == 3:
        p = 1.90985931710274 * (math.asin(math.sqrt(w)) - 1.04719755119660)
        return w, max(p, 0.0)
    y = math.log(w1)
    lxx = math.log(n)
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return w, 1e-99
        y = -math.log(gamma - y)
        mean, sd = _poly(_C3, n), math.exp(_poly(_C4, n))
    else:
        mean, sd = _poly(_C5, lxx), math.exp(_poly(_C6, lxx))
    return w, _norm_cdf(-(y - mean) / sd)


# --- descriptives -----------------------------------------------------------

@dataclass(frozen=True)
class Descriptives:
    n: int
    mean: float
    sd: float
    se: float
    cov: float | None


def descriptives(samples) -> Descriptives:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1 or len(x) < 2:
        raise InsufficientData("descriptives need at least 2 observations")
    n = len(x)
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    cov = None if mean == 0 else sd / mean
    return Descriptives(n, mean, sd, sd / math.sqrt(n), cov)
