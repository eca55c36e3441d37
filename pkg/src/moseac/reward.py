"""Multiplicative reward composition and its self-adjusting weights.

The composed reward is ``alpha_m * R_t * (t_min / t) - alpha_eps``. ``alpha_m``
only ever grows, by ``psi`` each time the episode-average reward trend over an
adaptation window is negative, and ``alpha_eps`` is tied to it by a sigmoid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigError, ContractError, InsufficientData

log = logging.getLogger(__name__)


def epsilon_from_m(alpha_m: float) -> float:
    """Per-step penalty coupled to the reward gain; 0.1 at ``alpha_m = 1``."""
    if alpha_m < 0:
        raise ContractError(f"alpha_m must be non-negative, got {alpha_m}")
    # 0.2 * (1 - 1/(1 + exp(1 - m))) rewritten without the cancellation at large m
    if alpha_m - 1.0 > 700.0:
        return 0.0
    return 0.2 / (1.0 + math.exp(alpha_m - 1.0))


@dataclass(frozen=True)
class RewardParams:
    """Reward weights. ``alpha_m`` and ``alpha_eps`` are derived, never set directly.

    Storing the increment count instead of accumulating ``alpha_m += psi``
    keeps ``alpha_m == alpha_m_init + k * psi`` exact after ``k`` adaptations.
    """

    alpha_m_init: float = 1.0
    psi: float = 1e-4
    duration_min: float = 0.01
    duration_max: float = 1.0
    n_increments: int = 0
    alpha_m_ceiling: float = 10.0
    alpha_m: float = field(init=False)
    alpha_eps: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.duration_min < self.duration_max:
            raise ConfigError(f"need 0 < duration_min < duration_max, got "
                              f"{self.duration_min}, {self.duration_max}")
        if self.psi <= 0:
            raise ConfigError(f"psi must be positive, got {self.psi}")
        if self.alpha_m_init < 0:
            raise ConfigError(f"alpha_m must be non-negative, got {self.alpha_m_init}")
        if self.n_increments < 0:
            raise ConfigError("increment count cannot be negative")
        alpha_m = self.alpha_m_init + self.n_increments * self.psi
        object.__setattr__(self, "alpha_m", alpha_m)
        object.__setattr__(self, "alpha_eps", epsilon_from_m(alpha_m))


@dataclass
class RewardTrace:
    episode_averages: list[float] = field(default_factory=list)

    def record(self, average: float) -> None:
        self.episode_averages.append(float(average))

    def clear(self) -> None:
        self.episode_averages.clear()

    def __len__(self):
        return len(self.episode_averages)


def time_factor(t: float, params: RewardParams) -> float:
    # small slack absorbs float noise from the action affine map
    if not params.duration_min - 1e-12 <= t <= params.duration_max + 1e-12:
        raise ContractError(f"duration {t} outside [{params.duration_min}, {params.duration_max}]")
    return min(1.0, params.duration_min / t)


def compose_reward(task_reward: float, t: float, params: RewardParams) -> float:
    return params.alpha_m * task_reward * time_factor(t, params) - params.alpha_eps


def reward_slope(averages) -> float:
    """Least-squares slope of ``averages`` against indices ``1..n``."""
    r = [float(v) for v in averages]
    n = len(r)
    if n < 2:
        raise InsufficientData(f"slope needs at least 2 points, got {n}")
    s_i = n * (n + 1) // 2
    s_ii = n * (n + 1) * (2 * n + 1) // 6
    s_r = math.fsum(r)
    s_ir = math.fsum(i * v for i, v in enumerate(r, start=1))
    return (n * s_ir - s_i * s_r) / (n * s_ii - s_i * s_i)


def maybe_adapt(params: RewardParams, trace: RewardTrace):
    """Run one adaptation check; returns ``(params, adapted, slope)``.

    The trace is cleared whatever the outcome. ``slope`` is None when the
    window held fewer than two episodes.
    """
    try:
        slope = reward_slope(trace.episode_averages)
    except InsufficientData:
        trace.clear()
        return params, False, None
    trace.clear()
    if not slope < 0:
        return params, False, slope
    nxt = replace(params, n_increments=params.n_increments + 1)
    if nxt.alpha_m > params.alpha_m_ceiling:
        log.warning("alpha_m reached its ceiling %.6g; holding at %.6g (possible reward explosion, "
                    "consider a smaller psi)", params.alpha_m_ceiling, params.alpha_m)
        return params, False, slope
    return nxt, True, slope
