"""Run configuration and its flat ``key = value`` file format.

One document carries training, reward and environment settings so that a
baseline differs from MOSEAC only in the ``variant`` line. Absent keys take
the defaults below, which follow the published hyperparameter sheet.

    # comments and blank lines are ignored
    total_steps = 300000
    net_shape = 256, 256
    variant = sac
    fixed_dt = 0.016666666666666666
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .env import EnvConfig
from .errors import ConfigError
from .reward import RewardParams
from .sac import ActionScale, SacHyper

VARIANTS = ("moseac", "seac", "sac")


@dataclass(frozen=True)
class RunConfig:
    # hyperparameter sheet
    total_steps: int = 3_000_000
    gamma: float = 0.99
    net_shape: tuple[int, ...] = (256, 256)
    batch_size: int = 256
    a_lr: float = 3e-5
    c_lr: float = 3e-5
    max_steps: int = 500
    alpha: float = 0.12
    eta: float = -3.0
    min_time: float = 0.01
    max_time: float = 1.0
    alpha_m: float = 1.0
    psi: float = 1e-4
    replay_size: int = 1_000_000
    warmup: int | None = None      # None -> 5 * max_steps
    n_critics: int = 2
    # training
    seed: int = 0
    variant: str = "moseac"
    fixed_dt: float | None = None
    tau: float = 0.005
    k_update: int = 10
    alpha_m_ceiling: float = 10.0
    trace_reward: str = "composed"
    update_cadence: str = "step"
    checkpoint_every: int = 100_000
    temperature_lr: float | None = None   # None -> a_lr
    auto_temperature: bool = True
    precision: str = "float64"            # network arithmetic; float32 roughly halves update cost
    seac_alpha_task: float = 1.0
    seac_alpha_eps: float = 0.1
    seac_alpha_time: float = 0.1
    # environment
    world_size: tuple[float, ...] = (2.0, 2.0)
    agent_mass: float = 20.0
    gravity: float = 9.80665
    friction_mu: float = 0.6
    obstacle_radius: float = 0.05
    speed_limit: float = 2.0
    force_limit: float = 100.0
    goal_radius: float = 0.05
    substep: float = 0.01
    goal_reward: float = 500.0
    crash_reward: float = -500.0
    distance_weight: float = 1.0
    normalize_obs: bool = False

    def __post_init__(self):
        validate(self)

    @property
    def warmup_samples(self) -> int:
        return 5 * self.max_steps if self.warmup is None else self.warmup

    @property
    def env(self) -> EnvConfig:
        return EnvConfig(
            world_size=tuple(self.world_size), agent_mass=self.agent_mass, gravity=self.gravity,
            friction_mu=self.friction_mu, obstacle_radius=self.obstacle_radius,
            speed_limit=self.speed_limit, force_limit=self.force_limit,
            duration_min=self.min_time, duration_max=self.max_time, goal_radius=self.goal_radius,
            max_episode_steps=self.max_steps, substep=self.substep, goal_reward=self.goal_reward,
            crash_reward=self.crash_reward, distance_weight=self.distance_weight,
            normalize_obs=self.normalize_obs)

    @property
    def reward_params(self) -> RewardParams:
        return RewardParams(alpha_m_init=self.alpha_m, psi=self.psi, duration_min=self.min_time,
                            duration_max=self.max_time, alpha_m_ceiling=self.alpha_m_ceiling)

    @property
    def action_scale(self) -> ActionScale:
        return ActionScale(self.min_time, self.max_time, self.force_limit)

    @property
    def sac_hyper(self) -> SacHyper:
        return SacHyper(gamma=self.gamma, tau=self.tau, actor_lr=self.a_lr, critic_lr=self.c_lr,
                        temperature_lr=self.a_lr if self.temperature_lr is None else self.temperature_lr,
                        target_entropy=self.eta, auto_temperature=self.auto_temperature,
                        fixed_duration=self.fixed_dt if self.variant == "sac" else None)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


def validate(c: RunConfig) -> None:
    def need(ok, msg):
        if not ok:
            raise ConfigError(msg)

    need(c.variant in VARIANTS, f"variant must be one of {VARIANTS}, got {c.variant!r}")
    need(c.total_steps > 0, "total_steps must be positive")
    need(0.0 <= c.gamma < 1.0, "gamma must lie in [0, 1)")
    need(len(c.net_shape) >= 1 and all(h > 0 for h in c.net_shape), "net_shape needs positive widths")
    need(c.batch_size > 0, "batch_size must be positive")
    need(c.a_lr > 0 and c.c_lr > 0, "learning rates must be positive")
    need(c.temperature_lr is None or c.temperature_lr > 0, "temperature_lr must be positive")
    need(c.max_steps > 0, "max_steps must be positive")
    need(c.alpha > 0, "alpha (initial temperature) must be positive")
    need(0 < c.min_time < c.max_time, f"min_time ({c.min_time}) must be positive and below "
                                      f"max_time ({c.max_time})")
    need(c.alpha_m >= 0, "alpha_m must be non-negative")
    need(c.psi > 0, "psi must be positive")
    need(c.replay_size >= c.batch_size, "replay_size must hold at least one batch")
    need(c.warmup is None or c.warmup >= 0, "warmup cannot be negative")
    need(c.warmup_samples <= c.total_steps,
         f"warmup ({c.warmup_samples}) exceeds total_steps ({c.total_steps})")
    need(c.n_critics == 2, "only twin critics (n_critics = 2) are supported")
    need(0 < c.tau <= 1, "tau must lie in (0, 1]")
    need(c.k_update >= 2, "k_update must be at least 2 episodes (a slope needs two points)")
    need(c.alpha_m_ceiling >= c.alpha_m, "alpha_m_ceiling is below alpha_m")
    need(c.trace_reward in ("composed", "task"), "trace_reward must be 'composed' or 'task'")
    need(c.update_cadence in ("step", "episode"), "update_cadence must be 'step' or 'episode'")
    need(c.precision in ("float64", "float32"), "precision must be 'float64' or 'float32'")
    need(c.checkpoint_every > 0, "checkpoint_every must be positive")
    if c.variant == "sac":
        need(c.fixed_dt is not None, "variant 'sac' needs fixed_dt")
        need(c.min_time <= c.fixed_dt <= c.max_time,
             f"fixed_dt {c.fixed_dt} outside [{c.min_time}, {c.max_time}]")
    need(len(c.world_size) == 2, "world_size takes two lengths")
    c.env  # EnvConfig performs the physical checks


# --- text format -----------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_number(text: str, kind):
    if kind is int:
        v = float(text)  # allows 3e6
        if v != int(v):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(v)
    return float(text)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_FIELDS = {"total_steps", "batch_size", "max_steps", "replay_size", "warmup", "n_critics",
               "seed", "k_update", "checkpoint_every"}
_OPTIONAL = {"warmup", "fixed_dt", "temperature_lr"}
_STR_FIELDS = {"variant", "trace_reward", "update_cadence", "precision"}
_BOOL_FIELDS = {"auto_temperature", "normalize_obs"}


def parse_value(key: str, text: str):
    text = text.strip()
    if key in _OPTIONAL and text.lower() == "none":
        return None
    if key in _BOOL_FIELDS:
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"expected true/false, got {text!r}")
        return low in ("true", "1", "yes")
    if key in _STR_FIELDS:
        return text
    if key in ("net_shape", "world_size"):
        parts = [p for p in text.strip("()[] ").replace(",", " ").split()]
        if not parts:
            raise ValueError("expected a comma-separated list")
        kind = int if key == "net_shape" else float
        return tuple(_parse_number(p, kind) for p in parts)
    return _parse_number(text, int if key in _INT_FIELDS else float)


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = parse_value(key, val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(path) -> RunConfig:
    path = Path(path)
    return parse_text(path.read_text(), str(path))


def serialize(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(RunConfig))


def to_dict(cfg: RunConfig) -> dict[str, str]:
    return {f.name: _fmt(getattr(cfg, f.name)) for f in fields(RunConfig)}


def from_dict(d: dict[str, str]) -> RunConfig:
    return parse_text("".join(f"{k} = {v}\n" for k, v in d.items()))
