"""Point-mass navigation on a 2 m x 2 m floor with Coulomb friction.

Each action is ``(duration, Fx, Fy)``: a constant commanded force held for
``duration`` seconds, integrated at a fixed substep. Episodes end on reaching
the goal, touching the round obstacle, or after ``max_episode_steps`` actions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, ContractError

OBS_DIM = 11
ACTION_DIM = 3
MIN_SEPARATION = 0.3
_MAX_SPAWN_TRIES = 1000


class Event(str, enum.Enum):
    GOAL = "Goal"
    CRASH = "Crash"
    NONE = "None"


@dataclass(frozen=True)
class EnvConfig:
    world_size: tuple[float, float] = (2.0, 2.0)
    agent_mass: float = 20.0
    gravity: float = 9.80665
    friction_mu: float = 0.6
    obstacle_radius: float = 0.05
    speed_limit: float = 2.0
    force_limit: float = 100.0
    duration_min: float = 0.01
    duration_max: float = 1.0
    goal_radius: float = 0.05
    max_episode_steps: int = 500
    substep: float = 0.01
    goal_reward: float = 500.0
    crash_reward: float = -500.0
    distance_weight: float = 1.0
    normalize_obs: bool = False

    def __post_init__(self):
        positive = ("agent_mass", "gravity", "friction_mu", "obstacle_radius", "speed_limit",
                    "force_limit", "duration_min", "duration_max", "goal_radius", "substep",
                    "max_episode_steps")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if len(self.world_size) != 2 or min(self.world_size) <= 0:
            raise ConfigError(f"world_size must be two positive lengths, got {self.world_size}")
        if not self.duration_min < self.duration_max:
            raise ConfigError("duration_min must be below duration_max")

    @property
    def friction_force(self) -> float:
        return self.friction_mu * self.agent_mass * self.gravity


@dataclass(frozen=True)
class EnvState:
    agent_pos: np.ndarray
    agent_vel: np.ndarray
    obstacle_pos: np.ndarray
    goal_pos: np.ndarray
    start_pos: np.ndarray
    last_duration: float
    last_force: np.ndarray
    step_count: int = 0

    @property
    def origin_distance(self) -> float:
        return float(np.linalg.norm(self.start_pos - self.goal_pos))

    @property
    def goal_distance(self) -> float:
        return float(np.linalg.norm(self.agent_pos - self.goal_pos))

    def layout(self) -> tuple[float, ...]:
        return (*self.start_pos, *self.goal_pos, *self.obstacle_pos)


@dataclass(frozen=True)
class StepOutcome:
    state: EnvState
    observation: np.ndarray
    task_reward: float
    terminated: bool
    truncated: bool
    event: Event
    sim_time_elapsed: float


def env_reset(config: EnvConfig, seed: int) -> tuple[EnvState, np.ndarray]:
    """Random start, goal and obstacle, pairwise at least 0.3 m apart."""
    rng = np.random.default_rng(seed)
    r = config.obstacle_radius
    lo = np.array([r, r])
    hi = np.array(config.world_size, dtype=float) - r
    for _ in range(_MAX_SPAWN_TRIES):
        pts = rng.uniform(lo, hi, size=(3, 2))
        d = [np.linalg.norm(pts[i] - pts[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
        if min(d) >= MIN_SEPARATION:
            break
    else:
        raise ConfigError(f"could not place start/goal/obstacle {MIN_SEPARATION} m apart "
                          f"in {_MAX_SPAWN_TRIES} tries; world too small")
    start, goal, obstacle = pts
    state = EnvState(agent_pos=start.copy(), agent_vel=np.zeros(2), obstacle_pos=obstacle,
                     goal_pos=goal, start_pos=start, last_duration=config.duration_min,
                     last_force=np.zeros(2))
    return state, observe(state, config)


def _kernel(px, py, vx, vy, fx, fy, h, c: EnvConfig):
    """One substep on plain floats; returns ``(px, py, vx, vy)``."""
    m = c.agent_mass
    mu_mg = c.friction_mu * m * c.gravity
    lim = c.speed_limit
    remaining = h
    speed = math.hypot(vx, vy)
    if speed > 0.0:
        dx, dy = vx / speed, vy / speed
        ax = (fx - mu_mg * dx) / m
        ay = (fy - mu_mg * dy) / m
        along = ax * dx + ay * dy
        if along < 0.0 and (vx + ax * h) * dx + (vy + ay * h) * dy <= 0.0:
            # friction (plus any opposing push) halts the agent inside this substep
            t_stop = min(h, speed / -along)
            px += 0.5 * vx * t_stop
            py += 0.5 * vy * t_stop
            vx = vy = 0.0
            remaining = h - t_stop
        else:
            nvx = min(max(vx + ax * h, -lim), lim)
            nvy = min(max(vy + ay * h, -lim), lim)
            px += 0.5 * (vx + nvx) * h
            py += 0.5 * (vy + nvy) * h
            vx, vy = nvx, nvy
            remaining = 0.0
    if remaining > 0.0:
        f_norm = math.hypot(fx, fy)
        if f_norm > mu_mg:
            ax = (fx - mu_mg * fx / f_norm) / m
            ay = (fy - mu_mg * fy / f_norm) / m
            nvx = min(max(ax * remaining, -lim), lim)
            nvy = min(max(ay * remaining, -lim), lim)
            px += 0.5 * nvx * remaining
            py += 0.5 * nvy * remaining
            vx, vy = nvx, nvy
    wx, wy = c.world_size
    if px < 0.0 or px > wx:
        px = min(max(px, 0.0), wx)
        vx = 0.0
    if py < 0.0 or py > wy:
        py = min(max(py, 0.0), wy)
        vy = 0.0
    return px, py, vx, vy


def physics_substep(state: EnvState, force, h: float, config: EnvConfig) -> EnvState:
    """Advance ``h`` seconds under commanded ``force`` with vector Coulomb friction.

    At rest the agent stays put unless ``|F|`` exceeds ``mu*m*g``; once moving,
    friction of magnitude ``mu*m*g`` opposes the velocity, and if it would
    reverse the motion the agent is stopped at that instant and the rest of the
    substep is treated from rest. Velocity is clamped per axis and positions to
    the world box (zeroing the offending velocity component).
    """
    if not h > 0:
        raise ContractError(f"substep must be positive, got {h}")
    fx, fy = (float(v) for v in force)
    px, py, vx, vy = _kernel(float(state.agent_pos[0]), float(state.agent_pos[1]),
                             float(state.agent_vel[0]), float(state.agent_vel[1]),
                             fx, fy, float(h), config)
    return replace(state, agent_pos=np.array([px, py]), agent_vel=np.array([vx, vy]))


def _substeps(duration: float, h: float) -> list[float]:
    n_full = int(math.floor(duration / h + 1e-9))
    steps = [h] * n_full
    rest = duration - n_full * h
    if rest > 1e-12:
        steps.append(rest)
    return steps


def check_action(action, config: EnvConfig) -> tuple[float, np.ndarray]:
    a = np.asarray(action, dtype=np.float64)
    if a.shape != (ACTION_DIM,) or not np.all(np.isfinite(a)):
        raise ContractError(f"action must be 3 finite numbers, got {action!r}")
    d = float(a[0])
    tol = 1e-9
    if not config.duration_min - tol <= d <= config.duration_max + tol:
        raise ContractError(f"duration {d} outside [{config.duration_min}, {config.duration_max}]")
    if np.any(np.abs(a[1:]) > config.force_limit + tol):
        raise ContractError(f"force {a[1:]} outside +-{config.force_limit} N")
    d = min(max(d, config.duration_min), config.duration_max)
    return d, np.clip(a[1:], -config.force_limit, config.force_limit)


def env_step(state: EnvState, action, config: EnvConfig) -> StepOutcome:
    duration, force = check_action(action, config)
    fx, fy = float(force[0]), float(force[1])
    px, py = (float(v) for v in state.agent_pos)
    vx, vy = (float(v) for v in state.agent_vel)
    ox, oy = (float(v) for v in state.obstacle_pos)
    gx, gy = (float(v) for v in state.goal_pos)
    r_obs, r_goal = config.obstacle_radius, config.goal_radius
    event = Event.NONE
    elapsed = 0.0
    for h in _substeps(duration, config.substep):
        px, py, vx, vy = _kernel(px, py, vx, vy, fx, fy, h, config)
        elapsed += h
        if math.hypot(px - ox, py - oy) <= r_obs:
            event = Event.CRASH
            break
        if math.hypot(px - gx, py - gy) <= r_goal:
            event = Event.GOAL
            break
    if event is Event.NONE:
        elapsed = duration
    state = replace(state, agent_pos=np.array([px, py]), agent_vel=np.array([vx, vy]),
                    last_duration=duration, last_force=force.copy(),
                    step_count=state.step_count + 1)
    if event is Event.GOAL:
        reward = config.goal_reward
    elif event is Event.CRASH:
        reward = config.crash_reward
    else:
        reward = state.origin_distance - config.distance_weight * state.goal_distance
    terminated = event is not Event.NONE
    truncated = not terminated and state.step_count >= config.max_episode_steps
    return StepOutcome(state, observe(state, config), float(reward), terminated, truncated,
                       event, float(elapsed))


def observe(state: EnvState, config: EnvConfig) -> np.ndarray:
    """``[pos(2), obstacle(2), goal(2), vel(2), last_duration, last_force(2)]``."""
    obs = np.concatenate([state.agent_pos, state.obstacle_pos, state.goal_pos, state.agent_vel,
                          [state.last_duration], state.last_force]).astype(np.float64)
    if config.normalize_obs:
        size = np.tile(np.asarray(config.world_size, dtype=float), 3)
        obs[:6] = 2.0 * obs[:6] / size - 1.0
        obs[6:8] /= config.speed_limit
        span = config.duration_max - config.duration_min
        obs[8] = 2.0 * (obs[8] - config.duration_min) / span - 1.0
        obs[9:] /= config.force_limit
    return obs


TRACE_HEADER = "step,D,Fx,Fy,x,y,vx,vy,R_t,event"


def trace_line(step: int, action, outcome: StepOutcome) -> str:
    s = outcome.state
    vals = [step, *(float(v) for v in action), *s.agent_pos, *s.agent_vel, outcome.task_reward]
    return ",".join(repr(v) if isinstance(v, float) else str(v) for v in vals) + f",{outcome.event.value}"


def run_trace(config: EnvConfig, seed: int, actions, stream) -> list[StepOutcome]:
    """Play ``actions`` from a fresh reset, writing one CSV line per decision step."""
    state, _ = env_reset(config, seed)
    stream.write(TRACE_HEADER + "\n")
    outcomes = []
    for i, action in enumerate(actions, start=1):
        out = env_step(state, action, config)
        stream.write(trace_line(i, action, out) + "\n")
        outcomes.append(out)
        state = out.state
        if out.terminated or out.truncated:
            break
    return outcomes
