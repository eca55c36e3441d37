"""Episode loop, replay buffer, warmup, updates, reward adaptation and run outputs.

Run directory layout::

    <out>/config.txt              resolved configuration
    <out>/metrics.csv             one row per finished episode
    <out>/checkpoints/step_<N>.ckpt
    <out>/final.ckpt
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import config as config_mod
from .checkpoint import checkpoint_save
from .config import RunConfig
from .env import OBS_DIM, env_reset, env_step
from .errors import InsufficientData, NumericError
from .reward import RewardParams, RewardTrace, compose_reward, maybe_adapt
from .sac import ACTION_DIM, SacAgent, TrainBatch, make_nets, scale_action

log = logging.getLogger(__name__)

METRICS_HEADER = ("episode,global_step,ep_return,ep_steps,ep_sim_time,alpha_m,alpha_eps,k_R,"
                  "actor_loss,critic_loss,temperature")


@dataclass
class Transition:
    state: np.ndarray
    action_env: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool
    task_reward: float = float("nan")


class ReplayBuffer:
    """Fixed-capacity FIFO ring over preallocated arrays."""

    def __init__(self, capacity: int, obs_dim: int = OBS_DIM, action_dim: int = ACTION_DIM):
        self.capacity = int(capacity)
        self.states = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, action_dim))
        self.rewards = np.zeros(self.capacity)
        self.task_rewards = np.zeros(self.capacity)
        self.next_states = np.zeros((self.capacity, obs_dim))
        self.dones = np.zeros(self.capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition) -> None:
        i = self.cursor
        self.states[i] = t.state
        self.actions[i] = t.action_env
        self.rewards[i] = t.reward
        self.task_rewards[i] = t.task_reward
        self.next_states[i] = t.next_state
        self.dones[i] = t.done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, i: int) -> Transition:
        """Entry ``i`` counted from the oldest one still stored."""
        if not 0 <= i < self.size:
            raise IndexError(i)
        j = (self.cursor - self.size + i) % self.capacity
        return Transition(self.states[j].copy(), self.actions[j].copy(), float(self.rewards[j]),
                          self.next_states[j].copy(), bool(self.dones[j]), float(self.task_rewards[j]))

    def sample_indices(self, batch_size: int, rng) -> np.ndarray:
        if self.size < batch_size:
            raise InsufficientData(f"buffer holds {self.size} transitions, batch needs {batch_size}")
        return rng.choice(self.size, size=batch_size, replace=False)

    def sample(self, batch_size: int, rng) -> TrainBatch:
        idx = self.sample_indices(batch_size, rng)
        return TrainBatch(self.states[idx], self.actions[idx], self.rewards[idx],
                          self.next_states[idx], self.dones[idx])


def buffer_push(buffer: ReplayBuffer, transition: Transition) -> ReplayBuffer:
    buffer.push(transition)
    return buffer


def buffer_sample(buffer: ReplayBuffer, batch_size: int, rng) -> TrainBatch:
    return buffer.sample(batch_size, rng)


@dataclass
class MetricsRow:
    episode: int
    global_step: int
    ep_return: float
    ep_steps: int
    ep_sim_time: float
    alpha_m: float
    alpha_eps: float
    k_R: float | None
    actor_loss: float | None
    critic_loss: float | None
    temperature: float

    def to_csv(self) -> str:
        def f(v):
            if v is None:
                return ""
            return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
        return ",".join(f(getattr(self, fl.name)) for fl in fields(self))


def shaped_reward(cfg: RunConfig, task_reward: float, duration: float, params: RewardParams) -> float:
    """Reward stored in replay for each algorithm variant."""
    if cfg.variant == "moseac":
        return compose_reward(task_reward, duration, params)
    if cfg.variant == "seac":
        frac = (duration - cfg.min_time) / (cfg.max_time - cfg.min_time)
        return cfg.seac_alpha_task * task_reward - cfg.seac_alpha_eps - cfg.seac_alpha_time * frac
    return task_reward


def episode_seed(run_seed: int, episode: int) -> int:
    return int(np.random.SeedSequence([int(run_seed), 7, int(episode)]).generate_state(1)[0])


@dataclass
class TrainResult:
    out_dir: Path
    global_step: int
    episodes: int
    n_updates: int
    params: RewardParams
    agent: SacAgent
    buffer: ReplayBuffer


def train(cfg: RunConfig, out_dir, progress_every: int = 0) -> TrainResult:
    """Run one training job end to end and write the run directory."""
    out = Path(out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_mod.serialize(cfg))

    env_cfg = cfg.env
    scale = cfg.action_scale
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 1]))
    agent = SacAgent(make_nets(OBS_DIM, cfg.net_shape, cfg.seed, cfg.alpha, cfg.precision), cfg.sac_hyper, scale)
    buffer = ReplayBuffer(min(cfg.replay_size, max(cfg.total_steps, cfg.batch_size)))
    params = cfg.reward_params
    trace = RewardTrace()
    warmup = cfg.warmup_samples
    fixed_dt = cfg.fixed_dt if cfg.variant == "sac" else None

    global_step = 0
    episode = 0
    post_warmup_episodes = 0
    pending_updates = 0
    latest_slope = None

    def save(path):
        checkpoint_save(agent.nets, cfg, params, global_step, path)

    def update_once(losses):
        batch = buffer.sample(cfg.batch_size, rng)
        try:
            info = agent.update(batch, rng)
        except NumericError:
            save(out / "diagnostic.ckpt")
            log.error("non-finite loss at step %d; diagnostic checkpoint written", global_step)
            raise
        losses.append((info["actor_loss"], info["critic_loss"]))

    with open(out / "metrics.csv", "w", newline="") as metrics:
        metrics.write(METRICS_HEADER + "\n")
        while global_step < cfg.total_steps:
            state, obs = env_reset(env_cfg, episode_seed(cfg.seed, episode))
            started_after_warmup = global_step >= warmup
            ep_return = ep_time = ep_trace_sum = 0.0
            ep_steps = 0
            losses: list = []
            finished = False
            while global_step < cfg.total_steps:
                if global_step < warmup:
                    action = scale_action(rng.uniform(-1.0, 1.0, ACTION_DIM), scale)
                    if fixed_dt is not None:
                        action[0] = fixed_dt
                else:
                    action = agent.act(obs, rng)
                result = env_step(state, action, env_cfg)
                reward = shaped_reward(cfg, result.task_reward, float(action[0]), params)
                buffer.push(Transition(obs, action, reward, result.observation, result.terminated,
                                       result.task_reward))
                trace_value = reward if cfg.trace_reward == "composed" else result.task_reward
                ep_return += reward
                ep_time += result.sim_time_elapsed
                ep_steps += 1
                global_step += 1
                ep_trace_sum += trace_value
                if global_step > warmup and buffer.size >= cfg.batch_size:
                    if cfg.update_cadence == "step":
                        update_once(losses)
                    else:
                        pending_updates += 1
                if global_step % cfg.checkpoint_every == 0:
                    save(out / "checkpoints" / f"step_{global_step}.ckpt")
                if progress_every and global_step % progress_every == 0:
                    log.info("step %d episode %d alpha_m %.6f", global_step, episode, params.alpha_m)
                state, obs = result.state, result.observation
                if result.terminated or result.truncated:
                    finished = True
                    break
            if not finished:
                break

            if started_after_warmup:
                post_warmup_episodes += 1
                trace.record(ep_trace_sum / ep_steps)
                if cfg.update_cadence == "episode" and post_warmup_episodes % cfg.k_update == 0:
                    for _ in range(pending_updates):
                        update_once(losses)
                    pending_updates = 0
                if cfg.variant == "moseac" and post_warmup_episodes % cfg.k_update == 0:
                    params, adapted, slope = maybe_adapt(params, trace)
                    latest_slope = slope if slope is not None else latest_slope
                    if adapted:
                        log.debug("episode %d: slope %.4g < 0, alpha_m -> %.6f", episode, slope,
                                  params.alpha_m)
            a_loss = float(np.mean([l[0] for l in losses])) if losses else None
            c_loss = float(np.mean([l[1] for l in losses])) if losses else None
            row = MetricsRow(episode, global_step, ep_return, ep_steps, ep_time, params.alpha_m,
                             params.alpha_eps, latest_slope, a_loss, c_loss,
                             agent.nets.temperature)
            metrics.write(row.to_csv() + "\n")
            metrics.flush()
            episode += 1
    save(out / "final.ckpt")
    return TrainResult(out, global_step, episode, agent.n_updates, params, agent, buffer)
