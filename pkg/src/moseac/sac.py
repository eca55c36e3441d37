"""Soft actor-critic over (duration, Fx, Fy) with twin critics and auto temperature.

The actor emits a mean and log standard deviation per action dimension; actions
are ``tanh``-squashed into ``[-1, 1]^3`` and mapped affinely onto the
environment box. Critics score ``(state, u)`` where ``u`` is the squashed action,
an invertible affine image of ``(D, Fx, Fy)``, so they never see raw Newtons.

All gradients are derived by hand and pushed through :mod:`moseac.nn`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError
from .nn import AdamState, Mlp, ParamGrads, adam_update_arrays, mlp_backward, mlp_forward, \
    mlp_init, soft_update

ACTION_DIM = 3
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ActionScale:
    duration_min: float = 0.01
    duration_max: float = 1.0
    force_limit: float = 100.0

    @property
    def offset(self) -> np.ndarray:
        return np.array([0.5 * (self.duration_max + self.duration_min), 0.0, 0.0])

    @property
    def gain(self) -> np.ndarray:
        return np.array([0.5 * (self.duration_max - self.duration_min),
                         self.force_limit, self.force_limit])


def scale_action(u, scale: ActionScale = ActionScale()) -> np.ndarray:
    """Map ``u`` in ``[-1, 1]^3`` to ``(D, Fx, Fy)``; works on single actions or batches."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] != ACTION_DIM or np.any(np.abs(u) > 1.0 + 1e-12):
        raise ContractError(f"squashed action must lie in [-1, 1]^3, got {u}")
    return scale.offset + scale.gain * np.clip(u, -1.0, 1.0)


def unscale_action(a, scale: ActionScale = ActionScale()) -> np.ndarray:
    return (np.asarray(a, dtype=np.float64) - scale.offset) / scale.gain


@dataclass
class PolicyOutput:
    env_action: np.ndarray   # (D, Fx, Fy) or (B, 3)
    squashed: np.ndarray     # u in [-1, 1]^3
    pre_squash: np.ndarray
    log_prob: np.ndarray     # scalar array or (B,)


@dataclass
class SacNets:
    actor: Mlp
    q1: Mlp
    q2: Mlp
    q1_target: Mlp
    q2_target: Mlp
    log_temperature: float

    @property
    def temperature(self) -> float:
        return math.exp(self.log_temperature)

    @property
    def obs_dim(self) -> int:
        return self.actor.sizes[0]

    def named_tensors(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for name in ("actor", "q1", "q2", "q1_target", "q2_target"):
            net = getattr(self, name)
            for i, (w, b) in enumerate(zip(net.weights, net.biases)):
                out += [(f"{name}.{i}.weight", w), (f"{name}.{i}.bias", b)]
        out.append(("log_temperature", np.array([self.log_temperature])))
        return out


@dataclass
class TrainBatch:
    states: np.ndarray
    actions_env: np.ndarray
    rewards: np.ndarray
    next_states: np.ndarray
    dones: np.ndarray

    def __len__(self):
        return len(self.rewards)


def _sub_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([int(seed), k]).generate_state(1)[0])


def make_nets(obs_dim: int = 11, hidden=(256, 256), seed: int = 0,
              init_temperature: float = 0.12, dtype="float64") -> SacNets:
    hidden = tuple(hidden)
    actor = mlp_init((obs_dim, *hidden, 2 * ACTION_DIM), _sub_seed(seed, 0))
    q1 = mlp_init((obs_dim + ACTION_DIM, *hidden, 1), _sub_seed(seed, 1))
    q2 = mlp_init((obs_dim + ACTION_DIM, *hidden, 1), _sub_seed(seed, 2))
    if np.dtype(dtype) != np.float64:
        actor, q1, q2 = (Mlp([w.astype(dtype) for w in m.weights], [b.astype(dtype) for b in m.biases])
                         for m in (actor, q1, q2))
    return SacNets(actor, q1, q2, q1.copy(), q2.copy(), math.log(init_temperature))


# --- squashed Gaussian ---------------------------------------------------

def log1m_tanh2(x):
    """``log(1 - tanh(x)^2)`` without cancellation for large ``|x|``."""
    x = np.abs(x)  # even function; keeps softplus argument non-positive
    return 2.0 * (_LOG2 - x - np.logaddexp(0.0, -2.0 * x))


@dataclass
class _ActorPass:
    cache: object
    mean: np.ndarray
    log_std: np.ndarray
    clamp_mask: np.ndarray
    noise: np.ndarray
    pre: np.ndarray
    u: np.ndarray
    log_prob: np.ndarray


def _actor_pass(nets: SacNets, states, noise) -> _ActorPass:
    out, cache = mlp_forward(nets.actor, states)
    if not np.all(np.isfinite(out)):
        raise NumericError("actor produced non-finite output")
    mean = out[..., :ACTION_DIM]
    raw = out[..., ACTION_DIM:]
    log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
    mask = (raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)
    pre = mean + np.exp(log_std) * noise
    u = np.tanh(pre)
    log_prob = (np.sum(-0.5 * noise ** 2 - log_std - _HALF_LOG_2PI, axis=-1)
                - np.sum(log1m_tanh2(pre), axis=-1))
    return _ActorPass(cache, mean, log_std, mask, noise, pre, u, log_prob)


def policy_sample(nets: SacNets, state, rng=None, deterministic: bool = False,
                  scale: ActionScale = ActionScale(), noise=None) -> PolicyOutput:
    """Reparameterized draw; ``deterministic`` returns ``tanh(mean)`` (zero noise).

    ``state`` may be one observation or a batch.
    """
    state = np.asarray(state, dtype=np.float64)
    if not np.all(np.isfinite(state)):
        raise NumericError("non-finite state passed to the policy")
    shape = state.shape[:-1] + (ACTION_DIM,)
    if noise is None:
        noise = np.zeros(shape) if deterministic else rng.standard_normal(shape)
    p = _actor_pass(nets, state, noise)
    return PolicyOutput(scale_action(p.u, scale), p.u, p.pre, p.log_prob)


# --- losses --------------------------------------------------------------

def _critic_in(states, u):
    return np.concatenate([states, u], axis=-1)


def _pin(u, fixed_u0):
    if fixed_u0 is None:
        return u
    u = u.copy()
    u[..., 0] = fixed_u0
    return u


def compute_td_target(batch: TrainBatch, nets: SacNets, gamma: float, rng=None, noise=None,
                      fixed_u0=None) -> np.ndarray:
    """``r + gamma * (1 - done) * (min_k Q'_k(s', u') - temperature * log pi(u'|s'))``."""
    if not 0.0 <= gamma < 1.0:
        raise ContractError(f"gamma must lie in [0, 1), got {gamma}")
    s2 = batch.next_states
    if noise is None:
        noise = rng.standard_normal((len(batch), ACTION_DIM))
    p = _actor_pass(nets, s2, noise)
    x = _critic_in(s2, _pin(p.u, fixed_u0))
    q1, _ = mlp_forward(nets.q1_target, x)
    q2, _ = mlp_forward(nets.q2_target, x)
    soft_v = np.minimum(q1[:, 0], q2[:, 0]) - nets.temperature * p.log_prob
    not_done = 1.0 - np.asarray(batch.dones, dtype=np.float64)
    return np.asarray(batch.rewards, dtype=np.float64) + gamma * not_done * soft_v


def critic_loss_and_grads(batch: TrainBatch, nets: SacNets, y, scale: ActionScale = ActionScale()):
    """Summed MSE of both critics against the fixed target ``y``."""
    if not np.all(np.isfinite(y)):
        raise NumericError("TD target is not finite")
    x = _critic_in(batch.states, unscale_action(batch.actions_env, scale))
    n = len(batch)
    loss = 0.0
    grads = []
    for net in (nets.q1, nets.q2):
        q, cache = mlp_forward(net, x)
        err = q[:, 0] - y
        loss += float(np.mean(err ** 2))
        g, _ = mlp_backward(net, cache, (2.0 / n) * err[:, None])
        grads.append(g)
    if not math.isfinite(loss):
        raise NumericError("critic loss is not finite")
    return loss, grads[0], grads[1]


def actor_loss_and_grads(batch: TrainBatch, nets: SacNets, rng=None, noise=None, fixed_u0=None):
    """``mean(temperature * log pi - min(Q1, Q2))`` with reparameterized actions.

    Gradients reach the actor through the critics' action inputs; critic
    parameters are left alone. Returns ``(loss, ParamGrads, log_probs)``.
    """
    states = batch.states
    n = len(batch)
    if noise is None:
        noise = rng.standard_normal((n, ACTION_DIM))
    p = _actor_pass(nets, states, noise)
    x = _critic_in(states, _pin(p.u, fixed_u0))
    q1, c1 = mlp_forward(nets.q1, x)
    q2, c2 = mlp_forward(nets.q2, x)
    q1, q2 = q1[:, 0], q2[:, 0]
    pick1 = q1 <= q2
    q_min = np.where(pick1, q1, q2)
    alpha = nets.temperature
    loss = float(np.mean(alpha * p.log_prob - q_min))
    if not math.isfinite(loss):
        raise NumericError("actor loss is not finite")

    # d loss / d u through whichever critic was the minimum
    g_q = np.where(pick1, -1.0 / n, 0.0)[:, None]
    _, gx1 = mlp_backward(nets.q1, c1, g_q, param_grads=False)
    _, gx2 = mlp_backward(nets.q2, c2, (-1.0 / n) - g_q, param_grads=False)
    g_u = (gx1 + gx2)[:, -ACTION_DIM:]
    if fixed_u0 is not None:
        g_u[:, 0] = 0.0
    g_pre = g_u * (1.0 - p.u ** 2)
    sigma_noise = np.exp(p.log_std) * p.noise
    # log pi = sum(-noise^2/2 - log_std - c) - sum(log(1 - tanh(pre)^2))
    g_mean = g_pre + (alpha / n) * 2.0 * p.u
    g_log_std = g_pre * sigma_noise + (alpha / n) * (-1.0 + 2.0 * p.u * sigma_noise)
    g_out = np.concatenate([g_mean, g_log_std * p.clamp_mask], axis=1)
    grads, _ = mlp_backward(nets.actor, p.cache, g_out)
    return loss, grads, p.log_prob


def temperature_gradient(log_temperature: float, log_probs, target_entropy: float) -> float:
    """d/d(log temperature) of ``-temperature * mean(log pi + target_entropy)``."""
    return -math.exp(log_temperature) * (float(np.mean(log_probs)) + target_entropy)


def temperature_update(nets: SacNets, log_probs, target_entropy: float, state: AdamState,
                       lr: float) -> float:
    param = np.array([nets.log_temperature])
    grad = np.array([temperature_gradient(nets.log_temperature, log_probs, target_entropy)])
    adam_update_arrays([param], [grad], state, lr)
    nets.log_temperature = float(param[0])
    return nets.log_temperature


# --- the update cycle ----------------------------------------------------

@dataclass
class SacHyper:
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 3e-5
    critic_lr: float = 3e-5
    temperature_lr: float = 3e-5
    target_entropy: float = -3.0
    auto_temperature: bool = True
    fixed_duration: float | None = None


class SacAgent:
    """Networks, optimizer moments and hyperparameters bundled for training."""

    def __init__(self, nets: SacNets, hyper: SacHyper, scale: ActionScale = ActionScale()):
        self.nets = nets
        self.hyper = hyper
        self.scale = scale
        self.actor_opt = AdamState.for_mlp(nets.actor)
        self.q1_opt = AdamState.for_mlp(nets.q1)
        self.q2_opt = AdamState.for_mlp(nets.q2)
        self.temp_opt = AdamState.zeros_like([np.zeros(1)])
        self.n_updates = 0

    @property
    def fixed_u0(self):
        d = self.hyper.fixed_duration
        if d is None:
            return None
        return float(unscale_action([d, 0.0, 0.0], self.scale)[0])

    def act(self, state, rng, deterministic=False) -> np.ndarray:
        out = policy_sample(self.nets, state, rng, deterministic, self.scale)
        action = out.env_action
        if self.hyper.fixed_duration is not None:
            action = action.copy()
            action[..., 0] = self.hyper.fixed_duration
        return action

    def update(self, batch: TrainBatch, rng) -> dict:
        h, nets = self.hyper, self.nets
        step = self.n_updates + 1
        y = compute_td_target(batch, nets, h.gamma, rng, fixed_u0=self.fixed_u0)
        c_loss, g1, g2 = critic_loss_and_grads(batch, nets, y, self.scale)
        try:
            adam_update_arrays(nets.q1.arrays(), g1.arrays(), self.q1_opt, h.critic_lr)
            adam_update_arrays(nets.q2.arrays(), g2.arrays(), self.q2_opt, h.critic_lr)
            a_loss, ga, log_probs = actor_loss_and_grads(batch, nets, rng, fixed_u0=self.fixed_u0)
            adam_update_arrays(nets.actor.arrays(), ga.arrays(), self.actor_opt, h.actor_lr)
        except NumericError as exc:
            raise NumericError(str(exc), step=step) from exc
        if h.auto_temperature:
            temperature_update(nets, log_probs, h.target_entropy, self.temp_opt, h.temperature_lr)
        soft_update(nets.q1_target, nets.q1, h.tau)
        soft_update(nets.q2_target, nets.q2, h.tau)
        self.n_updates = step
        return {"critic_loss": c_loss, "actor_loss": a_loss, "temperature": nets.temperature}


def grads_to_vector(g: ParamGrads) -> np.ndarray:
    return np.concatenate([a.ravel() for a in g.arrays()])
