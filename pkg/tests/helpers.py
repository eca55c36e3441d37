"""Shared oracles: central finite differences and small random batches."""

import numpy as np

from moseac.sac import ACTION_DIM, TrainBatch, make_nets, scale_action


def central_difference(loss_fn, arrays, eps=1e-6):
    """Gradient of ``loss_fn()`` with respect to every entry of ``arrays`` (perturbed in place)."""
    out = []
    for arr in arrays:
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = loss_fn()
            arr[idx] = old - eps
            down = loss_fn()
            arr[idx] = old
            g[idx] = (up - down) / (2.0 * eps)
        out.append(g)
    return out


def relative_error(a, b):
    a = np.concatenate([x.ravel() for x in a])
    b = np.concatenate([x.ravel() for x in b])
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


def small_nets(seed=0, hidden=(8, 8), temperature=0.12):
    nets = make_nets(11, hidden, seed, temperature)
    rng = np.random.default_rng(seed + 100)
    for net in (nets.actor, nets.q1, nets.q2, nets.q1_target, nets.q2_target):
        for b in net.biases:
            b += rng.normal(0.0, 0.1, b.shape)
    return nets


def random_batch(rng, n=16, obs_dim=11):
    u = rng.uniform(-1.0, 1.0, (n, ACTION_DIM))
    return TrainBatch(states=rng.normal(size=(n, obs_dim)), actions_env=scale_action(u),
                      rewards=rng.normal(size=n), next_states=rng.normal(size=(n, obs_dim)),
                      dones=rng.random(n) < 0.25)
