"""Dense ReLU networks with hand-written reverse mode, Adam and Polyak averaging.

Arithmetic runs in the dtype of the weights (float64 unless a caller casts
the parameters down for speed). Inputs may be a single vector ``(in,)`` or a batch
``(B, in)``; outputs follow the same rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

DEFAULT_HIDDEN = (256, 256)


@dataclass
class Mlp:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("an Mlp needs one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i} fan-in {w.shape[1]} != previous fan-out "
                                 f"{self.weights[i - 1].shape[0]}")

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def arrays(self) -> list[np.ndarray]:
        """Parameters in canonical order ``W0, b0, W1, b1, ...`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class ParamGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]   # input to each layer
    pre: list[np.ndarray]      # pre-activation of each layer
    sizes: tuple[int, ...]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, arrays, **kw) -> "AdamState":
        return cls([np.zeros_like(a) for a in arrays], [np.zeros_like(a) for a in arrays], **kw)

    @classmethod
    def for_mlp(cls, net: Mlp, **kw) -> "AdamState":
        return cls.zeros_like(net.arrays(), **kw)


def mlp_init(layer_sizes, seed: int) -> Mlp:
    """Glorot-uniform weights, zero biases.

    Layer ``i`` draws from its own stream seeded by ``(seed, i)``, so adding a
    layer leaves the draws of the earlier ones untouched.
    """
    sizes = tuple(layer_sizes)
    if len(sizes) < 2:
        raise ConfigError(f"need at least 2 layer sizes, got {sizes!r}")
    if any(int(s) != s or s <= 0 for s in sizes):
        raise ConfigError(f"layer sizes must be positive integers, got {sizes!r}")
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(int(fan_out), int(fan_in))))
        biases.append(np.zeros(int(fan_out)))
    return Mlp(weights, biases)


def mlp_forward(net: Mlp, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=net.weights[0].dtype)
    if x.ndim not in (1, 2) or x.shape[-1] != net.weights[0].shape[1]:
        raise ShapeError(f"input shape {x.shape} does not fit fan-in {net.weights[0].shape[1]}")
    inputs, pre = [], []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, ForwardCache(inputs, pre, net.sizes)


def mlp_backward(net: Mlp, cache: ForwardCache, grad_out, param_grads: bool = True):
    """Reverse pass for ``sum(output * grad_out)``.

    Returns ``(ParamGrads or None, input_gradient)``. Batched caches sum the
    parameter gradients over the batch. ``param_grads=False`` skips the weight
    gradients when only the input gradient is wanted.
    """
    if cache.sizes != net.sizes:
        raise ShapeError(f"cache was built for {cache.sizes}, net is {net.sizes}")
    g = np.asarray(grad_out, dtype=net.weights[0].dtype)
    if g.shape != cache.pre[-1].shape:
        raise ShapeError(f"output gradient {g.shape} != output {cache.pre[-1].shape}")
    n = len(net.weights)
    gw: list = [None] * n
    gb: list = [None] * n
    for i in range(n - 1, -1, -1):
        if i != n - 1:
            g = g * (cache.pre[i] > 0.0)
        if param_grads:
            inp = cache.inputs[i]
            if g.ndim == 1:
                gw[i] = np.outer(g, inp)
                gb[i] = g.copy()
            else:
                gw[i] = g.T @ inp
                gb[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    return (ParamGrads(gw, gb) if param_grads else None), g


def adam_update_arrays(params, grads, state: AdamState, lr: float) -> None:
    """In-place bias-corrected Adam on parallel lists of arrays."""
    if not lr > 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and Adam moments differ in length")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient, update aborted", step=state.t + 1)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def adam_step(params: Mlp, grads: ParamGrads, state: AdamState, lr: float):
    adam_update_arrays(params.arrays(), grads.arrays(), state, lr)
    return params, state


def soft_update(target: Mlp, source: Mlp, tau: float) -> Mlp:
    """Polyak average in place: ``target <- (1 - tau) * target + tau * source``."""
    if not 0.0 < tau <= 1.0:
        raise ConfigError(f"tau must lie in (0, 1], got {tau}")
    if target.sizes != source.sizes:
        raise ShapeError(f"target {target.sizes} and source {source.sizes} differ")
    for t, s in zip(target.arrays(), source.arrays()):
        if tau == 1.0:
            t[...] = s
        else:
            t *= 1.0 - tau
            t += tau * s
    return target
