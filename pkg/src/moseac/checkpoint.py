"""Checkpoint files: a text manifest followed by raw float32 tensors.

Layout::

    moseac-checkpoint
    format_version = 1
    step = 2500
    ...
    tensor actor.0.weight = 256,11
    ...
    data_bytes = 287012
    end
    <little-endian IEEE-754 float32 blobs, row-major, in manifest order>

Tensors are kept in float64 in memory, so a load/save cycle reproduces the
file byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import RunConfig
from .errors import CheckpointError, CheckpointShapeError, CheckpointTruncatedError, \
    CheckpointVersionError, ConfigError
from .nn import Mlp
from .reward import RewardParams
from .sac import SacNets, make_nets

MAGIC = "moseac-checkpoint"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f4")
_REQUIRED = ("format_version", "step", "n_increments", "obs_dim", "data_bytes")


@dataclass
class Checkpoint:
    nets: SacNets
    config: RunConfig
    params: RewardParams
    step: int

    @property
    def variant(self) -> str:
        return self.config.variant


def _fmt_shape(shape):
    return ",".join(str(s) for s in shape)


def encode(nets: SacNets, cfg: RunConfig, params: RewardParams, step: int) -> bytes:
    lines = [MAGIC, f"format_version = {FORMAT_VERSION}", f"step = {int(step)}",
             f"variant = {cfg.variant}", f"alpha_m = {params.alpha_m!r}",
             f"alpha_eps = {params.alpha_eps!r}", f"n_increments = {params.n_increments}",
             f"obs_dim = {nets.obs_dim}"]
    lines += [f"config.{k} = {v}" for k, v in config_mod.to_dict(cfg).items()]
    blobs = []
    for name, arr in nets.named_tensors():
        lines.append(f"tensor {name} = {_fmt_shape(arr.shape)}")
        blobs.append(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes())
    data = b"".join(blobs)
    lines += [f"data_bytes = {len(data)}", "end"]
    return ("\n".join(lines) + "\n").encode("ascii") + data


def checkpoint_save(nets: SacNets, cfg: RunConfig, params: RewardParams, step: int, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode(nets, cfg, params, step))
    tmp.replace(path)
    return path


def _split(raw: bytes):
    marker = b"\nend\n"
    idx = raw.find(marker)
    if not raw.startswith(MAGIC.encode()):
        raise CheckpointError("not a checkpoint file (bad magic line)")
    if idx < 0:
        raise CheckpointTruncatedError("manifest is not terminated; file truncated")
    return raw[:idx].decode("ascii").splitlines()[1:], raw[idx + len(marker):]


def decode(raw: bytes) -> Checkpoint:
    lines, data = _split(raw)
    meta, cfg_items, tensors = {}, {}, []
    for line in lines:
        key, _, value = (s.strip() for s in line.partition("="))
        if key.startswith("tensor "):
            shape = tuple(int(s) for s in value.split(",") if s)
            tensors.append((key[len("tensor "):], shape))
        elif key.startswith("config."):
            cfg_items[key[len("config."):]] = value
        else:
            meta[key] = value
    missing = [k for k in _REQUIRED if k not in meta]
    if missing:
        raise CheckpointError(f"manifest lacks {', '.join(missing)}")
    try:
        version = int(meta["format_version"])
        step, n_inc, obs_dim = int(meta["step"]), int(meta["n_increments"]), int(meta["obs_dim"])
        expected_bytes = int(meta["data_bytes"])
    except ValueError as exc:
        raise CheckpointError(f"malformed manifest value: {exc}") from None
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"checkpoint format {version}, this build reads {FORMAT_VERSION}")
    try:
        cfg = config_mod.from_dict(cfg_items)
    except ConfigError as exc:
        raise CheckpointError(f"embedded configuration is invalid: {exc}") from None
    if len(data) != expected_bytes:
        raise CheckpointTruncatedError(
            f"tensor data is {len(data)} bytes, manifest promises {expected_bytes}")

    template = make_nets(obs_dim, cfg.net_shape, seed=0, init_temperature=cfg.alpha)
    want = [(name, arr.shape) for name, arr in template.named_tensors()]
    if [n for n, _ in want] != [n for n, _ in tensors]:
        raise CheckpointShapeError("tensor list does not match the configured network layout")
    for (name, ws), (_, got) in zip(want, tensors):
        if ws != got:
            raise CheckpointShapeError(f"{name}: stored shape {got}, configuration implies {ws}")
    if sum(int(np.prod(s)) for _, s in tensors) * _DTYPE.itemsize != expected_bytes:
        raise CheckpointShapeError("data_bytes disagrees with the tensor shapes")

    arrays = {}
    offset = 0
    for name, shape in tensors:
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(data, _DTYPE, count, offset).astype(np.float64).reshape(shape)
        offset += count * _DTYPE.itemsize

    def net(prefix, like: Mlp):
        n = len(like.weights)
        return Mlp([arrays[f"{prefix}.{i}.weight"] for i in range(n)],
                   [arrays[f"{prefix}.{i}.bias"] for i in range(n)])

    nets = SacNets(net("actor", template.actor), net("q1", template.q1), net("q2", template.q2),
                   net("q1_target", template.q1_target), net("q2_target", template.q2_target),
                   float(arrays["log_temperature"][0]))
    params = RewardParams(alpha_m_init=cfg.alpha_m, psi=cfg.psi, duration_min=cfg.min_time,
                          duration_max=cfg.max_time, alpha_m_ceiling=cfg.alpha_m_ceiling,
                          n_increments=n_inc)
    return Checkpoint(nets, cfg, params, step)


def checkpoint_load(path) -> Checkpoint:
    return decode(Path(path).read_bytes())
