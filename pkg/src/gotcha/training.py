"""End-to-end training: episode rollouts, triplet loss, Adam, checkpoints.

The loss pulls each round's query vector toward the target's features and
away from a per-round uniform-random negative by a fixed margin, summed over
the episode's realized rounds and averaged over the batch. Candidate
selection is a discrete sampling step, so gradients flow through the query
vectors only; each round's shown candidate is a constant input.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .engine import run_episode
from .errors import ConfigError, FormatError, NumericError
from .gallery import Gallery
from .model import (
    Dims,
    ModelParameters,
    episode_backward,
    episode_forward,
    expected_shapes,
    init_parameters,
    parameters_from_tensors,
)
from .nn import AdamState, adam_step
from .seeding import EpisodeStreams

_CKPT_MAGIC = b"GCKP"
_CKPT_VERSION = 1


def _pair_distances(s, x_pos, x_neg):
    s = np.asarray(s, dtype=np.float64)
    if not (
        np.all(np.isfinite(s))
        and np.all(np.isfinite(x_pos))
        and np.all(np.isfinite(x_neg))
    ):
        raise NumericError("non-finite input to triplet loss")
    return np.linalg.norm(s - x_pos), np.linalg.norm(s - x_neg)


def hinge_loss(s, x_pos, x_neg, margin: float) -> float:
    """One round's term: max(0, ||s - x+|| - ||s - x-|| + margin)."""
    d_pos, d_neg = _pair_distances(s, x_pos, x_neg)
    return float(max(0.0, d_pos - d_neg + margin))


def triplet_loss(s_rounds, x_pos, x_negs, margin: float) -> float:
    """Episode loss: the hinge summed over rounds."""
    if len(s_rounds) != len(x_negs):
        raise ConfigError("one negative per round is required")
    return sum(hinge_loss(s, x_pos, x_neg, margin) for s, x_neg in zip(s_rounds, x_negs))


def triplet_loss_with_grads(s_rounds, x_pos, x_negs, margin: float):
    """Episode loss plus the gradient w.r.t. each round's query vector."""
    if len(s_rounds) != len(x_negs):
        raise ConfigError("one negative per round is required")
    total = 0.0
    grads = []
    x_pos = np.asarray(x_pos, dtype=np.float64)
    for s, x_neg in zip(s_rounds, x_negs):
        s = np.asarray(s, dtype=np.float64)
        x_neg = np.asarray(x_neg, dtype=np.float64)
        d_pos, d_neg = _pair_distances(s, x_pos, x_neg)
        value = d_pos - d_neg + margin
        if value > 0.0:
            total += value
            ds = np.zeros_like(s)
            if d_pos > 0.0:
                ds += (s - x_pos) / d_pos
            if d_neg > 0.0:
                ds -= (s - x_neg) / d_neg
            grads.append(ds)
        else:
            grads.append(np.zeros_like(s))
    return total, grads


def compute_episode_loss(params: ModelParameters, round_inputs, x_pos, x_negs, mode, margin):
    """Forward + backward over fixed round inputs. Returns (loss, grads).

    ``round_inputs`` is the sequence of (relevance, cand_attrs, cand_features)
    triples a rollout produced; treating them as constants is the
    stop-gradient convention for the discrete selection step.
    """
    s_rounds, caches = episode_forward(params, round_inputs, mode)
    loss, ds = triplet_loss_with_grads(s_rounds, x_pos, x_negs, margin)
    return loss, episode_backward(params, caches, ds)


def rollout_episode(
    params: ModelParameters,
    gallery: Gallery,
    cfg: TrainConfig,
    streams: EpisodeStreams,
):
    """Train-time rollout: softmax-sampled candidates, per-round negatives."""
    return run_episode(
        params, gallery, cfg, streams, policy="sample", with_negatives=True
    )


def _episode_loss_from_rollout(params, episode, gallery, margin):
    if not episode.rounds:
        return 0.0, None
    x_pos = gallery.features[episode.target_index].astype(np.float64)
    s_rounds = [r.s for r in episode.rounds]
    x_negs = [gallery.features[r.negative_index].astype(np.float64) for r in episode.rounds]
    loss, ds = triplet_loss_with_grads(s_rounds, x_pos, x_negs, margin)
    grads = episode_backward(params, [r.cache for r in episode.rounds], ds)
    return loss, grads


@dataclass
class Checkpoint:
    """Everything needed to resume or serve a trained model."""

    dims: Dims
    config: TrainConfig
    params: ModelParameters
    adam: AdamState
    epoch: int  # completed epochs; training resumes here

    def equals(self, other: "Checkpoint") -> bool:
        mine, theirs = self.params.tensors(), other.params.tensors()
        if self.epoch != other.epoch or self.adam.step != other.adam.step:
            return False
        if self.config.to_dict() != other.config.to_dict():
            return False
        return (
            all(np.array_equal(mine[k], theirs[k]) for k in mine)
            and all(np.array_equal(self.adam.m[k], other.adam.m[k]) for k in self.adam.m)
            and all(np.array_equal(self.adam.v[k], other.adam.v[k]) for k in self.adam.v)
        )


def dims_for(gallery: Gallery, cfg: TrainConfig) -> Dims:
    hidden = cfg.hidden_dim if cfg.hidden_dim is not None else gallery.n_features
    return Dims(
        n_attrs=gallery.n_attrs,
        n_features=gallery.n_features,
        embed_dim=gallery.n_features,
        hidden_dim=hidden,
    )


def train(
    train_view: Gallery,
    cfg: TrainConfig,
    resume: Checkpoint | None = None,
    eval_fn=None,
    log=None,
):
    """Run the training loop. Returns (checkpoint, per-epoch metrics).

    ``eval_fn(params, epoch)`` may return a per-round percentile list to fold
    into the metrics. On numeric divergence the loop aborts and the returned
    checkpoint is the last epoch that completed cleanly.
    """
    if len(train_view) == 0:
        raise ConfigError("training view is empty")
    if resume is not None:
        dims = resume.dims
        params = resume.params
        adam = resume.adam
        start_epoch = resume.epoch
        if resume.config.to_dict() != cfg.to_dict():
            raise ConfigError("resume checkpoint was produced with a different config")
    else:
        dims = dims_for(train_view, cfg)
        params = init_parameters(dims, cfg.seed)
        adam = AdamState.fresh(params.tensors())
        start_epoch = 0

    episodes = cfg.episodes_per_epoch or len(train_view)
    metrics = []
    good = Checkpoint(
        dims=dims, config=cfg, params=params.copy(),
        adam=_copy_adam(adam), epoch=start_epoch,
    )
    diverged = False

    for epoch in range(start_epoch, cfg.epochs):
        loss_sum = 0.0
        try:
            for batch_start in range(0, episodes, cfg.batch_size):
                batch = range(batch_start, min(batch_start + cfg.batch_size, episodes))
                grad_sum = params.zero_grads()
                for i in batch:
                    streams = EpisodeStreams(cfg.seed, i, scope=("train", epoch))
                    episode = rollout_episode(params, train_view, cfg, streams)
                    loss, grads = _episode_loss_from_rollout(
                        params, episode, train_view, cfg.margin
                    )
                    loss_sum += loss
                    if grads is not None:
                        for name in grad_sum:
                            grad_sum[name] += grads[name]
                scale = 1.0 / len(batch)
                for name in grad_sum:
                    grad_sum[name] *= scale
                adam_step(params.tensors(), grad_sum, adam, cfg.lr)
        except NumericError:
            diverged = True
            params = good.params
            adam = good.adam
            break

        entry = {"epoch": epoch, "loss": loss_sum / episodes}
        if eval_fn is not None:
            entry["percentile_by_round"] = eval_fn(params, epoch)
        metrics.append(entry)
        if log is not None:
            log(entry)
        good = Checkpoint(
            dims=dims, config=cfg, params=params.copy(),
            adam=_copy_adam(adam), epoch=epoch + 1,
        )

    ckpt = good if diverged else Checkpoint(
        dims=dims, config=cfg, params=params, adam=adam,
        epoch=max(start_epoch, cfg.epochs),
    )
    if diverged:
        metrics.append({"epoch": None, "diverged": True})
    return ckpt, metrics


def _copy_adam(adam: AdamState) -> AdamState:
    return AdamState(
        step=adam.step,
        m={k: v.copy() for k, v in adam.m.items()},
        v={k: v.copy() for k, v in adam.v.items()},
    )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Binary checkpoint: JSON header plus raw little-endian float64 tensors."""
    params = ckpt.params.tensors()
    ordered = sorted(params)
    header = {
        "dims": {
            "n_attrs": ckpt.dims.n_attrs,
            "n_features": ckpt.dims.n_features,
            "embed_dim": ckpt.dims.embed_dim,
            "hidden_dim": ckpt.dims.hidden_dim,
        },
        "config": ckpt.config.to_dict(),
        "epoch": ckpt.epoch,
        "adam_step": ckpt.adam.step,
        "tensors": [{"name": k, "shape": list(params[k].shape)} for k in ordered],
    }
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<IQ", _CKPT_VERSION, len(raw_header)))
        fh.write(raw_header)
        for name in ordered:
            fh.write(params[name].astype("<f8", copy=False).tobytes())
            fh.write(ckpt.adam.m[name].astype("<f8", copy=False).tobytes())
            fh.write(ckpt.adam.v[name].astype("<f8", copy=False).tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _CKPT_MAGIC:
        raise FormatError(f"{path}: bad magic, not a checkpoint")
    if len(data) < 16:
        raise FormatError(f"{path}: truncated header")
    version, header_len = struct.unpack_from("<IQ", data, 4)
    if version != _CKPT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    pos = 16
    try:
        header = json.loads(data[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header") from exc
    pos += header_len
    dims = Dims(**header["dims"])
    cfg = TrainConfig.from_dict(header["config"])
    shapes = expected_shapes(dims)
    listed = {t["name"]: tuple(t["shape"]) for t in header["tensors"]}
    if listed != {k: tuple(v) for k, v in shapes.items()}:
        raise FormatError(f"{path}: tensor shape table does not match dims")
    tensors, m, v = {}, {}, {}
    for entry in header["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        for store in (tensors, m, v):
            if pos + nbytes > len(data):
                raise FormatError(f"{path}: truncated at tensor {name}")
            store[name] = (
                np.frombuffer(data, dtype="<f8", count=count, offset=pos)
                .reshape(shape)
                .astype(np.float64)
            )
            pos += nbytes
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    params = parameters_from_tensors(dims, tensors)
    adam = AdamState(step=int(header["adam_step"]), m=m, v=v)
    return Checkpoint(
        dims=dims, config=cfg, params=params, adam=adam, epoch=int(header["epoch"])
    )
