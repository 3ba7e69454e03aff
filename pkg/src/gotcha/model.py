"""Dialog model: fuses per-round feedback into a query representation.

Per round, the relevance reply and the candidate's attributes pass through
the indication layer (one affine map over their concatenation, so the model
can weight more indicative attributes), the candidate's feature embedding
through a second affine map, and both halves are fused by a third. A GRU
carries state across rounds; its output maps to the query vector s_t that the
retrieval scan compares against gallery features.

All maps are purely affine; nonlinearity enters only inside the GRU.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputShapeError
from .nn import GruParams, affine_forward, gru_backward, gru_forward
from .seeding import stream

_GRU_FIELDS = ("U_z", "V_z", "b_z", "U_r", "V_r", "b_r", "U_h", "V_h", "b_h")


@dataclass(frozen=True)
class Dims:
    """Configured sizes: attributes A, features F, embedding E, hidden H.

    The retrieval scan compares s_t (length E) directly against stored
    features (length F), so E must equal F.
    """

    n_attrs: int = 40
    n_features: int = 256
    embed_dim: int = 256
    hidden_dim: int = 256

    def __post_init__(self):
        for name in ("n_attrs", "n_features", "embed_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.embed_dim != self.n_features:
            raise ConfigError(
                f"embed_dim ({self.embed_dim}) must equal n_features "
                f"({self.n_features}): query vectors are compared to raw features"
            )


@dataclass
class ModelParameters:
    """All trainable tensors, float64."""

    dims: Dims
    W_A: np.ndarray  # (E, 2A) indication layer
    b_A: np.ndarray
    W_I: np.ndarray  # (E, F) feature projection
    b_I: np.ndarray
    W_M: np.ndarray  # (E, 2E) fusion
    b_M: np.ndarray
    gru: GruParams  # E -> H
    W_G: np.ndarray  # (E, H) output map
    b_G: np.ndarray

    def tensors(self) -> dict:
        """Named view of every tensor (shared storage, not copies)."""
        out = {
            "W_A": self.W_A,
            "b_A": self.b_A,
            "W_I": self.W_I,
            "b_I": self.b_I,
            "W_M": self.W_M,
            "b_M": self.b_M,
            "W_G": self.W_G,
            "b_G": self.b_G,
        }
        for name in _GRU_FIELDS:
            out[f"gru.{name}"] = getattr(self.gru, name)
        return out

    def copy(self) -> "ModelParameters":
        t = {k: v.copy() for k, v in self.tensors().items()}
        return parameters_from_tensors(self.dims, t)

    def zero_grads(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.tensors().items()}

    def check_finite(self) -> None:
        for name, t in self.tensors().items():
            if not np.all(np.isfinite(t)):
                raise InputShapeError(f"parameter tensor {name} has non-finite entries")


def expected_shapes(dims: Dims) -> dict:
    a, f, e, h = dims.n_attrs, dims.n_features, dims.embed_dim, dims.hidden_dim
    shapes = {
        "W_A": (e, 2 * a),
        "b_A": (e,),
        "W_I": (e, f),
        "b_I": (e,),
        "W_M": (e, 2 * e),
        "b_M": (e,),
        "W_G": (e, h),
        "b_G": (e,),
    }
    for gate in ("z", "r", "h"):
        shapes[f"gru.U_{gate}"] = (h, e)
        shapes[f"gru.V_{gate}"] = (h, h)
        shapes[f"gru.b_{gate}"] = (h,)
    return shapes


def parameters_from_tensors(dims: Dims, tensors: dict) -> ModelParameters:
    shapes = expected_shapes(dims)
    if set(tensors) != set(shapes):
        raise InputShapeError("tensor table does not match the parameter layout")
    for name, shape in shapes.items():
        if tuple(tensors[name].shape) != shape:
            raise InputShapeError(
                f"tensor {name} has shape {tensors[name].shape}, expected {shape}"
            )
    gru = GruParams(**{n: tensors[f"gru.{n}"] for n in _GRU_FIELDS})
    return ModelParameters(
        dims=dims,
        W_A=tensors["W_A"],
        b_A=tensors["b_A"],
        W_I=tensors["W_I"],
        b_I=tensors["b_I"],
        W_M=tensors["W_M"],
        b_M=tensors["b_M"],
        gru=gru,
        W_G=tensors["W_G"],
        b_G=tensors["b_G"],
    )


def init_parameters(dims: Dims, seed: int) -> ModelParameters:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    rng = stream(seed, "init-params")
    tensors = {}
    for name, shape in expected_shapes(dims).items():
        if len(shape) == 1:
            tensors[name] = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(shape[1])
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return parameters_from_tensors(dims, tensors)


@dataclass
class DialogState:
    """Hidden state and bookkeeping for one retrieval dialog."""

    h: np.ndarray
    round_index: int = 0
    history: list = field(default_factory=list)


def fresh_state(dims: Dims) -> DialogState:
    return DialogState(h=np.zeros(dims.hidden_dim))


@dataclass
class EncodeCache:
    oa: np.ndarray  # concatenated relevance + attribute input (2A,)
    m: np.ndarray  # candidate features (F,)
    xf: np.ndarray  # concatenated encoder halves (2E,)


@dataclass
class RoundCache:
    enc: EncodeCache
    gru: object
    g: np.ndarray


def _encoder_input(relevance, cand_attrs, dims: Dims, mode: str) -> np.ndarray:
    rel = np.asarray(relevance, dtype=np.float64)
    if rel.shape != (dims.n_attrs,):
        raise InputShapeError(
            f"relevance has shape {rel.shape}, expected ({dims.n_attrs},)"
        )
    if mode == "full-no-attr":
        attrs = np.zeros(dims.n_attrs)
    else:
        attrs = np.asarray(cand_attrs, dtype=np.float64)
        if attrs.shape != (dims.n_attrs,):
            raise InputShapeError(
                f"candidate attributes have shape {attrs.shape}, "
                f"expected ({dims.n_attrs},)"
            )
    return np.concatenate([rel, attrs])


def encode_round(
    p: ModelParameters, relevance, cand_attrs, cand_features, mode: str = "progressive"
):
    """Encode one round of feedback into r_t. Returns (r_t, cache)."""
    dims = p.dims
    oa = _encoder_input(relevance, cand_attrs, dims, mode)
    m = np.asarray(cand_features, dtype=np.float64)
    if m.shape != (dims.n_features,):
        raise InputShapeError(
            f"candidate features have shape {m.shape}, expected ({dims.n_features},)"
        )
    x, _ = affine_forward(p.W_A, p.b_A, oa)
    f, _ = affine_forward(p.W_I, p.b_I, m)
    xf = np.concatenate([x, f])
    r, _ = affine_forward(p.W_M, p.b_M, xf)
    return r, EncodeCache(oa=oa, m=m, xf=xf)


def aggregate(p: ModelParameters, r_t: np.ndarray, state: DialogState):
    """Fold r_t into the dialog state. Returns (s_t, new state, cache)."""
    g, h, gru_cache = gru_forward(p.gru, r_t, state.h)
    s, _ = affine_forward(p.W_G, p.b_G, g)
    new_state = DialogState(
        h=h, round_index=state.round_index + 1, history=list(state.history)
    )
    return s, new_state, RoundCache(enc=None, gru=gru_cache, g=g)


def episode_forward(p: ModelParameters, rounds, mode: str = "progressive"):
    """Run encode + aggregate over a whole episode from h_0 = 0.

    ``rounds`` is a sequence of (relevance, cand_attrs, cand_features)
    triples. Returns (list of s_t, list of RoundCache).
    """
    if len(rounds) == 0:
        raise InputShapeError("episode must contain at least one round")
    state = fresh_state(p.dims)
    outputs, caches = [], []
    for relevance, cand_attrs, cand_features in rounds:
        r_t, enc_cache = encode_round(p, relevance, cand_attrs, cand_features, mode)
        s_t, state, cache = aggregate(p, r_t, state)
        cache.enc = enc_cache
        outputs.append(s_t)
        caches.append(cache)
    return outputs, caches


def episode_backward(p: ModelParameters, caches, grad_s) -> dict:
    """Backpropagate through the whole dialog.

    ``grad_s[t]`` is the loss gradient w.r.t. s_t (zero vector where the
    round's hinge is inactive). Round inputs are constants, so only parameter
    gradients come back. Returns a dict matching ``p.tensors()``.
    """
    if len(caches) != len(grad_s):
        raise InputShapeError("caches and gradients disagree on round count")
    grads = p.zero_grads()
    e = p.dims.embed_dim
    dh_next = np.zeros(p.dims.hidden_dim)
    for cache, ds in zip(reversed(caches), reversed(grad_s)):
        grads["W_G"] += np.outer(ds, cache.g)
        grads["b_G"] += ds
        dg = p.W_G.T @ ds
        # g is h itself: fold the output-path gradient into the state path.
        dh = dh_next + dg
        gru_grads, dr, dh_prev = gru_backward(p.gru, dh, cache.gru)
        for name in _GRU_FIELDS:
            grads[f"gru.{name}"] += getattr(gru_grads, name)
        dh_next = dh_prev
        grads["W_M"] += np.outer(dr, cache.enc.xf)
        grads["b_M"] += dr
        dxf = p.W_M.T @ dr
        dx, df = dxf[:e], dxf[e:]
        grads["W_A"] += np.outer(dx, cache.enc.oa)
        grads["b_A"] += dx
        grads["W_I"] += np.outer(df, cache.enc.m)
        grads["b_I"] += df
    return grads
