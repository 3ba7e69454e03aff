"""Dense numerical kernel: affine maps, a GRU cell, Adam, gradient checking.

Everything here is explicit forward/backward with float64 math. Backward
passes return exact analytic gradients; ``grad_check`` is the independent
finite-difference oracle used to verify every one of them.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, InputShapeError, NumericError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def sigmoid(x: np.ndarray) -> np.ndarray:
    # Split by sign to stay stable for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _check_affine_shapes(W, b, x):
    if W.ndim != 2 or b.ndim != 1 or x.ndim != 1:
        raise InputShapeError("affine expects W 2-d, b and x 1-d")
    if b.shape[0] != W.shape[0] or x.shape[0] != W.shape[1]:
        raise InputShapeError(
            f"affine shapes disagree: W {W.shape}, b {b.shape}, x {x.shape}"
        )


def affine_forward(W: np.ndarray, b: np.ndarray, x: np.ndarray):
    """y = W x + b. Returns (y, cache)."""
    _check_affine_shapes(W, b, x)
    return W @ x + b, (W, x)


def affine_backward(grad_out: np.ndarray, cache):
    """Gradients (dW, db, dx) for y = W x + b."""
    W, x = cache
    return np.outer(grad_out, x), grad_out, W.T @ grad_out


@dataclass
class GruParams:
    """Gate weights for one GRU cell. U_* act on the input, V_* on state."""

    U_z: np.ndarray
    V_z: np.ndarray
    b_z: np.ndarray
    U_r: np.ndarray
    V_r: np.ndarray
    b_r: np.ndarray
    U_h: np.ndarray
    V_h: np.ndarray
    b_h: np.ndarray

    def zeros_like(self) -> "GruParams":
        return GruParams(**{f.name: np.zeros_like(getattr(self, f.name)) for f in fields(self)})


@dataclass
class GruCache:
    r_in: np.ndarray
    h_prev: np.ndarray
    z: np.ndarray
    rho: np.ndarray
    rh: np.ndarray
    h_tilde: np.ndarray


def gru_forward(p: GruParams, r_in: np.ndarray, h_prev: np.ndarray):
    """One GRU step. Returns (g, h, cache) with g == h (no output transform).

    z   = sigma(U_z r + V_z h_prev + b_z)        update gate
    rho = sigma(U_r r + V_r h_prev + b_r)        reset gate
    ht  = tanh(U_h r + V_h (rho * h_prev) + b_h) candidate state
    h   = (1 - z) * h_prev + z * ht
    """
    if r_in.shape[0] != p.U_z.shape[1] or h_prev.shape[0] != p.V_z.shape[1]:
        raise InputShapeError(
            f"gru shapes disagree: r_in {r_in.shape}, h_prev {h_prev.shape}"
        )
    z = sigmoid(p.U_z @ r_in + p.V_z @ h_prev + p.b_z)
    rho = sigmoid(p.U_r @ r_in + p.V_r @ h_prev + p.b_r)
    rh = rho * h_prev
    h_tilde = np.tanh(p.U_h @ r_in + p.V_h @ rh + p.b_h)
    h = (1.0 - z) * h_prev + z * h_tilde
    return h, h, GruCache(r_in=r_in, h_prev=h_prev, z=z, rho=rho, rh=rh, h_tilde=h_tilde)


def gru_backward(p: GruParams, grad_h: np.ndarray, cache: GruCache):
    """Gradients for one GRU step.

    ``grad_h`` must already fold together the gradient arriving through g and
    through h (they are the same tensor). Returns (grads, dr_in, dh_prev).
    """
    c = cache
    g = p.zeros_like()

    dz = grad_h * (c.h_tilde - c.h_prev)
    dh_tilde = grad_h * c.z
    dh_prev = grad_h * (1.0 - c.z)

    da_h = dh_tilde * (1.0 - c.h_tilde**2)
    g.U_h += np.outer(da_h, c.r_in)
    g.V_h += np.outer(da_h, c.rh)
    g.b_h += da_h
    dr_in = p.U_h.T @ da_h
    drh = p.V_h.T @ da_h
    drho = drh * c.h_prev
    dh_prev = dh_prev + drh * c.rho

    da_r = drho * c.rho * (1.0 - c.rho)
    g.U_r += np.outer(da_r, c.r_in)
    g.V_r += np.outer(da_r, c.h_prev)
    g.b_r += da_r
    dr_in += p.U_r.T @ da_r
    dh_prev += p.V_r.T @ da_r

    da_z = dz * c.z * (1.0 - c.z)
    g.U_z += np.outer(da_z, c.r_in)
    g.V_z += np.outer(da_z, c.h_prev)
    g.b_z += da_z
    dr_in += p.U_z.T @ da_z
    dh_prev += p.V_z.T @ da_z

    return g, dr_in, dh_prev


@dataclass
class AdamState:
    """First/second moment accumulators per named parameter tensor."""

    step: int
    m: dict
    v: dict

    @classmethod
    def fresh(cls, params: dict) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(a) for k, a in params.items()},
            v={k: np.zeros_like(a) for k, a in params.items()},
        )


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update, zero weight decay, in place.

    Aborting on non-finite gradients keeps a diverged run from silently
    poisoning the accumulators.
    """
    if lr < 0:
        raise ConfigError(f"learning rate must be >= 0, got {lr}")
    if set(params) != set(grads) or set(params) != set(state.m):
        raise InputShapeError("params, grads, and adam state disagree on names")
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NumericError(f"non-finite gradient in {name}")
    state.step += 1
    bc1 = 1.0 - ADAM_BETA1**state.step
    bc2 = 1.0 - ADAM_BETA2**state.step
    for name, grad in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * grad
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * grad * grad
        params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)


def flatten_params(params: dict) -> np.ndarray:
    """Concatenate named tensors (sorted by name) into one float64 vector."""
    return np.concatenate(
        [np.asarray(params[k], dtype=np.float64).ravel() for k in sorted(params)]
    )


def unflatten_params(vector: np.ndarray, template: dict) -> dict:
    out = {}
    pos = 0
    for k in sorted(template):
        size = template[k].size
        out[k] = vector[pos : pos + size].reshape(template[k].shape).copy()
        pos += size
    if pos != vector.size:
        raise InputShapeError("vector length does not match template")
    return out


def grad_check(f, params: dict, analytic: dict, h: float = 1e-5) -> float:
    """Max relative error between analytic gradients and central differences.

    ``f`` maps a params dict to a scalar. Relative error uses the denominator
    max(|analytic|, |numeric|, 1e-8) per coordinate.
    """
    theta = flatten_params(params)
    flat_analytic = flatten_params(analytic)
    worst = 0.0
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + h
        f_plus = f(unflatten_params(theta, params))
        theta[i] = orig - h
        f_minus = f(unflatten_params(theta, params))
        theta[i] = orig
        numeric = (f_plus - f_minus) / (2.0 * h)
        a = flat_analytic[i]
        err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
        worst = max(worst, err)
    return worst
