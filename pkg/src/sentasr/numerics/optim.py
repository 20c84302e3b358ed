"""Adam optimizer and global-norm gradient clipping."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericsError
from .tensor import Tensor


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for a named parameter set."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, beta1=0.9, beta2=0.999, eps=1e-8):
        state = cls(beta1=beta1, beta2=beta2, eps=eps)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


def global_norm(grads):
    total = 0.0
    for g in grads.values():
        d = g.data if isinstance(g, Tensor) else g
        total += float(np.sum(d.astype(np.float64) ** 2))
    return math.sqrt(total)


def clip_global_norm(grads, max_norm):
    """Scale all gradients by max_norm/||g|| when the global L2 norm exceeds it.

    Returns (clipped grads, pre-clip norm). Non-finite gradients are an error.
    """
    if max_norm <= 0:
        raise NumericsError(f"max_norm must be positive, got {max_norm}")
    for name, g in grads.items():
        d = g.data if isinstance(g, Tensor) else g
        if not np.all(np.isfinite(d)):
            raise NumericsError(f"non-finite gradient for {name!r}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    clipped = {}
    for name, g in grads.items():
        d = g.data if isinstance(g, Tensor) else g
        clipped[name] = Tensor((d * np.asarray(scale, dtype=d.dtype)))
    return clipped, norm


def adam_step(state, params, grads, lr):
    """One bias-corrected Adam update; returns (state, new params).

    The state is mutated in place (step count and moment accumulators) and
    also returned for convenience. Parameters are replaced, not mutated.
    """
    if lr <= 0:
        raise NumericsError(f"learning rate must be positive, got {lr}")
    state.step += 1
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_params = {}
    for name, p in params.items():
        g = grads[name]
        gd = g.data if isinstance(g, Tensor) else g
        if gd.shape != p.data.shape:
            raise NumericsError(
                f"gradient shape {gd.shape} != param shape {p.data.shape} for {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * gd
        v *= b2
        v += (1.0 - b2) * gd * gd
        m_hat = m / c1
        v_hat = v / c2
        upd = p.data - np.asarray(lr, dtype=p.data.dtype) * (
            m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)
        new_params[name] = Tensor(upd, requires_grad=p.requires_grad)
    return state, new_params
