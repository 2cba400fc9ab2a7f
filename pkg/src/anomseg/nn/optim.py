"""Bias-corrected Adam optimizer."""

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state, params, grads):
    """One in-place Adam update of params given grads.

    Moment buffers are allocated on first use and must keep matching shapes
    afterwards.  Raises FloatingPointError on non-finite gradients.
    """
    if len(params) != len(grads):
        raise ValueError("params and grads length mismatch")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise ValueError("optimizer state does not match parameter list")
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient in parameter {i} at step {state.step_count + 1}"
            )
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError("parameter/gradient/moment shape mismatch")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state
