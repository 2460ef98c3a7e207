"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, ShapeError


@dataclass
class AdamWState:
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adamw_step(params, grads, state=None, lr=1e-4, weight_decay=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
    """One update; returns new ``(params, state)`` without mutating the inputs.

    ``params`` and ``grads`` are matching lists of arrays. Decay is applied to
    the parameters directly (``p -= lr * wd * p``), not folded into the
    gradient, followed by the bias-corrected Adam step.
    """
    if len(params) != len(grads):
        raise ShapeError("params and grads differ in length")
    for i, (p, g) in enumerate(zip(params, grads)):
        if np.shape(p) != np.shape(g):
            raise ShapeError(f"gradient {i} has shape {np.shape(g)}, parameter {np.shape(p)}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for parameter {i}")
    if state is None or not state.m:
        state = AdamWState(0, [np.zeros_like(p, dtype=np.float64) for p in params],
                           [np.zeros_like(p, dtype=np.float64) for p in params])
    t = state.step + 1
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        p = p - lr * weight_decay * p
        p = p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_p.append(p)
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamWState(t, new_m, new_v)
