import numpy as np
from dataclasses import dataclass, field


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(tensors: dict, grads: dict, state: AdamState, lr: float):
    """One bias-corrected Adam update, applied in place to ``tensors``."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(tensors[name])
            state.v[name] = np.zeros_like(tensors[name])
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        tensors[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return tensors, state
