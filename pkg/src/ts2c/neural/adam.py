"""Adaptive-moment optimizer with bias correction."""

from dataclasses import dataclass, field

import numpy as np

BETA1, BETA2, EPS = 0.9, 0.999, 1e-8


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    b1: float = BETA1
    b2: float = BETA2
    eps: float = EPS

    @classmethod
    def zeros_like(cls, params, **kw):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)

    def copy(self):
        return AdamState([m.copy() for m in self.m], [v.copy() for v in self.v], self.t, self.b1, self.b2, self.eps)


def adam_step(state: AdamState, params, grads, lr):
    """Functional update: returns (new_state, new_params); inputs are left untouched."""
    new_state = state.copy()
    new_params = [p.copy() for p in params]
    Adam._apply(new_state, new_params, grads, lr)
    return new_state, new_params


@dataclass
class Adam:
    """In-place optimizer bound to a fixed list of parameter arrays."""

    params: list
    lr: float
    state: AdamState = field(default=None)

    def __post_init__(self):
        if self.state is None:
            self.state = AdamState.zeros_like(self.params)

    def step(self, grads):
        Adam._apply(self.state, self.params, grads, self.lr)

    @staticmethod
    def _apply(state, params, grads, lr):
        if len(grads) != len(params):
            raise ValueError("gradient list does not match parameter list")
        state.t += 1
        c1 = 1.0 - state.b1**state.t
        c2 = 1.0 - state.b2**state.t
        for p, g, m, v in zip(params, grads, state.m, state.v):
            m *= state.b1
            m += (1.0 - state.b1) * g
            v *= state.b2
            v += (1.0 - state.b2) * g * g
            # eps is applied to the bias-corrected second moment
            p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
