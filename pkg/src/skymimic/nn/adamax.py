"""Adamax optimizer (infinity-norm variant of Adam)."""

from __future__ import annotations

import numpy as np

from .params import ParamSet


class AdamaxState:
    """Per-parameter first-moment and infinity-norm accumulators."""

    def __init__(self, params: ParamSet, lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = params.zeros_like()
        self.u = params.zeros_like()


def adamax_update(params: ParamSet, grads: ParamSet,
                  state: AdamaxState) -> None:
    """In-place Adamax step: m <- b1 m + (1-b1) g, u <- max(b2 u, |g|),
    p <- p - lr/(1-b1^t) * m/(u+eps)."""
    params.check_mirror(grads)
    state.step += 1
    bias = 1.0 - state.beta1 ** state.step
    for k in params:
        g = grads[k]
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.u[k] = np.maximum(state.beta2 * state.u[k], np.abs(g))
        params[k] = params[k] - (state.lr / bias) * state.m[k] / (
            state.u[k] + state.eps)
