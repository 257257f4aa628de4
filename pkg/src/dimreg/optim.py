"""Adam with an optional row-sparse (lazy) mode for embedding tables."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    _scratch: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def zeros_like(cls, params, **kw):
        return cls(np.zeros_like(params), np.zeros_like(params), **kw)

    def scratch(self, shape):
        if self._scratch is None or self._scratch.size < int(np.prod(shape)):
            self._scratch = np.empty(self.m.size, dtype=self.m.dtype)
        return self._scratch[:int(np.prod(shape))].reshape(shape)


def _moments_and_step(m, v, gradient, tmp, b1, b2, step, bc2, eps):
    """Update ``m``, ``v`` in place and leave the parameter decrement in ``tmp``."""
    m *= b1
    np.multiply(gradient, 1.0 - b1, out=tmp)
    m += tmp
    v *= b2
    np.multiply(gradient, gradient, out=tmp)
    tmp *= 1.0 - b2
    v += tmp
    np.multiply(v, 1.0 / bc2, out=tmp)
    np.sqrt(tmp, out=tmp)
    tmp += eps
    np.divide(m, tmp, out=tmp)
    tmp *= step


def adam_step(params, state: AdamState, gradient, eta: float, rows=None):
    """One bias-corrected Adam step, in place on ``params``.

    With ``rows`` given, ``gradient`` holds one row per index and only those
    rows (and their moments) change; the step counter is shared, as in
    sparse embedding optimisers.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    if rows is None:
        tmp = state.scratch(params.shape)
        _moments_and_step(state.m, state.v, gradient, tmp, b1, b2, eta / bc1, bc2, state.eps)
        params -= tmp
        return params
    m = state.m[rows]
    v = state.v[rows]
    tmp = state.scratch(m.shape)
    _moments_and_step(m, v, gradient, tmp, b1, b2, eta / bc1, bc2, state.eps)
    state.m[rows] = m
    state.v[rows] = v
    params[rows] -= tmp
    return params
