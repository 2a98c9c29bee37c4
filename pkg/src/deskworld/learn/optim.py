"""Adam over named-tensor parameter maps."""

from __future__ import annotations

import numpy as np

from deskworld.learn.errors import ParameterError

__all__ = ["Adam"]


class Adam:
    """Per-name Adam state; only names present in ``grads`` are stepped.

    Leaving a name out of a step leaves both its value and its moment
    estimates untouched, which is what lets per-task temperatures stay
    exactly unchanged when their task contributed no samples.
    """

    def __init__(self, lr: float = 3e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._state: dict[str, tuple[np.ndarray, np.ndarray, int]] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, grad in grads.items():
            if name not in params:
                raise ParameterError(f"gradient for unknown parameter {name!r}")
            value = params[name]
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != value.shape:
                raise ParameterError(
                    f"gradient shape {grad.shape} does not match parameter "
                    f"{name!r} shape {value.shape}"
                )
            m, v, t = self._state.get(
                name, (np.zeros_like(value), np.zeros_like(value), 0)
            )
            t += 1
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            params[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            self._state[name] = (m, v, t)
