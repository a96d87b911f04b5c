"""RMSprop with a per-parameter squared-gradient cache."""

from __future__ import annotations

import numpy as np

from .errors import NumericError


class RMSprop:
    """cache <- rho * cache + (1 - rho) * g^2; param <- param - lr * g / (sqrt(cache) + eps)."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = 0.001, rho: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.cache = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name in sorted(grads):
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericError(f"gradient explosion: non-finite gradient for {name!r}")
            cache = self.cache[name]
            cache *= self.rho
            cache += (1.0 - self.rho) * g * g
            params[name] -= self.lr * g / (np.sqrt(cache) + self.eps)
