"""Adam optimizer over named parameter tensors.

Update rule, applied elementwise per tensor on step t:

    m <- beta1*m + (1-beta1)*g        v <- beta2*v + (1-beta2)*g^2
    mhat = m/(1-beta1^t)              vhat = v/(1-beta2^t)
    theta <- theta - alpha * mhat / (sqrt(vhat) + epsilon)

epsilon is added after the square root.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ShapeError


@dataclass
class AdamConfig:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    clip_norm: float | None = None  # global-norm gradient clipping; off by default

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        for name in ("beta1", "beta2"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {b}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass
class Adam:
    config: AdamConfig = field(default_factory=AdamConfig)
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update every tensor in params in place from its gradient.

        Validates the whole batch before touching anything, so a bad
        gradient never leaves the parameters half-updated.
        """
        if set(grads) != set(params):
            missing = sorted(set(params) - set(grads))
            extra = sorted(set(grads) - set(params))
            raise ShapeError(f"gradient keys do not match parameters "
                             f"(missing {missing}, unexpected {extra})")
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ShapeError(f"gradient for {name} has shape {g.shape}, "
                                 f"parameter has {p.shape}")
            if not np.all(np.isfinite(g)):
                raise NumericError(f"gradient for {name} contains NaN or Inf")
        if self.m and set(self.m) != set(params):
            raise ShapeError("optimizer state was built for a different parameter set")

        cfg = self.config
        if cfg.clip_norm is not None:
            total = np.sqrt(sum(float(np.sum(grads[k] * grads[k])) for k in grads))
            if total > cfg.clip_norm:
                scale = cfg.clip_norm / total
                grads = {k: g * scale for k, g in grads.items()}

        self.t += 1
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * (g * g)
            p -= cfg.alpha * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)
