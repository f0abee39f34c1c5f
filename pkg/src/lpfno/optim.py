"""Adam with bias correction and a step learning-rate schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def step_lr(epoch: int, base_lr: float, step_size: int = 100, gamma: float = 0.1) -> float:
    """Learning rate after ``epoch`` completed epochs: decays by ``gamma`` every ``step_size``."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return base_lr * gamma ** (epoch // step_size)


def _real_view(a: np.ndarray) -> np.ndarray:
    # complex parameters are optimised as independent (re, im) pairs
    return a.view(a.real.dtype) if np.iscomplexobj(a) else a


@dataclass
class Adam:
    params: dict  # name -> Tensor
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.m.setdefault(name, np.zeros_like(_real_view(p.data)))
            self.v.setdefault(name, np.zeros_like(_real_view(p.data)))

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self, lr: float | None = None):
        lr = self.lr if lr is None else lr
        for name, p in self.params.items():
            if p.grad is not None and not np.all(np.isfinite(p.grad)):
                raise FloatingPointError(f"non-finite gradient in parameter {name!r}")
        b1, b2 = self.betas
        self.t += 1
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for name, p in self.params.items():
            m, v = self.m[name], self.v[name]
            if p.grad is None:
                g = np.zeros_like(m)
            else:
                g = _real_view(np.ascontiguousarray(p.grad))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            update = (lr / c1) * m / (np.sqrt(v / c2) + self.eps)
            _real_view(p.data)[...] -= update.astype(m.dtype, copy=False)

    def state_arrays(self) -> dict:
        out = {}
        for name in self.params:
            out[f"adam.m.{name}"] = self.m[name]
            out[f"adam.v.{name}"] = self.v[name]
        return out
