from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np

from ..errors import ContractViolation
from .tensor import Parameter


@dataclass
class AdamState:
    """First/second moments per parameter name plus the step counter."""

    lr: float = 3.5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


class Adam:
    """Bias-corrected Adam over named parameters.

    Gradients are not cleared by ``step``; call ``zero_grad`` explicitly.
    """

    def __init__(self, params: Sequence[Parameter], state: AdamState):
        self.params = list(params)
        self.state = state
        for p in self.params:
            state.m.setdefault(p.name, np.zeros_like(p.data))
            state.v.setdefault(p.name, np.zeros_like(p.data))
            if state.m[p.name].shape != p.data.shape or state.v[p.name].shape != p.data.shape:
                raise ContractViolation(
                    f"Adam moments for {p.name} have shape {state.m[p.name].shape}, "
                    f"parameter has {p.data.shape}"
                )

    def step(self):
        for p in self.params:
            if p.grad is None:
                raise ContractViolation(f"parameter {p.name} has no gradient")

        s = self.state
        s.t += 1
        b1, b2 = s.beta1, s.beta2
        bias1 = 1.0 - b1**s.t
        bias2 = 1.0 - b2**s.t
        for p in self.params:
            g = p.grad
            m = b1 * s.m[p.name] + (1.0 - b1) * g
            v = b2 * s.v[p.name] + (1.0 - b2) * (g * g)
            m_hat = m / bias1
            v_hat = v / bias2
            p.data = p.data - s.lr * m_hat / (np.sqrt(v_hat) + s.epsilon)
            s.m[p.name] = m
            s.v[p.name] = v

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()
