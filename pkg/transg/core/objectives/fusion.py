from dataclasses import asdict, dataclass
from typing import Dict, Optional

from ..errors import ConfigurationError
from ..numerics import Tensor, ops


@dataclass
class LossBreakdown:
    """Scalar values of one step's loss terms; absent terms are 0."""

    total: float = 0.0
    gpc: float = 0.0
    gpc_seq: float = 0.0
    gpc_ske: float = 0.0
    stpr_st: float = 0.0
    stpr_tr: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    def __add__(self, other: "LossBreakdown") -> "LossBreakdown":
        return LossBreakdown(**{k: v + getattr(other, k) for k, v in self.to_dict().items()})

    def scaled(self, factor: float) -> "LossBreakdown":
        return LossBreakdown(**{k: v * factor for k, v in self.to_dict().items()})


def _unit_interval(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")


def recombine(gpc: float, stpr_st: float, stpr_tr: float, beta: float, lam: float) -> float:
    return lam * gpc + (1.0 - lam) * (beta * stpr_st + (1.0 - beta) * stpr_tr)


def total_loss(
    l_gpc: Optional[Tensor],
    l_stpr_st: Optional[Tensor],
    l_stpr_tr: Optional[Tensor],
    beta: float,
    lam: float,
) -> Tensor:
    """lam * L_gpc + (1 - lam) * (beta * L_st + (1 - beta) * L_tr).

    A missing term contributes 0; a term whose weight is 0 is not evaluated.
    """
    _unit_interval("beta", beta)
    _unit_interval("lam", lam)
    weighted = [
        (l_gpc, lam),
        (l_stpr_st, (1.0 - lam) * beta),
        (l_stpr_tr, (1.0 - lam) * (1.0 - beta)),
    ]
    total = None
    for term, weight in weighted:
        if term is None or weight == 0.0:
            continue
        part = ops.scale(term, weight)
        total = part if total is None else ops.add(total, part)
    return total if total is not None else Tensor(0.0)
