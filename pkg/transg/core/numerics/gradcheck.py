import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .tensor import Parameter, Tape, Tensor, no_record

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4


@dataclass
class GradCheckRow:
    """Analytic vs. central-difference gradient agreement for one parameter group."""

    group: str
    size: int
    max_abs_error: float
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.rel_error < self.tolerance)

    def to_dict(self) -> Dict[str, object]:
        return {
            "group": self.group,
            "size": self.size,
            "max_abs_error": self.max_abs_error,
            "rel_error": self.rel_error,
            "passed": self.passed,
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-12)
    return float(np.max(np.abs(analytic - numeric))) / scale


def analytic_gradients(
    loss_fn: Callable[[], Tensor], params: Sequence[Parameter]
) -> Dict[str, np.ndarray]:
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    tape.backward(loss)
    return {p.name: p.grad.copy() for p in params}


def numerical_gradient(
    loss_fn: Callable[[], Tensor], param: Parameter, step: float = DEFAULT_STEP
) -> np.ndarray:
    """Central differences, one coordinate at a time; ``param`` is restored afterwards."""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    with no_record():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            upper = loss_fn().item()
            flat[i] = original - step
            lower = loss_fn().item()
            flat[i] = original
            grad.reshape(-1)[i] = (upper - lower) / (2.0 * step)
    return grad


def gradient_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    groups: Optional[Dict[str, Sequence[str]]] = None,
) -> List[GradCheckRow]:
    """Compare tape gradients of ``loss_fn`` against central differences.

    ``loss_fn`` must be deterministic (fixed masks, fixed batch). Each
    parameter is its own group unless ``groups`` maps a group name to
    parameter names.
    """
    params = list(params)
    analytic = analytic_gradients(loss_fn, params)
    numeric = {p.name: numerical_gradient(loss_fn, p, step) for p in params}
    if groups is None:
        groups = {p.name: [p.name] for p in params}

    rows = []
    for group, names in groups.items():
        a = np.concatenate([analytic[name].reshape(-1) for name in names]) if names else np.zeros(0)
        n = np.concatenate([numeric[name].reshape(-1) for name in names]) if names else np.zeros(0)
        abs_error = float(np.max(np.abs(a - n))) if a.size else 0.0
        row = GradCheckRow(group, int(a.size), abs_error, relative_error(a, n), tolerance)
        logger.info(
            f"gradcheck {group}: size={row.size} rel_error={row.rel_error:.3e} "
            f"{'ok' if row.passed else 'FAIL'}"
        )
        rows.append(row)
    for p in params:
        p.zero_grad()
    return rows
