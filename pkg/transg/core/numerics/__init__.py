from . import ops
from .gradcheck import GradCheckRow, gradient_check, numerical_gradient, relative_error
from .linalg import fix_signs, jacobi_eigh, sym_eig
from .ops import RunningStats
from .optim import Adam, AdamState
from .rng import SeededRng
from .tensor import (
    Parameter,
    Tape,
    Tensor,
    active_tape,
    as_tensor,
    debug_checks,
    debug_enabled,
    no_record,
    zero_grads,
)

__all__ = [
    "ops",
    "Tensor",
    "Parameter",
    "Tape",
    "active_tape",
    "as_tensor",
    "no_record",
    "debug_checks",
    "debug_enabled",
    "zero_grads",
    "RunningStats",
    "Adam",
    "AdamState",
    "SeededRng",
    "sym_eig",
    "jacobi_eigh",
    "fix_signs",
    "GradCheckRow",
    "gradient_check",
    "numerical_gradient",
    "relative_error",
]
