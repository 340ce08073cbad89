from typing import Any, Dict, List, Optional


class TransgError(Exception):
    """Base class for every error raised by transg."""

    kind = "transg_error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": self.message, "details": self.details}


class ConfigurationError(TransgError, ValueError):
    """Invalid hyperparameters, graph definitions or run configuration."""

    kind = "configuration_error"

    def __init__(self, message: str, violations: Optional[List[str]] = None, **details):
        self.violations = list(violations) if violations else [message]
        super().__init__(message, {"violations": self.violations, **details})

    @classmethod
    def from_violations(cls, violations: List[str]) -> "ConfigurationError":
        summary = f"{len(violations)} configuration constraint(s) violated: " + "; ".join(
            violations
        )
        return cls(summary, violations=violations)


class DimensionError(TransgError, ValueError):
    kind = "dimension_error"

    def __init__(self, op: str, *shapes, message: Optional[str] = None):
        text = message or f"{op}: incompatible shapes " + " and ".join(
            str(tuple(s)) for s in shapes
        )
        super().__init__(text, {"op": op, "shapes": [list(s) for s in shapes]})


class ContractViolation(TransgError, AssertionError):
    """A caller broke a documented precondition."""

    kind = "contract_violation"


class SchemaError(TransgError):
    kind = "schema_error"


class EmptyDatasetError(SchemaError):
    kind = "empty_dataset"

    def __init__(self, message: str = "no sequences", **details):
        super().__init__(message, details)


class ParseError(TransgError):
    kind = "parse_error"

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}", {"path": path, "line": line})
        self.path = path
        self.line = line


class SamplingError(TransgError):
    kind = "sampling_error"


class DivergenceError(TransgError):
    kind = "divergence"

    def __init__(self, step: int, value: float):
        super().__init__(
            f"non-finite loss {value} at step {step}", {"step": step, "value": repr(value)}
        )
        self.step = step


class IncompatibleCheckpointError(TransgError):
    kind = "incompatible_checkpoint"
