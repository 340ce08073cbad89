import logging
import os
from typing import Any

import colorlog

THREADS_ENV = "TRANSG_THREADS"


def setup_logging(level: str = "INFO"):
    """Set up colored logging for the entire application."""
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    if any(getattr(h, "_transg", False) for h in root_logger.handlers):
        return

    handler = colorlog.StreamHandler()
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            log_colors={
                "DEBUG": "green",
                "INFO": "blue",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "red,bg_white",
            },
        )
    )
    handler._transg = True
    root_logger.addHandler(handler)


def worker_count() -> int:
    """Thread-pool width, capped by TRANSG_THREADS (default 1)."""
    raw = os.getenv(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logging.getLogger(__name__).warning(
            f"Ignoring non-integer {THREADS_ENV}={raw!r}; using 1 worker"
        )
        return 1


def make_json_serializable(obj: Any):
    """Convert configs, numpy scalars and arrays into plain JSON values."""
    if isinstance(obj, (str, int, float, bool, type(None))):
        return obj
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, dict):
        return {str(key): make_json_serializable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [make_json_serializable(element) for element in obj]
    if hasattr(obj, "__dict__"):
        return make_json_serializable(obj.__dict__)
    return str(obj)
