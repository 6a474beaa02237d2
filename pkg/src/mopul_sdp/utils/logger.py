"""Structured JSON logging setup using structlog.

Log lines go to stderr so that command summaries printed on stdout stay
machine-readable. Each entry carries timestamp, level, logger name, call site
and ``service="mopul_sdp"``. Numpy scalars and small arrays are rendered as
plain JSON numbers and lists.
"""

import logging
import os
import sys
from typing import Any

import numpy as np
import structlog

SERVICE_NAME = "mopul_sdp"

# arrays above this size are summarised by shape
MAX_LOGGED_ARRAY = 64


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        if value.size <= MAX_LOGGED_ARRAY:
            return value.tolist()
        return {"shape": list(value.shape), "dtype": str(value.dtype)}
    return str(value)


def configure_logger(level: str | None = None) -> structlog.BoundLogger:
    """Configure structlog and return the package-level bound logger.

    Args:
        level: Log level name. Falls back to ``MOPUL_LOG_LEVEL``, then ``INFO``.

    Returns:
        Configured structlog BoundLogger instance

    Example:
        >>> logger = configure_logger("debug")
        >>> logger.info("Program assembled", form="soc", num_vars=42)
        {"timestamp": "2026-10-17T10:30:00Z", "level": "info", "service": "mopul_sdp",
         "event": "Program assembled", "form": "soc", "num_vars": 42}
    """
    level_name = (level or os.getenv("MOPUL_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level_name, logging.INFO),
        force=True,
    )

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.stdlib.add_logger_name,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.CallsiteParameterAdder(
                parameters=[
                    structlog.processors.CallsiteParameter.MODULE,
                    structlog.processors.CallsiteParameter.LINENO,
                ]
            ),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(default=_json_default),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    return structlog.get_logger(SERVICE_NAME).bind(service=SERVICE_NAME)


logger = configure_logger()


def get_logger(name: str | None = None, **initial_values: Any) -> structlog.BoundLogger:
    """Module logger bound to ``service`` plus any extra context.

    Example:
        >>> log = get_logger("solver", form="lmi")
        >>> log.debug("Iteration", iteration=3, mu=1e-4)
    """
    if name:
        return structlog.get_logger(f"{SERVICE_NAME}.{name}").bind(
            service=SERVICE_NAME, **initial_values
        )
    return logger.bind(**initial_values)


def set_level(level: str) -> None:
    """Change the active level; loggers bound at import time follow the root logger."""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))
