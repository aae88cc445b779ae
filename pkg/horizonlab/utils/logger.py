"""Logging configuration and utilities"""

import json
import logging
import sys
import time
from datetime import datetime, timezone
from functools import wraps
from typing import Any, Dict, Optional

from horizonlab.core.config import settings


_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class StructuredFormatter(logging.Formatter):
    """Custom formatter for structured JSON logging"""

    def format(self, record: logging.LogRecord) -> str:
        log_data: Dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        # Fields passed through extra=
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                log_data[key] = value

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


def setup_logger(name: str) -> logging.Logger:
    """Set up a logger with structured formatting"""
    logger = logging.getLogger(name)

    if logger.handlers:
        return logger

    level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logger.setLevel(level)
    logger.propagate = False

    # stdout carries CLI tables; logs go to stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)

    if settings.log_level.upper() == "DEBUG":
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
    else:
        formatter = StructuredFormatter()

    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    return logger


def set_level(level: str) -> None:
    """Apply a log level to every horizonlab logger created so far"""
    numeric = getattr(logging, level.upper(), logging.INFO)
    for name, logger in logging.Logger.manager.loggerDict.items():
        if name.startswith("horizonlab") and isinstance(logger, logging.Logger):
            logger.setLevel(numeric)
            for handler in logger.handlers:
                handler.setLevel(numeric)


def log_execution_time(logger: logging.Logger):
    """Decorator to log function execution time"""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.time()
            try:
                result = func(*args, **kwargs)
                execution_time = (time.time() - start_time) * 1000
                logger.info(
                    f"{func.__name__} executed",
                    extra={
                        "function": func.__name__,
                        "execution_time_ms": round(execution_time, 2),
                        "status": "success"
                    }
                )
                return result
            except Exception as e:
                execution_time = (time.time() - start_time) * 1000
                logger.error(
                    f"{func.__name__} failed",
                    extra={
                        "function": func.__name__,
                        "execution_time_ms": round(execution_time, 2),
                        "status": "error",
                        "error": str(e)
                    }
                )
                raise

        return wrapper

    return decorator


def log_eigen_metrics(
    logger: logging.Logger,
    backend: str,
    size: int,
    eigenvalue: float,
    gap: float,
    residual: Optional[float] = None
):
    """Log metrics for a stability eigen solve"""
    logger.info(
        "Eigen solve completed",
        extra={
            "backend": backend,
            "size": size,
            "eigenvalue": eigenvalue,
            "gap": gap,
            "residual": residual,
            "event_type": "eigen_metrics"
        }
    )


def log_path_metrics(
    logger: logging.Logger,
    n_time: int,
    area_residual: float,
    boundary_residual: float,
    min_lambda: float,
    duration_seconds: float
):
    """Log metrics for a metric path build"""
    logger.info(
        "Metric path built",
        extra={
            "n_time": n_time,
            "area_residual": area_residual,
            "boundary_residual": boundary_residual,
            "min_lambda": min_lambda,
            "duration_seconds": round(duration_seconds, 2),
            "event_type": "path_metrics"
        }
    )


def log_verification_metrics(
    logger: logging.Logger,
    subject: str,
    flags: Dict[str, bool],
    duration_seconds: float
):
    """Log the outcome of a verification pass"""
    logger.info(
        f"Verification of {subject} completed",
        extra={
            "subject": subject,
            "passed": all(flags.values()),
            "failed_flags": [name for name, ok in flags.items() if not ok],
            "duration_seconds": round(duration_seconds, 2),
            "event_type": "verification_metrics"
        }
    )


cli_logger = setup_logger("horizonlab.cli")
