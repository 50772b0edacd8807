#!/usr/bin/env python3
"""
Structured logging for the verification engine

Console lines stay human readable. When a log directory is configured (argument
or ATENSOR_LOG_DIR), every record is also written as one JSON object per line
to app.log, and errors additionally to error.log. Keyword context passed to
the logging calls becomes top-level JSON fields.
"""

import json
import logging
import logging.handlers
import os
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

import psutil

CONSOLE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
APP_LOG = ("app.log", 10 * 1024 * 1024, 5, logging.DEBUG)
ERROR_LOG = ("error.log", 5 * 1024 * 1024, 3, logging.ERROR)

# JSON key -> LogRecord attribute
RECORD_FIELDS = (
    ("level", "levelname"),
    ("logger", "name"),
    ("message", None),
    ("module", "module"),
    ("function", "funcName"),
    ("line", "lineno"),
    ("thread", "threadName"),
)


def _level(name: str) -> int:
    return getattr(logging, str(name).upper(), logging.INFO)


class StructuredFormatter(logging.Formatter):
    """One JSON object per record, context fields merged at the top level"""

    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {"timestamp": datetime.fromtimestamp(record.created).isoformat()}
        for key, attr in RECORD_FIELDS:
            entry[key] = record.getMessage() if attr is None else getattr(record, attr, None)

        context = getattr(record, "context", None)
        if isinstance(context, dict):
            entry.update(context)

        if record.exc_info and record.exc_info[0] is not None:
            exc_type, exc, _ = record.exc_info
            entry["exception"] = {
                "type": exc_type.__name__,
                "message": str(exc),
                "traceback": self.formatException(record.exc_info),
            }
        return json.dumps(entry, default=str, ensure_ascii=False)


def _rotating_handler(log_dir: Path, spec) -> logging.Handler:
    filename, max_bytes, backups, level = spec
    handler = logging.handlers.RotatingFileHandler(
        str(log_dir / filename), maxBytes=max_bytes, backupCount=backups, encoding="utf-8"
    )
    handler.setFormatter(StructuredFormatter())
    handler.setLevel(level)
    return handler


class StructuredLogger:
    """Wraps a stdlib logger; logging calls take keyword context"""

    def __init__(self, name: str, log_dir: Optional[Path] = None, level: str = "INFO"):
        self.logger = logging.getLogger(name)
        self.logger.propagate = False
        # a rebuilt logger replaces its handlers instead of stacking them
        for old in list(self.logger.handlers):
            self.logger.removeHandler(old)
            old.close()

        self.console = logging.StreamHandler()
        self.console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        self.logger.addHandler(self.console)

        if log_dir is not None:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)
            for spec in (APP_LOG, ERROR_LOG):
                self.logger.addHandler(_rotating_handler(log_dir, spec))
        self.set_level(level)

    def set_level(self, level: str) -> None:
        """Logger and console threshold; file handlers keep their own"""
        resolved = _level(level)
        self.logger.setLevel(resolved)
        self.console.setLevel(resolved)

    def _emit(self, level: int, message: str, exception: Optional[BaseException], context: Dict[str, Any]):
        fields = {k: v for k, v in context.items() if v is not None}
        exc_info = None
        if exception is not None:
            fields["error_type"] = type(exception).__name__
            fields["error_message"] = str(exception)
            exc_info = (type(exception), exception, exception.__traceback__)
        self.logger.log(level, message, exc_info=exc_info, extra={"context": fields})

    def debug(self, message: str, **context):
        self._emit(logging.DEBUG, message, None, context)

    def info(self, message: str, **context):
        self._emit(logging.INFO, message, None, context)

    def warning(self, message: str, **context):
        self._emit(logging.WARNING, message, None, context)

    def error(self, message: str, exception: Optional[BaseException] = None, **context):
        self._emit(logging.ERROR, message, exception, context)

    def critical(self, message: str, exception: Optional[BaseException] = None, **context):
        self._emit(logging.CRITICAL, message, exception, context)


_registry: Dict[str, StructuredLogger] = {}


def get_logger(name: str, log_dir: Optional[Path] = None, level: Optional[str] = None) -> StructuredLogger:
    """Shared logger per name; an explicit log_dir rebuilds it"""
    existing = _registry.get(name)
    if existing is not None and log_dir is None:
        return existing
    env_dir = os.getenv("ATENSOR_LOG_DIR")
    structured = StructuredLogger(
        name,
        log_dir if log_dir is not None else (Path(env_dir) if env_dir else None),
        level or os.getenv("LOG_LEVEL", "INFO"),
    )
    _registry[name] = structured
    return structured


def set_level(level: str) -> None:
    """Apply a console level to every logger created so far"""
    for structured in _registry.values():
        structured.set_level(level)


class PerformanceMonitor:
    """Times a block; logs duration and resident memory when it ends"""

    def __init__(self, logger: StructuredLogger, operation: str, threshold: float = 30.0, **context):
        self.logger = logger
        self.operation = operation
        self.threshold = threshold
        self.context = context
        self.start_time: Optional[float] = None
        self.duration: Optional[float] = None

    def __enter__(self) -> "PerformanceMonitor":
        self.logger.debug(f"Starting operation: {self.operation}", **self.context)
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self.start_time is None:
            return
        self.duration = time.perf_counter() - self.start_time
        rss = psutil.Process().memory_info().rss
        fields: Dict[str, Any] = {
            **self.context,
            "duration_ms": round(self.duration * 1000, 2),
            "rss_mb": round(rss / 2**20, 1),
        }

        if exc_type is not None:
            self.logger.error(
                f"Operation failed: {self.operation}",
                exception_type=exc_type.__name__,
                exception_message=str(exc_val),
                **fields,
            )
        elif self.duration > self.threshold:
            self.logger.warning(f"Slow operation: {self.operation}", threshold_s=self.threshold, **fields)
        else:
            self.logger.info(f"Completed operation: {self.operation}", **fields)


def monitor_performance(operation: str, threshold: float = 30.0, **context) -> PerformanceMonitor:
    """PerformanceMonitor on the engine's root logger"""
    return PerformanceMonitor(get_logger("atensor"), operation, threshold, **context)
