"""
Structured logging configuration for multijet.

This module sets up structured logging using structlog. Logs always go to
stderr so that CSV and JSON outputs stay byte-identical between runs.
"""

import logging
import sys
from typing import Any

import structlog
from structlog.stdlib import LoggerFactory

from .config import Config


def configure_logging(config: Config) -> None:
    """
    Configure structured logging for the application.

    Args:
        config: Configuration instance with logging settings
    """
    log_level = getattr(logging, config.log_level.upper(), logging.INFO)
    logging.basicConfig(
        level=log_level,
        format="%(message)s",
        stream=sys.stderr,
        force=True,
    )

    if config.structured_logging:
        renderer: Any = structlog.processors.JSONRenderer()
        timestamper = structlog.processors.TimeStamper(fmt="iso")
    else:
        renderer = structlog.dev.ConsoleRenderer()
        timestamper = structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S")

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            timestamper,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            renderer,
        ],
        context_class=dict,
        logger_factory=LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )


def get_logger(name: str, **kwargs: Any) -> structlog.stdlib.BoundLogger:
    """
    Get a structured logger instance.

    Args:
        name: Logger name (usually __name__)
        **kwargs: Additional context to bind to the logger

    Returns:
        Configured structured logger
    """
    logger = structlog.get_logger(name)
    if kwargs:
        logger = logger.bind(**kwargs)
    return logger


def log_command_execution(
    logger: structlog.stdlib.BoundLogger,
    command: str,
    parameters: dict[str, Any],
    duration_ms: float,
    success: bool = True,
    **kwargs: Any,
) -> None:
    """
    Log CLI command execution with structured data.

    Args:
        logger: Structured logger instance
        command: Name of the executed command
        parameters: Command parameters
        duration_ms: Execution duration in milliseconds
        success: Whether execution was successful
        **kwargs: Additional context
    """
    logger.info(
        "Command execution completed",
        command=command,
        parameters=parameters,
        duration_ms=duration_ms,
        success=success,
        **kwargs,
    )


def log_estimate(
    logger: structlog.stdlib.BoundLogger,
    quantity: str,
    value: float,
    std_error: float,
    samples: int,
    **kwargs: Any,
) -> None:
    """
    Log a Monte Carlo or closed-form estimate with structured data.

    Args:
        logger: Structured logger instance
        quantity: Name of the estimated quantity
        value: Point estimate
        std_error: Standard error (0 for closed forms)
        samples: Number of samples used
        **kwargs: Additional context
    """
    logger.debug(
        "Estimate computed",
        quantity=quantity,
        value=value,
        std_error=std_error,
        samples=samples,
        **kwargs,
    )
