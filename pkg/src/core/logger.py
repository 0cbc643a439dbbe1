"""Logging configuration for the SingOMD pipeline."""

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

from src.core.config import LoggingConfig

ROOT_LOGGER = "singomd"


def setup_logging(config: Optional[LoggingConfig] = None) -> logging.Logger:
    """Setup structured logging with console and file handlers.

    Args:
        config: Logging configuration. If None, uses defaults.

    Returns:
        Configured logger instance
    """
    if config is None:
        config = LoggingConfig()

    logger = logging.getLogger(ROOT_LOGGER)
    logger.setLevel(logging.DEBUG)

    # Remove existing handlers to avoid duplicates
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()

    # Console handler with Rich formatting
    console_handler = RichHandler(
        console=Console(stderr=True),
        rich_tracebacks=True,
        show_time=True,
        show_path=False,
    )
    console_handler.setLevel(getattr(logging, config.level))
    console_handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    logger.addHandler(console_handler)

    file_formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(funcName)s:%(lineno)d - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # File handler with rotation
    log_file = Path(config.file)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    file_handler = RotatingFileHandler(
        filename=log_file,
        maxBytes=config.max_bytes,
        backupCount=config.backup_count,
        encoding="utf-8",
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(file_formatter)
    logger.addHandler(file_handler)

    # Error file handler with rotation
    error_file = Path(config.error_file)
    error_file.parent.mkdir(parents=True, exist_ok=True)
    error_handler = RotatingFileHandler(
        filename=error_file,
        maxBytes=config.max_bytes,
        backupCount=config.backup_count,
        encoding="utf-8",
    )
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(file_formatter)
    logger.addHandler(error_handler)

    # Prevent propagation to root logger
    logger.propagate = False

    logger.debug("Logging system initialized")
    return logger


def get_logger(name: str = ROOT_LOGGER) -> logging.Logger:
    """Get logger instance by name.

    Module names under ``src.`` are mapped below the ``singomd`` logger so they share
    its handlers.

    Args:
        name: Logger or module name

    Returns:
        Logger instance
    """
    if name.startswith("src."):
        name = f"{ROOT_LOGGER}.{name[len('src.'):]}"
    return logging.getLogger(name)


def set_log_level(level: str) -> None:
    """Set logging level for the console handlers.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    logger = logging.getLogger(ROOT_LOGGER)
    for handler in logger.handlers:
        if isinstance(handler, RichHandler):
            handler.setLevel(getattr(logging, level))
