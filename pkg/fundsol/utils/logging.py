import logging
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from ..config import settings


class InterceptHandler(logging.Handler):
    """Route standard library log records into loguru."""

    def emit(self, record: logging.LogRecord) -> None:
        # Get corresponding Loguru level if it exists
        try:
            level: str | int = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Find caller from where the logged message originated
        frame, depth = logging.currentframe(), 2
        while frame is not None and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back  # type: ignore[assignment]
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level, record.getMessage()
        )


def setup_logging(level: Optional[str] = None) -> None:
    """Configure logging with loguru.

    Args:
        level: Overrides ``settings.LOG_LEVEL`` when given (the CLI's -v/-q).
    """
    level = level or settings.LOG_LEVEL

    # Remove default logger
    logger.remove()

    logger.add(
        sys.stderr,
        level=level,
        format=settings.LOG_FORMAT,
        colorize=True,
        backtrace=True,
        diagnose=settings.DEBUG,
    )

    if settings.LOG_FILE:
        log_file = Path(settings.LOG_FILE)
        log_file.parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_file,
            rotation="100 MB",
            retention="30 days",
            level=level,
            format=settings.LOG_FORMAT,
            colorize=False,
            backtrace=True,
            diagnose=settings.DEBUG,
            enqueue=True,  # worker threads from the oracle's to_thread pool
        )

    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)

    # scipy and asyncio warnings go through loguru too
    for logger_name in ["asyncio", "scipy", "py.warnings"]:
        logging_logger = logging.getLogger(logger_name)
        logging_logger.handlers = [InterceptHandler()]
        logging_logger.propagate = False
    logging.captureWarnings(True)

    logger.debug("Logging configured successfully")
