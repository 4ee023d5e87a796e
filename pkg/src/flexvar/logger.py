"""
Custom Logger Using Loguru
"""

import logging
import sys
from pathlib import Path

from loguru import logger

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>"
)


class InterceptHandler(logging.Handler):
    loglevel_mapping = {
        50: "CRITICAL",
        40: "ERROR",
        30: "WARNING",
        20: "INFO",
        10: "DEBUG",
        0: "NOTSET",
    }

    def emit(self, record):
        try:
            level = logger.level(record.levelname).name
        except (AttributeError, ValueError):
            level = self.loglevel_mapping[record.levelno]

        frame, depth = logging.currentframe(), 2
        while frame and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(
            level,
            record.getMessage(),
        )


def configure_logger(level: str = "info", log_dir: Path | None = None):
    """
    Resets loguru sinks: one stderr sink at ``level`` and, when ``log_dir`` is
    given, one rotating file per level. Standard-library logging and python
    warnings (numpy/scipy runtime warnings) are routed into loguru.

    :param level: "error" | "info" | "debug"
    :param log_dir: Path | None
    :return: logger
    """
    logger.remove()
    logger.add(
        sys.stderr,
        level=level.upper(),
        format=LOG_FORMAT,
        backtrace=True,
    )

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        list(
            map(
                lambda x: logger.add(
                    log_dir.joinpath(f"{x}_flexvar.log"),
                    filter=lambda record, x=x: record["level"].name
                    == x.upper(),
                    rotation="1 day",
                    retention="1 week",
                    enqueue=True,
                ),
                ["info", "debug", "error", "warning"],
            ),
        )

    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)
    logging.captureWarnings(True)

    return logger
