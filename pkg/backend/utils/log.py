"""
Logging setup shared by the library and the CLI

All loggers live under the "mudkit" namespace and write to stderr,
stdout stays clean for CSV/JSON output.
"""

import logging
import os
import sys
from typing import Optional

import coloredlogs
from dotenv import load_dotenv

load_dotenv()

ROOT_LOGGER = "mudkit"
LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"

_installed_level: Optional[str] = None


def setup_logging(level: Optional[str] = None) -> str:
    """
    Install colored stderr logging for the mudkit namespace

    Args:
        level: Level name; falls back to MUDKIT_LOG_LEVEL, then WARNING

    Returns:
        The level that was installed
    """
    global _installed_level

    level = (level or os.getenv("MUDKIT_LOG_LEVEL", "WARNING")).upper()
    if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        level = "WARNING"

    coloredlogs.install(
        level=level,
        logger=logging.getLogger(ROOT_LOGGER),
        fmt=LOG_FORMAT,
        stream=sys.stderr,
        isatty=sys.stderr.isatty(),
    )
    _installed_level = level
    return level


def get_logger(name: str) -> logging.Logger:
    """Get a child logger of the mudkit namespace"""
    if _installed_level is None:
        setup_logging()
    short = name.rsplit(".", 1)[-1]
    return logging.getLogger(f"{ROOT_LOGGER}.{short}")
