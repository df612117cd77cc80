"""Shared logger factory.

Every library module does ``logger = get_logger(__name__)``. The root handler
is installed once, at the level named by ``settings.log_level``.
"""

import logging

from config import settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_configured = False


def get_logger(name: str) -> logging.Logger:
    """Return a module logger, configuring the root handler on first use."""
    global _configured
    if not _configured:
        level = getattr(logging, settings.log_level.upper(), logging.WARNING)
        logging.basicConfig(level=level, format=LOG_FORMAT)
        _configured = True
    return logging.getLogger(name)
