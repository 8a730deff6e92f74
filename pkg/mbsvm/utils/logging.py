import logging
from typing import List, Optional

log_history: List[str] = []

FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class HistoryHandler(logging.Handler):
    """A logging handler that keeps every formatted message of this process."""

    def emit(self, record):
        log_history.append(self.format(record))


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """Configures the root logger. Safe to call more than once."""
    logger = logging.getLogger()
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    formatter = logging.Formatter(FORMAT)

    for handler in list(logger.handlers):
        if getattr(handler, "_mbsvm", False):
            logger.removeHandler(handler)
            handler.close()

    # Console handler
    stream_handler = logging.StreamHandler()
    handlers: List[logging.Handler] = [stream_handler, HistoryHandler()]

    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    for handler in handlers:
        handler._mbsvm = True
        handler.setFormatter(formatter)
        logger.addHandler(handler)
