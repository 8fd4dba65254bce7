import logging
import sys
from typing import Optional

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"


def configure_logging(
    log_file_name: Optional[str] = None, logger_name: str = "wheelbounds", level: str = "INFO"
) -> logging.Logger:
    """
    Configure and return a logger with a stream (stderr) and an optional file handler.

    Stdout is reserved for JSON/CSV reports, so log records go to stderr.
    Calling this twice does not attach duplicate handlers.

    :param log_file_name: The path to the log file. If provided, logs will also be written to this file.
    :type log_file_name: Optional[str]
    :param logger_name: The name of the logger to configure.
    :type logger_name: str
    :param level: Level name such as ``"INFO"`` or ``"DEBUG"``.
    :type level: str
    :return: The configured logger instance.
    :rtype: logging.Logger
    """
    logger = logging.getLogger(logger_name)
    numeric_level = logging.getLevelName(str(level).upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO
    logger.setLevel(numeric_level)

    formatter = logging.Formatter(LOG_FORMAT)
    if not any(getattr(h, "_wheelbounds_stream", False) for h in logger.handlers):
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setFormatter(formatter)
        stream_handler._wheelbounds_stream = True
        logger.addHandler(stream_handler)
    for handler in logger.handlers:
        handler.setLevel(numeric_level)

    # File handler if a log file is specified
    if log_file_name:
        known = {getattr(h, "baseFilename", None) for h in logger.handlers}
        file_handler = logging.FileHandler(log_file_name)
        if file_handler.baseFilename in known:
            file_handler.close()
        else:
            file_handler.setLevel(numeric_level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

    return logger
