"""Manages the setup of the various logging mechanisms for gcntune."""

import logging
import logging.handlers
import socket
import sys

from gcntune import output

RESULT_LOGGER = 'run_results'
EXCEPTION_LOGGER = 'exceptions'

# We don't want to have to look this up every time we log.
_OLD_FACTORY = logging.getLogRecordFactory()
_HOSTNAME = socket.gethostname()


def record_factory(*fargs, **kwargs):
    """Add the hostname to all logged records."""
    record = _OLD_FACTORY(*fargs, **kwargs)
    record.hostname = _HOSTNAME
    return record


def _touch(path, what, err_out) -> bool:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.touch()
    except OSError as err:
        output.fprint("Could not write to {} at '{}': {}"
                      .format(what, path, err),
                      color=output.YELLOW, file=err_out)
        return False
    return True


def setup_loggers(cfg, verbose=False, err_out=sys.stderr) -> bool:
    """Setup the loggers for the gcntune command. This includes:

    - The general log file, rotating at 1 MiB.
    - The result log, one JSON run summary per line.
    - The exception log.
    - Red stderr output for yapsy plugin errors.

    :param cfg: The gcntune configuration.
    :param bool verbose: When verbose, setup the root logger to print to
        stderr as well.
    :param IO[str] err_out: Where to log errors meant for the terminal. This
        exists primarily for testing.
    :returns: False if the result log couldn't be set up.
    """

    root_logger = logging.getLogger()

    logging.setLogRecordFactory(record_factory)

    log_fn = cfg.working_dir/'gcntune.log'
    if _touch(log_fn, 'gcntune log', err_out):
        file_handler = logging.handlers.RotatingFileHandler(
            filename=log_fn.as_posix(),
            maxBytes=1024 ** 2,
            backupCount=3)
        file_handler.setFormatter(logging.Formatter(cfg.log_format,
                                                    style='{'))
        file_handler.setLevel(getattr(logging, cfg.log_level.upper()))
        root_logger.addHandler(file_handler)

    # The root logger should pass all messages, even if the handlers
    # filter them.
    root_logger.setLevel(logging.DEBUG)

    # Results go to both the main log and the result log.
    if not _touch(cfg.result_log, 'result log', err_out):
        return False

    result_logger = logging.getLogger(RESULT_LOGGER)
    result_handler = logging.handlers.RotatingFileHandler(
        filename=cfg.result_log.as_posix(),
        # 20 MB
        maxBytes=20 * 1024 ** 2,
        backupCount=3)
    result_handler.setFormatter(logging.Formatter("{message}", style='{'))
    result_logger.setLevel(logging.INFO)
    result_logger.addHandler(result_handler)

    exc_logger = logging.getLogger(EXCEPTION_LOGGER)
    if _touch(cfg.exception_log, 'exception log', err_out):
        exc_handler = logging.handlers.RotatingFileHandler(
            filename=cfg.exception_log.as_posix(),
            maxBytes=20 * 1024 ** 2,
            backupCount=3)
        exc_handler.setFormatter(logging.Formatter("{asctime} {message}",
                                                   style='{'))
        exc_logger.setLevel(logging.ERROR)
        exc_logger.addHandler(exc_handler)

    # We need to know immediately when yapsy can't load a plugin.
    yapsy_logger = logging.getLogger('yapsy')
    yapsy_handler = logging.StreamHandler(stream=err_out)
    yapsy_handler.setFormatter(
        logging.Formatter("\x1b[31m{asctime} {message}\x1b[0m", style='{'))
    yapsy_logger.setLevel(logging.INFO)
    yapsy_logger.addHandler(yapsy_handler)

    if verbose or not root_logger.handlers:
        verbose_handler = logging.StreamHandler(err_out)
        verbose_handler.setLevel(logging.DEBUG)
        verbose_handler.setFormatter(logging.Formatter(cfg.log_format,
                                                       style='{'))
        root_logger.addHandler(verbose_handler)

    return True


def reset_loggers():
    """Remove and close every handler setup_loggers installed. For
    unittests."""

    for name in (None, RESULT_LOGGER, EXCEPTION_LOGGER, 'yapsy'):
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
