# -*- coding: utf-8 -*-

import logging
import os.path
import sys

from mtsclust.core.config import CFG


def enable_tracing():
    """Enables the per-iteration tracing debug messages of the VEM and DGM²
    training loops.
    """
    CFG['debugging']['enable_tracing'] = True


def disable_tracing():
    """Disables the per-iteration tracing debug messages.
    """
    CFG['debugging']['enable_tracing'] = False


def is_tracing_enabled():
    """Returns True, if tracing is enabled, False otherwise.
    """
    return CFG['debugging']['enable_tracing']


def get_logger(name):
    """Retrieves the logger with the given name from the Python logging system.

    Parameters
    ----------
    name : str
        The name of the logger.
        Logger hierarchy is defined using dots as separators.

    Returns
    -------
    logger : logging.Logger
        The Logger instance.
    """
    return logging.getLogger(name)


def setup_logger(name, log_level):
    """Initializes the logger with the given name and log level.

    Parameters
    ----------
    name : str
        Logger name. Loggers hierarchy is defined using dots as separators.
    log_level : int
        The log level, e.g. ``logging.DEBUG``.
    """
    logger = logging.getLogger(name)
    logger.setLevel(log_level)


def _make_formatter(log_format):
    if(log_format is None):
        log_format = CFG['debugging']['log_format']
    return logging.Formatter(log_format)


def setup_console_handler(name, log_level=None, log_format=None, stream=None):
    """Attaches a ``StreamHandler`` to the logger with the given name.

    Parameters
    ----------
    name : str
        Logger name.
    log_level : int | None
        The handler level. If None, the level of the logger is used.
    log_format : str | None
        The format of log records. If None, the format is taken from the
        configuration.
    stream : data stream | None
        The stream that the handler should use. Default is `sys.stderr`.
    """
    logger = logging.getLogger(name)

    if(log_level is None):
        log_level = logger.level
    if(stream is None):
        stream = sys.stderr

    sh = logging.StreamHandler(stream=stream)
    sh.setLevel(log_level)
    sh.setFormatter(_make_formatter(log_format))
    logger.addHandler(sh)


def setup_file_handler(
        name, filename, log_level=None, path=None, log_format=None, mode='a'):
    """Attaches a ``FileHandler`` to the logger with the given name.

    Parameters
    ----------
    name : str
        Logger name.
    filename : str
        The name of the log file.
    log_level : int | None
        The handler level. If None, the level of the logger is used.
    path : str | None
        The directory of the log file. If None, the project's working directory
        is used.
    log_format : str | None
        The format of log records. If None, the format is taken from the
        configuration.
    mode : str
        File opening mode. Default is 'a' for appending.
    """
    logger = logging.getLogger(name)

    if(log_level is None):
        log_level = logger.level
    if(path is None):
        path = CFG['project']['working_directory']

    fh = logging.FileHandler(os.path.join(path, filename), mode=mode)
    fh.setLevel(log_level)
    fh.setFormatter(_make_formatter(log_format))
    logger.addHandler(fh)
