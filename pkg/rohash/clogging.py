# Licensed under a 3-clause BSD style license - see LICENSE.rst
import logging
from logging import DEBUG, INFO, WARNING, CRITICAL, ERROR
import sys

__all__ = ['config_logger', 'DEBUG', 'INFO', 'WARNING',
           'CRITICAL', 'ERROR']


def config_logger(name, format='%(message)s', datefmt=None,
                  stream=sys.stderr, level=logging.INFO,
                  filename=None, filemode='w', filelevel=None,
                  propagate=False):
    """Do basic configuration for the logging system. Similar to
    logging.basicConfig but the logger ``name`` is configurable and both a file
    output and a stream output can be created. Returns a logger object.

    The default behaviour is to create a StreamHandler which writes to
    sys.stderr (stdout is reserved for hash records, CSV and JSON output),
    set a formatter using the "%(message)s" format string, and add the
    handler to the ``name`` logger.

    Parameters
    ----------
    name : str
        Logger name
    format : str
        handler format string (Default value = '%(message)s')
    datefmt : str
        handler date/time format specifier (Default value = None)
    stream :
        initialize the StreamHandler using ``stream``
        (None disables the stream, default=sys.stderr)
    level : int
        logger level (default=INFO).
    filename : str
        create FileHandler using ``filename`` (default=None)
    filemode : str
        open ``filename`` with specified filemode ('w' or 'a') (Default value = 'w')
    filelevel : int
        logger level for file logger (default=``level``)
    propagate : bool
        propagate message to parent (default=False)

    Returns
    -------
    logging.Logger
    """
    logger = logging.getLogger(name)
    logger.propagate = propagate
    fmt = logging.Formatter(format, datefmt)

    # Remove existing handlers, otherwise multiple handlers can accrue
    for hdlr in list(logger.handlers):
        logger.removeHandler(hdlr)
        hdlr.close()

    if not (filename or stream):
        logger.addHandler(logging.NullHandler())

    levels = [level]
    if filename:
        if filelevel is None:
            filelevel = level
        hdlr = logging.FileHandler(filename, filemode)
        hdlr.setLevel(filelevel)
        hdlr.setFormatter(fmt)
        logger.addHandler(hdlr)
        levels.append(filelevel)

    if stream:
        hdlr = logging.StreamHandler(stream)
        hdlr.setLevel(level)
        hdlr.setFormatter(fmt)
        logger.addHandler(hdlr)

    # The logger itself must pass the most verbose of the handler levels
    logger.setLevel(min(levels))

    return logger
