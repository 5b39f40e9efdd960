# -*- coding: utf-8 -*-

"""The multiproc module runs independent jobs, e.g. the rows of a benchmark,
on a pool of worker processes. Log records created by the workers are handled
by the loggers of the main process.
"""

import logging
import multiprocessing as mp
from logging.handlers import (
    QueueHandler,
    QueueListener
)

from mtsclust.core.config import CFG
from mtsclust.core.debugging import get_logger


logger = get_logger(__name__)


def get_ncpu(local_ncpu):
    """Returns ``local_ncpu`` if it is set, otherwise the global setting
    ``CFG['multiproc']['ncpu']``, and 1 if neither is set.

    Raises
    ------
    TypeError
        If the setting is not an int.
    ValueError
        If the setting is smaller than 1.
    """
    ncpu = local_ncpu
    if(ncpu is None):
        ncpu = CFG['multiproc']['ncpu']
    if(ncpu is None):
        ncpu = 1
    if(not isinstance(ncpu, int)):
        raise TypeError('The ncpu setting must be of type int!')
    if(ncpu < 1):
        raise ValueError('The ncpu setting must be >= 1!')
    return ncpu


class _MainProcessHandler(logging.Handler):
    """Hands a record received from a worker to the logger of the same name in
    the main process.
    """
    def emit(self, record):
        logging.getLogger(record.name).handle(record)


def _init_worker(lqueue):
    pkg_logger = logging.getLogger('mtsclust')
    for handler in list(pkg_logger.handlers):
        pkg_logger.removeHandler(handler)
    pkg_logger.addHandler(QueueHandler(lqueue))
    pkg_logger.propagate = False


def _call(func, args, kwargs):
    return func(*args, **kwargs)


def parallelize(func, args_list, ncpu=None):
    """Calls ``func`` once for every element of ``args_list``.

    Parameters
    ----------
    func : callable
        The module-level function to call.
    args_list : list of 2-tuple
        The ``(args, kwargs)`` of every call.
    ncpu : int | None
        The number of processes. If None, the global setting is used. With one
        process all calls run in the main process.

    Returns
    -------
    result_list : list
        The return values in the order of ``args_list``.
    """
    ncpu = min(get_ncpu(ncpu), max(len(args_list), 1))
    if(ncpu == 1):
        return [func(*args, **kwargs) for (args, kwargs) in args_list]

    logger.debug('Running %d jobs on %d processes.', len(args_list), ncpu)
    lqueue = mp.Queue()
    listener = QueueListener(lqueue, _MainProcessHandler())
    listener.start()
    try:
        with mp.Pool(ncpu, initializer=_init_worker,
                     initargs=(lqueue,)) as pool:
            result_list = pool.starmap(
                _call, [(func, args, kwargs) for (args, kwargs) in args_list],
                chunksize=1)
            # Let the workers exit normally, so that their log records get
            # flushed.
            pool.close()
            pool.join()
    finally:
        listener.stop()

    return result_list
