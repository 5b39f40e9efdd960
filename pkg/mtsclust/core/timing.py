# -*- coding: utf-8 -*-

"""The timing module provides wall-clock timing of code segments, called
"tasks". The TimeLord class keeps track of the execution times of tasks, and
the TaskTimer class times the code within a `with` block. Times are taken from
the monotonic ``time.perf_counter`` clock.
"""

import time

from mtsclust.core.py import classname


class TaskRecord(object):
    def __init__(self, name, tstart, tend):
        """Creates a new TaskRecord instance.

        Parameters
        ----------
        name : str
            The name of the task.
        tstart : float
            The start time of the task in seconds.
        tend : float
            The end time of the task in seconds.
        """
        self.name = name
        self._tstart_list = [tstart]
        self._tend_list = [tend]

    @property
    def duration(self):
        """(read-only) The summed duration in seconds of all executions of this
        task.
        """
        return sum(
            tend - tstart
            for (tstart, tend) in zip(self._tstart_list, self._tend_list))

    @property
    def niter(self):
        """(read-only) The number of times this task was executed.
        """
        return len(self._tstart_list)

    def join(self, tr):
        """Joins this TaskRecord with the given TaskRecord instance.
        """
        self._tstart_list.extend(tr._tstart_list)
        self._tend_list.extend(tr._tend_list)


class TimeLord(object):
    def __init__(self):
        self._task_records = {}

    @property
    def task_name_list(self):
        """(read-only) The list of task names.
        """
        return list(self._task_records.keys())

    def add_task_record(self, tr):
        """Adds a given task record. Records of an already known task are
        joined.
        """
        if(self.has_task_record(tr.name)):
            self._task_records[tr.name].join(tr)
            return
        self._task_records[tr.name] = tr

    def get_task_record(self, name):
        """Retrieves the task record of the given name.
        """
        return self._task_records[name]

    def has_task_record(self, name):
        """Checks if this TimeLord instance has a task record of the given name.
        """
        return name in self._task_records

    def join(self, tl):
        """Joins the task records of the given TimeLord instance into this one.
        """
        for tname in tl.task_name_list:
            self.add_task_record(tl.get_task_record(tname))

    def task_timer(self, name):
        """Creates a TaskTimer instance for the given task name.
        """
        return TaskTimer(self, name)

    def __str__(self):
        """Generates a pretty string for this time lord.
        """
        s = f'{classname(self)}: Executed tasks:'
        if(len(self._task_records) == 0):
            return s + ' None.'

        width = max(len(name) for name in self._task_records)
        for tr in self._task_records.values():
            t = tr.duration / tr.niter
            s += f'\n[{tr.name:{width}s}] {t:9.3f} sec/iter ({tr.niter:d})'
        return s


class TaskTimer(object):
    def __init__(self, time_lord, name):
        """
        Parameters
        ----------
        time_lord : instance of TimeLord | None
            The TimeLord instance that keeps track of the recorded tasks. If
            None, the task is timed but not recorded.
        name : str
            The name of the task.
        """
        self.time_lord = time_lord
        self.name = name

        self._start = None
        self._end = None

    @property
    def time_lord(self):
        """The TimeLord instance that keeps track of the recorded tasks. This
        can be None, which means that the task should not get recorded.
        """
        return self._time_lord
    @time_lord.setter
    def time_lord(self, lord):
        if(lord is not None):
            if(not isinstance(lord, TimeLord)):
                raise TypeError('The time_lord property must be None or an '
                    'instance of TimeLord!')
        self._time_lord = lord

    @property
    def name(self):
        """The name of the task.
        """
        return self._name
    @name.setter
    def name(self, name):
        if(not isinstance(name, str)):
            raise TypeError('The name property must be an instance of str!')
        self._name = name

    @property
    def duration(self):
        """The wall-clock duration in seconds the task was executed.
        """
        return (self._end - self._start)

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self._end = time.perf_counter()

        if(self._time_lord is None):
            return

        self._time_lord.add_task_record(TaskRecord(
            self._name, self._start, self._end))
