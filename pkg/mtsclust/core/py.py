# -*- coding: utf-8 -*-

"""Small Python helpers for argument checking and casting.
"""

import numpy as np


def typename(t):
    """Returns the name of the given type ``t``.
    """
    return t.__name__


def classname(obj):
    """Returns the name of the class of the class instance ``obj``.
    """
    return typename(type(obj))


def issequence(obj):
    """Checks if the given object ``obj`` is a sequence, i.e. ``len`` is defined
    for it.

    .. note::

        A str object is NOT considered as a sequence!
    """
    if(isinstance(obj, str)):
        return False

    try:
        len(obj)
    except TypeError:
        return False

    return True


def issequenceof(obj, T):
    """Checks if the given object ``obj`` is a sequence whose items are all
    instances of type ``T``.

    Parameters
    ----------
    obj : object
        The Python object to check.
    T : type | tuple of types
        The type each item of the sequence should be.

    Returns
    -------
    check : bool
        The result of the check.
    """
    if(not issequence(obj)):
        return False
    return all(isinstance(item, T) for item in obj)


def bool_cast(v, errmsg):
    """Casts the given value to a boolean value. If the cast is impossible, a
    TypeError is raised with the given error message.
    """
    try:
        return bool(v)
    except Exception:
        raise TypeError(errmsg)


def int_cast(v, errmsg, allow_None=False):
    """Casts the given value to an integer value. If the cast is impossible, a
    TypeError is raised with the given error message. If ``allow_None`` is set
    to ``True`` the value ``v`` can also be ``None``.
    """
    if(allow_None and v is None):
        return v

    if(isinstance(v, (float, np.floating)) and not float(v).is_integer()):
        raise TypeError(errmsg)
    try:
        return int(v)
    except Exception:
        raise TypeError(errmsg)


def float_cast(v, errmsg, allow_None=False):
    """Casts the given value to a float. If the cast is impossible, a TypeError
    is raised with the given error message. If ``allow_None`` is set to
    ``True`` the value ``v`` can also be ``None``.
    """
    if(allow_None and v is None):
        return v

    try:
        return float(v)
    except Exception:
        raise TypeError(errmsg)


def positive_int_cast(v, errmsg, allow_zero=False):
    """Casts ``v`` to int and checks that it is positive (or non-negative if
    ``allow_zero`` is set). A ValueError is raised for out-of-range values.
    """
    v = int_cast(v, errmsg)
    if(v < 0 or (v == 0 and not allow_zero)):
        raise ValueError(errmsg)
    return v
