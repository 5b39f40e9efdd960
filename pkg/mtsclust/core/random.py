# -*- coding: utf-8 -*-

import numpy as np

from mtsclust.core.py import int_cast


_MASK64 = (1 << 64) - 1


def derive_seed(master_seed, index):
    """Derives an independent 32-bit seed for the job with the given index
    from a master seed, using one splitmix64 step.

    Parameters
    ----------
    master_seed : int
        The master seed of the run.
    index : int
        The index of the job (e.g. the benchmark row).

    Returns
    -------
    seed : int
        The derived seed in the range [0, 2**32).
    """
    master_seed = int_cast(
        master_seed, 'The master_seed argument must be castable to type int!')
    index = int_cast(index, 'The index argument must be castable to type int!')

    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)

    return int(z & 0xFFFFFFFF)


class RandomStateService(object):
    """The RandomStateService class provides a container for a
    numpy.random.RandomState object, initialized with a given seed. This
    service is passed to every function or method that requires a random
    number generator.
    """
    def __init__(self, seed=None):
        """Creates a new random state service. The ``random`` property can then
        be used to draw random numbers.

        Parameters
        ----------
        seed : int | None
            The seed to use. If None, the random number generator will be seeded
            randomly.
        """
        self._seed = int_cast(seed, 'The seed argument must be None, or '
            'castable to type int!', allow_None=True)
        self.random = np.random.RandomState(self._seed)

    @property
    def seed(self):
        """(read-only) The seed (int) of the random number generator.
        None, if not set. To change the seed, use the `reseed` method.
        """
        return self._seed

    @property
    def random(self):
        """The numpy.random.RandomState object.
        """
        return self._random
    @random.setter
    def random(self, random):
        if(not isinstance(random, np.random.RandomState)):
            raise TypeError('The random property must be of type '
                'numpy.random.RandomState!')
        self._random = random

    def reseed(self, seed):
        """Reseeds the random number generator with the given seed.

        Parameters
        ----------
        seed : int | None
            The seed to use. If None, the random number generator will be seeded
            randomly.
        """
        self._seed = int_cast(seed, 'The seed argument must be None or '
            'castable to type int!', allow_None=True)
        self.random.seed(self._seed)

    def spawn(self, index):
        """Creates a new, independent RandomStateService whose seed is derived
        from the seed of this service and the given index.

        Parameters
        ----------
        index : int
            The index of the child service.

        Returns
        -------
        rss : RandomStateService
            The child service.
        """
        if(self._seed is None):
            return RandomStateService(self.random.randint(0, 2**32))
        return RandomStateService(derive_seed(self._seed, index))


def make_rss(rss_or_seed):
    """Returns a RandomStateService for the given argument, which can already
    be a RandomStateService, an int seed, or None.
    """
    if(isinstance(rss_or_seed, RandomStateService)):
        return rss_or_seed
    return RandomStateService(rss_or_seed)
