"""Counter-based random streams.

Every Monte-Carlo trial draws from its own splitmix64 stream whose starting
state is a hash of ``(seed, trial_index)``. Trials are therefore reproducible
and independent of how they are scheduled across workers. The same generator
is implemented twice: a plain Python class used by the reference (slow) paths,
and numba-compiled helpers used by the batch kernels. Both emit identical
doubles for identical keys.
"""

import numba
import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 1.0 / (1 << 53)


def _mix(z):
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed, index):
    """Starting state for the stream of trial ``index`` under ``seed``."""
    return _mix((_mix(seed & _MASK) + ((index + 1) * _GOLDEN)) & _MASK)


class SplitMix64:
    """Minimal random source with a ``random()`` method, like ``random.Random``."""

    def __init__(self, seed=0, index=0):
        self.state = stream_key(seed, index)

    def next_u64(self):
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix(self.state)

    def random(self):
        return (self.next_u64() >> 11) * _TWO_M53


# numba twins -----------------------------------------------------------------

_U_GOLDEN = np.uint64(_GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)


@numba.njit(inline="always")
def nb_mix(z):
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


@numba.njit(inline="always")
def nb_stream_key(seed, index):
    return nb_mix(nb_mix(seed) + (np.uint64(index) + np.uint64(1)) * _U_GOLDEN)


@numba.njit(inline="always")
def nb_next_double(state):
    """Advance ``state`` (a 1-element uint64 array) and return a double in [0, 1)."""
    state[0] = state[0] + _U_GOLDEN
    return float(nb_mix(state[0]) >> _U11) * _TWO_M53
