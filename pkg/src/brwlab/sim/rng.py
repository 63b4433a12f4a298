"""Counter-based random numbers keyed by genealogy.

Every replicate gets a 64-bit key from ``(seed, replicate)``; a child's key is
derived from its parent's key and its birth order.  Draw ``c`` of a particle is
a splitmix64 hash of ``key + (c + 1) * GOLDEN``.  The tree that a replicate
produces therefore depends only on ``(seed, replicate)``, never on traversal
order, pruning or the worker that ran it.

Draw ``3n`` is the ``n``-th holding time of a particle, ``3n + 1`` chooses flip
versus split and ``3n + 2`` is the birth mark used by the nested coupling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_SEED_SALT = 0x5851F42D4C957F2D
_CHILD = 0xD6E8FEB86659FD93
_INV53 = 2.0 ** -53

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U_SALT = np.uint64(_SEED_SALT)
_U_CHILD = np.uint64(_CHILD)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_U1 = np.uint64(1)


# pure-python twins


def py_mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def py_rep_key(seed: int, rep: int) -> int:
    return py_mix64(py_mix64((seed & MASK) ^ _SEED_SALT) + ((rep * GOLDEN) & MASK))


def py_child_key(key: int, j: int) -> int:
    return py_mix64(key ^ ((j * _CHILD) & MASK))


def py_uniform(key: int, c: int) -> float:
    return (py_mix64(key + (c + 1) * GOLDEN) >> 11) * _INV53


def py_exponential(key: int, c: int, rate: float) -> float:
    return -math.log1p(-py_uniform(key, c)) / rate


# numba versions


@njit(cache=True, inline="always")
def mix64(z):
    # an int64 argument would get arithmetic shifts
    z = np.uint64(z)
    z = (z ^ (z >> _U30)) * _U_M1
    z = (z ^ (z >> _U27)) * _U_M2
    return z ^ (z >> _U31)


@njit(cache=True)
def rep_key(seed, rep):
    return mix64(mix64(np.uint64(seed) ^ _U_SALT) + np.uint64(rep) * _U_GOLDEN)


@njit(cache=True, inline="always")
def child_key(key, j):
    return mix64(np.uint64(key) ^ (np.uint64(j) * _U_CHILD))


@njit(cache=True, inline="always")
def uniform(key, c):
    return float(mix64(np.uint64(key) + (np.uint64(c) + _U1) * _U_GOLDEN) >> _U11) * _INV53


@njit(cache=True, inline="always")
def exponential(key, c, rate):
    return -math.log1p(-uniform(key, c)) / rate


def seed_to_int(seed) -> int:
    s = int(seed)
    if s < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return s & MASK
