from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brwlab.sim import rng

u64 = st.integers(0, 2**64 - 1)


@given(u64)
def test_mix_twins(z):
    assert int(rng.mix64(np.uint64(z))) == rng.py_mix64(z)


@given(u64, st.integers(0, 10**7))
def test_rep_key_twins(seed, rep):
    assert int(rng.rep_key(np.uint64(seed), rep)) == rng.py_rep_key(seed, rep)


@given(u64, st.sampled_from([1, 2]))
def test_child_key_twins(key, j):
    assert int(rng.child_key(np.uint64(key), j)) == rng.py_child_key(key, j)


@given(u64, st.integers(0, 10**6))
def test_uniform_twins_and_range(key, c):
    u = rng.py_uniform(key, c)
    assert rng.uniform(np.uint64(key), c) == u
    assert 0.0 <= u < 1.0


@given(u64, st.integers(0, 10**6), st.floats(0.1, 50))
def test_exponential_twins(key, c, rate):
    e = rng.py_exponential(key, c, rate)
    assert rng.exponential(np.uint64(key), c, rate) == e
    assert e >= 0


def test_children_differ():
    k = rng.py_rep_key(0, 0)
    assert len({k, rng.py_child_key(k, 1), rng.py_child_key(k, 2)}) == 3


def test_uniform_moments():
    k = rng.py_rep_key(5, 1)
    us = [rng.py_uniform(k, c) for c in range(20000)]
    assert sum(us) / len(us) == pytest.approx(0.5, abs=0.01)


def test_seed_to_int():
    assert rng.seed_to_int(7) == 7
    with pytest.raises((ValueError, TypeError)):
        rng.seed_to_int(-1)
