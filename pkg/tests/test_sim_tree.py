from __future__ import annotations

import math

import numpy as np
import pytest

from brwlab.model import ModelParams
from brwlab.sim import (
    PType,
    kernels,
    level_counts,
    simulate_tree,
    winding_counts,
)
from brwlab.sim.rng import seed_to_int
from brwlab.sim.tree import ever_left_of_zero


def _tree_shape(t):
    return [(r.parent, r.birth_time, r.death_time, len(r.path)) for r in t.records]


def test_ptype_parse():
    assert PType.parse("+") is PType.PLUS and PType.parse(-1) is PType.MINUS
    assert PType.of(-1).sign == -1
    with pytest.raises(ValueError):
        PType.parse("x")


def test_deterministic(crit):
    a = simulate_tree(crit, "+", 5.0, seed=4, rep=2)
    b = simulate_tree(crit, "+", 5.0, seed=4, rep=2)
    c = simulate_tree(crit, "+", 5.0, seed=4, rep=3)
    assert _tree_shape(a) == _tree_shape(b)
    assert _tree_shape(a) != _tree_shape(c)


def test_paths_are_continuous_with_unit_slopes(crit):
    t = simulate_tree(crit, "-", 6.0, seed=1, rep=0)
    by_id = {r.id: r for r in t.records}
    for rec in t.records:
        for (t0, x0, s0), (t1, x1, _) in zip(rec.path, rec.path[1:]):
            assert t1 >= t0
            assert x1 == pytest.approx(x0 + s0.sign * (t1 - t0), abs=1e-9)
        if rec.parent is not None:
            assert rec.birth_time >= by_id[rec.parent].birth_time


def test_budget_censors(crit):
    t = simulate_tree(ModelParams(1, 4, 4.0), "+", 50.0, budget=20, seed=0)
    assert t.censored and len(t.records) <= 20


def test_invalid_args(crit):
    with pytest.raises(ValueError):
        simulate_tree(crit, "+", 0.0)
    with pytest.raises(ValueError):
        simulate_tree(crit, "+", 1.0, budget=0)


@pytest.mark.parametrize("root", ["+", "-"])
def test_kernel_matches_tree_levels(crit, root):
    pp = np.array([0.0, 0.5, 1.5])
    pm = np.array([0.0, 0.5, 1.5])
    h, reps = 6.0, 30
    out = kernels.level_batch(1.0, 4.0, 0.5, PType.parse(root).sign, pp, pm, h, 10**6, 1e9,
                              True, seed_to_int(9), 0, reps)
    for r in range(reps):
        lc = level_counts(simulate_tree(crit, root, h, seed=9, rep=r), pp)
        np.testing.assert_array_equal(out[0][r], lc.n_plus)
        np.testing.assert_array_equal(out[1][r], lc.n_minus)


def test_kernel_matches_tree_winding(crit):
    h, reps = 6.0, 30
    out = kernels.winding_batch(1.0, 4.0, 0.5, 4, h, 10**6, 1e9, True, seed_to_int(2), 0, reps)
    for r in range(reps):
        wc = winding_counts(simulate_tree(crit, "+", h, seed=2, rep=r), 1)
        assert list(out[0][r]) == [wc.w_plus[0], wc.w_minus[0], wc.w_plus[1], wc.w_minus[1]]


def test_winding_zero_plus_is_one(crit):
    for r in range(10):
        assert winding_counts(simulate_tree(crit, "+", 3.0, seed=5, rep=r), 1).w_plus[0] == 1


def test_mean_population(crit):
    n = 3000
    pops = [simulate_tree(crit, "+", 1.0, seed=7, rep=r).population(1.0) for r in range(n)]
    m = np.mean(pops)
    se = np.std(pops, ddof=1) / math.sqrt(n)
    assert abs(m - math.exp(0.5)) < 4 * se


def test_split_count_identity(crit):
    n = 3000
    splits = [simulate_tree(crit, "-", 1.0, seed=8, rep=r).split_count(1.0) for r in range(n)]
    m = np.mean(splits)
    se = np.std(splits, ddof=1) / math.sqrt(n)
    assert abs(m - (math.exp(0.5) - 1.0)) < 4 * se


def test_minus_root_dips(crit):
    assert ever_left_of_zero(simulate_tree(crit, "-", 1.0, seed=0))
