from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings

from brwlab.dynsys import field_forward
from brwlab.errors import DomainError
from brwlab.model import ModelParams
from brwlab.series import (
    a1_closed_form,
    compute_coeffs,
    evaluate_A,
    offspring_distribution,
    summary,
    tail_estimate,
)

from strategies import params


@given(params())
def test_a1_is_small_root(p):
    a1 = a1_closed_form(p)
    s = p.q_plus + p.q_minus + 2 * p.beta
    assert abs(p.q_minus * a1 * a1 - s * a1 + p.q_plus) <= 1e-12 * s
    assert 0 < a1 <= p.q_plus / (p.q_minus + p.beta) + 1e-15


def test_known_values(crit):
    c = compute_coeffs(crit, 10)
    assert c.a[1] == pytest.approx((3 - math.sqrt(5)) / 4, abs=1e-15)
    assert c.a[2] == pytest.approx(0.0138554984704, abs=1e-12)
    assert c.a[0] == 0.0


@settings(max_examples=40, deadline=None)
@given(params(max_beta=10))
def test_coefficients_positive_and_bounded(p):
    c = compute_coeffs(p, 60)
    assert all(v > 0 for v in c.a[1:])
    assert c.partial_sum <= c.bound + 1e-12


def test_series_curve_is_invariant(sup):
    c = compute_coeffs(sup, 200)
    for y in (0.1, 0.3, 0.5):
        h = 1e-6
        slope = (evaluate_A(c, y + h) - evaluate_A(c, y - h)) / (2 * h)
        fx, fy = field_forward(sup, (evaluate_A(c, y), y))
        assert fx == pytest.approx(slope * fy, abs=1e-8)


def test_offspring_distribution_sums_to_one(sup):
    c = compute_coeffs(sup, 200)
    d = offspring_distribution(c, sup)
    assert d.total + d.p_inf == pytest.approx(1.0, abs=1e-14)
    assert d.p_inf >= 0
    assert 1 not in d.p or d.p[1] > 0


def test_tail_and_summary(sup):
    c = compute_coeffs(sup, 200)
    assert 0 <= tail_estimate(c) < 1e-3
    s = summary(c, sup)
    assert s["a1"] == c.a[1]


def test_csv(crit):
    text = compute_coeffs(crit, 3).to_csv().splitlines()
    assert text[0] == "n,a_n" and len(text) == 5


def test_domain_errors(crit):
    with pytest.raises(DomainError):
        compute_coeffs(crit, 1)
    with pytest.raises(DomainError):
        evaluate_A(compute_coeffs(crit, 5), 1.5)


@pytest.mark.parametrize("qp", [0.25, 1.0, 4.0])
def test_grid_corner_positive(qp):
    p = ModelParams(qp, qp + 12.0, 100.0)
    c = compute_coeffs(p, 200)
    assert np.all(np.array(c.a[1:]) > 0)
