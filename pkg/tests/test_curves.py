from __future__ import annotations

import math

import numpy as np
import pytest

from brwlab.curves import (
    CurveKind,
    Method,
    Shot,
    boundary_solutions,
    classify_shot,
    corner_side,
    curves_cross,
    field_slope,
    hmp_curve,
    hmp_value,
    hpm_at_zero,
    hpm_curve,
    origin_slope_identity,
    slope_segment,
)
from brwlab.dynsys import Direction, Exit, flow
from brwlab.errors import HorizonTooShortError, SpectralError
from brwlab.model import ModelParams
from brwlab.series import compute_coeffs, evaluate_A
from brwlab.sim import estimate_pgf


def test_critical_value(crit):
    h0 = hpm_at_zero(crit)
    assert 0.6289 <= h0.value <= 0.6300
    assert h0.width < 1e-9
    assert h0.bracket[0] <= h0.value <= h0.bracket[1]


def test_subcritical_value(sub):
    assert hpm_at_zero(sub).value == pytest.approx(0.681168, abs=1e-6)


def test_value_decreases_with_beta():
    vals = [hpm_at_zero(ModelParams(1, 4, b), tol=1e-7).value for b in (0.2, 0.3, 0.4, 0.5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_monte_carlo_agrees_with_shooting(sub):
    # P+[N-(0) = 0] is the theta = 0 pgf of the minus count
    est = estimate_pgf(sub, "+", 0.0, 0.0, reps=20000, seed=11, count="minus")
    assert est.contains(0.681168)
    assert not est.contains(0.6182)


def test_supercritical_zero(sup):
    assert hpm_at_zero(sup).value == 0.0


def test_tol_validation(crit):
    with pytest.raises(ValueError):
        hpm_at_zero(crit, tol=1e-12)


def test_short_horizon(crit):
    with pytest.raises(HorizonTooShortError):
        hpm_at_zero(crit, horizon=0.05)


def test_shot_classes(crit):
    assert classify_shot(crit, 0.3)[0] is Shot.TOO_SMALL
    assert classify_shot(crit, 0.95)[0] is Shot.TOO_LARGE


def test_corner_side_needs_real_spectrum(sup):
    with pytest.raises(SpectralError):
        corner_side(sup, (0.999, 0.999))


@pytest.mark.parametrize("b", [0.5, 0.4])
def test_origin_slope_identity(b):
    p = ModelParams(1, 4, b)
    cur = hmp_curve(p)
    x = 1e-3
    assert hmp_value(cur, x) / x == pytest.approx(origin_slope_identity(p), rel=1e-3)


def test_origin_slope_numbers(crit, sup):
    assert origin_slope_identity(crit) == pytest.approx(0.7639, abs=1e-4)
    assert origin_slope_identity(sup) == pytest.approx(0.3153, abs=1e-4)


@pytest.mark.parametrize("b", [0.2, 0.5, 2.0, 4.0])
def test_curves_do_not_cross(b):
    p = ModelParams(1, 4, b)
    assert not curves_cross(hpm_curve(p, tol=1e-8), hmp_curve(p))


def test_supercritical_endpoints(sup):
    hpm = hpm_curve(sup)
    hmp = hmp_curve(sup)
    assert hpm.method is Method.SERIES_A and hmp.kind is CurveKind.HMINUS_PLUS
    a1 = hpm.endpoint_values["value_at_1_minus"]
    assert a1 == pytest.approx(evaluate_A(compute_coeffs(sup), 1.0), abs=1e-6)
    assert a1 <= sup.q_plus / (sup.q_minus + sup.beta)
    assert 0 < hmp.endpoint_values["value_at_1_minus"] < 1
    assert hmp.points.exit is Exit.EXIT_RIGHT


def test_critical_endpoints(crit):
    hmp = hmp_curve(crit)
    assert hmp.points.exit is Exit.REACHED_CORNER_BALL
    assert hmp.endpoint_values["value_at_1_minus"] == 1.0
    s = hpm_curve(crit).summary()
    assert s["value_at_1_minus"] == 1.0 and s["method"] == "Shooting"


def test_stable_manifold_goes_to_origin(crit):
    cur = hmp_curve(crit)
    # the trace is an orbit: flowing forward retraces it toward the origin
    k, j = len(cur.points) // 2, len(cur.points) // 2 - 100
    start = (cur.points.x[k], cur.points.y[k])
    end = flow(crit, start, cur.points.phi[k] - cur.points.phi[j], Direction.FORWARD)
    np.testing.assert_allclose(end, (cur.points.x[j], cur.points.y[j]), atol=1e-7)
    assert math.hypot(*end) < math.hypot(*start)


def test_slope_segment_points(crit):
    pts = slope_segment(crit, 10)
    assert pts.shape == (10, 2)
    assert np.all((pts > 0) & (pts < 1))
    np.testing.assert_allclose((1 - pts[:, 1]) / (1 - pts[:, 0]), 2.0)
    assert field_slope(crit, (0.75, 0.5)) == pytest.approx(0.875 / 0.34375)


def test_boundary_solutions(crit, sup):
    t0 = boundary_solutions(crit, 0)
    assert t0.x[0] == pytest.approx(hpm_at_zero(crit).value, abs=1e-9) and t0.y[0] == 0
    t1 = boundary_solutions(crit, 1)
    assert t1.x[0] == 1.0 and t1.y[-1] == 1.0
    assert boundary_solutions(sup, 0).x[0] == 0.0
    s1 = boundary_solutions(sup, 1)
    assert s1.y[0] == 1.0 and s1.x[0] < 1.0
    with pytest.raises(ValueError):
        boundary_solutions(crit, 2)
