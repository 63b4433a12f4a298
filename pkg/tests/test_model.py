from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from brwlab.errors import DomainError, ParameterError
from brwlab.model import (
    ModelParams,
    Regime,
    critical_beta,
    critical_level_means,
    derive_constants,
    expectation_matrix_exp,
    expm2,
    gamma_eigenvalue,
    linearization_at_one_one,
    linearization_matrix,
)

from strategies import params


@pytest.mark.parametrize("qp,qm,b", [(4, 1, 1), (1, 1, 1), (0, 4, 1), (-1, 4, 1), (1, 4, 0), (1, 4, -0.1),
                                     (1, 4, math.nan), (1, math.inf, 1)])
def test_invalid_params_rejected(qp, qm, b):
    with pytest.raises(ParameterError):
        ModelParams(qp, qm, b)


def test_bool_and_string_rejected():
    with pytest.raises(ParameterError):
        ModelParams(True, 4.0, 0.5)
    with pytest.raises(ParameterError):
        ModelParams("1", 4.0, 0.5)


def test_numpy_scalars_accepted():
    p = ModelParams(np.int64(1), np.float32(4), np.float64(0.5))
    assert isinstance(p.q_plus, float) and p.q_minus == 4.0


def test_critical_example(crit):
    dc = derive_constants(crit)
    assert dc.beta_c == 0.5
    assert dc.regime is Regime.CRITICAL
    assert dc.m == 2.0
    assert (dc.k_plus, dc.k_minus) == (1.5, 4.5)


def test_regimes(sub, sup):
    assert derive_constants(sub).regime is Regime.SUBCRITICAL
    assert derive_constants(sup).regime is Regime.SUPERCRITICAL


def test_spiral_at_beta_four(sup):
    info = linearization_at_one_one(sup)
    assert info.discriminant == pytest.approx(-7.0)
    assert all(abs(z.imag) > 0 for z in info.eigenvalues)
    assert info.eigenvectors == ()


@pytest.mark.parametrize("b", [0.5, 4.5])
def test_double_roots(b):
    info = linearization_at_one_one(ModelParams(1, 4, b))
    assert abs(info.discriminant) <= 1e-12
    assert info.eigenvalues[0] == info.eigenvalues[1] == 1.5


def test_critical_eigenvector_is_one_m(crit):
    v = np.array(linearization_at_one_one(crit).eigenvectors[0])
    assert v[1] / v[0] == pytest.approx(2.0, rel=1e-14)
    mat = linearization_matrix(crit)
    np.testing.assert_allclose(mat @ v, 1.5 * v, atol=1e-14)


@given(params())
def test_eigenpairs_match_numpy(p):
    info = linearization_at_one_one(p)
    mat = linearization_matrix(p)
    got = sorted(info.eigenvalues, key=lambda z: (z.real, z.imag))
    ref = sorted(np.linalg.eigvals(mat), key=lambda z: (z.real, z.imag))
    for a, b in zip(got, ref):
        assert abs(a - b) <= 1e-7 * max(1.0, abs(b))
    for lam, v in zip(info.eigenvalues, info.eigenvectors):
        r = mat @ np.array(v) - lam.real * np.array(v)
        assert np.max(np.abs(r)) <= 1e-6 * max(1.0, np.max(np.abs(mat)))


@given(st.floats(0.05, 10), st.floats(0.05, 20))
def test_discriminant_vanishes_at_beta_c(qp, d):
    qm = qp + d
    p = ModelParams(qp, qm, critical_beta(qp, qm))
    assert abs(linearization_at_one_one(p).discriminant) <= 1e-9 * (qp + qm) ** 2


@given(params())
def test_gamma_minimum_is_minus_beta_c(p):
    mu = 0.5 * (p.q_minus - p.q_plus)
    bc = critical_beta(p.q_plus, p.q_minus)
    assert gamma_eigenvalue(p, mu) == pytest.approx(-bc, abs=1e-12 * max(1.0, p.q_minus))
    for dm in (-0.3, 0.2, 1.0):
        if mu + dm >= 0:
            assert gamma_eigenvalue(p, mu + dm) >= gamma_eigenvalue(p, mu) - 1e-12


@given(params(), st.floats(0, 3))
def test_gamma_is_top_eigenvalue(p, mu):
    q = np.array([[-p.q_plus, p.q_plus], [p.q_minus, -p.q_minus]])
    ref = max(np.linalg.eigvals(q - mu * np.diag([1.0, -1.0])).real)
    assert gamma_eigenvalue(p, mu) == pytest.approx(ref, abs=1e-9 * max(1.0, p.q_minus))


def test_gamma_domain():
    with pytest.raises(DomainError):
        gamma_eigenvalue(ModelParams(1, 4, 1), -0.1)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(-2, 2))
def test_expm2_matches_scipy(entries, t):
    mat = np.array(entries).reshape(2, 2)
    ref = scipy.linalg.expm(t * mat)
    np.testing.assert_allclose(expm2(mat, t), ref, rtol=1e-9, atol=1e-9 * max(1.0, np.max(np.abs(ref))))


def test_expm2_jordan_block():
    mat = np.array([[1.5, 1.0], [0.0, 1.5]])
    np.testing.assert_allclose(expm2(mat, 0.7), scipy.linalg.expm(0.7 * mat), rtol=1e-13)


def test_expectation_domain(crit):
    with pytest.raises(DomainError):
        expectation_matrix_exp(crit, -1)


def test_critical_means_closed_forms(crit):
    for phi in (0.0, 0.5, 2.0):
        m = critical_level_means(crit, phi)
        e = math.exp(1.5 * phi)
        assert m["E+N+"] == pytest.approx(e)
        assert m["E-N+"] == pytest.approx(2 * e)
        assert m["E+N-"] == pytest.approx(0.5 / e)
        assert m["E-N-"] == pytest.approx(1 / e)
        # balance: E-N+(0) E+N-(0) = 1
        assert critical_level_means(crit, 0)["E-N+"] * critical_level_means(crit, 0)["E+N-"] == pytest.approx(1)


def test_critical_means_need_criticality(sub):
    with pytest.raises(DomainError):
        critical_level_means(sub, 0.0)


def test_as_dict_roundtrip(crit):
    assert ModelParams(**crit.as_dict()) == crit
    assert crit.with_beta(0.4).beta == 0.4
