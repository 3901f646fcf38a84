import cmath

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaw import QContext
from qaw.contour import aw_closed_i2, eval_in
from qaw.errors import DivergenceError, ParameterError
from qaw.integrand import FamilyParams, big_phi
from qaw.jackson import (
    coeff_aki,
    i2_j2_relation_residual,
    in_residue,
    j2_closed,
    jackson_j,
    regularized_j,
    regularized_j_psi,
    residue_rk,
    sears_slater_residual,
    split_pq,
    truncated_connection_residual,
)

from conftest import rel

ring = st.builds(
    lambda r, th: r * cmath.exp(1j * th), st.floats(0.55, 1.9), st.floats(0.1, 3.0)
)


@settings(max_examples=25, deadline=None)
@given(ring)
def test_split_pq(p3, z):
    P, Q = split_pq(z, p3)
    assert rel(P * Q, big_phi(z, p3)) < 1e-11
    P2, _ = split_pq(p3.q * z, p3)
    assert rel(P, P2) < 1e-10


def test_q_vanishes_below_parameter(p2):
    # P has a pole there, so approach the point
    _, Q = split_pq(p2.a[0] / p2.q * (1 + 1e-6), p2)
    _, Q_far = split_pq(p2.a[0] / p2.q * 1.1, p2)
    assert abs(Q) < 1e-4 * abs(Q_far)


@settings(max_examples=20, deadline=None)
@given(ring)
def test_shift_invariance(p2, z):
    a = jackson_j(z, p2).raw
    b = jackson_j(p2.q * z, p2).raw
    assert rel(a, b) < 1e-11


@settings(max_examples=20, deadline=None)
@given(ring)
def test_reflection(p3, z):
    a = regularized_j(z, p3).regularized
    b = regularized_j(1 / z, p3).regularized
    assert rel(a, b) < 1e-10


@settings(max_examples=15, deadline=None)
@given(ring)
def test_psi_form(p2, z):
    assert rel(regularized_j(z, p2).regularized, regularized_j_psi(z, p2)) < 1e-10


def test_truncated_equals_bilateral_at_parameter(p2):
    a1 = p2.a[0]
    assert rel(jackson_j(a1, p2).raw, jackson_j(None, p2, truncated_at=1).raw) < 1e-13


def test_j2_closed(p2):
    assert rel(regularized_j(p2.a[0], p2).regularized, j2_closed(p2)) < 1e-10
    # any truncation point gives the same value
    assert rel(regularized_j(p2.a[2], p2).regularized, j2_closed(p2)) < 1e-10
    assert i2_j2_relation_residual(p2).passed


def test_residue_sums(p2, p3):
    full = in_residue(p2).value
    red = in_residue(p2, reduced=True).value
    assert rel(full, red) < 1e-10
    assert rel(full, aw_closed_i2(p2.a, p2.ctx)) < 1e-9
    rsum = sum(residue_rk(k, p2) for k in range(1, 5))
    assert rel(red, rsum * j2_closed(p2)) < 1e-10
    assert rel(in_residue(p3).value, in_residue(p3, reduced=True).value) < 1e-10


def test_residue_matches_circle_n4(p4):
    assert rel(in_residue(p4).value, eval_in(p4).value) < 1e-8


def test_residue_permutation(p3):
    b = (p3.a[0], p3.a[2], p3.a[1], p3.a[3], p3.a[5], p3.a[4])
    assert rel(residue_rk(1, p3), residue_rk(1, p3.replace_a(b))) < 1e-13


def test_connection_coefficients(p2, p3):
    assert coeff_aki(3, 1, p2) == 1
    for i in (1, 2):
        assert abs(coeff_aki(i, i, p3) - 1) < 1e-14
    with pytest.raises(ParameterError):
        coeff_aki(1, 3, p3)


def test_sears_slater_at_parameters(p3):
    for ai in p3.a[:2]:
        assert sears_slater_residual(ai, p3).residual_rel < 1e-12


@settings(max_examples=15, deadline=None)
@given(ring)
def test_sears_slater(p3, z):
    assert sears_slater_residual(z, p3).passed


@pytest.mark.parametrize("k", range(3, 7))
def test_truncated_connection(p3, k):
    assert truncated_connection_residual(k, p3).passed


def test_condition_violation():
    p = FamilyParams(3, (0.1, 0.1, 0.2, 0.2, 0.3, 0.3), QContext(0.1))
    with pytest.raises(DivergenceError):
        in_residue(p)
    with pytest.raises(DivergenceError):
        jackson_j(0.5, p)
