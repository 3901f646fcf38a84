import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaw import QContext
from qaw.errors import ParameterError, PoleProximityError
from qaw.integrand import (
    FamilyParams,
    basis_phi,
    big_phi,
    circle_prefactor,
    dd_apply,
    f_laurent,
    f_parts,
    pearson_residual,
    phi_on_circle,
    spectral_wv,
    v_chebyshev,
    w_chebyshev,
    weight_w,
)

from conftest import N2_A, N3_A, rel

angles = st.floats(0.05, math.pi - 0.05)
points = st.builds(
    lambda r, th: r * cmath.exp(1j * th), st.floats(0.5, 2.0), st.floats(-3.1, 3.1)
).filter(lambda z: abs(z * z - 1) > 1e-3)


def _x_of(z):
    return 0.5 * (z + 1 / z)


def test_params_validation():
    ctx = QContext(0.1)
    with pytest.raises(ParameterError):
        FamilyParams(1, (0.1, 0.2), ctx)
    with pytest.raises(ParameterError):
        FamilyParams(2, (0.1, 0.2, 0.3), ctx)
    with pytest.raises(ParameterError):
        FamilyParams(2, (0.1, 0.2, 0.3, 1.2), ctx)
    FamilyParams(2, (0.1, 0.2, 0.3, 1.2), ctx, inside=False)


def test_prefactor_limit():
    for N in (2, 3, 4, 5):
        assert abs(circle_prefactor(1e-9, N) - 2 / N) < 1e-12
        assert abs(circle_prefactor(1e-6, N) - 2 / N) < 1e-9


@settings(max_examples=40, deadline=None)
@given(angles)
def test_phi_reflection(p3, t):
    z = cmath.exp(1j * t)
    assert rel(big_phi(z, p3), big_phi(1 / z, p3)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-math.pi, math.pi))
def test_vectorised_matches_scalar(p4, t):
    # Phi vanishes at z = +-1, so compare against its typical size
    typical = np.abs(phi_on_circle(np.linspace(-3, 3, 64), p4)).mean()
    assert abs(phi_on_circle(np.array([t]), p4)[0] - big_phi(cmath.exp(1j * t), p4)) < 1e-12 * typical


def test_phi_at_roots_of_unity(p3):
    typical = abs(big_phi(cmath.exp(0.5j), p3))
    # the sine prefactor is removable there and Phi vanishes
    for k in (0, 1, 2):
        z = cmath.exp(2j * math.pi * k / 3)
        assert abs(big_phi(z, p3)) < 1e-14 * typical


def test_weight_and_phi(p2):
    t = 0.7
    z = cmath.exp(1j * t)
    assert rel(big_phi(z, p2), math.sin(t) * weight_w(t, p2)) < 1e-12


def test_f_parts_at_parameters(p3):
    for ai in p3.a:
        fm, fp, f = f_parts(ai, p3)
        assert abs(fm) < 1e-14
        prod = 1.0
        for am in p3.a:
            prod *= 1 - ai * am
        want = prod / (ai ** (p3.N - 1) * (1 - ai * ai))
        assert rel(fp, want) < 1e-12


@settings(max_examples=40, deadline=None)
@given(points)
def test_f_symmetric_and_laurent(p4, z):
    f = f_parts(z, p4)[2]
    assert rel(f, f_parts(1 / z, p4)[2]) < 1e-11
    assert rel(f, f_laurent(z, p4)) < 1e-11


@settings(max_examples=40, deadline=None)
@given(points)
def test_spectral_reflection(p3, z):
    a = spectral_wv(z, p3)
    b = spectral_wv(1 / z, p3)
    assert rel(a.w_plus * a.w_minus, b.w_plus * b.w_minus) < 1e-12


@pytest.mark.parametrize("N,a", [(2, N2_A), (3, N3_A), (4, (0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75))])
def test_chebyshev_forms(N, a):
    p = FamilyParams(N, a, QContext(0.1))
    rq = math.sqrt(0.1)
    for z in (0.3 + 0.8j, 1.7 - 0.2j, -0.6 + 0.1j):
        s = spectral_wv(z, p)
        x = _x_of(z)
        dy = 0.5 * (rq - 1 / rq) * (z - 1 / z)
        assert rel(s.w_value, w_chebyshev(x, p)) < 1e-12
        assert rel(s.dyv_value, dy * v_chebyshev(x, p)) < 1e-12


def test_n2_w_v_closed_forms(p2):
    q = p2.q.real
    s = [x.real for x in p2.sigma]
    for x in (0.3, -0.8, 1.4):
        w = 2 * (1 + s[4] / q**2) * x**2 - (s[1] / q**0.5 + s[3] / q**1.5) * x - 1 + s[2] / q - s[4] / q**2
        v = (2 * (s[4] / q**2 - 1) * x + s[1] / q**0.5 - s[3] / q**1.5) / (q**0.5 - q**-0.5)
        assert rel(w_chebyshev(x, p2), w) < 1e-13
        assert rel(v_chebyshev(x, p2), v) < 1e-13


def test_n3_v_closed_form(p3_q1):
    q = 0.1
    st_ = [x / q ** (0.5 * k) for k, x in enumerate(p3_q1.sigma)]
    for x in (0.3, -0.8, 1.4):
        v = (-4 * (1 - st_[6]) * x**2 + 2 * (st_[1] - st_[5]) * x + 1 - st_[2] + st_[4] - st_[6]) / (q**0.5 - q**-0.5)
        assert rel(v_chebyshev(x, p3_q1), v) < 1e-13


def test_dd_operators():
    ctx = QContext(0.2)
    z = 0.4 + 0.9j
    assert abs(dd_apply("D", lambda u: 3.0, z, ctx)) < 1e-15
    assert abs(dd_apply("D", _x_of, z, ctx) - 1) < 1e-14
    assert abs(dd_apply("M", lambda u: 3.0, z, ctx) - 3) < 1e-15
    with pytest.raises(PoleProximityError):
        dd_apply("D", _x_of, 1.0, ctx)
    with pytest.raises(ParameterError):
        dd_apply("X", _x_of, z, ctx)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 0.9), st.integers(1, 5), points)
def test_basis_lowering(a, r, z):
    # D phi_r(x; a) = -2a(1 - q^r)/(1 - q) phi_{r-1}(x; q^{1/2} a)
    if abs(a) < 1e-3:
        return
    ctx = QContext(0.3)
    q = 0.3
    lhs = dd_apply("D", lambda u: basis_phi(u, a, r, ctx), z, ctx)
    rhs = -2 * a * (1 - q**r) / (1 - q) * basis_phi(z, math.sqrt(q) * a, r - 1, ctx)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


def test_basis_continuation_matches_integer():
    ctx = QContext(0.3)
    z = 0.7 + 0.4j
    assert rel(basis_phi(z, 0.5, 3, ctx), basis_phi(z, 0.5, 3.0 + 0j, ctx)) < 1e-12


@pytest.mark.parametrize("fixture", ["p2", "p3", "p4"])
def test_pearson(fixture, request):
    p = request.getfixturevalue(fixture)
    for t in (0.3, 1.1, 2.5, -0.8):
        assert pearson_residual(t, p).passed
