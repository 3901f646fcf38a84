import cmath

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaw import QContext
from qaw.errors import DivergenceError, ParameterError
from qaw.hyperseries import SeriesSpec, phi_series, psi_series, vwp_spec, vwp_w_series
from qaw.integrand import FamilyParams
from qaw.jackson import j2_closed, regularized_j
from qaw.qkernel import qpoch_inf_value, qpoch_n

from conftest import N2_A, rel

CTX = QContext(0.3)


def _finite_phi(upper, lower, z, q, n_terms):
    total = 0j
    for n in range(n_terms + 1):
        num = 1.0 + 0j
        for a in upper:
            num *= qpoch_n(a, q, n)
        den = qpoch_n(q, q, n)
        for b in lower:
            den *= qpoch_n(b, q, n)
        total += num / den * z**n
    return total


def test_zero_argument():
    assert phi_series(SeriesSpec([0.2, 0.3], [0.5], 0.0), CTX).value == 1
    assert vwp_w_series(0.3, [0.2, 0.4], 0.0, CTX).value == 1


def test_two_term_terminating():
    q = 0.3
    spec = SeriesSpec([1 / q, 0.4], [0.7], 0.5)
    direct = 1 + (1 - 1 / q) * (1 - 0.4) / ((1 - q) * (1 - 0.7)) * 0.5
    r = phi_series(spec, CTX)
    assert abs(r.value - direct) < 1e-14
    assert r.terms_used <= 3


@settings(max_examples=50)
@given(
    st.integers(1, 8),
    st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=4),
    st.floats(-2.0, 2.0),
)
def test_terminating_matches_loop(m, rest, z):
    q = 0.3
    upper = [q ** (-m), *rest]
    lower = [0.5 + 0.1 * k for k in range(len(rest))]
    got = phi_series(SeriesSpec(upper, lower, z), CTX).value
    want = _finite_phi(upper, lower, z, q, m)
    assert abs(got - want) <= 1e-13 * max(1.0, abs(want))


@given(st.permutations([0.2, 0.35, -0.4]), st.permutations([0.6, 0.7]))
def test_permutation_invariance(up, low):
    base = phi_series(SeriesSpec([0.2, 0.35, -0.4], [0.6, 0.7], 0.45), CTX).value
    got = phi_series(SeriesSpec(up, low, 0.45), CTX).value
    assert abs(got - base) <= 1e-13 * abs(base)


def test_doubling_budget_within_bound():
    spec = SeriesSpec([0.2, 0.35, -0.4], [0.6, 0.7], 0.9)
    a = phi_series(spec, QContext(0.3, max_terms=10**4))
    b = phi_series(spec, QContext(0.3, max_terms=2 * 10**4))
    assert abs(a.value - b.value) <= max(a.tail_bound, 1e-15 * abs(a.value))


def test_divergent_and_forbidden():
    with pytest.raises(DivergenceError):
        phi_series(SeriesSpec([0.2, 0.3], [0.5], 1.5), CTX)
    with pytest.raises(ParameterError):
        phi_series(SeriesSpec([0.2, 0.3], [1 / 0.3**2], 0.5), CTX)
    capped = phi_series(SeriesSpec([0.2, 0.3], [0.5], 0.999), QContext(0.3, max_terms=50))
    assert not capped.converged
    assert capped.tail_bound > 1.0


def test_six_phi_five_gives_j2(p2):
    a1, a2, a3, a4 = p2.a
    q = p2.q
    ctx = p2.ctx
    spec = SeriesSpec(
        [q * a1, -q * a1, a1 * a1, a1 * a2, a1 * a3, a1 * a4],
        [a1, -a1, q * a1 / a2, q * a1 / a3, q * a1 / a4],
        q / p2.prod,
    )
    pref = 1.0 + 0j
    for ai in p2.a:
        pref *= qpoch_inf_value(q * a1 / ai, ctx) * qpoch_inf_value(q / (a1 * ai), ctx)
    pref /= qpoch_inf_value(q * a1 * a1, ctx) * qpoch_inf_value(q / (a1 * a1), ctx)
    assert rel(pref * phi_series(spec, ctx).value, j2_closed(p2)) < 1e-10


def test_psi_cancelling_pair():
    base = SeriesSpec([0.7, 0.8], [0.3, 0.2], 0.7)
    with_pair = SeriesSpec([0.7, 0.8, 0.45], [0.3, 0.2, 0.45], 0.7)
    a = psi_series(base, CTX).value
    b = psi_series(with_pair, CTX).value
    assert rel(a, b) < 1e-12


def test_psi_with_lower_q_is_unilateral():
    q = 0.3
    spec = SeriesSpec([0.5, 0.7], [q, 0.6], 0.7)
    uni = phi_series(SeriesSpec([0.5, 0.7], [0.6], 0.7), CTX).value
    assert rel(psi_series(spec, CTX).value, uni) < 1e-12


def test_psi_annulus():
    with pytest.raises(DivergenceError):
        psi_series(SeriesSpec([0.7, 0.8], [0.3, 0.2], 1.2), CTX)
    with pytest.raises(DivergenceError):
        psi_series(SeriesSpec([0.7, 0.8], [0.3, 0.2], 0.01), CTX)


def test_vwp_spec_is_well_poised():
    q = 0.1
    a1 = 0.0756
    spec = vwp_spec(a1, [0.3, 0.4, 0.5, 0.7, 0.2], 0.278, q)
    for up, low in zip(spec.upper[1:], spec.lower):
        assert abs(up * low - q * a1) < 1e-15
    # the other square root gives the same series
    other = vwp_spec(a1, [0.3, 0.4, 0.5, 0.7, 0.2], 0.278, q, sign=-1)
    ctx = QContext(q)
    assert rel(phi_series(spec, ctx).value, phi_series(other, ctx).value) < 1e-13


def test_eight_w_seven_converges_at_the_alpha_point():
    q, al, t = 0.1, 0.6, 1.2
    a = (0.3, 0.4, 0.5, 0.7)
    s4 = a[0] * a[1] * a[2] * a[3]
    z = q / al**2
    assert abs(z - 0.2777777777777778) < 1e-15
    args = (s4 * al * al * t * t / q, [s4 * al * al / q, *(x * al * t for x in a)], z)
    r1 = vwp_w_series(*args, QContext(q, max_terms=100))
    r2 = vwp_w_series(*args, QContext(q, max_terms=200))
    assert r1.converged
    assert abs(r1.value - r2.value) <= 1e-14 * abs(r1.value)


def test_psi_form_of_regularized_j(p2):
    from qaw.jackson import regularized_j_psi

    z = 0.9 * cmath.exp(0.4j)
    assert rel(regularized_j(z, p2).regularized, regularized_j_psi(z, p2)) < 1e-10
