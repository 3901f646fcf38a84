"""The fourteen acceptance criteria, one test each.

Each test prints ``PASS``/``FAIL criterion k: ...`` with its worst residual;
the lines are repeated in the terminal summary.
"""

import math

import numpy as np
import pytest

from qaw import QContext
from qaw.contour import aw_closed_i2, eval_in, root_identity_residual
from qaw.errors import DivergenceError, UnsupportedDomainError
from qaw.integrand import FamilyParams
from qaw.jackson import (
    i2_j2_relation_residual,
    in_residue,
    j2_closed,
    regularized_j,
    regularized_j_psi,
    sears_slater_residual,
    truncated_connection_residual,
)
from qaw.qdiff import (
    EXPANSIONS,
    AlphaFamily,
    aw_moment_ratio_residual,
    cij_matrix,
    coeff_g,
    coeff_g_direct,
    det_formula,
    expansion_residual,
    matrix_system,
    mpm_lemma_residual,
    phi_tilde_matrix,
    recurrence_residual,
    three_term_moment_residual,
    u_poly,
    u_poly_n3,
    w87_m00,
)
from qaw.qkernel import theta
from qaw.thetakit import ThetaTuple, f_reconstruct, four_term_theta_residual, quasi_periodicity_residual

from conftest import N2_A, N3_A, N4_A, rel

RESULTS: list[str] = []


def record(k: int, text: str, worst: float, ok: bool) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {text} (worst {worst:.3g})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _ring(rng, n):
    r = rng.uniform(0.5, 2.0, size=n)
    th = rng.uniform(-math.pi, math.pi, size=n)
    return [complex(z) for z in r * np.exp(1j * th)]


@pytest.fixture(scope="module")
def ref():
    return {
        2: FamilyParams(2, N2_A, QContext(0.1)),
        3: FamilyParams(3, N3_A, QContext(0.01)),
        4: FamilyParams(4, N4_A, QContext(0.1)),
    }


def test_criterion_01(ref):
    p = ref[2]
    err = rel(eval_in(p, "circle").value, aw_closed_i2(p.a, p.ctx))
    record(1, "quadrature vs closed form at N = 2", err, err < 1e-10)


def test_criterion_02(ref):
    rng = np.random.default_rng(2)
    sets = [ref[2]]
    for _ in range(20):
        a = rng.uniform(0.05, 0.8, size=4) * rng.choice([-1.0, 1.0], size=4)
        sets.append(FamilyParams(2, tuple(float(x) for x in a), QContext(0.1)))
    worst = max(recurrence_residual(p, "order_n_minus_1", tolerance=1e-10).residual_rel for p in sets)
    record(2, "two-term recurrence at 21 parameter sets", worst, worst < 1e-10)


def test_criterion_03(ref):
    p = ref[2]
    full = in_residue(p).value
    red = in_residue(p, reduced=True).value
    quad = eval_in(p, "circle").value
    e1, e2 = rel(full, red), max(rel(full, quad), rel(red, quad))
    record(3, f"residue full vs reduced {e1:.2g}, vs quadrature {e2:.2g}", max(e1, e2), e1 < 1e-10 and e2 < 1e-9)


def test_criterion_04(ref):
    p = ref[4]
    ra = recurrence_residual(p, "order_n_minus_1").residual_rel
    rb = recurrence_residual(p, "mixed").residual_rel
    rc = recurrence_residual(p, "matrix").residual_rel
    rd = rel(complex(np.linalg.det(matrix_system(p).A)), det_formula(p))
    ok = max(ra, rb, rc) < 1e-8 and rd < 1e-12
    record(4, f"N = 4 order-3 {ra:.2g}, mixed {rb:.2g}, matrix {rc:.2g}, det {rd:.2g}", max(ra, rb, rc, rd), ok)


def test_criterion_05(ref):
    p = ref[3]
    err = rel(eval_in(p, "circle_plus_tail").value, in_residue(p, reduced=True).value)
    record(5, "N = 3 circle plus tail vs reduced residue sum", err, err < 1e-6)


def test_criterion_06(ref):
    r = root_identity_residual(ref[3], 1e-6)
    record(6, "root identity at the N = 3 point", r.residual_rel, r.passed)


def test_criterion_07(ref):
    rng = np.random.default_rng(7)
    worst_exp = worst_c = worst_g = 0.0
    for N in (2, 3, 4):
        p = ref[N] if N != 3 else FamilyParams(3, N3_A, QContext(0.1))
        for z in _ring(rng, 50):
            for which in EXPANSIONS:
                worst_exp = max(worst_exp, expansion_residual(p, which, z).residual_rel)
        for ai in p.a[: p.N]:
            prod = cij_matrix(p, ai) @ phi_tilde_matrix(p, ai)
            worst_c = max(worst_c, float(np.abs(prod - np.eye(p.N)).max()))
            ratios = [coeff_g_direct(p, ai, i) / coeff_g(p, ai, i) for i in range(p.N)]
            worst_g = max(worst_g, max(abs(r - ratios[0]) for r in ratios) / abs(ratios[0]))
    ok = worst_exp < 1e-10 and worst_c < 1e-12 and worst_g < 1e-11
    text = f"expansions {worst_exp:.2g}, c_ij inverse {worst_c:.2g}, g-route ratio {worst_g:.2g}"
    record(7, text, max(worst_exp, worst_c, worst_g), ok)


def test_criterion_08(ref):
    rng = np.random.default_rng(8)
    worst_ss = worst_tr = 0.0
    for N in (2, 3):
        p = ref[N]
        for z in _ring(rng, 20):
            worst_ss = max(worst_ss, sears_slater_residual(z, p).residual_rel)
        for k in range(N, 2 * N + 1):
            worst_tr = max(worst_tr, truncated_connection_residual(k, p).residual_rel)
    ok = worst_ss < 1e-9 and worst_tr < 1e-10
    record(8, f"Sears-Slater {worst_ss:.2g}, truncated connection {worst_tr:.2g}", max(worst_ss, worst_tr), ok)


def test_criterion_09(ref):
    p = ref[2]
    e1 = rel(regularized_j(p.a[0], p).regularized, j2_closed(p))
    e2 = rel(regularized_j_psi(0.9 + 0.3j, p), regularized_j(0.9 + 0.3j, p).regularized)
    e3 = i2_j2_relation_residual(p).residual_rel
    worst = max(e1, e2, e3)
    record(9, f"J2 closed form {e1:.2g}, psi route {e2:.2g}, I2-J2 relation {e3:.2g}", worst, worst < 1e-10)


def test_criterion_10():
    fam = AlphaFamily((0.3, 0.4, 0.5, 0.7), 0.6, QContext(0.1))
    worst_w = worst_l = 0.0
    for t in (1.2, 0.8, 1.5):
        for s in (1, 2):
            r = three_term_moment_residual(t, fam, m=lambda u, s=s: w87_m00(u, fam, s))
            worst_w = max(worst_w, r.residual_rel)
        worst_l = max(worst_l, mpm_lemma_residual(t, fam).residual_rel)
    ok = worst_w < 1e-9 and worst_l < 1e-7
    record(10, f"8W7 solutions {worst_w:.2g}, contiguous lemma {worst_l:.2g}", max(worst_w, worst_l), ok)


def test_criterion_11(ref):
    p = ref[2]
    wm = max(recurrence_residual(p, "mrecur", k=k).residual_rel for k in range(3))
    wr = max(aw_moment_ratio_residual(p, n).residual_rel for n in range(5))
    record(11, f"moment recurrence {wm:.2g}, moment ratios {wr:.2g}", max(wm, wr), wm < 1e-8 and wr < 1e-9)


def test_criterion_12(ref):
    p2, p3 = ref[2], ref[3]
    ind = rel(u_poly(p2, p2.a[0], 0.3), u_poly(p2, p2.a[2], 0.3))
    closed = 0.0
    for x in (0.3, -0.7):
        ua = u_poly(p3, p3.a[0], x)
        ind = max(ind, rel(ua, u_poly(p3, p3.a[1], x)))
        closed = max(closed, rel(ua, u_poly_n3(p3, x)))
    ok = ind < 1e-8 and closed < 1e-7
    record(12, f"U a-independence {ind:.2g}, N = 3 closed form {closed:.2g}", max(ind, closed), ok)


def test_criterion_13():
    rng = np.random.default_rng(13)
    ctx = QContext(0.3)

    def tup(n):
        r = rng.uniform(0.6, 1.6, size=n)
        th = rng.uniform(-math.pi, math.pi, size=n)
        return ThetaTuple(tuple(complex(z) for z in r * np.exp(1j * th)), ctx)

    w4 = max(four_term_theta_residual(tup(4)).residual_rel for _ in range(100))
    wq = max(quasi_periodicity_residual(tup(5), int(rng.integers(1, 6))).residual_rel for _ in range(20))
    wf = 0.0
    for _ in range(20):
        t = tup(4)
        x1, x2, x3, x4 = t.xs
        wf = max(wf, rel(f_reconstruct(t), 2 * theta(x1 * x2 * x3 * x4, ctx)))
    ok = w4 < 1e-11 and wq < 1e-10 and wf < 1e-11
    record(13, f"four-term {w4:.2g}, quasi-periodicity {wq:.2g}, N = 2 f {wf:.2g}", max(w4, wq, wf), ok)


def test_criterion_14(ref):
    small = FamilyParams(3, (0.1, 0.1, 0.2, 0.2, 0.3, 0.3), QContext(0.1))
    outcomes = []
    for method in ("residue_full", "residue_reduced"):
        try:
            eval_in(small, method)
            outcomes.append(False)
        except DivergenceError:
            outcomes.append(True)
    for which in ("order_n_minus_1", "mixed", "n3_single", "n3_double", "matrix"):
        try:
            recurrence_residual(ref[3], which)
            outcomes.append(False)
        except UnsupportedDomainError:
            outcomes.append(True)
    record(14, f"{sum(outcomes)}/{len(outcomes)} negative paths raise the documented error", 0.0, all(outcomes))
