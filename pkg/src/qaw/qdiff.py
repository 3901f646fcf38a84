"""Expansion coefficients and residual checks for the q-difference equations of I_N.

Coefficient formulas are transcribed term by term (no algebraic
simplification) so that independent routes can catch transcription slips.
Notation: ``phi~_n(z; a) = (a z, a/z; q)_n``, ``phi_n(x; a)`` the same
product as a polynomial in ``x = (z + 1/z) / 2``, ``sigma_m`` the elementary
symmetric polynomials of ``a_1 .. a_2N``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .contour import eval_in, integrate_weighted, weight_phi
from .errors import DivergenceError, ParameterError, PoleProximityError, UnsupportedDomainError
from .integrand import FamilyParams, basis_phi, f_parts, spectral_wv
from .qkernel import QContext, qbinom, qpoch_n
from .report import ResidualReport, residual

__all__ = [
    "ResidualReport",
    "GaussSystem",
    "AlphaFamily",
    "IDENTITIES",
    "coeff_f",
    "coeff_g",
    "coeff_g_direct",
    "coeff_g_new",
    "cij_matrix",
    "phi_tilde_matrix",
    "lemc_coeffs",
    "mixed_coeffs",
    "matrix_system",
    "recurrence_terms",
    "recurrence_residual",
    "w87_m00",
    "three_term_moment_residual",
    "mpm_lemma_residual",
    "u_poly",
    "u_poly_n3",
    "basis_x",
    "EXPANSIONS",
    "expansion_residual",
    "aw_moment_ratio_residual",
    "det_formula",
]

IDENTITIES = ("order_n_minus_1", "mixed", "t3_identity", "mrecur", "n3_single", "n3_double", "matrix")
EXPANSIONS = ("lem_g", "lem_c", "sum_bexp", "g_diff", "g_tie")

_AGREE = 1e-10


def _sqrt_q(q: complex) -> complex:
    return cmath.exp(0.5 * cmath.log(q))


def _qpow(q: complex, e: float) -> complex:
    return cmath.exp(e * cmath.log(q))


def _nonzero(v: complex, what: str, delta: float) -> complex:
    if abs(v) < delta:
        raise PoleProximityError(f"{what} vanishes within the guard distance")
    return v


def basis_x(x, b, n: int, q) -> complex:
    """``phi_n(x; b) = prod_{k<n} (1 - 2 b q^k x + b^2 q^{2k})``."""
    out = 1.0 + 0.0j
    bk = complex(b)
    for _ in range(n):
        out *= 1.0 - 2.0 * bk * x + bk * bk
        bk *= q
    return out


def _phi_tilde(z, a, n: int, q) -> complex:
    return qpoch_n(a * z, q, n) * qpoch_n(a / z, q, n)


# -- expansion coefficients -------------------------------------------------------


def coeff_f(p: FamilyParams, a, k: int) -> complex:
    """``f_{N,k}(a)``, the expansion coefficient of ``E+(W + dy V) + E-(W - dy V)``."""
    N = p.N
    if not 0 <= k <= N:
        raise ParameterError(f"k must lie in 0..{N}")
    a = complex(a)
    if a == 0:
        raise ParameterError("a must be nonzero")
    q = p.q
    d = p.ctx.delta
    sig = p.sigma
    outer = 0.0j
    for m in range(2 * N + 1):
        s = 0.0j
        for l in range(k + 1):
            den = qpoch_n(q ** (1 + 2 * k - 2 * l) * a * a, q, l) * qpoch_n(q ** (1 + 2 * l - 2 * k) / (a * a), q, k - l)
            _nonzero(den, "an f-coefficient denominator", d)
            s += (
                qbinom(k, l, q)
                * a ** (2 * (l - k) + N - m)
                * q ** (-((k - l) ** 2) + (k - l) * (N - m))
                / den
            )
        outer += (-1) ** m * (sig[m] + sig[2 * N - m]) * s
    return 0.5 * _qpow(q, k - 0.5 * N) / qpoch_n(q, q, k) * outer


def coeff_g(p: FamilyParams, a, k: int) -> complex:
    """``g_{N,k}(a)``, the expansion coefficient of ``E+(W + dy V) - E-(W - dy V)``."""
    N = p.N
    if not 0 <= k <= N - 1:
        raise ParameterError(f"k must lie in 0..{N - 1}")
    a = complex(a)
    if a == 0:
        raise ParameterError("a must be nonzero")
    q = p.q
    d = p.ctx.delta
    sig = p.sigma
    outer = 0.0j
    for m in range(2 * N + 1):
        s = 0.0j
        for l in range(k + 1):
            den = qpoch_n(q ** (2 * k - 2 * l) * a * a, q, l + 1) * qpoch_n(
                q ** (1 + 2 * l - 2 * k) / (a * a), q, k - l
            )
            _nonzero(den, "a g-coefficient denominator", d)
            s += (
                qbinom(k, l, q)
                * a ** (1 + 2 * (l - k))
                * q ** (-((k - l) ** 2) + (k - l) * (m + 1 - N))
                / den
            )
        outer += (-1) ** m * (sig[m] - sig[2 * N - m]) * a ** (m - N) * s
    return -_qpow(q, k - 0.5 * N) / qpoch_n(q, q, k) * outer


def coeff_g_new(p: FamilyParams, a, i: int) -> complex:
    """``g_i(a)`` from the closed double sum of the first-principles expansion of ``F``."""
    N = p.N
    if not 0 <= i <= N - 1:
        raise ParameterError(f"i must lie in 0..{N - 1}")
    a = complex(a)
    q = p.q
    d = p.ctx.delta
    sig = p.sigma
    total = 0.0j
    for j in range(i + 1):
        den = (
            qpoch_n(q, q, i - j)
            * qpoch_n(q, q, j)
            * qpoch_n(q ** (2 * j) * a * a, q, i - j + 1)
            * qpoch_n(q**j * a * a, q, j)
        )
        _nonzero(den, "a g_i denominator", d)
        for m in range(2 * N + 1):
            total += (
                (-1) ** (j + m)
                * (sig[m] - sig[2 * N - m])
                * (q**j * a) ** (m - N)
                * q ** (j * (j + 1) // 2)
                / den
            )
    return a * q**i * total


def phi_tilde_matrix(p: FamilyParams, a) -> np.ndarray:
    """Lower-triangular ``(phi~_j(q^i a; a))_{i,j=0}^{N-1}``."""
    N = p.N
    q = p.q
    a = complex(a)
    out = np.zeros((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            out[i, j] = _phi_tilde(q**i * a, a, j, q)
    return out


def cij_matrix(p: FamilyParams, a) -> np.ndarray:
    """``(c_ij)``, the closed-form inverse of :func:`phi_tilde_matrix`."""
    N = p.N
    q = p.q
    a = complex(a)
    d = p.ctx.delta
    out = np.zeros((N, N), dtype=complex)
    for i in range(N):
        for j in range(i + 1):
            den = (
                qpoch_n(q, q, i - j)
                * qpoch_n(q, q, j)
                * qpoch_n(q ** (2 * j + 1) * a * a, q, i - j)
                * qpoch_n(q**j * a * a, q, j)
            )
            _nonzero(den, "a c_ij denominator", d)
            out[i, j] = (-1) ** j * q ** (i + j * (j - 1) // 2) / den
    return out


def coeff_g_direct(p: FamilyParams, a, i: int) -> complex:
    """``g_i(a)`` computed twice: closed double sum and ``sum_j c_ij F(q^j a)``.

    Raises :class:`ArithmeticError` if the two routes disagree beyond 1e-10.
    """
    closed = coeff_g_new(p, a, i)
    c = cij_matrix(p, a)
    q = p.q
    terms = [c[i, j] * f_parts(q**j * complex(a), p)[2] for j in range(i + 1)]
    inverted = sum(terms)
    scale = max(max(abs(t) for t in terms), abs(closed), 1e-300)
    if abs(closed - inverted) > _AGREE * scale:
        raise ArithmeticError(
            f"g_{i} routes disagree: closed {closed!r} vs inversion {inverted!r}"
        )
    return closed


def lemc_coeffs(p: FamilyParams) -> tuple[complex, list[complex]]:
    """``(C_0, [C_1 .. C_{N-1}])`` of the product expansion of ``F``."""
    N = p.N
    a = p.a
    d = p.ctx.delta
    head = 1.0 + 0.0j
    for x in a[: N - 1]:
        head *= x
    c0 = (-1) ** (N - 1) / head * (1.0 - p.prod)
    cs = []
    for i in range(1, N):
        ai = a[i - 1]
        num = 1.0 + 0.0j
        for m in range(N, 2 * N + 1):
            num *= 1.0 - ai * a[m - 1]
        den = 1.0 + 0.0j
        for j in range(1, N):
            if j != i:
                den *= 1.0 - ai / a[j - 1]
        _nonzero(den, f"prod (1 - a_{i}/a_j)", d)
        cs.append((-1) ** N / head * num / den)
    return c0, cs


def mixed_coeffs(p: FamilyParams) -> tuple[list[complex], list[complex]]:
    """``(b, c)`` of the mixed q-difference equation, each of length ``N - 1``."""
    N = p.N
    a = p.a
    q = p.q
    d = p.ctx.delta
    den_b = _nonzero(1.0 - q ** (1 - N) * p.prod, "1 - q^{1-N} prod a", d)
    den_c = _nonzero(1.0 - p.prod, "1 - prod a", d)
    b, c = [], []
    for i in range(1, N):
        ai = a[i - 1]
        nb = 1.0 + 0.0j
        nc = 1.0 + 0.0j
        for m in range(N, 2 * N + 1):
            nb *= 1.0 - ai * a[m - 1] / q
            nc *= 1.0 - ai * a[m - 1]
        pr = 1.0 + 0.0j
        for j in range(1, N):
            if j != i:
                pr *= 1.0 - ai / a[j - 1]
        _nonzero(pr, f"prod (1 - a_{i}/a_j)", d)
        b.append(nb / (den_b * pr))
        c.append(nc / (den_c * pr))
    return b, c


@dataclass(frozen=True)
class GaussSystem:
    A: np.ndarray
    upper_factor: np.ndarray
    lower_factor: np.ndarray
    c: tuple
    d: tuple

    @property
    def det(self) -> complex:
        out = complex(self.c[0])
        for x in self.d:
            out *= x
        return out


def matrix_system(p: FamilyParams) -> GaussSystem:
    """Coefficient matrix of ``T_{a_1} I = I A`` from its Gauss decomposition."""
    N = p.N
    a = p.a
    d_ = p.ctx.delta
    if abs(1.0 - p.prod) < d_ or any(abs(1.0 - a[0] * a[m]) < d_ for m in range(1, 2 * N)):
        raise PoleProximityError("degenerate system: prod a = 1 or a_1 a_m = 1")
    _, c = mixed_coeffs(p)
    n = N - 1
    upper = np.zeros((n, n), dtype=complex)
    lower = np.eye(n, dtype=complex)
    upper[0, 0] = c[0]
    d = []
    for i in range(2, N):
        upper[0, i - 1] = a[0] / a[i - 1]
        di = (1.0 - a[0] * a[i - 1]) * (1.0 - a[0] / a[i - 1])
        upper[i - 1, i - 1] = di
        d.append(di)
        lower[i - 1, 0] = c[i - 1]
    return GaussSystem(upper @ lower, upper, lower, tuple(c), tuple(d))


def det_formula(p: FamilyParams) -> complex:
    """``prod_{m=2}^{2N} (1 - a_1 a_m) / (1 - a_1 ... a_2N)``."""
    out = 1.0 + 0.0j
    for m in range(1, 2 * p.N):
        out *= 1.0 - p.a[0] * p.a[m]
    return out / (1.0 - p.prod)


# -- pointwise expansion identities ----------------------------------------------


def _shifted_spectral(z: complex, p: FamilyParams) -> tuple[complex, complex]:
    """``E+(W + dy V)`` and ``E-(W - dy V)`` at ``z``."""
    rq = _sqrt_q(p.q)
    return spectral_wv(rq * z, p).w_plus, spectral_wv(z / rq, p).w_minus


def expansion_residual(
    p: FamilyParams, which: str, z, a=None, tolerance: float = 1e-10
) -> ResidualReport:
    """Pointwise residual of an expansion identity at ``z``.

    ``lem_g``: ``F = sum_i g_i(a) phi~_i(z; a)``;
    ``lem_c``: ``F`` in products of ``phi~_1(z; a_i)``;
    ``sum_bexp``: ``E+(W + dy V) + E-(W - dy V) = 2 sum_l f_{N,l} phi~_l``;
    ``g_diff``: ``E+(W + dy V) - E-(W - dy V) = (z - 1/z) sum_l g_{N,l} phi~_l``;
    ``g_tie``: ``F = -q^{N/2} sum_l g_{N,l} phi~_l``.
    """
    z = complex(z)
    N = p.N
    ctx = p.ctx
    a = p.a[0] if a is None else complex(a)
    if which == "lem_g":
        terms = [f_parts(z, p)[2]] + [-coeff_g_new(p, a, i) * basis_phi(z, a, i, ctx) for i in range(N)]
    elif which == "lem_c":
        c0, cs = lemc_coeffs(p)
        ph = [basis_phi(z, ai, 1, ctx) for ai in p.a[: N - 1]]
        lead = c0
        for v in ph:
            lead *= v
        terms = [f_parts(z, p)[2], -lead]
        for j in range(N - 1):
            t = cs[j]
            for i, v in enumerate(ph):
                if i != j:
                    t *= v
            terms.append(-t)
    elif which == "sum_bexp":
        up, down = _shifted_spectral(z, p)
        terms = [up, down] + [-2.0 * coeff_f(p, a, l) * basis_phi(z, a, l, ctx) for l in range(N + 1)]
    elif which == "g_diff":
        up, down = _shifted_spectral(z, p)
        d = z - 1.0 / z
        terms = [up, -down] + [-d * coeff_g(p, a, l) * basis_phi(z, a, l, ctx) for l in range(N)]
    elif which == "g_tie":
        c = p.p
        terms = [f_parts(z, p)[2]] + [c * coeff_g(p, a, l) * basis_phi(z, a, l, ctx) for l in range(N)]
    else:
        raise ParameterError(f"unknown expansion {which!r}; choose from {EXPANSIONS}")
    params = p.snapshot() | {"z": [z.real, z.imag], "a_basis": [a.real, a.imag]}
    return residual(which, params, terms, tolerance)


def aw_moment_ratio_residual(p: FamilyParams, n: int, tolerance: float = 1e-9) -> ResidualReport:
    """``m_{0,n}(a_1) / m_{0,0} = (a_1 a_2, a_1 a_3, a_1 a_4; q)_n / (sigma_4; q)_n`` at ``N = 2``."""
    if p.N != 2:
        raise ParameterError("the moment ratio formula is the N = 2 case")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    q = p.q
    a1 = p.a[0]
    num = 1.0 + 0.0j
    for aj in p.a[1:]:
        num *= qpoch_n(a1 * aj, q, n)
    mn = eval_in(p.shifted(_shift(p, {1: n}))).value
    m0 = eval_in(p).value
    terms = [mn * qpoch_n(p.prod, q, n), -m0 * num]
    return residual(f"aw_moment_ratio(n={n})", p.snapshot(), terms, tolerance)


# -- evaluation of the integrals in an identity -------------------------------------


def _shift(p: FamilyParams, pairs: dict) -> tuple:
    s = [0] * (2 * p.N)
    for slot, k in pairs.items():
        s[slot - 1] += k
    return tuple(s)


def _evaluable(p: FamilyParams, shifts: tuple, evaluator: str) -> None:
    ps = p.shifted(shifts, inside=False)
    odd = p.N % 2 == 1
    needs_condition = odd or evaluator.startswith("residue")
    if needs_condition and not abs(p.q) ** (p.N - 1) < abs(ps.prod):
        raise UnsupportedDomainError(
            f"I_N at shifts {list(shifts)} (parameters {[complex(x) for x in ps.a]}) lies outside "
            f"|q^(N-1)| < |prod a|, where no supported evaluator converges"
        )
    if evaluator in ("circle", "circle_plus_tail") and any(abs(x) >= 1 for x in ps.a):
        raise UnsupportedDomainError(f"shifts {list(shifts)} move a parameter outside the unit circle")


def _evaluator_for(p: FamilyParams, evaluator: str) -> str:
    if evaluator == "auto":
        return "circle" if p.N % 2 == 0 else "circle_plus_tail"
    return evaluator


def recurrence_terms(p: FamilyParams, which: str, **kw) -> list[tuple[complex, tuple]]:
    """Coefficient / shift pairs whose weighted sum of I_N values vanishes."""
    N = p.N
    q = p.q
    a = p.a
    if which == "order_n_minus_1":
        i = kw.get("slot", 1)
        return [(coeff_g(p, a[i - 1], l), _shift(p, {i: l})) for l in range(N)]
    if which == "mixed":
        _, c = mixed_coeffs(p)
        base = {j: 1 for j in range(1, N)}
        out = [(1.0 + 0.0j, _shift(p, base))]
        for i in range(1, N):
            sh = dict(base)
            sh[i] = 0
            out.append((-c[i - 1], _shift(p, sh)))
        return out
    if which == "t3_identity":
        j, k = kw.get("slots", (1, 2))
        if j == k:
            raise ParameterError("t3_identity needs two distinct slots")
        aj, ak = a[j - 1], a[k - 1]
        return [
            (ak, _shift(p, {j: 1})),
            (-aj, _shift(p, {k: 1})),
            (-(ak - aj) * (1.0 - aj * ak), _shift(p, {})),
        ]
    if which == "mrecur":
        k = int(kw.get("k", 0))
        j, i = kw.get("slots", (1, 2))
        if j == i:
            raise ParameterError("mrecur needs two distinct slots")
        ai, aj = a[i - 1], a[j - 1]
        out = []
        for l in range(N):
            out.append((0.5 * (1.0 + q ** (-k)) * coeff_g(p, ai, l), _shift(p, {j: k, i: l})))
        if k > 0:
            pre = (1.0 - q**k) * aj / q
            for l in range(N + 1):
                g = coeff_g(p, ai, l) if l < N else 0.0
                c = coeff_f(p, ai, l) + 0.5 * (q ** (k - 1) * aj - q ** (1 - k) / aj) * g
                out.append((pre * c, _shift(p, {j: k - 1, i: l})))
        return out
    if which == "n3_single":
        if N != 3:
            raise ParameterError("n3_single is the N = 3 recurrence")
        a1 = a[0]
        rest = a[1:]
        pr = p.prod
        c0 = 1.0 + 0.0j
        for x in rest:
            c0 *= a1 * x - 1.0
        c1 = (
            1.0
            + 1.0 / q
            - a1 * (sum(rest) - q * a1)
            + pr * (a1 * sum(1.0 / x for x in a[1:5]) - 1.0 / q - (q + 1.0) * a1 * a1)
        )
        c2 = (pr - 1.0) / q
        return [(c0, _shift(p, {})), (c1, _shift(p, {1: 1})), (c2, _shift(p, {1: 2}))]
    if which == "n3_double":
        if N != 3:
            raise ParameterError("n3_double is the N = 3 recurrence")
        a5, a6 = a[4], a[5]
        s = [1.0, sum(a[:4])]
        from .qkernel import elem_sym_all

        s = elem_sym_all(a[:4])
        p6 = p5 = 1.0 + 0.0j
        for x in a[:4]:
            p6 *= 1.0 - x * a6
            p5 *= 1.0 - x * a5
        mid = (
            (1.0 + q) * (1.0 + q * a5 * a6 * s[2] + q * q * a5 * a5 * a6 * a6 * s[4])
            - (q * a5 - a6) * (q * a6 - a5) * (q + s[4])
            - q * (a5 + a6) * (s[1] + q * a5 * a6 * s[3])
        )
        return [
            ((a5 - q * a6) * p6, _shift(p, {5: 2})),
            (-(a5 - a6) * mid, _shift(p, {5: 1, 6: 1})),
            ((q * a5 - a6) * p5, _shift(p, {6: 2})),
        ]
    raise ParameterError(f"unknown identity {which!r}; choose from {IDENTITIES}")


def _matrix_residual(p: FamilyParams, evaluator: str, tolerance: float) -> ResidualReport:
    N = p.N
    sysm = matrix_system(p)

    def vec(extra: int) -> list[tuple]:
        out = []
        for i in range(1, N):
            sh = {j: 1 for j in range(2, N) if j != i}
            if extra:
                sh[1] = extra
            out.append(_shift(p, sh))
        return out

    base, shifted = vec(0), vec(1)
    for s in base + shifted:
        _evaluable(p, s, evaluator)
    ev = _evaluator_for(p, evaluator)
    vals = {s: eval_in(p.shifted(s), ev).value for s in set(base + shifted)}
    worst_abs, worst_scale, worst_rel = 0.0, 1.0, -1.0
    for col in range(N - 1):
        terms = [vals[shifted[col]]] + [-vals[base[r]] * sysm.A[r, col] for r in range(N - 1)]
        scale = max(abs(t) for t in terms)
        res = abs(sum(terms))
        if res / scale > worst_rel:
            worst_abs, worst_scale, worst_rel = res, scale, res / scale
    return ResidualReport("matrix", p.snapshot(), worst_abs, worst_scale, tolerance)


def recurrence_residual(
    p: FamilyParams, which: str, evaluator: str = "auto", tolerance: float = 1e-8, **kw
) -> ResidualReport:
    """Normalised residual of a q-difference identity for I_N.

    Every shifted integral is checked for evaluability before any number is
    computed; for odd N the shifts that push ``prod a`` below ``q^{N-1}``
    raise :class:`UnsupportedDomainError`.
    """
    if which not in IDENTITIES:
        raise ParameterError(f"unknown identity {which!r}; choose from {IDENTITIES}")
    if which == "matrix":
        return _matrix_residual(p, evaluator, tolerance)
    pairs = recurrence_terms(p, which, **kw)
    for _, s in pairs:
        _evaluable(p, s, evaluator)
    ev = _evaluator_for(p, evaluator)
    cache: dict = {}
    terms = []
    for c, s in pairs:
        if s not in cache:
            cache[s] = eval_in(p.shifted(s), ev).value
        terms.append(c * cache[s])
    name = which if which != "mrecur" else f"mrecur(k={kw.get('k', 0)})"
    return residual(name, p.snapshot(), terms, tolerance)


# -- N = 3 deformation: a_5 = alpha t, a_6 = alpha / t -------------------------------


@dataclass(frozen=True)
class AlphaFamily:
    """``N = 3`` parameters ``(a_1..a_4, alpha t, alpha / t)``."""

    a: tuple
    alpha: complex
    ctx: QContext

    def __post_init__(self):
        a = tuple(complex(x) for x in self.a)
        if len(a) != 4 or any(x == 0 for x in a):
            raise ParameterError("AlphaFamily takes four nonzero fixed parameters")
        if complex(self.alpha) == 0:
            raise ParameterError("alpha must be nonzero")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def sigma(self) -> list:
        from .qkernel import elem_sym_all

        return elem_sym_all(self.a)

    def params(self, t, inside: bool = False) -> FamilyParams:
        t = complex(t)
        return FamilyParams(3, self.a + (self.alpha * t, self.alpha / t), self.ctx, inside=inside)

    def snapshot(self, t=None) -> dict:
        q = self.ctx.q
        out = {
            "N": 3,
            "q": [q.real, q.imag],
            "a": [[x.real, x.imag] for x in self.a],
            "alpha": [self.alpha.real, self.alpha.imag],
        }
        if t is not None:
            out["t"] = [complex(t).real, complex(t).imag]
        return out


def w87_m00(t, fam: AlphaFamily, solution: int = 1) -> complex:
    """Very-well-poised ``8W7`` solution of the three-term moment recurrence.

    ``solution=2`` is the companion obtained by ``t -> 1/t``.
    """
    from .hyperseries import vwp_w_series
    from .qkernel import qpoch_inf_value

    t = complex(t)
    if solution == 2:
        t = 1.0 / t
    elif solution != 1:
        raise ParameterError("solution must be 1 or 2")
    ctx = fam.ctx
    q = ctx.q
    al = fam.alpha
    if not abs(al * al) > abs(q):
        raise DivergenceError("the 8W7 solution needs |alpha^2| > |q|")
    s4 = fam.sigma[4]
    rq = _sqrt_q(q)
    pref = cmath.exp(0.5 * cmath.log(t))
    for x in (q * al * t, 1.0 / (al * t), rq * al * t, rq / (al * t)):
        pref *= qpoch_inf_value(x, ctx)
    for aj in fam.a:
        pref *= qpoch_inf_value(s4 * al * t / aj, ctx)
    den = 1.0 + 0.0j
    for aj in fam.a:
        den *= qpoch_inf_value(aj * al * t, ctx)
    den *= qpoch_inf_value(t ** (-2), ctx) * qpoch_inf_value(s4 * al * al * t * t, ctx)
    _nonzero(den, "the 8W7 prefactor denominator", ctx.delta)
    big_a = s4 * al * al * t * t / q
    tail = [s4 * al * al / q, *(aj * al * t for aj in fam.a)]
    w = vwp_w_series(big_a, tail, q / (al * al), ctx).value
    return pref / den * w


def _w0(z, fam: AlphaFamily) -> complex:
    rq = _sqrt_q(fam.ctx.q)
    out = 1.0 + 0.0j
    for aj in fam.a:
        out *= 1.0 - aj * z / rq
    return out


def three_term_moment_coeffs(t, fam: AlphaFamily) -> tuple[complex, complex, complex]:
    """Coefficients of ``m(qt)``, ``m(t)``, ``m(t/q)`` in the three-term moment recurrence."""
    t = complex(t)
    q = fam.ctx.q
    rq = _sqrt_q(q)
    al = fam.alpha
    s = fam.sigma
    c_up = (t / rq - rq / t) * _w0(al / (rq * t), fam)
    bracket = (
        (1.0 + q) * (1.0 + al**2 * s[2] / q + al**4 * s[4] / q**2)
        + al**2 / q * (q + s[4]) * (rq * t - 1.0 / (rq * t)) * (t / rq - rq / t)
        - al * (t + 1.0 / t) * (s[1] + al**2 * s[3] / q)
    )
    c_mid = -(t - 1.0 / t) / rq * bracket
    c_down = (rq * t - 1.0 / (rq * t)) * _w0(al * t / rq, fam)
    return c_up, c_mid, c_down


def three_term_moment_residual(
    t, fam: AlphaFamily, m=None, tolerance: float = 1e-9, label: str = "3term_moment"
) -> ResidualReport:
    """Residual of the three-term moment recurrence for ``m`` (default: the first 8W7 solution)."""
    t = complex(t)
    q = fam.ctx.q
    if m is None:
        m = lambda u: w87_m00(u, fam, 1)  # noqa: E731
    c = three_term_moment_coeffs(t, fam)
    terms = [c[0] * m(q * t), c[1] * m(t), c[2] * m(t / q)]
    return residual(label, fam.snapshot(t), terms, tolerance)


def _pm_sum(p: FamilyParams) -> complex:
    """``m_{0,+} + m_{0,-}``: the integral of ``Phi (z + 1/z)`` over the full contour."""
    w: dict = {}
    for k in (1, -1):
        for key, v in weight_phi(k).items():
            w[key] = w.get(key, 0.0) + v
    return integrate_weighted(p, w, continued=True).value


def mpm_lemma_terms(t, fam: AlphaFamily, m00=None, mpm=None) -> list[complex]:
    """Summands of the contiguous relation between ``m_{0,+} + m_{0,-}`` and ``m_{0,0}``."""
    t = complex(t)
    ctx = fam.ctx
    q = ctx.q
    rq = _sqrt_q(q)
    al = fam.alpha
    s = fam.sigma
    s6 = s[4] * al * al
    if m00 is None:
        m00 = lambda u: eval_in(fam.params(u, inside=False), "auto").value  # noqa: E731
    if mpm is None:
        mpm = lambda u: _pm_sum(fam.params(u, inside=True))  # noqa: E731
    mt = m00(t)
    mdown = m00(t / q)
    lhs = (s6 / q**2 - 1.0 / q) * mpm(t)
    coef = al**2 * s[3] / q**2 - s[1] / q + (q - al**2) * (q**2 / (al * t) + s[4] * al * t) / q**3
    frac = _w0(al * t / rq, fam) / (al * t) / (t / rq - rq / t)
    return [lhs, -coef * mt, frac * (t / rq) * mdown, -frac * (rq / t) * mt]


def mpm_lemma_residual(t, fam: AlphaFamily, tolerance: float = 1e-7, **kw) -> ResidualReport:
    """Residual of the ``m_{0,+-}`` contiguous lemma with contour moments."""
    return residual("mpm_lemma", fam.snapshot(t), mpm_lemma_terms(t, fam, **kw), tolerance)


# -- the polynomial U -------------------------------------------------------------------


def _moment_basis(p: FamilyParams, a: complex, n: int) -> complex:
    """``m_{0,n}(a) = int phi~_n(z; a) Phi(z) dz / (2 pi i z)``."""
    for i, ai in enumerate(p.a, start=1):
        if ai == a:
            return eval_in(p.shifted(_shift(p, {i: n}))).value
    # Laurent expansion of (a z, a / z; q)_n times (1 - z^-2)
    q = p.q
    poly = {0: 1.0 + 0.0j}
    for k in range(n):
        b = a * q**k
        nxt: dict = {}
        for e, c in poly.items():
            for de, dc in ((0, 1.0 + b * b), (1, -b), (-1, -b)):
                nxt[e + de] = nxt.get(e + de, 0.0) + c * dc
        poly = nxt
    w: dict = {}
    for e, c in poly.items():
        w[e] = w.get(e, 0.0) + c
        w[e - 2] = w.get(e - 2, 0.0) - c
    return integrate_weighted(p, w).value


def u_poly(p: FamilyParams, a, x, moments: Sequence[complex] | None = None) -> complex:
    """``U(x)`` assembled from ``f_{N,k}(a)``, ``g_{N,k}(a)`` and the moments ``m_{0,n}(a)``."""
    N = p.N
    a = complex(a)
    q = p.q
    rq = _sqrt_q(q)
    if moments is None:
        moments = [_moment_basis(p, a, n) for n in range(max(N - 1, 1))]
    m = list(moments)
    total = 0.0j
    for k in range(2, N + 1):
        fk = coeff_f(p, a, k)
        for n in range(k - 1):
            total += (
                -4.0 * a * a * fk * q**n / rq * (q ** (n + 1) - q**k) * m[n]
                * basis_x(x, q ** (n + 1) * rq * a, k - n - 2, q)
            )
    for k in range(1, N):
        gk = coeff_g(p, a, k)
        for n in range(k):
            total += (
                2.0 * a * gk * q ** (n - k) * rq * (q**k + q**n) * m[n]
                * basis_x(x, q ** (n + 1) * rq * a, k - n - 1, q)
            )
    for k in range(2, N):
        gk = coeff_g(p, a, k)
        for n in range(k - 1):
            total += (
                -2.0 * a * gk * q ** (n - k) / rq * (1.0 - a * a * q ** (2 * k)) * (q ** (n + 1) - q**k)
                * m[n] * basis_x(x, q ** (n + 1) * rq * a, k - n - 2, q)
            )
    return total / (rq - 1.0 / rq)


def u_poly_n3(p: FamilyParams, x, m00: complex | None = None, mpm: complex | None = None) -> complex:
    """Closed ``N = 3`` form of ``U(x)`` in ``m_{0,0}`` and ``m_{0,+} + m_{0,-}``."""
    if p.N != 3:
        raise ParameterError("u_poly_n3 is the N = 3 closed form")
    q = p.q
    rq = _sqrt_q(q)
    s = p.sigma
    if m00 is None:
        m00 = eval_in(p).value
    if mpm is None:
        mpm = _pm_sum(p)
    inner = m00 * (-2.0 / rq * (s[6] - q * q) * x + s[5] - q * s[1]) - (s[6] - q) * mpm
    return 4.0 / (q * q * (rq - 1.0 / rq)) * inner
