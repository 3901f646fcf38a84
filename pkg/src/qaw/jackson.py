"""Jackson integrals and the residue evaluation of I_N.

``Phi = P Q`` with ``P`` invariant under ``z -> q z`` and

    Q(z) = (1/z - z) prod_j z^{1/2 - s_j} (q z / a_j; q)_inf / (a_j z; q)_inf.

Shrinking the outer contour onto the poles of ``P`` turns I_N into sums of
``Q`` over q-lattices. Along a lattice ``z q^nu`` the power
``prod_j (z q^nu)^{1/2 - s_j}`` is taken as ``z^{N - sum s} q^{nu (N - sum s)}``
so that ``J_N(q z) = J_N(z)`` holds exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .contour import IntegralResult
from .errors import ConvergenceError, DivergenceError, ParameterError, PoleProximityError
from .hyperseries import SeriesSpec, psi_series
from .integrand import FamilyParams
from .qkernel import QContext, qpoch_inf_value, theta
from .report import ResidualReport, residual

__all__ = [
    "JacksonValue",
    "split_pq",
    "jackson_j",
    "regularized_j",
    "regularized_j_psi",
    "h_function",
    "residue_rk",
    "coeff_aki",
    "reduced_coefficients",
    "in_residue",
    "sears_slater_terms",
    "sears_slater_residual",
    "j2_closed",
    "check_condition",
    "truncated_connection_residual",
    "i2_j2_relation_residual",
]


@dataclass(frozen=True)
class JacksonValue:
    raw: complex
    regularized: complex
    h_value: complex
    terms_used: int


def _cpow(z: complex, s: complex) -> complex:
    return cmath.exp(s * cmath.log(z))


def _theta_guarded(x: complex, ctx: QContext, what: str) -> complex:
    v = theta(x, ctx)
    if abs(v) < ctx.delta:
        raise PoleProximityError(f"theta({what}) is within {ctx.delta} of zero")
    return v


def check_condition(p: FamilyParams) -> None:
    """Raise :class:`DivergenceError` unless ``|q^{N-1}| < |a_1 ... a_2N|``."""
    lhs = abs(p.q) ** (p.N - 1)
    rhs = abs(p.prod)
    if not lhs < rhs:
        raise DivergenceError(
            f"Jackson sums diverge: |q^(N-1)| = {lhs:.6g} is not below |prod a| = {rhs:.6g}"
        )


def split_pq(z, p: FamilyParams) -> tuple[complex, complex]:
    """``(P(z), Q(z))`` with principal branches for every power of ``z``."""
    z = complex(z)
    if z == 0:
        raise ParameterError("P and Q are undefined at z = 0")
    ctx = p.ctx
    N = p.N
    pctx = ctx.with_q(p.p)
    num = _cpow(z, 0.5 * N) * theta(z ** (-N), pctx)
    den = 1.0 + 0.0j
    g = 1.0 + 0.0j
    for j, (aj, sj) in enumerate(zip(p.a, p.s), start=1):
        zp = _cpow(z, 0.5 - sj)
        den *= zp * _theta_guarded(aj / z, ctx, f"a_{j}/z")
        lower = qpoch_inf_value(aj * z, ctx)
        if abs(lower) < ctx.delta:
            raise PoleProximityError(f"Q has a pole from (a_{j} z; q)_inf")
        g *= zp * qpoch_inf_value(ctx.q * z / aj, ctx) / lower
    return num / den, (1.0 / z - z) * g


def h_function(z, p: FamilyParams) -> complex:
    """``h(z) = z^{N-1-sum s} theta(z^2) / prod_j theta(a_j z)``."""
    z = complex(z)
    ctx = p.ctx
    out = _cpow(z, p.N - 1 - p.sum_s) * _theta_guarded(z * z, ctx, "z^2")
    for j, aj in enumerate(p.a, start=1):
        out /= _theta_guarded(aj * z, ctx, f"a_{j} z")
    return out


def _lattice_sum(z: complex, p: FamilyParams, unilateral: bool) -> tuple[complex, int]:
    ctx = p.ctx
    q = ctx.q
    a = p.a
    ex = p.N - p.sum_s
    zpow = _cpow(z, ex)
    qe = _cpow(q, ex)

    g0 = 1.0 + 0.0j
    for aj in a:
        lower = qpoch_inf_value(aj * z, ctx)
        if abs(lower) < ctx.delta:
            raise PoleProximityError("lattice point sits on a pole of Q")
        g0 *= qpoch_inf_value(q * z / aj, ctx) / lower

    def term(nu: int, g: complex) -> complex:
        x = z * q**nu
        return zpow * qe**nu * (1.0 / x - x) * g

    total = term(0, g0)
    used = 1

    def run(direction: int):
        nonlocal total, used
        g = g0
        nu = 0
        small = 0
        prev_abs = None
        grow = 0
        while True:
            x = z * q**nu
            if direction > 0:
                # G(x q) = G(x) prod (1 - a_j x) / (1 - q x / a_j)
                fac = 1.0 + 0.0j
                for aj in a:
                    d = 1.0 - q * x / aj
                    if d == 0:
                        raise PoleProximityError("lattice term hits a pole")
                    fac *= (1.0 - aj * x) / d
            else:
                # G(x / q) = G(x) prod (1 - x / a_j) / (1 - a_j x / q)
                fac = 1.0 + 0.0j
                for aj in a:
                    d = 1.0 - aj * x / q
                    if abs(d) < ctx.delta:
                        raise PoleProximityError("lattice term hits a pole")
                    fac *= (1.0 - x / aj) / d
            g *= fac
            nu += direction
            t = term(nu, g)
            total += t
            used += 1
            at = abs(t)
            if at <= ctx.eps * max(abs(total), 1e-300):
                small += 1
                if small >= 3:
                    return
            else:
                small = 0
            if prev_abs and at >= (1.0 - ctx.eps) * prev_abs:
                grow += 1
                if grow > 200:
                    raise DivergenceError("bilateral sum terms stopped decreasing")
            else:
                grow = 0
            prev_abs = at
            if used > ctx.max_terms:
                raise ConvergenceError(f"lattice sum exceeded {ctx.max_terms} terms")

    run(+1)
    if not unilateral:
        run(-1)
    return total, used


def jackson_j(z, p: FamilyParams, truncated_at: int | None = None) -> JacksonValue:
    """``J_N(z) = sum_nu Q(z q^nu)``; with ``truncated_at=i`` the sum at ``z = a_i`` over ``nu >= 0``."""
    check_condition(p)
    if truncated_at is not None:
        i = int(truncated_at)
        if not 1 <= i <= 2 * p.N:
            raise ParameterError(f"parameter index must lie in 1..{2 * p.N}, got {truncated_at}")
        z = p.a[i - 1]
        raw, used = _lattice_sum(z, p, unilateral=True)
    else:
        z = complex(z)
        if z == 0:
            raise ParameterError("J_N is undefined at z = 0")
        raw, used = _lattice_sum(z, p, unilateral=False)
    try:
        h = h_function(z, p)
        reg = raw / h
    except PoleProximityError:
        h, reg = 0j, complex("nan")
    return JacksonValue(raw, reg, h, used)


def regularized_j(z, p: FamilyParams) -> JacksonValue:
    """``J_N(z) / h(z)``; at ``z = a_i`` this is the truncated sum."""
    z = complex(z)
    for i, ai in enumerate(p.a, start=1):
        if z == ai:
            val = jackson_j(z, p, truncated_at=i)
            break
    else:
        val = jackson_j(z, p)
    if val.h_value == 0:
        raise PoleProximityError("h(z) vanishes within the guard distance")
    return val


def regularized_j_psi(z, p: FamilyParams) -> complex:
    """The regularised Jackson integral from its very-well-poised bilateral series."""
    check_condition(p)
    z = complex(z)
    ctx = p.ctx
    q = ctx.q
    pref = 1.0 + 0.0j
    for aj in p.a:
        pref *= qpoch_inf_value(q * z / aj, ctx) * qpoch_inf_value(q / (aj * z), ctx)
    den = qpoch_inf_value(q * z * z, ctx) * qpoch_inf_value(q / (z * z), ctx)
    if abs(den) < ctx.delta:
        raise PoleProximityError("(q z^{+-2}; q)_inf vanishes")
    upper = [q * z, -q * z, *(z * aj for aj in p.a)]
    lower = [z, -z, *(q * z / aj for aj in p.a)]
    spec = SeriesSpec(upper, lower, q ** (p.N - 1) / p.prod)
    return pref / den * psi_series(spec, ctx).value


def residue_rk(k: int, p: FamilyParams) -> complex:
    """``R_k = a_k^{N/2-1} theta(a_k^-N; q^{N/2}) / ((q;q)^2 prod_{j!=k} theta(a_j a_k) theta(a_j/a_k))``."""
    if not 1 <= k <= 2 * p.N:
        raise ParameterError(f"k must lie in 1..{2 * p.N}, got {k}")
    ctx = p.ctx
    ak = p.a[k - 1]
    num = _cpow(ak, 0.5 * p.N - 1) * theta(ak ** (-p.N), ctx.with_q(p.p))
    den = qpoch_inf_value(ctx.q, ctx) ** 2
    for j, aj in enumerate(p.a, start=1):
        if j == k:
            continue
        den *= _theta_guarded(aj * ak, ctx, f"a_{j} a_{k}")
        den *= _theta_guarded(aj / ak, ctx, f"a_{j}/a_{k}")
    return num / den


def coeff_aki(k: int, i: int, p: FamilyParams) -> complex:
    """Connection coefficient ``A_ki`` (product over ``j <= N-1``, ``j != i``)."""
    N = p.N
    if not 1 <= k <= 2 * N:
        raise ParameterError(f"k must lie in 1..{2 * N}, got {k}")
    if not 1 <= i <= N - 1:
        raise ParameterError(f"i must lie in 1..{N - 1}, got {i}")
    ctx = p.ctx
    ak, ai = p.a[k - 1], p.a[i - 1]
    out = 1.0 + 0.0j
    for j in range(1, N):
        if j == i:
            continue
        aj = p.a[j - 1]
        out *= theta(aj * ak, ctx) * theta(aj / ak, ctx)
        out /= _theta_guarded(aj * ai, ctx, f"a_{j} a_{i}") * _theta_guarded(aj / ai, ctx, f"a_{j}/a_{i}")
    return out


def reduced_coefficients(p: FamilyParams) -> list[complex]:
    """``R_i + sum_{k=N}^{2N} R_k A_ki`` for ``i = 1 .. N-1``."""
    N = p.N
    rk = [residue_rk(k, p) for k in range(1, 2 * N + 1)]
    return [
        rk[i - 1] + sum(rk[k - 1] * coeff_aki(k, i, p) for k in range(N, 2 * N + 1))
        for i in range(1, N)
    ]


def in_residue(p: FamilyParams, reduced: bool = False) -> IntegralResult:
    """I_N as a residue sum over truncated Jackson integrals."""
    check_condition(p)
    N = p.N
    if reduced:
        coef = reduced_coefficients(p)
        vals = [jackson_j(None, p, truncated_at=i) for i in range(1, N)]
    else:
        coef = [residue_rk(k, p) for k in range(1, 2 * N + 1)]
        vals = [jackson_j(None, p, truncated_at=k) for k in range(1, 2 * N + 1)]
    terms = [c * v.regularized for c, v in zip(coef, vals)]
    value = sum(terms)
    used = sum(v.terms_used for v in vals)
    err = p.ctx.eps * max(abs(t) for t in terms)
    return IntegralResult(value, "residue_reduced" if reduced else "residue_full", used, err)


def sears_slater_terms(z, p: FamilyParams) -> list[complex]:
    """Summands ``J(a_i) prod_{j!=i} theta(a_j z) theta(a_j/z) / (theta(a_j a_i) theta(a_j/a_i))``."""
    z = complex(z)
    N = p.N
    ctx = p.ctx
    out = []
    for i in range(1, N):
        ai = p.a[i - 1]
        w = jackson_j(None, p, truncated_at=i).regularized
        for j in range(1, N):
            if j == i:
                continue
            aj = p.a[j - 1]
            w *= theta(aj * z, ctx) * theta(aj / z, ctx)
            w /= _theta_guarded(aj * ai, ctx, f"a_{j} a_{i}") * _theta_guarded(aj / ai, ctx, f"a_{j}/a_{i}")
        out.append(w)
    return out


def sears_slater_residual(z, p: FamilyParams, tolerance: float = 1e-9) -> ResidualReport:
    """Residual of the Sears-Slater connection formula at ``z``."""
    lhs = regularized_j(z, p).regularized
    rhs = sears_slater_terms(z, p)
    params = p.snapshot() | {"z": [complex(z).real, complex(z).imag]}
    return residual("sears_slater", params, [lhs, *(-t for t in rhs)], tolerance)


def j2_closed(p: FamilyParams) -> complex:
    """``(q;q)_inf prod_{j<k} (q/(a_j a_k); q)_inf / (q/(a_1 a_2 a_3 a_4); q)_inf`` for N = 2."""
    if p.N != 2:
        raise ParameterError("j2_closed is defined for N = 2 only")
    check_condition(p)
    ctx = p.ctx
    q = ctx.q
    a = p.a
    num = qpoch_inf_value(q, ctx)
    for j in range(4):
        for k in range(j + 1, 4):
            num *= qpoch_inf_value(q / (a[j] * a[k]), ctx)
    den = qpoch_inf_value(q / p.prod, ctx)
    if abs(den) < ctx.delta:
        raise PoleProximityError("(q/(a1 a2 a3 a4); q)_inf vanishes")
    return num / den


def truncated_connection_residual(k: int, p: FamilyParams, tolerance: float = 1e-10) -> ResidualReport:
    """Residual of ``J(a_k) = sum_{i<N} A_ki J(a_i)`` between truncated values."""
    N = p.N
    if not N <= k <= 2 * N:
        raise ParameterError(f"k must lie in {N}..{2 * N}, got {k}")
    lhs = jackson_j(None, p, truncated_at=k).regularized
    terms = [lhs]
    for i in range(1, N):
        terms.append(-coeff_aki(k, i, p) * jackson_j(None, p, truncated_at=i).regularized)
    return residual("truncated_connection", p.snapshot() | {"k": k}, terms, tolerance)


def i2_j2_relation_residual(p: FamilyParams, tolerance: float = 1e-10) -> ResidualReport:
    """``I_2 = 2 theta(a1 a2 a3 a4) / ((q;q)^2 prod_{i<j} theta(a_i a_j)) J_2(a_1)``."""
    from .contour import aw_closed_i2

    if p.N != 2:
        raise ParameterError("the I_2 relation is the N = 2 case")
    ctx = p.ctx
    a = p.a
    den = qpoch_inf_value(ctx.q, ctx) ** 2
    for i in range(4):
        for j in range(i + 1, 4):
            den *= _theta_guarded(a[i] * a[j], ctx, f"a_{i + 1} a_{j + 1}")
    rhs = 2.0 * theta(p.prod, ctx) / den * j2_closed(p)
    return residual("i2_j2_relation", p.snapshot(), [aw_closed_i2(a, ctx), -rhs], tolerance)
