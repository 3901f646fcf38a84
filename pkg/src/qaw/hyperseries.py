"""Summation engines for basic hypergeometric series.

Unilateral ``r+1 phi r``, bilateral ``r psi r`` and the very-well-poised
``r+1 W r`` specialisation. All engines sum term-recursively and stop once
three consecutive terms fall below ``eps`` relative to the running sum;
isolated near-zero terms therefore never end a summation early.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConvergenceError, DivergenceError, ParameterError
from .qkernel import QContext, SeriesResult, is_q_power

__all__ = ["SeriesSpec", "phi_series", "psi_series", "vwp_w_series", "vwp_spec"]

_SMALL_RUN = 3


@dataclass(frozen=True)
class SeriesSpec:
    """Numerator parameters, denominator parameters and argument of a series."""

    upper: tuple = field(default_factory=tuple)
    lower: tuple = field(default_factory=tuple)
    argument: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "upper", tuple(complex(x) for x in self.upper))
        object.__setattr__(self, "lower", tuple(complex(x) for x in self.lower))
        object.__setattr__(self, "argument", complex(self.argument))


def _terminating_index(upper, q, delta):
    """Smallest m with some upper parameter equal to q**(-m), or None."""
    best = None
    for a in upper:
        if a != 0 and is_q_power(a, q, "nonpositive", delta):
            m = round(-math.log(abs(a)) / math.log(abs(q)))
            best = m if best is None else min(best, m)
    return best


def _tail_estimate(last: float, ratio: float) -> float:
    if ratio >= 1.0:
        return math.inf
    return last * ratio / (1.0 - ratio)


def phi_series(spec: SeriesSpec, ctx: QContext) -> SeriesResult:
    """Sum ``sum_n (a_1..a_{r+1}; q)_n / (q, b_1..b_r; q)_n z^n``."""
    q = ctx.q
    if len(spec.upper) != len(spec.lower) + 1:
        raise ParameterError(
            f"phi_series expects r+1 upper and r lower parameters, got "
            f"{len(spec.upper)} and {len(spec.lower)}"
        )
    z = spec.argument
    stop = _terminating_index(spec.upper, q, ctx.delta)
    for b in spec.lower:
        if is_q_power(b, q, "nonpositive", ctx.delta):
            m = round(-math.log(abs(b)) / math.log(abs(q)))
            if stop is None or m < stop:
                raise ParameterError(f"lower parameter {b!r} zeroes a denominator at n={m + 1}")
    if stop is None and abs(z) >= 1.0:
        raise DivergenceError(f"non-terminating phi series needs |z| < 1, got |z|={abs(z):.6g}")

    total = 1.0 + 0.0j
    term = 1.0 + 0.0j
    qn = 1.0 + 0.0j
    small = 0
    ratio_abs = 0.0
    n = 0
    while True:
        if stop is not None and n >= stop:
            return SeriesResult(total, n + 1, 0.0, True)
        if n + 1 > ctx.max_terms:
            tail = _tail_estimate(abs(term), ratio_abs)
            return SeriesResult(total, n + 1, tail, False)
        num = 1.0 + 0.0j
        for a in spec.upper:
            num *= 1.0 - a * qn
        den = 1.0 - q * qn
        for b in spec.lower:
            den *= 1.0 - b * qn
        new = term * num / den * z
        if term != 0:
            ratio_abs = abs(new / term)
        term = new
        total += term
        qn *= q
        n += 1
        if abs(term) <= ctx.eps * max(abs(total), 1e-300):
            small += 1
            if small >= _SMALL_RUN:
                rho = max(ratio_abs, abs(z)) if stop is None else 0.0
                tail = _tail_estimate(abs(term), rho)
                return SeriesResult(total, n + 1, tail, tail <= ctx.eps * max(1.0, abs(total)))
        else:
            small = 0


def _one_side(ratio_fn, ctx: QContext, limit_ratio: float):
    """Sum ``sum_{n>=1} t_n`` with ``t_0 = 1`` and ``t_{n+1} = t_n * ratio_fn(n)``."""
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    small = 0
    ratio_abs = 0.0
    n = 0
    while True:
        if n + 1 > ctx.max_terms:
            return total, n, _tail_estimate(abs(term), max(ratio_abs, limit_ratio)), False
        new = term * ratio_fn(n)
        if term != 0:
            ratio_abs = abs(new / term)
        term = new
        total += term
        n += 1
        if term == 0:
            return total, n, 0.0, True
        if abs(term) <= ctx.eps * max(abs(total) + 1.0, 1e-300):
            small += 1
            if small >= _SMALL_RUN:
                return total, n, _tail_estimate(abs(term), max(ratio_abs, limit_ratio)), True
        else:
            small = 0


def psi_series(spec: SeriesSpec, ctx: QContext) -> SeriesResult:
    """Bilateral sum ``sum_{n in Z} (a_1..a_r; q)_n / (b_1..b_r; q)_n z^n``.

    Negative-index terms come from the reciprocal recursion
    ``t_{-(n+1)} = t_{-n} prod(q^{n+1} - b_j) / prod(q^{n+1} - a_j) / z``.
    """
    q = ctx.q
    if len(spec.upper) != len(spec.lower):
        raise ParameterError("psi_series expects equally many upper and lower parameters")
    z = spec.argument
    for b in spec.lower:
        if is_q_power(b, q, "nonpositive", ctx.delta):
            raise ParameterError(f"lower parameter {b!r} lies in q^(Z<=0)")
    for a in spec.upper:
        if is_q_power(a, q, "positive", ctx.delta):
            raise ParameterError(f"upper parameter {a!r} lies in q^(Z>=1)")
    if z == 0:
        raise ParameterError("psi_series needs a nonzero argument")
    prod_a = 1.0 + 0.0j
    prod_b = 1.0 + 0.0j
    for a in spec.upper:
        prod_a *= a
    for b in spec.lower:
        prod_b *= b
    inner = abs(prod_b / prod_a) if prod_a != 0 else math.inf
    if not inner < abs(z) < 1.0:
        raise DivergenceError(
            f"psi series converges for {inner:.6g} < |z| < 1, got |z|={abs(z):.6g}"
        )

    def pos_ratio(n):
        qn = q**n
        num = 1.0 + 0.0j
        den = 1.0 + 0.0j
        for a in spec.upper:
            num *= 1.0 - a * qn
        for b in spec.lower:
            den *= 1.0 - b * qn
        return num / den * z

    def neg_ratio(n):
        # (1 - b q^-m) / (1 - a q^-m) written as (q^m - b) / (q^m - a)
        qm = q ** (n + 1)
        num = 1.0 + 0.0j
        den = 1.0 + 0.0j
        for b in spec.lower:
            num *= qm - b
        for a in spec.upper:
            den *= qm - a
        return num / den / z

    s_pos, n_pos, t_pos, c_pos = _one_side(pos_ratio, ctx, abs(z))
    s_neg, n_neg, t_neg, c_neg = _one_side(neg_ratio, ctx, inner / abs(z))
    value = 1.0 + s_pos + s_neg
    tail = t_pos + t_neg
    converged = c_pos and c_neg and tail <= ctx.eps * max(1.0, abs(value)) * 10
    if not (c_pos and c_neg):
        raise ConvergenceError(f"psi series did not converge within {ctx.max_terms} terms")
    return SeriesResult(value, 1 + n_pos + n_neg, tail, converged)


def vwp_spec(a1, tail_params: Sequence, z, q, sign: int = 1) -> SeriesSpec:
    """Parameters of the very-well-poised series ``W(a1; a_4, ..., a_{r+1}; q, z)``.

    Uses the principal square root of ``a1`` unless ``sign=-1``.
    """
    a1 = complex(a1)
    q = complex(q)
    tail = [complex(t) for t in tail_params]
    r = sign * cmath.sqrt(a1)
    upper = [a1, q * r, -q * r, *tail]
    lower = [r, -r, *(q * a1 / t for t in tail)]
    return SeriesSpec(upper, lower, z)


def vwp_w_series(a1, tail_params: Sequence, z, ctx: QContext) -> SeriesResult:
    """Very-well-poised ``r+1 W r`` via :func:`phi_series`."""
    return phi_series(vwp_spec(a1, tail_params, z, ctx.q), ctx)
