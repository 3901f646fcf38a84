"""Theta-function identities behind the residue coefficients.

``R(x_1..x_n) = sum_k g(x_k) / prod_{i!=k} theta(x_i x_k) theta(x_i/x_k)`` with
``g(x) = x^{N/2-1} theta(x^-N; q^{N/2})`` and ``n = N + 2``; multiplying by
``prod_{i<j} theta(x_i x_j)`` gives a symmetric holomorphic ``f``. For
``N = 2`` this ``f`` is ``2 theta(x_1 x_2 x_3 x_4)``, the four-term identity.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from typing import Sequence

from .errors import ParameterError, PoleProximityError
from .qkernel import QContext, theta
from .report import ResidualReport

__all__ = [
    "ThetaTuple",
    "four_term_theta_residual",
    "r_function",
    "f_reconstruct",
    "quasi_periodicity_residual",
]


@dataclass(frozen=True)
class ThetaTuple:
    xs: tuple
    ctx: QContext

    def __post_init__(self):
        xs = tuple(complex(x) for x in self.xs)
        if any(x == 0 for x in xs):
            raise ParameterError("theta tuple entries must be nonzero")
        d = self.ctx.delta
        for i, j in itertools.combinations(range(len(xs)), 2):
            for v, what in ((xs[i] * xs[j], "x_i x_j"), (xs[i] / xs[j], "x_i/x_j")):
                if abs(theta(v, self.ctx)) < d:
                    raise PoleProximityError(f"theta({what}) vanishes for slots ({i + 1}, {j + 1})")
        object.__setattr__(self, "xs", xs)

    def snapshot(self) -> dict:
        q = self.ctx.q
        return {"q": [q.real, q.imag], "xs": [[x.real, x.imag] for x in self.xs]}


def _pair_products(xs, ctx) -> complex:
    out = 1.0 + 0.0j
    for i, j in itertools.combinations(range(len(xs)), 2):
        out *= theta(xs[i] * xs[j], ctx)
    return out


def _terms(xs: Sequence[complex], N: int, ctx: QContext) -> list[complex]:
    pctx = ctx.with_q(cmath.exp(0.5 * N * cmath.log(ctx.q)))
    out = []
    for k, xk in enumerate(xs):
        num = cmath.exp((0.5 * N - 1) * cmath.log(xk)) * theta(xk ** (-N), pctx)
        den = 1.0 + 0.0j
        for i, xi in enumerate(xs):
            if i != k:
                den *= theta(xi * xk, ctx) * theta(xi / xk, ctx)
        out.append(num / den)
    return out


def four_term_theta_residual(t: ThetaTuple, tolerance: float = 1e-11) -> ResidualReport:
    """Residual of ``sum_k theta(x_k^-2)/prod(...) = 2 theta(x1 x2 x3 x4) / prod_{i<j} theta(x_i x_j)``."""
    if len(t.xs) != 4:
        raise ParameterError("the four-term identity takes exactly four values")
    ctx = t.ctx
    lhs = _terms(t.xs, 2, ctx)
    x1, x2, x3, x4 = t.xs
    rhs = 2.0 * theta(x1 * x2 * x3 * x4, ctx) / _pair_products(t.xs, ctx)
    scale = max(max(abs(v) for v in lhs), abs(rhs))
    return ResidualReport("four_term_theta", t.snapshot(), abs(sum(lhs) - rhs), scale, tolerance)


def r_function(xs: Sequence, N: int, ctx: QContext) -> complex:
    """``R(x_1, ..., x_{N+2})``."""
    xs = [complex(x) for x in xs]
    if len(xs) != N + 2:
        raise ParameterError(f"R takes N + 2 = {N + 2} values, got {len(xs)}")
    return sum(_terms(xs, N, ctx))


def f_reconstruct(t: ThetaTuple, N: int | None = None) -> complex:
    """``f = R(xs) prod_{i<j} theta(x_i x_j)`` with ``N = len(xs) - 2``."""
    n = len(t.xs)
    if N is None:
        N = n - 2
    if N < 2 or n != N + 2:
        raise ParameterError(f"f needs N + 2 values with N >= 2, got {n}")
    return r_function(t.xs, N, t.ctx) * _pair_products(t.xs, t.ctx)


def _f_scale(xs, ctx) -> float:
    """Largest summand of ``f``, the size that rounding errors scale with."""
    return max(abs(v) for v in _terms(xs, len(xs) - 2, ctx)) * abs(_pair_products(xs, ctx))


def quasi_periodicity_residual(t: ThetaTuple, i: int, tolerance: float = 1e-10) -> ResidualReport:
    """Residual of ``f(.., q x_i, ..) = (-1)^{N+1} f / ((x_1 .. x_{N+2}) x_i^{N-2})``."""
    n = len(t.xs)
    N = n - 2
    if not 1 <= i <= n:
        raise ParameterError(f"slot must lie in 1..{n}")
    xs = list(t.xs)
    base = f_reconstruct(t)
    prod = 1.0 + 0.0j
    for x in xs:
        prod *= x
    xs[i - 1] *= t.ctx.q
    shifted_t = ThetaTuple(tuple(xs), t.ctx)
    shifted = f_reconstruct(shifted_t)
    factor = (-1) ** (N + 1) / (prod * t.xs[i - 1] ** (N - 2))
    predicted = factor * base
    params = t.snapshot() | {"slot": i}
    scale = max(_f_scale(shifted_t.xs, t.ctx), abs(factor) * _f_scale(t.xs, t.ctx))
    return ResidualReport("quasi_periodicity", params, abs(shifted - predicted), scale, tolerance)
