"""Scalar q-series building blocks.

q-Pochhammer symbols (finite and infinite), the elliptic theta function
``theta(z; q) = (z; q)_inf (q/z; q)_inf``, q-binomial coefficients and
elementary symmetric polynomials.

Everything here is a pure function of its arguments. Infinite products are
truncated by the rule used throughout the package: stop at the first index
``k`` with ``|a| |q|^k < 0.01 * eps`` and bound the neglected log-remainder by
its geometric majorant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, ParameterError

__all__ = [
    "QContext",
    "SeriesResult",
    "qpoch_n",
    "qpoch_inf",
    "qpoch_inf_value",
    "theta",
    "qbinom",
    "elem_sym",
    "elem_sym_all",
    "is_q_power",
]

_SAFETY = 0.01


@dataclass(frozen=True)
class QContext:
    """Base ``q`` plus every knob that governs truncation and quadrature.

    Parameters
    ----------
    q : complex
        The base. Must satisfy ``0 < |q| <= q_max < 1``.
    eps : float
        Relative truncation tolerance for products, series and quadrature.
    max_terms : int
        Hard cap on the number of terms any summation may use.
    quad_max_doublings : int
        Maximum number of node doublings in the circle/tail quadratures.
    q_max : float
        Upper bound on ``|q|`` accepted at construction.
    delta : float
        Guard distance for poles and theta zeros.
    """

    q: complex
    eps: float = 1e-14
    max_terms: int = 10**6
    quad_max_doublings: int = 24
    q_max: float = 0.95
    delta: float = 1e-8

    def __post_init__(self):
        q = complex(self.q)
        object.__setattr__(self, "q", q)
        if not 0.0 < self.q_max < 1.0:
            raise ParameterError(f"q_max must lie in (0, 1), got {self.q_max!r}")
        if not 0.0 < abs(q) < 1.0:
            raise ParameterError(f"|q| must satisfy 0 < |q| < 1, got q={q!r}")
        if abs(q) > self.q_max:
            raise ParameterError(f"|q|={abs(q):.6g} exceeds q_max={self.q_max}")
        if not 0.0 < self.eps < 1.0:
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps!r}")
        if int(self.max_terms) < 1 or int(self.quad_max_doublings) < 1:
            raise ParameterError("max_terms and quad_max_doublings must be positive")
        if not self.delta > 0.0:
            raise ParameterError("delta must be positive")

    def with_q(self, q) -> "QContext":
        """Same controls, different base (used for ``q**(N/2)`` products)."""
        return replace(self, q=complex(q), q_max=max(self.q_max, min(abs(q), 0.999999)))

    @property
    def is_real_positive(self) -> bool:
        return self.q.imag == 0.0 and self.q.real > 0.0


@dataclass(frozen=True)
class SeriesResult:
    """Outcome of a truncated product or summation."""

    value: complex
    terms_used: int
    tail_bound: float
    converged: bool


def qpoch_n(a, q, n: int) -> complex:
    """Finite q-Pochhammer symbol ``(a; q)_n``; ``n = 0`` gives 1."""
    if n < 0:
        raise ParameterError(f"n must be nonnegative, got {n}")
    out = 1.0 + 0.0j
    term = complex(a)
    q = complex(q)
    for _ in range(n):
        out *= 1.0 - term
        term *= q
    return out


def _n_factors(amax: float, aq: float, eps: float) -> int:
    # smallest k with amax * |q|**k < SAFETY * eps
    thresh = _SAFETY * eps
    if amax < thresh:
        return 0
    return int(math.ceil(math.log(thresh / amax) / math.log(aq))) + 1


def qpoch_inf(a, ctx: QContext) -> SeriesResult:
    """Infinite product ``(a; q)_inf`` with a geometric bound on the remainder."""
    a = complex(a)
    q = ctx.q
    aq = abs(q)
    k = _n_factors(abs(a), aq, ctx.eps)
    if k > ctx.max_terms:
        raise ConvergenceError(f"(a;q)_inf needs {k} factors, cap is {ctx.max_terms}")
    out = 1.0 + 0.0j
    term = a
    for _ in range(k):
        out *= 1.0 - term
        term *= q
    r = abs(term)
    # |sum_{j>=k} log(1 - a q^j)| <= r / ((1 - |q|)(1 - r))
    log_rem = r / ((1.0 - aq) * (1.0 - r)) if r < 1.0 else math.inf
    bound = abs(out) * math.expm1(log_rem) if math.isfinite(log_rem) else math.inf
    converged = bound <= ctx.eps * max(1.0, abs(out))
    return SeriesResult(out, k, bound, converged)


def qpoch_inf_value(a, ctx: QContext) -> complex:
    """Value-only shortcut for :func:`qpoch_inf`."""
    return qpoch_inf(a, ctx).value


def theta(z, ctx: QContext) -> complex:
    """Elliptic theta function ``theta(z; q) = (z; q)_inf (q/z; q)_inf``."""
    z = complex(z)
    if z == 0:
        raise ParameterError("theta(z; q) is undefined at z = 0")
    return qpoch_inf(z, ctx).value * qpoch_inf(ctx.q / z, ctx).value


def qbinom(n: int, m: int, q) -> complex:
    """Gaussian binomial ``[n, m]_q`` as a product of ``m`` ratios."""
    if n < 0 or not 0 <= m <= n:
        raise ParameterError(f"q-binomial needs 0 <= m <= n, got n={n}, m={m}")
    q = complex(q)
    m = min(m, n - m)
    out = 1.0 + 0.0j
    for k in range(1, m + 1):
        out *= (1.0 - q ** (n - m + k)) / (1.0 - q**k)
    return out


def elem_sym_all(values: Sequence) -> list[complex]:
    """All elementary symmetric polynomials ``[e_0, ..., e_n]`` in one pass."""
    e = [1.0 + 0.0j] + [0.0j] * len(values)
    for i, v in enumerate(values, start=1):
        v = complex(v)
        for j in range(i, 0, -1):
            e[j] += v * e[j - 1]
    return e


def elem_sym(values: Sequence, k: int) -> complex:
    """k-th elementary symmetric polynomial of ``values``."""
    if not 0 <= k <= len(values):
        raise ParameterError(f"k must lie in [0, {len(values)}], got {k}")
    e = [1.0 + 0.0j] + [0.0j] * k
    for i, v in enumerate(values, start=1):
        v = complex(v)
        for j in range(min(i, k), 0, -1):
            e[j] += v * e[j - 1]
    return e[k]


def is_q_power(b, q, exponents: str = "nonpositive", delta: float = 1e-8) -> bool:
    """Whether ``b`` lies within ``delta`` of ``q**n`` for ``n`` in the given range.

    ``exponents`` is one of ``"nonpositive"`` (``n <= 0``), ``"positive"``
    (``n >= 1``) or ``"all"``.
    """
    b = complex(b)
    q = complex(q)
    if b == 0:
        return False
    n0 = math.log(abs(b)) / math.log(abs(q))
    for n in (math.floor(n0), math.ceil(n0)):
        if exponents == "nonpositive" and n > 0:
            continue
        if exponents == "positive" and n < 1:
            continue
        if abs(1.0 - b * q ** (-n)) < delta:
            return True
    return False


# -- vectorised helpers used by the quadrature code -------------------------


def qpoch_inf_array(a, q: complex, eps: float) -> np.ndarray:
    """``(a; q)_inf`` elementwise for an array ``a`` (no remainder bound)."""
    a = np.asarray(a, dtype=complex)
    out = np.ones_like(a)
    if a.size == 0:
        return out
    term = a.copy()
    for _ in range(_n_factors(float(np.max(np.abs(a))), abs(q), eps)):
        out *= 1.0 - term
        term *= q
    return out


def log_qpoch_inf_array(a, q: complex, eps: float) -> np.ndarray:
    """Sum of ``log(1 - a q^k)`` elementwise; safe where the product overflows."""
    a = np.asarray(a, dtype=complex)
    out = np.zeros_like(a)
    if a.size == 0:
        return out
    term = a.copy()
    for _ in range(_n_factors(float(np.max(np.abs(a))), abs(q), eps)):
        out += np.log(1.0 - term)
        term *= q
    return out
