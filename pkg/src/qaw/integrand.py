"""The integrand of I_N and the functions built around it.

Conventions
-----------
* ``z`` is the contour variable, ``x = (z + 1/z) / 2``.
* On the unit circle the branch prefactor ``(z - 1/z) / (z^{N/2} - z^{-N/2})``
  is always evaluated as ``sin(t) / sin(N t / 2)`` with ``z = exp(i t)``,
  ``t`` in ``(-pi, pi]``. Off the circle the principal branch of ``z^{N/2}``
  is used.
* Near ``z^N = 1`` the prefactor times ``(z^N, z^-N; q^{N/2})_inf`` is
  replaced by the cancelled form ``(1/z - z) z^{N/2} (p z^N, z^-N; p)_inf``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, PoleProximityError
from .qkernel import (
    QContext,
    elem_sym_all,
    log_qpoch_inf_array,
    qpoch_inf_array,
    qpoch_n,
    _n_factors,
)

__all__ = [
    "FamilyParams",
    "SpectralPair",
    "circle_prefactor",
    "big_phi",
    "phi_on_circle",
    "weight_w",
    "weight_z",
    "basis_phi",
    "f_parts",
    "f_laurent",
    "spectral_wv",
    "w_chebyshev",
    "v_chebyshev",
    "dd_apply",
    "pearson_residual",
]

_ROOT_GUARD = 1e-6


@dataclass(frozen=True)
class FamilyParams:
    """Order ``N`` and the ``2N`` parameters ``a_1 .. a_2N`` of I_N.

    By default every ``|a_j| < 1`` is enforced (the unit circle then
    separates the two pole sequences). Residue-based evaluators accept
    parameters outside the disc through ``inside=False``.
    """

    N: int
    a: tuple
    ctx: QContext
    inside: bool = True

    def __post_init__(self):
        N = self.N
        if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 2:
            raise ParameterError(f"N must be an integer >= 2, got {N!r}")
        object.__setattr__(self, "N", int(N))
        a = tuple(complex(x) for x in self.a)
        if len(a) != 2 * N:
            raise ParameterError(f"expected {2 * N} parameters for N={N}, got {len(a)}")
        if any(x == 0 for x in a):
            raise ParameterError("parameters a_j must be nonzero")
        if self.inside and any(abs(x) >= 1.0 for x in a):
            raise ParameterError(f"all |a_j| must be < 1, got {[abs(x) for x in a]}")
        object.__setattr__(self, "a", a)

    @property
    def q(self) -> complex:
        return self.ctx.q

    @property
    def p(self) -> complex:
        """The base ``q^{N/2}`` of the numerator products (principal branch)."""
        return cmath.exp(0.5 * self.N * cmath.log(self.ctx.q))

    @property
    def s(self) -> tuple:
        """Exponents ``s_j`` with ``a_j = q^{s_j}`` (principal logarithms)."""
        lq = cmath.log(self.ctx.q)
        return tuple(cmath.log(x) / lq for x in self.a)

    @property
    def sum_s(self) -> complex:
        return sum(self.s)

    @property
    def prod(self) -> complex:
        out = 1.0 + 0.0j
        for x in self.a:
            out *= x
        return out

    @property
    def sigma(self) -> list:
        """Elementary symmetric polynomials ``sigma_0 .. sigma_2N`` of the a_j."""
        return elem_sym_all(self.a)

    def replace_a(self, a: Sequence, inside: bool | None = None) -> "FamilyParams":
        return FamilyParams(self.N, tuple(a), self.ctx, self.inside if inside is None else inside)

    def shifted(self, shifts: Sequence[int], inside: bool | None = None) -> "FamilyParams":
        """Parameters with ``a_j -> q^{shift_j} a_j``."""
        if len(shifts) != len(self.a):
            raise ParameterError(f"expected {len(self.a)} shifts, got {len(shifts)}")
        q = self.ctx.q
        return self.replace_a([x * q**k for x, k in zip(self.a, shifts)], inside)

    def snapshot(self) -> dict:
        return {
            "N": self.N,
            "q": [self.q.real, self.q.imag],
            "a": [[x.real, x.imag] for x in self.a],
        }


@dataclass(frozen=True)
class SpectralPair:
    """Values of ``W + dy V`` (``w_plus``) and ``W - dy V`` (``w_minus``) at one point."""

    w_plus: complex
    w_minus: complex

    @property
    def w_value(self) -> complex:
        return 0.5 * (self.w_plus + self.w_minus)

    @property
    def dyv_value(self) -> complex:
        return 0.5 * (self.w_plus - self.w_minus)


# -- guarded products ---------------------------------------------------------


def _guarded_qpoch(x: complex, q: complex, eps: float, delta: float, what: str) -> complex:
    """``(x; q)_inf`` raising if some factor ``1 - x q^k`` is within ``delta`` of 0."""
    out = 1.0 + 0.0j
    term = complex(x)
    for _ in range(_n_factors(abs(term), abs(q), eps)):
        f = 1.0 - term
        if abs(f) < delta:
            raise PoleProximityError(f"{what}: factor 1 - {term:.6g} vanishes")
        out *= f
        term *= q
    return out


def _denominator(z: complex, p: FamilyParams) -> complex:
    ctx = p.ctx
    out = 1.0 + 0.0j
    for j, aj in enumerate(p.a, start=1):
        out *= _guarded_qpoch(aj * z, ctx.q, ctx.eps, ctx.delta, f"pole of Phi from a_{j} z")
        out *= _guarded_qpoch(aj / z, ctx.q, ctx.eps, ctx.delta, f"pole of Phi from a_{j}/z")
    return out


def circle_prefactor(t: float, N: int) -> float:
    """``sin(t) / sin(N t / 2)``, the branch prefactor at ``z = exp(i t)``."""
    s = math.sin(0.5 * N * t)
    if abs(t) < 1e-8:
        return 2.0 / N
    if s == 0.0:
        raise PoleProximityError(f"sin(N t/2) = 0 at t={t}")
    return math.sin(t) / s


def big_phi(z, p: FamilyParams) -> complex:
    """The integrand ``Phi(z)`` of I_N (without the ``dz / (2 pi i z)``)."""
    z = complex(z)
    if z == 0:
        raise ParameterError("Phi is undefined at z = 0")
    N = p.N
    ctx = p.ctx
    pp = p.p
    den = _denominator(z, p)
    zN = z**N
    on_circle = abs(abs(z) - 1.0) < 1e-14
    if abs(1.0 - zN) < _ROOT_GUARD:
        if on_circle:
            half = cmath.exp(0.5j * N * cmath.phase(z))
        else:
            half = cmath.exp(0.5 * N * cmath.log(z))
        num = qpoch_inf_array(np.array([pp * zN, 1.0 / zN]), pp, ctx.eps).prod()
        return (1.0 / z - z) * half * num / den
    num = qpoch_inf_array(np.array([zN, 1.0 / zN]), pp, ctx.eps).prod()
    if on_circle:
        pref = circle_prefactor(cmath.phase(z), N)
    else:
        half = cmath.exp(0.5 * N * cmath.log(z))
        pref = (z - 1.0 / z) / (half - 1.0 / half)
    return pref * num / den


def _denominator_array(z: np.ndarray, p: FamilyParams, log: bool = False) -> np.ndarray:
    q, eps = p.ctx.q, p.ctx.eps
    a = np.asarray(p.a, dtype=complex)[:, None]
    args = np.concatenate([a * z[None, :], a / z[None, :]])
    if log:
        return log_qpoch_inf_array(args, q, eps).sum(axis=0)
    return qpoch_inf_array(args, q, eps).prod(axis=0)


def phi_on_circle(t: np.ndarray, p: FamilyParams) -> np.ndarray:
    """Vectorised ``Phi(exp(i t))`` for angles ``t`` in ``(-pi, pi]``."""
    t = np.asarray(t, dtype=float)
    N = p.N
    pp = p.p
    eps = p.ctx.eps
    z = np.exp(1j * t)
    zN = np.exp(1j * N * t)
    den = _denominator_array(z, p)
    near = np.abs(1.0 - zN) < _ROOT_GUARD
    out = np.empty_like(z)
    far = ~near
    if far.any():
        num = qpoch_inf_array(zN[far], pp, eps) * qpoch_inf_array(1.0 / zN[far], pp, eps)
        out[far] = np.sin(t[far]) / np.sin(0.5 * N * t[far]) * num
    if near.any():
        zn = zN[near]
        num = qpoch_inf_array(pp * zn, pp, eps) * qpoch_inf_array(1.0 / zn, pp, eps)
        out[near] = (1.0 / z[near] - z[near]) * np.exp(0.5j * N * t[near]) * num
    return out / den


def weight_w(t: float, p: FamilyParams) -> complex:
    """Semi-classical weight ``w`` at ``z = exp(i t)``.

    ``(e^{iNt}, e^{-iNt}; q^{N/2})_inf / (sin(N t/2) prod_j (a_j e^{+-it}; q)_inf)``.
    """
    s = math.sin(0.5 * p.N * t)
    if abs(s) < 1e-15:
        raise PoleProximityError(f"weight w has sin(N t/2) = 0 at t={t}")
    z = cmath.exp(1j * t)
    num = qpoch_inf_array(np.array([z**p.N, z ** (-p.N)]), p.p, p.ctx.eps).prod()
    return num / (s * _denominator(z, p))


def weight_z(z, p: FamilyParams) -> complex:
    """The weight as a function of ``z`` off the circle.

    ``sin(N t / 2)`` is continued as ``(z^{N/2} - z^{-N/2}) / (2i)`` with the
    principal branch of ``z^{N/2}``.
    """
    z = complex(z)
    half = cmath.exp(0.5 * p.N * cmath.log(z))
    s = (half - 1.0 / half) / 2j
    if abs(s) < 1e-15:
        raise PoleProximityError("weight has a vanishing sine denominator")
    num = qpoch_inf_array(np.array([z**p.N, z ** (-p.N)]), p.p, p.ctx.eps).prod()
    return num / (s * _denominator(z, p))


def basis_phi(z, a, r, ctx: QContext) -> complex:
    """``(a z, a/z; q)_r``, continued to complex ``r`` by an infinite-product ratio."""
    z = complex(z)
    a = complex(a)
    if z == 0:
        raise ParameterError("basis function undefined at z = 0")
    if isinstance(r, (int, np.integer)) and not isinstance(r, bool):
        if r < 0:
            raise ParameterError("integer order must be nonnegative")
        return qpoch_n(a * z, ctx.q, int(r)) * qpoch_n(a / z, ctx.q, int(r))
    r = complex(r)
    qr = cmath.exp(r * cmath.log(ctx.q))
    num = qpoch_inf_array(np.array([a * z, a / z]), ctx.q, ctx.eps).prod()
    den = 1.0 + 0.0j
    for arg in (a * qr * z, a * qr / z):
        den *= _guarded_qpoch(arg, ctx.q, ctx.eps, ctx.delta, "pole of the basis continuation")
    return num / den


def f_parts(z, p: FamilyParams) -> tuple[complex, complex, complex]:
    """``(F_-, F_+, F)`` with ``F_-(z) = z^N prod(1 - a_i/z) / (z - 1/z)`` and
    ``F_+(z) = z^-N prod(1 - a_i z) / (1/z - z)``."""
    z = complex(z)
    if z == 0 or abs(z * z - 1.0) < 1e-15:
        raise ParameterError("F is evaluated away from z = 0 and z^2 = 1")
    N = p.N
    lo = 1.0 + 0.0j
    hi = 1.0 + 0.0j
    for ai in p.a:
        lo *= 1.0 - ai / z
        hi *= 1.0 - ai * z
    d = z - 1.0 / z
    fm = z**N * lo / d
    fp = -(z ** (-N)) * hi / d
    return fm, fp, fm + fp


def f_laurent(z, p: FamilyParams) -> complex:
    """``F(z) = z / (1 - z^2) sum_m (-1)^m (sigma_m - sigma_{2N-m}) z^{m-N}``."""
    z = complex(z)
    if z == 0 or abs(z * z - 1.0) < 1e-15:
        raise ParameterError("F is evaluated away from z = 0 and z^2 = 1")
    N = p.N
    sig = p.sigma
    acc = 0.0j
    for m in range(2 * N + 1):
        acc += (-1) ** m * (sig[m] - sig[2 * N - m]) * z ** (m - N)
    return z / (1.0 - z * z) * acc


def spectral_wv(z, p: FamilyParams) -> SpectralPair:
    """``W +- dy V = z^{-+N} prod_j (1 - a_j q^{-1/2} z^{+-1})``."""
    z = complex(z)
    if z == 0:
        raise ParameterError("spectral data undefined at z = 0")
    rq = cmath.exp(-0.5 * cmath.log(p.q))
    plus = z ** (-p.N)
    minus = z**p.N
    for aj in p.a:
        plus *= 1.0 - aj * rq * z
        minus *= 1.0 - aj * rq / z
    return SpectralPair(plus, minus)


def _sigma_tilde(p: FamilyParams) -> list:
    rq = cmath.exp(-0.5 * cmath.log(p.q))
    return elem_sym_all([rq * aj for aj in p.a])


def _cheb_t(k: int, x: complex) -> complex:
    t0, t1 = 1.0 + 0.0j, complex(x)
    if k == 0:
        return t0
    for _ in range(k - 1):
        t0, t1 = t1, 2 * x * t1 - t0
    return t1


def _cheb_u(k: int, x: complex) -> complex:
    u0, u1 = 1.0 + 0.0j, 2.0 * complex(x)
    if k == 0:
        return u0
    for _ in range(k - 1):
        u0, u1 = u1, 2 * x * u1 - u0
    return u1


def w_chebyshev(x, p: FamilyParams) -> complex:
    """``W(x)`` from its Chebyshev expansion in the ``sigma~_k``."""
    st = _sigma_tilde(p)
    N = p.N
    out = (-1) ** N * st[N]
    for l in range(N):
        out += (-1) ** l * (st[l] + st[2 * N - l]) * _cheb_t(N - l, x)
    return out


def v_chebyshev(x, p: FamilyParams) -> complex:
    """``V(x)`` from its Chebyshev expansion in the ``sigma~_k``."""
    st = _sigma_tilde(p)
    N = p.N
    rq = cmath.exp(0.5 * cmath.log(p.q))
    acc = 0.0j
    for l in range(N):
        acc += (-1) ** l * (st[l] - st[2 * N - l]) * _cheb_u(N - l - 1, x)
    return -acc / (rq - 1.0 / rq)


def dd_apply(kind: str, f: Callable[[complex], complex], z, ctx: QContext) -> complex:
    """Askey-Wilson operators on ``f`` given in the z-representation.

    ``kind="D"``: ``(f(q^{1/2} z) - f(q^{-1/2} z)) / (y_+ - y_-)``;
    ``kind="M"``: ``(f(q^{1/2} z) + f(q^{-1/2} z)) / 2``.
    """
    z = complex(z)
    rq = cmath.exp(0.5 * cmath.log(ctx.q))
    up = f(rq * z)
    down = f(z / rq)
    if kind == "M":
        return 0.5 * (up + down)
    if kind != "D":
        raise ParameterError(f"kind must be 'D' or 'M', got {kind!r}")
    dy = 0.5 * (rq - 1.0 / rq) * (z - 1.0 / z)
    if abs(z - 1.0 / z) < 1e-14:
        raise PoleProximityError("D is undefined at z = +-1 where y_+ = y_-")
    return (up - down) / dy


def pearson_residual(t: float, p: FamilyParams, tolerance: float = 1e-10):
    """Residual of ``w(q^{1/2} z) (W - dy V) = w(q^{-1/2} z) (W + dy V)`` at ``z = e^{it}``."""
    from .report import residual

    z = cmath.exp(1j * t)
    rq = cmath.exp(0.5 * cmath.log(p.q))
    s = spectral_wv(z, p)
    terms = [weight_z(rq * z, p) * s.w_minus, -weight_z(z / rq, p) * s.w_plus]
    return residual("pearson", p.snapshot() | {"theta": t}, terms, tolerance)
