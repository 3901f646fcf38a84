"""Direct evaluation of I_N.

The circle part is a quadrature on ``|z| = 1``. For odd ``N`` the integrand
has a branch cut along the negative axis and the contour picks up a tail
from ``-1`` out to ``infinity``; it is integrated along the cut.

Weighted integrals ``int Phi(z) g(z) dz / (2 pi i z)`` use the reduced
integrand ``Phi^(z) = Phi(z) / (1 - z^-2)``, which is entire in the
numerator data and has no removable singularities. A weight is then a Laurent
polynomial ``L`` with ``Phi g = Phi^ L``:

* ``Phi`` itself: ``L = 1 - z^-2``
* ``Phi z^k``: ``L = z^k - z^(k-2)``
* ``F Phi``: ``L = -z^-1 S(z)`` where ``F = z S(z) / (1 - z^2)``

Tail continuation
-----------------
Along the ray ``z = -x`` the reduced integrand obeys, with ``w = 1/z``,
``Phi^(q^n w) = q^{n(N-1-sum s)} G(q^n w) / G(w) Phi^(w)`` where
``G(w) = prod_j (q w / a_j; q)_inf / (a_j w; q)_inf``. Folding ``[1, inf)``
onto one period ``[1, 1/q]`` turns the tail into a finite integral of
lattice sums ``K_e(w) = sum_n q^{n e} G(q^n w)``, and ``K_e`` has the closed
continuation ``G(w) + q^e sum_m c_m (q w)^m / (1 - q^{e+m})`` from the Taylor
coefficients of ``G``. This continues the tail in the exponents ``s_j``
past the point where the direct integral diverges. When some ``|a_j q|`` is
large the first few lattice points are summed directly and the Taylor part
is applied to ``K_e(q^{n0} w)``.

Parameters outside the disc
---------------------------
With ``inside=False`` a parameter may leave the unit disc. The contour then
has to keep the poles ``a_j q^k`` inside and ``1 / (a_j q^k)`` outside; the
quadrature stays on ``|z| = 1`` and each crossed pair contributes
``Phi^_j(z0) L(z0) + Phi^_j(1/z0) L(1/z0)``, where ``Phi^_j`` drops the
vanishing denominator factor.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import ConvergenceError, DivergenceError, ParameterError, PoleProximityError
from .integrand import FamilyParams, _guarded_qpoch, phi_on_circle
from .qkernel import QContext, log_qpoch_inf_array, qpoch_inf_array, qpoch_inf_value, qpoch_n

__all__ = [
    "IntegralResult",
    "METHODS",
    "TAIL_ORIENTATION",
    "integrate_circle",
    "integrate_tail",
    "integrate_weighted",
    "eval_in",
    "aw_closed_i2",
    "moment",
    "moment_monomial",
    "weight_phi",
    "weight_f",
    "tail_exponents",
    "root_identity_residual",
]

METHODS = ("auto", "circle", "circle_plus_tail", "residue_full", "residue_reduced", "closed_form")

# Frozen by calibration against the residue sum at an N = 3 reference point.
TAIL_ORIENTATION = 1

_GL_NODES = 32
_CHUNK = 1 << 16


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    method: str
    nodes_or_terms: int
    est_error: float
    tail_omitted: bool = False

    def __post_init__(self):
        if self.est_error < 0:
            raise ValueError("est_error must be nonnegative")


# -- weights ------------------------------------------------------------------


def weight_phi(power: int = 0) -> dict:
    """Laurent weight for ``Phi(z) z^power``."""
    return {power: 1.0, power - 2: -1.0}


def weight_f(p: FamilyParams) -> dict:
    """Laurent weight for ``F(z) Phi(z)``."""
    N = p.N
    sig = p.sigma
    out: dict = {}
    for m in range(2 * N + 1):
        c = (-1) ** m * (sig[m] - sig[2 * N - m])
        if c != 0:
            k = m - N - 1
            out[k] = out.get(k, 0.0) - c
    return out


def _laurent(weight: Mapping[int, complex], z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for k, c in weight.items():
        out = out + c * z**k
    return out


def tail_exponents(p: FamilyParams, weight: Mapping[int, complex]) -> dict:
    """Decay exponent ``e_k = N - 1 - sum s - k`` of each weight monomial along the cut."""
    base = p.N - 1 - p.sum_s
    return {k: base - k for k in weight}


# -- reduced integrand ---------------------------------------------------------


def _den_array(z: np.ndarray, p: FamilyParams, log: bool) -> np.ndarray:
    a = np.asarray(p.a, dtype=complex)[:, None]
    args = np.concatenate([a * z[None, :], a / z[None, :]])
    if log:
        return log_qpoch_inf_array(args, p.q, p.ctx.eps).sum(axis=0)
    return qpoch_inf_array(args, p.q, p.ctx.eps).prod(axis=0)


def _phi_hat_circle(t: np.ndarray, p: FamilyParams) -> np.ndarray:
    """``Phi^(e^{it}) = -z^{1+N/2} (p z^N, z^-N; p)_inf / prod(a_j z^{+-1}; q)_inf``."""
    N, pp, eps = p.N, p.p, p.ctx.eps
    z = np.exp(1j * t)
    zN = np.exp(1j * N * t)
    num = qpoch_inf_array(pp * zN, pp, eps) * qpoch_inf_array(1.0 / zN, pp, eps)
    return -z * np.exp(0.5j * N * t) * num / _den_array(z, p, log=False)


def _phi_hat_cut(x: np.ndarray, p: FamilyParams) -> np.ndarray:
    """``Phi^(x e^{i pi})`` for ``x >= 1``, built in log space."""
    N, pp, eps = p.N, p.p, p.ctx.eps
    z = -x.astype(complex)
    logx = np.log(x)
    zN = (-1.0) ** N * np.exp(N * logx)
    lognum = log_qpoch_inf_array(pp * zN, pp, eps) + log_qpoch_inf_array(1.0 / zN, pp, eps)
    # -z^{1+N/2} with z = x e^{i pi}
    logpre = (1.0 + 0.5 * N) * logx + 1j * math.pi * (1.0 + 0.5 * N) + 1j * math.pi
    return np.exp(logpre + lognum - _den_array(z, p, log=True))


# -- circle ------------------------------------------------------------------


def _trapezoid(f, M: int) -> tuple[complex, float]:
    total = 0.0j
    l1 = 0.0
    for start in range(0, M, _CHUNK):
        k = np.arange(start, min(M, start + _CHUNK))
        t = -math.pi + 2.0 * math.pi * (k + 0.5) / M
        v = f(t)
        total += v.sum()
        l1 += float(np.abs(v).sum())
    return total / M, l1 / M


@lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _composite_gl(f, lo: float, hi: float, panels: int) -> tuple[complex, float]:
    x, w = _gl(_GL_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    total = 0.0j
    l1 = 0.0
    per = max(1, _CHUNK // _GL_NODES)
    for s in range(0, panels, per):
        a = edges[s : min(panels, s + per)]
        b = edges[s + 1 : min(panels, s + per) + 1]
        half = 0.5 * (b - a)
        t = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        v = f(t.ravel()).reshape(t.shape) * half[:, None] * w[None, :]
        total += v.sum()
        l1 += float(np.abs(v).sum())
    return total, l1


def _circle_quad(f, N: int, ctx: QContext) -> tuple[complex, int, float]:
    """``(1/2pi) int_{-pi}^{pi} f``: trapezoid for even N, composite Gauss-Legendre for odd N.

    For odd N the integrand is antiperiodic, so the periodic trapezoid would
    only be second order.
    """
    prev = None
    for d in range(ctx.quad_max_doublings + 1):
        if N % 2 == 0:
            M = 64 * 2**d
            val, l1 = _trapezoid(f, M)
            nodes = M
        else:
            panels = 2 * 2**d
            val, l1 = _composite_gl(f, -math.pi, math.pi, panels)
            val /= 2.0 * math.pi
            l1 /= 2.0 * math.pi
            nodes = panels * _GL_NODES
        if not np.isfinite(val):
            raise PoleProximityError("non-finite integrand on the unit circle")
        if prev is not None:
            diff = abs(val - prev)
            if diff < ctx.eps * max(1.0, abs(val), l1):
                return val, nodes, diff
        prev = val
    raise ConvergenceError(f"circle quadrature did not converge in {ctx.quad_max_doublings} doublings")


def _require_inside(p: FamilyParams):
    if p.inside and any(abs(x) >= 1.0 for x in p.a):
        raise ParameterError("the circle contour needs every |a_j| < 1")
    for j, aj in enumerate(p.a, start=1):
        r = abs(aj)
        k = 0
        while r >= 1.0 - p.ctx.delta:
            if abs(r - 1.0) < p.ctx.delta:
                raise PoleProximityError(f"pole a_{j} q^{k} of Phi lies on the unit circle")
            r *= abs(p.q)
            k += 1


def _crossed_poles(p: FamilyParams) -> list[tuple[int, int, complex]]:
    out = []
    for j, aj in enumerate(p.a):
        k = 0
        z0 = aj
        while abs(z0) > 1.0:
            out.append((j, k, z0))
            z0 *= p.q
            k += 1
    return out


def _phi_hat_skip(z: complex, p: FamilyParams, j: int, k: int, side: int) -> complex:
    """``Phi^(z)`` without the factor ``1 - a_j q^k z^side`` of its denominator."""
    ctx = p.ctx
    N, pp = p.N, p.p
    den = 1.0 + 0.0j
    for i, ai in enumerate(p.a):
        for sd in (1, -1):
            x = ai * z**sd
            if i == j and sd == side:
                v = qpoch_n(x, p.q, k) * _guarded_qpoch(
                    x * p.q ** (k + 1), p.q, ctx.eps, ctx.delta, f"double pole at a_{j + 1} q^{k}"
                )
                if abs(qpoch_n(x, p.q, k)) < ctx.delta:
                    raise PoleProximityError(f"double pole at a_{j + 1} q^{k}")
            else:
                v = _guarded_qpoch(x, p.q, ctx.eps, ctx.delta, f"crossed pole a_{j + 1} q^{k} collides with another pole")
            den *= v
    zN = z**N
    num = qpoch_inf_array(np.array([pp * zN, 1.0 / zN]), pp, ctx.eps).prod()
    return -z * cmath.exp((0.5 * N) * cmath.log(z)) * num / den


def _crossing_correction(p: FamilyParams, weight: Mapping[int, complex]) -> tuple[complex, int]:
    total = 0.0j
    poles = _crossed_poles(p)
    for j, k, z0 in poles:
        for z, side in ((z0, -1), (1.0 / z0, 1)):
            lz = sum(c * z**e for e, c in weight.items())
            total += _phi_hat_skip(z, p, j, k, side) * lz
    return total, 2 * len(poles)


def integrate_circle(p: FamilyParams) -> IntegralResult:
    """``(1/2pi) int Phi(e^{it}) dt``; for odd N only the circle part of I_N.

    Poles that crossed the circle (``inside=False``) are added as residues.
    """
    _require_inside(p)
    val, nodes, err = _circle_quad(lambda t: phi_on_circle(t, p), p.N, p.ctx)
    if not p.inside:
        corr, n = _crossing_correction(p, weight_phi(0))
        val += corr
        nodes += n
    return IntegralResult(val, "circle", nodes, err, tail_omitted=p.N % 2 == 1)


def integrate_weighted(
    p: FamilyParams, weight: Mapping[int, complex], continued: bool = False
) -> IntegralResult:
    """``int Phi^(z) L(z) dz / (2 pi i z)`` over the full contour (circle plus tail for odd N)."""
    _require_inside(p)
    weight = dict(weight)
    val, nodes, err = _circle_quad(lambda t: _phi_hat_circle(t, p) * _laurent(weight, np.exp(1j * t)), p.N, p.ctx)
    if not p.inside:
        corr, n = _crossing_correction(p, weight)
        val += corr
        nodes += n
    if p.N % 2 == 0:
        return IntegralResult(val, "circle", nodes, err)
    tail = integrate_tail(p, weight, continued=continued)
    return IntegralResult(
        val + tail.value, "circle_plus_tail", nodes + tail.nodes_or_terms, err + tail.est_error
    )


# -- tail ----------------------------------------------------------------------


def _check_tail(p: FamilyParams):
    if p.N % 2 == 0:
        raise ParameterError("the branch-cut tail exists only for odd N")
    _require_inside(p)
    for j, aj in enumerate(p.a, start=1):
        if abs(aj.imag) < p.ctx.delta and aj.real < 0:
            raise PoleProximityError(f"a_{j} is negative real: poles of Phi lie on the cut")


def _direct_tail(p: FamilyParams, weight: dict) -> IntegralResult:
    ctx = p.ctx
    kmax = max(weight)

    def f(u):
        x = np.exp(u)
        scaled = np.zeros(u.shape, dtype=complex)
        for k, c in weight.items():
            scaled += c * (-1.0) ** k * np.exp((k - kmax) * u)
        return _phi_hat_cut(x, p) * scaled * np.exp(kmax * u)

    width = 0.5 * abs(math.log(abs(p.q)))
    u_cap = 600.0 / (p.N + 1)
    total = 0.0j
    nodes = 0
    quiet = 0
    lo = 0.0
    while lo < u_cap:
        piece, _ = _panel_adaptive(f, lo, lo + width, ctx)
        total += piece
        nodes += _GL_NODES
        lo += width
        if abs(piece) < 0.01 * ctx.eps * max(abs(total), 1e-300):
            quiet += 1
            if quiet >= 3:
                val = TAIL_ORIENTATION * total / (1j * math.pi)
                return IntegralResult(val, "tail_direct", nodes, abs(piece) / math.pi)
        else:
            quiet = 0
    raise ConvergenceError("direct tail did not decay before the overflow cutoff")


def _panel_adaptive(f, lo, hi, ctx: QContext):
    prev = None
    for d in range(8):
        val, l1 = _composite_gl(f, lo, hi, 2**d)
        if prev is not None and abs(val - prev) <= ctx.eps * max(l1, 1e-300):
            return val, l1
        prev = val
    return val, l1


def _g_coefficients(a, q, radius: float, eps: float) -> np.ndarray:
    """Taylor coefficients of ``prod_j (q w / a_j; q)_inf / (a_j w; q)_inf`` up to ``radius``."""
    amax = max(abs(x) for x in a)
    rho = amax * radius
    if rho >= 1.0:
        raise DivergenceError("lattice continuation needs |a_j q| < 1")
    n = int(math.ceil(math.log(0.01 * eps) / math.log(rho))) + 4 if rho > 0 else 1
    coef = np.zeros(n, dtype=complex)
    coef[0] = 1.0
    for aj in a:
        b = q / (aj * aj)
        f = np.empty(n, dtype=complex)
        f[0] = 1.0
        for k in range(1, n):
            f[k] = f[k - 1] * (1.0 - b * q ** (k - 1)) / (1.0 - q**k) * aj
        coef = np.convolve(coef, f)[:n]
    return coef


def _lattice_tail(p: FamilyParams, weight: dict) -> IntegralResult:
    ctx = p.ctx
    q = p.q
    if q.imag != 0.0 or q.real <= 0.0:
        raise ParameterError("the continued tail needs real 0 < q < 1")
    q = q.real
    a = p.a
    # sum the first n0 lattice points directly so that the Taylor part
    # only sees |w| <= q^{n0+1}, well inside the radius of G
    amax = max(abs(x) for x in a)
    n0 = 0
    while amax * q ** (n0 + 1) > 0.25:
        n0 += 1
    radius = q ** (n0 + 1)
    coef = _g_coefficients(a, q, radius, ctx.eps)
    m = np.arange(coef.size)
    exps = tail_exponents(p, weight)
    shifted = {}
    for k, e in exps.items():
        den = 1.0 - q ** (e + m)
        if np.min(np.abs(den)) < ctx.delta:
            raise PoleProximityError(f"lattice sum for z^{k} sits on a pole of its continuation")
        shifted[k] = coef / den

    def g_direct(w):
        out = np.ones_like(w)
        for aj in a:
            out *= qpoch_inf_array(q * w / aj, q, ctx.eps) / qpoch_inf_array(aj * w, q, ctx.eps)
        return out

    def f(u):
        y = np.exp(u)
        w0 = (-1.0 / y).astype(complex)
        g0 = g_direct(w0)
        heads = [g_direct(q**n * w0) for n in range(n0 + 1)]
        powers = (radius * w0)[:, None] ** m[None, :]
        acc = np.zeros(u.shape, dtype=complex)
        for k, c in weight.items():
            e = exps[k]
            kk = sum(q ** (n * e) * heads[n] for n in range(n0))
            kk = kk + q ** (n0 * e) * (heads[n0] + q**e * (powers @ shifted[k]))
            acc += c * (-y) ** k * kk
        return _phi_hat_cut(y, p) / g0 * acc

    L = -math.log(q)
    prev = None
    for d in range(ctx.quad_max_doublings):
        val, l1 = _composite_gl(f, 0.0, L, 2**d)
        if prev is not None and abs(val - prev) <= ctx.eps * max(l1, abs(val), 1e-300):
            out = TAIL_ORIENTATION * val / (1j * math.pi)
            return IntegralResult(out, "tail_lattice", (2**d) * _GL_NODES, abs(val - prev) / math.pi)
        prev = val
    raise ConvergenceError("folded tail quadrature did not converge")


def integrate_tail(
    p: FamilyParams,
    weight: Mapping[int, complex] | None = None,
    continued: bool = False,
    route: str = "auto",
) -> IntegralResult:
    """Tail ``(1/2 pi i) int_1^inf [Phi g(x e^{i pi}) - Phi g(x e^{-i pi})] dx / x``.

    The jump across the cut is twice the value on the upper side. ``route``
    is ``"direct"`` (log-variable quadrature out to the decay cutoff),
    ``"lattice"`` (folded onto one period) or ``"auto"`` (lattice for real q
    direct otherwise). A tail whose direct integral diverges raises
    :class:`DivergenceError` unless ``continued=True``, which returns the
    analytic continuation (lattice route only).
    """
    _check_tail(p)
    weight = dict(weight_phi(0) if weight is None else weight)
    exps = tail_exponents(p, weight)
    convergent = all(e.real > 0 for e in exps.values())
    if not convergent and not continued:
        raise DivergenceError(
            f"tail diverges: decay exponents {sorted((k, round(e.real, 6)) for k, e in exps.items())}"
        )
    real_q = p.q.imag == 0.0 and p.q.real > 0.0
    if route == "auto":
        route = "lattice" if real_q else "direct"
    if route == "direct":
        if not convergent:
            raise DivergenceError("the direct tail route cannot continue a divergent tail")
        return _direct_tail(p, weight)
    if route == "lattice":
        return _lattice_tail(p, weight)
    raise ParameterError(f"unknown tail route {route!r}")


def root_identity_residual(p: FamilyParams, tolerance: float = 1e-6):
    """Residual of ``int F(z) Phi(z) dz / (2 pi i z) = 0`` over the full contour.

    Summands are the circle part and, for odd N, the tail; a tail that
    diverges is continued through the lattice route.
    """
    from .report import ResidualReport, residual

    _require_inside(p)
    weight = weight_f(p)

    def f(t):
        return _phi_hat_circle(t, p) * _laurent(weight, np.exp(1j * t))

    circ, _, _ = _circle_quad(f, p.N, p.ctx)
    terms = [circ]
    if p.N % 2 == 1:
        terms.append(integrate_tail(p, weight, continued=True).value)
    # the mean modulus on the circle sets the scale when the pieces are tiny
    t = np.linspace(-math.pi, math.pi, 4096, endpoint=False)
    l1 = float(np.mean(np.abs(f(t))))
    scale = max(max(abs(v) for v in terms), l1)
    params = p.snapshot()
    if p.N % 2 == 1:
        # reported for information only; the circle alone is not expected to vanish
        params["circle_only_rel"] = float(abs(circ) / scale)
    rep = residual("root_identity", params, terms, tolerance)
    return ResidualReport(rep.identity, rep.params, rep.residual_abs, scale, tolerance)


# -- closed form and dispatch ---------------------------------------------------


def aw_closed_i2(a, ctx: QContext) -> complex:
    """``2 (a1 a2 a3 a4; q)_inf / ((q; q)_inf prod_{j<k} (a_j a_k; q)_inf)``."""
    a = [complex(x) for x in a]
    if len(a) != 4:
        raise ParameterError("aw_closed_i2 takes exactly four parameters")
    if any(abs(x) >= 1.0 for x in a):
        raise ParameterError("aw_closed_i2 needs every |a_j| < 1")
    den = qpoch_inf_value(ctx.q, ctx)
    for j in range(4):
        for k in range(j + 1, 4):
            v = qpoch_inf_value(a[j] * a[k], ctx)
            if abs(v) < ctx.delta:
                raise PoleProximityError(f"(a_{j + 1} a_{k + 1}; q)_inf vanishes")
            den *= v
    return 2.0 * qpoch_inf_value(a[0] * a[1] * a[2] * a[3], ctx) / den


def eval_in(p: FamilyParams, method: str = "auto") -> IntegralResult:
    """Evaluate I_N with the chosen method."""
    if method not in METHODS:
        raise ParameterError(f"unknown method {method!r}; choose from {METHODS}")
    if method == "auto":
        method = "circle" if p.N % 2 == 0 else "circle_plus_tail"
    if method == "circle":
        return integrate_circle(p)
    if method == "circle_plus_tail":
        if p.N % 2 == 0:
            raise ParameterError("circle_plus_tail is for odd N; use circle")
        c = integrate_circle(p)
        t = integrate_tail(p)
        return IntegralResult(
            c.value + t.value,
            "circle_plus_tail",
            c.nodes_or_terms + t.nodes_or_terms,
            c.est_error + t.est_error,
        )
    if method == "closed_form":
        if p.N != 2:
            raise ParameterError("closed_form exists only for N = 2")
        return IntegralResult(aw_closed_i2(p.a, p.ctx), "closed_form", 0, 0.0)
    from .jackson import in_residue

    return in_residue(p, reduced=method == "residue_reduced")


def moment(p: FamilyParams, shifts, method: str = "auto") -> IntegralResult:
    """I_N with ``a_j -> q^{shift_j} a_j`` for nonnegative integer shifts."""
    shifts = list(shifts)
    if any(int(k) != k or k < 0 for k in shifts):
        raise ParameterError("moment shifts must be nonnegative integers")
    return eval_in(p.shifted([int(k) for k in shifts]), method)


def moment_monomial(p: FamilyParams, power: int, continued: bool = False) -> IntegralResult:
    """Integral of ``Phi(z) z^power`` for ``power`` in ``{-1, 0, 1}``."""
    if power not in (-1, 0, 1):
        raise ParameterError("power must be -1, 0 or 1")
    if power == 0:
        return eval_in(p)
    return integrate_weighted(p, weight_phi(power), continued=continued)
