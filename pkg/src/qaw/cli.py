"""``qaw`` command line: evaluate I_N or run verification suites, printing JSON.

Exit codes: 0 success (for ``verify``, every case passed), 1 some case
failed, 2 invalid input, 3 evaluation failure.

Random parameter sets come from ``numpy.random.default_rng(seed)``; ranges
are given next to each suite below.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Callable

import numpy as np

from . import __version__
from .contour import METHODS, eval_in, root_identity_residual
from .errors import QawError, UnsupportedDomainError
from .integrand import FamilyParams, pearson_residual
from .qkernel import QContext
from .report import ResidualReport

PRESETS = {
    "n2-ref": {"N": 2, "q": 0.1, "a": (0.5, 0.6, 0.7, 0.8)},
    "n3-ref": {"N": 3, "q": 0.01, "a": (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)},
    "n4-ref": {"N": 4, "q": 0.1, "a": (0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75)},
    "w87-ref": {"N": 3, "q": 0.1, "a": (0.3, 0.4, 0.5, 0.7), "alpha": 0.6, "t": 1.2},
}

SUITES = (
    "aw-closed-form",
    "pearson",
    "expansions",
    "recurrence-even",
    "matrix-system",
    "mixed-equation",
    "n3-series",
    "cross-evaluators",
    "root-identity",
    "sears-slater",
    "theta-identity",
    "moments",
    "u-poly",
    "all",
)

W87_TS = (1.2, 0.8, 1.5)


class UsageError(Exception):
    pass


# -- argument handling ------------------------------------------------------------


def _parse_complex(text: str) -> complex:
    try:
        v = complex(text.strip().replace(" ", ""))
    except ValueError as exc:
        raise UsageError(f"not a number: {text!r}") from exc
    if not (math.isfinite(v.real) and math.isfinite(v.imag)):
        raise UsageError(f"not a finite number: {text!r}")
    return v


def _parse_list(text: str) -> tuple:
    parts = [s for s in text.split(",")]
    if not parts or any(not s.strip() for s in parts):
        raise UsageError(f"malformed parameter list: {text!r}")
    return tuple(_parse_complex(s) for s in parts)


def _context(args) -> QContext:
    cfg = _preset(args)
    q = _parse_complex(args.q) if args.q is not None else cfg.get("q", 0.1)
    kw = {}
    if args.eps is not None:
        kw["eps"] = args.eps
    if args.max_terms is not None:
        kw["max_terms"] = args.max_terms
    return QContext(q, **kw)


def _preset(args) -> dict:
    if args.preset is None:
        return {}
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    return PRESETS[args.preset]


def _family(args, ctx: QContext) -> FamilyParams:
    cfg = _preset(args)
    a = _parse_list(args.a) if args.a is not None else cfg.get("a")
    alpha = _parse_complex(args.alpha) if args.alpha is not None else cfg.get("alpha")
    t = _parse_complex(args.t) if args.t is not None else cfg.get("t")
    N = args.n if args.n is not None else cfg.get("N")
    if a is None:
        raise UsageError("give --a or --preset")
    a = tuple(complex(x) for x in a)
    if alpha is not None or t is not None:
        if alpha is None or t is None:
            raise UsageError("--alpha and --t go together")
        if len(a) != 4:
            raise UsageError("with --alpha/--t give the four fixed parameters a1..a4")
        if N not in (None, 3):
            raise UsageError("the alpha, t parameterisation is N = 3")
        a = a + (complex(alpha) * complex(t), complex(alpha) / complex(t))
        N = 3
    if N is None:
        if len(a) % 2:
            raise UsageError("odd number of parameters")
        N = len(a) // 2
    inside = all(abs(x) < 1 for x in a)
    return FamilyParams(N, a, ctx, inside=inside)


def _default_tol(args) -> float | None:
    if args.tol is not None:
        return args.tol
    env = os.environ.get("QAW_EPS")
    if env:
        try:
            return float(env)
        except ValueError as exc:
            raise UsageError(f"QAW_EPS is not a number: {env!r}") from exc
    return None


def _cnum(v: complex) -> list:
    return [float(complex(v).real), float(complex(v).imag)]


def _emit(obj: dict) -> None:
    text = json.dumps(obj, sort_keys=True, allow_nan=False)
    sys.stdout.write(text + "\n")


# -- eval ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    ctx = _context(args)
    p = _family(args, ctx)
    res = eval_in(p, args.method)
    if not (math.isfinite(res.value.real) and math.isfinite(res.value.imag)):
        raise ArithmeticError("non-finite value")
    _emit(
        {
            "method": res.method,
            "N": p.N,
            "q": _cnum(p.q),
            "a": [_cnum(x) for x in p.a],
            "value_re": res.value.real,
            "value_im": res.value.imag,
            "est_error": float(res.est_error),
            "nodes_or_terms": int(res.nodes_or_terms),
            "tail_omitted": bool(res.tail_omitted),
        }
    )
    return 0


# -- verification suites --------------------------------------------------------------


def _random_params(rng: np.random.Generator, N: int, ctx: QContext, lo: float, hi: float) -> FamilyParams:
    a = tuple(float(x) for x in rng.uniform(lo, hi, size=2 * N))
    return FamilyParams(N, a, ctx)


def _ref(name: str, ctx: QContext | None = None) -> FamilyParams:
    cfg = PRESETS[name]
    ctx = ctx or QContext(cfg["q"])
    if "alpha" in cfg:
        al, t = cfg["alpha"], cfg["t"]
        return FamilyParams(3, tuple(cfg["a"]) + (al * t, al / t), ctx, inside=False)
    return FamilyParams(cfg["N"], cfg["a"], ctx)


def _alpha_family(ctx: QContext | None = None):
    from .qdiff import AlphaFamily

    cfg = PRESETS["w87-ref"]
    return AlphaFamily(cfg["a"], cfg["alpha"], ctx or QContext(cfg["q"]))


def _closeness(name: str, params: dict, value: complex, ref: complex, tol: float) -> ResidualReport:
    return ResidualReport(name, params, abs(value - ref), abs(ref), tol)


def suite_aw_closed_form(seed: int, args) -> list[ResidualReport]:
    """Closed form and two-term recurrence; 20 random sets with a_j in [-0.8, 0.8] at q = 0.1."""
    from .contour import aw_closed_i2
    from .qdiff import recurrence_residual

    ctx = QContext(0.1)
    rng = np.random.default_rng(seed)
    sets = [_ref("n2-ref")]
    for _ in range(20):
        a = rng.uniform(0.1, 0.8, size=4) * rng.choice([-1.0, 1.0], size=4)
        sets.append(FamilyParams(2, tuple(float(x) for x in a), ctx))
    out = []
    for p in sets:
        out.append(_closeness("aw_closed_form", p.snapshot(), eval_in(p, "circle").value, aw_closed_i2(p.a, p.ctx), 1e-10))
        out.append(recurrence_residual(p, "order_n_minus_1", tolerance=1e-10))
    return out


def suite_pearson(seed: int, args) -> list[ResidualReport]:
    """50 random angles per reference point."""
    rng = np.random.default_rng(seed)
    out = []
    for name in ("n2-ref", "n3-ref", "n4-ref"):
        p = _ref(name)
        for t in rng.uniform(-math.pi, math.pi, size=50):
            out.append(pearson_residual(float(t), p, 1e-10))
    return out


def _random_z(rng, n: int, lo: float = 0.5, hi: float = 2.0):
    r = rng.uniform(lo, hi, size=n)
    th = rng.uniform(-math.pi, math.pi, size=n)
    return r * np.exp(1j * th)


def suite_expansions(seed: int, args) -> list[ResidualReport]:
    """50 random z with 0.5 < |z| < 2 per reference point, plus the matrix and coefficient checks."""
    from .qdiff import EXPANSIONS, cij_matrix, coeff_g, coeff_g_direct, expansion_residual, phi_tilde_matrix

    rng = np.random.default_rng(seed)
    out = []
    for name in ("n2-ref", "n3-ref", "n4-ref"):
        p = _ref(name, QContext(0.1))
        for z in _random_z(rng, 50):
            for which in EXPANSIONS:
                out.append(expansion_residual(p, which, complex(z), tolerance=1e-10))
        for ai in p.a[: p.N]:
            prod = cij_matrix(p, ai) @ phi_tilde_matrix(p, ai)
            err = float(np.abs(prod - np.eye(p.N)).max())
            out.append(ResidualReport("cij_inverse", p.snapshot() | {"a_basis": _cnum(ai)}, err, 1.0, 1e-12))
            ratios = [coeff_g_direct(p, ai, i) / coeff_g(p, ai, i) for i in range(p.N)]
            spread = max(abs(r - ratios[0]) for r in ratios)
            out.append(
                ResidualReport("g_route_ratio", p.snapshot() | {"a_basis": _cnum(ai)}, spread, abs(ratios[0]), 1e-11)
            )
    return out


def suite_recurrence_even(seed: int, args) -> list[ResidualReport]:
    from .qdiff import recurrence_residual

    if args.n is not None and args.n % 2:
        raise UsageError("recurrence-even needs even N")
    names = ("n2-ref", "n4-ref") if args.n is None else (f"n{args.n}-ref",)
    out = []
    for name in names:
        if name not in PRESETS:
            raise UsageError(f"no reference point for N = {args.n}")
        p = _ref(name)
        out.append(recurrence_residual(p, "order_n_minus_1", tolerance=1e-8))
        out.append(recurrence_residual(p, "t3_identity", tolerance=1e-8))
    return out


def suite_matrix_system(seed: int, args) -> list[ResidualReport]:
    from .qdiff import det_formula, matrix_system, recurrence_residual

    p = _ref("n4-ref")
    sysm = matrix_system(p)
    det_ref = det_formula(p)
    out = [
        recurrence_residual(p, "matrix", tolerance=1e-8),
        _closeness("det_formula", p.snapshot(), complex(np.linalg.det(sysm.A)), det_ref, 1e-12),
        _closeness("det_gauss", p.snapshot(), sysm.det, det_ref, 1e-12),
    ]
    fac = float(np.abs(sysm.upper_factor @ sysm.lower_factor - sysm.A).max())
    out.append(ResidualReport("gauss_factors", p.snapshot(), fac, float(np.abs(sysm.A).max()), 1e-13))
    return out


def suite_mixed_equation(seed: int, args) -> list[ResidualReport]:
    from .qdiff import recurrence_residual

    return [recurrence_residual(_ref(n), "mixed", tolerance=1e-8) for n in ("n2-ref", "n4-ref")]


def suite_n3_series(seed: int, args) -> list[ResidualReport]:
    """8W7 solutions, the integral itself and the contiguous lemma at the w87 point."""
    from .qdiff import mpm_lemma_residual, three_term_moment_residual, w87_m00

    fam = _alpha_family()
    out = []
    for t in W87_TS:
        for s in (1, 2):
            out.append(
                three_term_moment_residual(
                    t, fam, m=lambda u, s=s: w87_m00(u, fam, s), tolerance=1e-9, label=f"3term_moment_8w7_{s}"
                )
            )
        out.append(
            three_term_moment_residual(
                t, fam, m=lambda u: eval_in(fam.params(u)).value, tolerance=1e-9, label="3term_moment_integral"
            )
        )
        out.append(mpm_lemma_residual(t, fam, tolerance=1e-7))
    return out


def suite_cross_evaluators(seed: int, args) -> list[ResidualReport]:
    out = []
    p2 = _ref("n2-ref")
    full = eval_in(p2, "residue_full").value
    red = eval_in(p2, "residue_reduced").value
    quad = eval_in(p2, "circle").value
    out.append(_closeness("residue_full_vs_reduced", p2.snapshot(), full, red, 1e-10))
    out.append(_closeness("residue_vs_circle", p2.snapshot(), full, quad, 1e-9))
    p4 = _ref("n4-ref")
    out.append(_closeness("residue_vs_circle", p4.snapshot(), eval_in(p4, "residue_full").value, eval_in(p4).value, 1e-8))
    p3 = _ref("n3-ref")
    out.append(
        _closeness("circle_tail_vs_residue", p3.snapshot(), eval_in(p3).value, eval_in(p3, "residue_reduced").value, 1e-6)
    )
    return out


def suite_root_identity(seed: int, args) -> list[ResidualReport]:
    return [root_identity_residual(_ref(n), 1e-6) for n in ("n2-ref", "n3-ref", "n4-ref")]


def suite_sears_slater(seed: int, args) -> list[ResidualReport]:
    """20 random z with 0.5 < |z| < 2 per reference point, truncated connections and the N = 2 closed forms."""
    from .jackson import (
        i2_j2_relation_residual,
        j2_closed,
        regularized_j,
        sears_slater_residual,
        truncated_connection_residual,
    )

    rng = np.random.default_rng(seed)
    out = []
    for name in ("n2-ref", "n3-ref"):
        p = _ref(name)
        for z in _random_z(rng, 20):
            out.append(sears_slater_residual(complex(z), p, 1e-9))
        for k in range(p.N, 2 * p.N + 1):
            out.append(truncated_connection_residual(k, p, 1e-10))
    p2 = _ref("n2-ref")
    out.append(_closeness("j2_closed", p2.snapshot(), regularized_j(p2.a[0], p2).regularized, j2_closed(p2), 1e-10))
    out.append(i2_j2_relation_residual(p2, 1e-10))
    return out


def suite_theta_identity(seed: int, args) -> list[ResidualReport]:
    """Tuples with modulus in [0.6, 1.6] and uniform phase, q = 0.3."""
    from .thetakit import ThetaTuple, f_reconstruct, four_term_theta_residual, quasi_periodicity_residual
    from .qkernel import theta

    rng = np.random.default_rng(seed)
    ctx = QContext(0.3)

    def tup(n):
        return ThetaTuple(tuple(complex(z) for z in _random_z(rng, n, 0.6, 1.6)), ctx)

    out = [four_term_theta_residual(tup(4), 1e-11) for _ in range(100)]
    for _ in range(20):
        t = tup(5)
        out.append(quasi_periodicity_residual(t, int(rng.integers(1, 6)), 1e-10))
    for _ in range(20):
        t = tup(4)
        x1, x2, x3, x4 = t.xs
        ref = 2.0 * theta(x1 * x2 * x3 * x4, ctx)
        out.append(_closeness("f_n2", t.snapshot(), f_reconstruct(t, 2), ref, 1e-11))
    return out


def suite_moments(seed: int, args) -> list[ResidualReport]:
    from .qdiff import aw_moment_ratio_residual, recurrence_residual

    p = _ref("n2-ref")
    out = [recurrence_residual(p, "mrecur", tolerance=1e-8, k=k) for k in range(3)]
    out += [aw_moment_ratio_residual(p, n, 1e-9) for n in range(5)]
    return out


def suite_u_poly(seed: int, args) -> list[ResidualReport]:
    from .qdiff import u_poly, u_poly_n3

    out = []
    p2 = _ref("n2-ref")
    u_a, u_b = u_poly(p2, p2.a[0], 0.3), u_poly(p2, p2.a[1], 0.3)
    out.append(_closeness("u_a_independence", p2.snapshot(), u_a, u_b, 1e-8))
    m00 = eval_in(p2).value
    q = p2.q
    out.append(_closeness("u_n2_closed", p2.snapshot(), u_a, 4.0 * (1.0 - p2.prod / q) / (q - 1.0) * m00, 1e-8))
    p3 = _ref("n3-ref")
    for x in (0.3, -0.7):
        u_a, u_b = u_poly(p3, p3.a[0], x), u_poly(p3, p3.a[1], x)
        out.append(_closeness("u_a_independence", p3.snapshot() | {"x": x}, u_a, u_b, 1e-8))
        out.append(_closeness("u_n3_closed_form", p3.snapshot() | {"x": x}, u_a, u_poly_n3(p3, x), 1e-7))
    return out


SUITE_FUNCS: dict[str, Callable] = {
    "aw-closed-form": suite_aw_closed_form,
    "pearson": suite_pearson,
    "expansions": suite_expansions,
    "recurrence-even": suite_recurrence_even,
    "matrix-system": suite_matrix_system,
    "mixed-equation": suite_mixed_equation,
    "n3-series": suite_n3_series,
    "cross-evaluators": suite_cross_evaluators,
    "root-identity": suite_root_identity,
    "sears-slater": suite_sears_slater,
    "theta-identity": suite_theta_identity,
    "moments": suite_moments,
    "u-poly": suite_u_poly,
}


def run_suite(name: str, seed: int = 0, args=None, tol: float | None = None) -> dict:
    """Run one suite (or ``all``) and return its JSON-ready report."""
    if args is None:
        args = build_parser().parse_args(["verify", name])
    if name == "all":
        names = sorted(SUITE_FUNCS)
    elif name in SUITE_FUNCS:
        names = [name]
    else:
        raise UsageError(f"unknown suite {name!r}; choose from {list(SUITES)}")
    reports: list[tuple[str, ResidualReport]] = []
    for n in names:
        for r in SUITE_FUNCS[n](seed, args):
            if tol is not None:
                r = ResidualReport(r.identity, r.params, r.residual_abs, r.scale, tol)
            reports.append((n, r))
    cases = []
    for suite, r in reports:
        case = r.as_case()
        if not math.isfinite(case["residual_rel"]):
            raise ArithmeticError(f"non-finite residual in {r.identity}")
        if name == "all":
            case["suite"] = suite
        cases.append(case)
    # stable order: by case name, then by parameters
    cases.sort(key=lambda c: (c.get("suite", ""), c["identity"], json.dumps(c["params"], sort_keys=True)))
    worst = max((c["residual_rel"] for c in cases), default=0.0)
    return {
        "suite": name,
        "cases": cases,
        "max_residual_rel": worst,
        "pass": all(c["pass"] for c in cases),
    }


def cmd_verify(args) -> int:
    report = run_suite(args.suite, args.seed, args, _default_tol(args))
    _emit(report)
    return 0 if report["pass"] else 1


# -- entry point ----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="order N")
    common.add_argument("--q", help="base q (real or complex, e.g. 0.1 or 0.1+0.02j)")
    common.add_argument("--a", help="comma-separated parameters a_1..a_2N")
    common.add_argument("--alpha", help="alpha in a_5 = alpha t, a_6 = alpha / t (N = 3)")
    common.add_argument("--t", help="t in a_5 = alpha t, a_6 = alpha / t (N = 3)")
    common.add_argument("--method", default="auto", help=f"one of {', '.join(METHODS)}")
    common.add_argument("--tol", type=float, help="override every case tolerance")
    common.add_argument("--seed", type=int, default=0, help="seed for random cases")
    common.add_argument("--preset", help=f"reference point: {', '.join(sorted(PRESETS))}")
    common.add_argument("--json", action="store_true", default=True, help="JSON output (always on)")
    common.add_argument("--max-terms", type=int, dest="max_terms", help="series term cap")
    common.add_argument("--eps", type=float, help="truncation tolerance of series and quadrature")

    parser = _Parser(prog="qaw", description="Evaluate and verify I_N integrals.")
    parser.add_argument("--version", action="version", version=f"qaw {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("eval", parents=[common], help="evaluate I_N")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help=f"one of {', '.join(SUITES)}")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.method not in METHODS:
            raise UsageError(f"unknown method {args.method!r}")
        if args.command == "verify" and args.suite not in SUITES:
            raise UsageError(f"unknown suite {args.suite!r}")
        if args.command == "eval":
            return cmd_eval(args)
        return cmd_verify(args)
    except UsageError as exc:
        sys.stderr.write(f"qaw: {exc}\n")
        return 2
    except UnsupportedDomainError as exc:
        sys.stderr.write(f"qaw: unsupported: {exc}\n")
        return 3
    except (ValueError, TypeError) as exc:
        # parameter validation errors subclass ValueError
        sys.stderr.write(f"qaw: invalid input: {exc}\n")
        return 2
    except (QawError, ArithmeticError) as exc:
        sys.stderr.write(f"qaw: evaluation failed: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
