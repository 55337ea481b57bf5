"""Command-line front end for certified WSOS lower bounds.

Subcommands: `bound` runs the solver and emits a verified bound report,
`verify` re-checks a (bound, certificate) pair in exact arithmetic,
`decompose` turns a verified pair into an explicit rational weighted
sum-of-squares, and `constants` reports the stopping-rule constants for
the problem's cone.  All outputs are deterministic JSON on stdout; inputs
carry rationals as "p/q" strings so parsing is exact by construction.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .certificates import DualCertificate, NotCertifiedError, gram_certificate
from .cones import (
    CHEBYSHEV,
    MONOMIAL,
    ConeError,
    ConeOperator,
    build_interval_cone,
    build_interval_cone_odd,
    load_cone,
)
from .constants import ConstantsError, general_constants, rho
from .barrier import NotInteriorError
from .rational import (
    InvalidDenominatorError,
    RationalError,
    float_to_rational,
    sos_decomposition,
    verify_exact,
)
from .solver import NumericFailureError, SolverConfig, SolverError, solve

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/[1-9]\d*)?$")


class InputError(ValueError):
    """Malformed problem file or command arguments (exit code 2)."""


def parse_rational(text) -> Fraction:
    s = str(text).strip()
    if not _RATIONAL_RE.match(s):
        raise InputError(f"not a rational 'p/q' string: {text!r}")
    return Fraction(s)


@dataclass
class ProblemFile:
    """Parsed problem description: target polynomial, cone, solver overrides."""

    basis: str
    degree: int | None
    coeffs: np.ndarray
    cone: ConeOperator
    solver: dict
    bound: Fraction | None = None
    certificate: np.ndarray | None = None


def _build_cone(data: dict, base_dir: str) -> ConeOperator:
    cone_spec = data.get("cone", "interval-even")
    if isinstance(cone_spec, dict):
        path = cone_spec.get("custom-file")
        if path is None:
            raise InputError('custom cones need {"custom-file": <path>}')
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return load_cone(path)
    basis = data.get("basis", "monomial")
    if basis not in (MONOMIAL, CHEBYSHEV):
        raise InputError(f"unknown basis {basis!r}")
    try:
        degree = int(data["degree"])
    except KeyError:
        raise InputError("problem file is missing 'degree'") from None
    if cone_spec == "interval-even":
        return build_interval_cone(degree, basis)
    if cone_spec == "interval-odd":
        return build_interval_cone_odd(degree, basis)
    raise InputError(f"unknown cone {cone_spec!r}")


def load_problem(path: str) -> ProblemFile:
    try:
        with open(path) as fp:
            data = json.load(fp)
    except OSError as e:
        raise InputError(f"cannot read problem file: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"problem file is not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise InputError("problem file must contain a JSON object")
    try:
        cone = _build_cone(data, os.path.dirname(os.path.abspath(path)))
    except ConeError as e:
        raise InputError(str(e)) from None
    raw_coeffs = data.get("coeffs")
    if not isinstance(raw_coeffs, list):
        raise InputError("problem file needs a 'coeffs' list of rational strings")
    coeffs = np.array([parse_rational(v) for v in raw_coeffs], dtype=object)
    if coeffs.shape != (cone.U,):
        raise InputError(f"expected {cone.U} coefficients for this cone, got {len(coeffs)}")
    solver = data.get("solver", {})
    if not isinstance(solver, dict):
        raise InputError("'solver' must be an object of overrides")
    bound = parse_rational(data["bound"]) if "bound" in data else None
    certificate = None
    if "certificate" in data:
        certificate = np.array([parse_rational(v) for v in data["certificate"]], dtype=object)
    return ProblemFile(
        basis=data.get("basis", "custom" if isinstance(data.get("cone"), dict) else "monomial"),
        degree=data.get("degree"),
        coeffs=coeffs,
        cone=cone,
        solver=solver,
        bound=bound,
        certificate=certificate,
    )


def _solver_config(problem: ProblemFile, args) -> SolverConfig:
    opts = dict(problem.solver)
    if args.r is not None:
        opts["r"] = args.r
    if args.epsilon is not None:
        opts["epsilon"] = args.epsilon
    if args.C is not None:
        opts["C"] = args.C
    kwargs = {}
    if "r" in opts:
        kwargs["r"] = Fraction(str(opts["r"]))
    if "epsilon" in opts:
        kwargs["epsilon"] = float(opts["epsilon"])
    if "C" in opts:
        c = opts["C"]
        if c in (None, "none", "null"):
            kwargs["C"] = None
        elif c == "auto":
            kwargs["C"] = "auto"
        else:
            kwargs["C"] = Fraction(str(c))
    if "max_iters" in opts:
        kwargs["max_iters"] = int(opts["max_iters"])
    try:
        return SolverConfig(**kwargs)
    except (SolverError, ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad solver configuration: {e}") from None


def _frac_dict(f: Fraction, decimal: bool = False) -> dict:
    out = {"num": f.numerator, "den": f.denominator}
    if decimal:
        out["decimal"] = float(f)
    return out


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _render_trace_figure(records, path: str) -> str:
    """Bound and step-size curves rendered next to the JSONL trace."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_path = os.path.splitext(path)[0] + ".png"
    iters = [rec.iter for rec in records]
    cs = [rec.c for rec in records]
    deltas = [rec.delta_c for rec in records[1:]]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax1.plot(iters, cs, marker=".", lw=1.2)
    ax1.set_ylabel("lower bound c")
    ax1.grid(alpha=0.3)
    if deltas:
        ax2.semilogy(iters[1:], deltas, marker=".", lw=1.2)
    ax2.set_ylabel("bound increase")
    ax2.set_xlabel("iteration")
    ax2.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=150)
    plt.close(fig)
    return fig_path


def cmd_bound(args) -> int:
    problem = load_problem(args.problem)
    config = _solver_config(problem, args)
    try:
        c, cert, trace = solve(problem.coeffs, problem.cone, config)
    except (NumericFailureError, NotInteriorError, ConeError) as e:
        _emit({"error": str(e), "status": "failed"})
        return 3
    trace_path = None
    figure_path = None
    if args.trace:
        trace.to_jsonl(args.trace)
        trace_path = args.trace
        figure_path = _render_trace_figure(trace.records, args.trace)
    iterates_verified = None
    if args.mode == "exact":
        ok = 0
        for rec in trace.records:
            verdict = verify_exact(
                problem.cone, problem.coeffs, Fraction(rec.c), float_to_rational(rec.x)
            )
            ok += bool(verdict.certified)
        iterates_verified = {"checked": len(trace.records), "certified": ok}
    c_exact = Fraction(c)
    report = {
        "bound": _frac_dict(c_exact, decimal=True),
        "certificate": [_frac_dict(Fraction(v)) for v in cert.x],
        "gap_guarantee": trace.gap_guaranteed,
        "gap_bound": trace.gap_bound,
        "iterations": max(len(trace.records) - 1, 0),
        "status": trace.status,
        "trace_path": trace_path,
        "figure_path": figure_path,
        "verified": True,
    }
    if iterates_verified is not None:
        report["iterates_verified"] = iterates_verified
    _emit(report)
    if trace.status in ("stalled", "numeric-failure", "max-iterations"):
        return 3
    if iterates_verified and iterates_verified["certified"] < iterates_verified["checked"]:
        return 3
    return 0


def _load_pair(problem: ProblemFile, args) -> tuple[Fraction, np.ndarray]:
    bound, certificate = problem.bound, problem.certificate
    if getattr(args, "report", None):
        try:
            with open(args.report) as fp:
                rep = json.load(fp)
            bound = Fraction(int(rep["bound"]["num"]), int(rep["bound"]["den"]))
            certificate = np.array(
                [Fraction(int(e["num"]), int(e["den"])) for e in rep["certificate"]],
                dtype=object,
            )
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise InputError(f"cannot read report file: {e}") from None
    if bound is None or certificate is None:
        raise InputError(
            "need a bound and certificate: add 'bound' and 'certificate' to the "
            "problem file or pass --report"
        )
    if certificate.shape != (problem.cone.U,):
        raise InputError(
            f"certificate length {len(certificate)} does not match the cone ({problem.cone.U})"
        )
    return bound, certificate


def cmd_verify(args) -> int:
    problem = load_problem(args.problem)
    bound, certificate = _load_pair(problem, args)
    verdict = verify_exact(problem.cone, problem.coeffs, bound, certificate)
    if verdict.certified:
        _emit({"verdict": "certified", "bound": _frac_dict(bound, decimal=True)})
        return 0
    _emit(
        {
            "verdict": "rejected",
            "reason": verdict.reason,
            "bound": _frac_dict(bound, decimal=True),
        }
    )
    return 1


def cmd_decompose(args) -> int:
    problem = load_problem(args.problem)
    bound, certificate = _load_pair(problem, args)
    verdict = verify_exact(problem.cone, problem.coeffs, bound, certificate)
    if not verdict.certified:
        _emit({"verdict": "rejected", "reason": verdict.reason})
        return 1
    try:
        cert = DualCertificate(problem.cone, certificate)
        shifted = problem.coeffs - bound * problem.cone.one()
        gram = gram_certificate(cert, shifted)
        dec = sos_decomposition(problem.cone, gram, target=problem.coeffs, bound=bound)
    except (NotCertifiedError, NotInteriorError, RationalError) as e:
        _emit({"verdict": "rejected", "reason": str(e)})
        return 1
    _emit(dec.to_json_dict())
    return 0


def cmd_constants(args) -> int:
    problem = load_problem(args.problem)
    r = Fraction(str(args.r)) if args.r is not None else Fraction(1, 4)
    try:
        rho_r = rho(r)
    except ConstantsError as e:
        raise InputError(str(e)) from None
    cc = general_constants(problem.cone, r)
    payload = {
        "r": _frac_dict(r),
        "rho": _frac_dict(rho_r, decimal=True),
        "nu": problem.cone.nu,
        "gap_guarantee_available": cc is not None,
    }
    if cc is not None:
        payload.update(
            {
                "k1": _frac_dict(cc.k1, decimal=True),
                "k2": _frac_dict(cc.k2, decimal=True),
                "k3": _frac_dict(cc.k3, decimal=True),
                "C_lower": _frac_dict(cc.C_lower, decimal=True),
                "provenance": cc.provenance,
            }
        )
    _emit(payload)
    return 0


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsosbound",
        description="Certified rational lower bounds for polynomials on [-1, 1]",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("bound", cmd_bound),
        ("verify", cmd_verify),
        ("decompose", cmd_decompose),
        ("constants", cmd_constants),
    ):
        p = sub.add_parser(name)
        p.add_argument("problem", help="path to the problem JSON file")
        p.add_argument("--r", default=None, help="solver radius, rational like 1/4")
        p.add_argument("--epsilon", type=float, default=None, help="target gap")
        p.add_argument("--C", default=None, help="stopping constant: number, 'auto', or 'none'")
        p.add_argument("--trace", default=None, help="write a JSONL iteration trace here")
        p.add_argument(
            "--mode",
            choices=("float", "exact"),
            default="float",
            help="exact additionally re-verifies every recorded iterate",
        )
        if name in ("verify", "decompose"):
            p.add_argument("--report", default=None, help="bound report JSON to check")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = _make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except (InvalidDenominatorError, SolverError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
