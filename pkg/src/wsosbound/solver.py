"""Iterative computation of the best WSOS lower bound with certificates.

Each pass applies one full Newton step toward the gradient certificate of
t - c*1 and then raises c as far as the proximity guarantee allows:

    x := 2x - H(x)^{-1}(t - c*1)
    c := the largest root of ||x - H(x)^{-1}(t - gamma*1)||_x = r/(r+1).

The bound increases strictly every iteration and, remarkably, the iterate x
remains a valid dual certificate of t - c*1 throughout, so even an early
stop yields a certified bound.  The loop runs in float64 until it hits the
precision noise floor, then switches to exact rational rounds if the
stopping threshold still lies below; the final iterate is lifted to exact
rationals and re-verified before being returned.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .barrier import BarrierContext, NotInteriorError
from .certificates import DualCertificate, gradient_certificate_of
from .cones import CHEBYSHEV, INTERVAL_EVEN, ConeOperator, float_vector, is_exact
from .constants import _sqrt_lower, general_constants, rho
from .rational import float_to_rational, verify_exact

# Exact refinement keeps denominators flat by snapping iterates to this grid.
_POLISH_GRID = 1 << 128
_POLISH_MAX_U = 40
_POLISH_MAX_ROUNDS = 400


class SolverError(ValueError):
    """Invalid solver configuration or unusable problem data."""


class NumericFailureError(RuntimeError):
    """Floating point breakdown signalled by a solver step."""


@dataclass
class SolverConfig:
    """Parameters of the bound iteration.

    C controls the stopping rule: a positive scalar is used as given,
    "auto" derives a safe value when the cone supports it, and None
    selects the absolute fallback threshold epsilon * 1e-2 (the bound is
    still certified, but no optimality gap is guaranteed).
    """

    r: Fraction = Fraction(1, 4)
    epsilon: float = 1e-7
    C: object = "auto"
    max_iters: int = 10000

    def __post_init__(self):
        self.r = Fraction(self.r)
        if not 0 < self.r <= Fraction(1, 4):
            raise SolverError(f"radius must lie in (0, 1/4], got {self.r}")
        if not self.epsilon > 0:
            raise SolverError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iters < 1:
            raise SolverError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.C is not None and self.C != "auto":
            if not float(self.C) > 0:
                raise SolverError(f"C must be positive, got {self.C}")


@dataclass
class TraceRecord:
    iter: int
    c: float
    delta_c: float
    residual_norm: float
    wall_time: float
    x: np.ndarray = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        return {
            "iter": self.iter,
            "c": self.c,
            "delta_c": self.delta_c,
            "residual_norm": self.residual_norm,
        }


@dataclass
class SolverTrace:
    """Per-iteration history plus the final status of a solve.

    status is one of "optimal" (stopped with a guaranteed gap), "certified"
    (stopped on the absolute fallback), "stalled" (the bound increase hit
    the floating point noise floor before the stopping threshold),
    "max-iterations", or "numeric-failure"; in every case the bound
    returned alongside the trace is exactly certified.  When the stopping
    constant is known, gap_bound = delta_c / (rho_r C) upper-bounds the
    distance to the optimal bound regardless of how the run ended.
    """

    records: list[TraceRecord] = field(default_factory=list)
    status: str = "running"
    gap_guaranteed: bool = False
    C_used: Fraction | None = None
    gap_bound: float | None = None
    message: str = ""

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fp:
            for rec in self.records:
                fp.write(json.dumps(rec.to_json_dict()) + "\n")


def certificate_of_one(cone: ConeOperator) -> np.ndarray:
    """Float gradient certificate x1 of the constant-one polynomial.

    Closed form (2d+1) e_0 for the Chebyshev even cone; Newton iteration
    from the cone's interior point otherwise.
    """
    if cone.basis_tag == CHEBYSHEV and cone.family == INTERVAL_EVEN:
        x1 = np.zeros(cone.U, dtype=np.float64)
        x1[0] = 2 * cone.degree + 1
        return x1
    return gradient_certificate_of(cone, cone.one(exact=False), tol=1e-12)


def initialize(t, cone: ConeOperator, r, x1=None) -> tuple[float, np.ndarray]:
    """Starting bound and certificate: c0 = -((1+r)/r) ||t||_{x1}*, x = -x1/c0.

    The scaled point certifies t - c0*1 with slack, absorbing the float
    error in x1.  A zero t short-circuits to (0, x1).
    """
    t = float_vector(cone.check_vector(t))
    r = Fraction(r)
    if x1 is None:
        x1 = certificate_of_one(cone)
    if not np.any(t):
        return 0.0, x1.copy()
    ctx = BarrierContext(cone, x1)
    c0 = -float((1 + r) / r) * ctx.dual_local_norm(t)
    return c0, -x1 / c0


def newton_step(cone: ConeOperator, x, t, c) -> np.ndarray:
    """One full step x -> 2x - H(x)^{-1}(t - c*1) toward the gradient certificate."""
    ctx = x if isinstance(x, BarrierContext) else BarrierContext(cone, float_vector(x))
    one = cone.one(exact=False)
    t = float_vector(cone.check_vector(t))
    x_new = 2.0 * ctx.x - ctx.hessian_solve(t - float(c) * one)
    try:
        BarrierContext(cone, x_new)
    except NotInteriorError:
        raise NumericFailureError("Newton step left the cone") from None
    return x_new


def _update_data(ctx: BarrierContext, t: np.ndarray, one: np.ndarray):
    """Apex form of the update quadratic ||u + gamma v||_x^2 at the context.

    Returns (wt, w1, gamma_star, m, a) with gamma_star the minimizer, m the
    minimum value, and a = ||1||_x*^2 the leading coefficient, so that
    ||x - H^{-1}(t - gamma 1)||_x^2 = m + a (gamma - gamma_star)^2.  The
    apex form sidesteps the catastrophic cancellation the raw coefficients
    suffer once the iterates grow with 1/(c* - c).
    """
    w = ctx.hessian_solve(np.stack([t, one], axis=1))
    wt, w1 = w[:, 0], w[:, 1]
    a = float(one @ w1)
    if a <= 0:
        raise NumericFailureError("the squared dual norm of 1 lost positivity")
    b = float(ctx.x @ one) - float(t @ w1)  # b = u^T H v
    gamma_star = -b / a
    p = ctx.x - wt + gamma_star * w1
    m = float(p @ (ctx.hessian @ p))
    return wt, w1, gamma_star, m, a


def bound_update(cone: ConeOperator, x, t, r) -> float:
    """Largest c with ||x - H(x)^{-1}(t - c*1)||_x = r/(r+1).

    With u = x - H(x)^{-1} t and v = H(x)^{-1} 1 this is the larger root of
    ||u + c v||_x^2 = (r/(r+1))^2, a quadratic whose leading coefficient is
    the positive quantity ||1||_x*^2.
    """
    ctx = x if isinstance(x, BarrierContext) else BarrierContext(cone, float_vector(x))
    t = float_vector(cone.check_vector(t))
    one = cone.one(exact=False)
    _, _, gamma_star, m, a = _update_data(ctx, t, one)
    target = float(Fraction(r) / (1 + Fraction(r))) ** 2
    if m > target:
        raise NumericFailureError("bound quadratic has no real root")
    return gamma_star + math.sqrt((target - m) / a)


def _snap_to_grid(v: np.ndarray) -> np.ndarray:
    return np.array([Fraction(round(f * _POLISH_GRID), _POLISH_GRID) for f in v], dtype=object)


def _float_down(c: Fraction) -> float:
    """Nearest float not exceeding the exact value."""
    f = float(c)
    return math.nextafter(f, -math.inf) if Fraction(f) > c else f


def _update_data_exact(ctx: BarrierContext, t, one):
    """Exact counterpart of the apex-form update data.

    With exact solves the identities H wt = t, H w1 = 1 and H x = -g hold
    verbatim, so the quadratic form m = p^T H p needs no Hessian product:
    H p = -g - t + gamma* 1.
    """
    w = ctx.hessian_solve(np.stack([t, one], axis=1))
    wt, w1 = w[:, 0], w[:, 1]
    a = one @ w1
    b = (ctx.x @ one) - (t @ w1)
    gamma_star = -b / a
    p = ctx.x - wt + gamma_star * w1
    m = p @ (-ctx.gradient - t + gamma_star * one)
    return wt, w1, gamma_star, m, a


def _polish_exact(cone: ConeOperator, c0: float, t, r: Fraction, threshold: Fraction,
                  trace: SolverTrace, start: float) -> float | None:
    """Resume a stalled run in exact rational arithmetic.

    Near the optimum the Hessian condition number exceeds what float64 can
    resolve, while a tight stopping threshold may sit below the resulting
    noise floor.  Exact arithmetic is immune to conditioning; snapping each
    iterate to a fixed dyadic grid (far finer than the trust-ball margins)
    keeps every round at the same cost.  Returns the improved bound, or
    None when no exact round made progress.
    """
    one = cone.one(exact=True)
    target = (Fraction(r) / (1 + Fraction(r))) ** 2
    c = Fraction(c0)
    try:
        ctx = BarrierContext(cone, _snap_to_grid(float_to_rational(trace.records[-1].x)))
    except NotInteriorError:
        return None
    wt, w1, gamma_star, m, a = _update_data_exact(ctx, t, one)
    k = trace.records[-1].iter
    best = None
    for _ in range(_POLISH_MAX_ROUNDS):
        k += 1
        step = ctx.x - (wt - c * w1)
        alpha = Fraction(1)
        for _ in range(30):
            try:
                nctx = BarrierContext(cone, _snap_to_grid(ctx.x + alpha * step))
                break
            except NotInteriorError:
                alpha /= 2
        else:
            break
        ctx = nctx
        wt, w1, gamma_star, m, a = _update_data_exact(ctx, t, one)
        if a <= 0 or m >= target:
            break
        residual = math.sqrt(float(m + a * (c - gamma_star) ** 2))
        q = (target - m) / a
        c_new = gamma_star + _sqrt_lower(q.numerator, q.denominator, bits=192)
        c_new = Fraction(math.floor(c_new * _POLISH_GRID), _POLISH_GRID)
        delta = c_new - c
        if delta <= 0:
            break
        c = c_new
        best = c
        trace.records.append(TraceRecord(
            k, _float_down(c), float(delta), residual,
            time.perf_counter() - start,
            np.array([float(v) for v in ctx.x], dtype=np.float64),
        ))
        if delta <= threshold:
            trace.status = "optimal" if trace.gap_guaranteed else "certified"
            trace.message = "stopping criterion met after exact refinement"
            return _float_down(c)
    if best is not None:
        trace.message = "exact refinement improved the bound but hit its round limit"
        return _float_down(best)
    return None


def _resolve_C(cone: ConeOperator, config: SolverConfig) -> Fraction | None:
    if config.C is None:
        return None
    if config.C == "auto":
        cc = general_constants(cone, config.r)
        return None if cc is None else cc.C_lower
    return Fraction(config.C)


def solve(t, cone: ConeOperator, config: SolverConfig | None = None):
    """Run the bound iteration; returns (c, certificate, trace).

    The returned scalar is a certified lower bound: its exact dyadic lift
    together with the lifted final iterate passes full rational
    verification before this function returns.  With a usable constant C
    the stop test Delta c <= rho_r * C * epsilon also guarantees
    c* - c <= epsilon; without one the fallback threshold epsilon * 1e-2
    applies and the trace says so.
    """
    config = config or SolverConfig()
    t_in = cone.check_vector(t)
    t_exact = (
        np.array([Fraction(v) for v in t_in], dtype=object)
        if is_exact(t_in)
        else float_to_rational(t_in)
    )
    t = float_vector(t_in)
    one = cone.one(exact=False)
    r = config.r
    rho_r = rho(r)
    C_val = _resolve_C(cone, config)
    if C_val is not None:
        threshold = float(rho_r * C_val) * config.epsilon
    else:
        threshold = config.epsilon * 1e-2
    trace = SolverTrace(gap_guaranteed=C_val is not None, C_used=C_val)

    start = time.perf_counter()
    x1 = certificate_of_one(cone)
    c, x = initialize(t, cone, r, x1=x1)
    if not np.any(t):
        trace.records.append(TraceRecord(0, 0.0, 0.0, 0.0, time.perf_counter() - start, x.copy()))
        trace.status = "optimal"
        trace.gap_bound = 0.0
        return _finish(0.0, x, t_exact, cone, trace)

    ctx = BarrierContext(cone, x)
    wt, w1, gamma_star, m, a = _update_data(ctx, t, one)
    resid0 = math.sqrt(max(m + a * (c - gamma_star) ** 2, 0.0))
    trace.records.append(TraceRecord(0, c, 0.0, resid0, time.perf_counter() - start, x.copy()))

    target = float(r / (1 + r)) ** 2
    for k in range(1, config.max_iters + 1):
        # Newton step at the current point, with step-halving on breakdown
        step = ctx.x - (wt - c * w1)
        alpha = 1.0
        for _ in range(30):
            try:
                nctx = BarrierContext(cone, ctx.x + alpha * step)
                break
            except NotInteriorError:
                alpha *= 0.5
        else:
            trace.status = "numeric-failure"
            trace.message = "Newton step-halving exhausted"
            break
        ctx = nctx
        try:
            wt, w1, gamma_star, m, a = _update_data(ctx, t, one)
        except NumericFailureError as e:
            trace.status = "numeric-failure"
            trace.message = str(e)
            break
        residual = math.sqrt(max(m + a * (c - gamma_star) ** 2, 0.0))
        if m > target:
            # From a certified iterate the minimal residual provably stays
            # inside the ball, so losing the root is a noise-floor symptom.
            trace.status = "stalled"
            trace.message = "bound quadratic lost its real root at the noise floor"
            break
        c_new = gamma_star + math.sqrt((target - m) / a)
        delta = c_new - c
        if not delta > 0:
            # The Hessian condition number grows like 1/gap^2 while the
            # per-iteration increment shrinks like the gap, so every run
            # eventually hits a noise floor in double precision.  The bound
            # already attained stays fully certified.
            trace.status = "stalled"
            trace.message = "bound increase reached the floating point noise floor"
            break
        c = c_new
        trace.records.append(
            TraceRecord(k, c, delta, residual, time.perf_counter() - start, ctx.x.copy())
        )
        if delta <= threshold:
            trace.status = "optimal" if C_val is not None else "certified"
            break
    else:
        trace.status = "max-iterations"

    if trace.status == "stalled" and cone.U <= _POLISH_MAX_U:
        threshold_exact = (
            rho_r * C_val * Fraction(config.epsilon)
            if C_val is not None
            else Fraction(config.epsilon) / 100
        )
        polished = _polish_exact(cone, c, t_exact, r, threshold_exact, trace, start)
        if polished is not None:
            c = polished

    # Whatever stopped the loop, the last positive increment bounds the
    # remaining gap: c* - c <= delta_c / (rho_r C).
    last = trace.records[-1]
    if C_val is not None and last.delta_c > 0:
        trace.gap_bound = last.delta_c / float(rho_r * C_val)

    return _finish(c, trace.records[-1].x, t_exact, cone, trace)


def _finish(c: float, x: np.ndarray, t_exact, cone: ConeOperator, trace: SolverTrace):
    """Lift the result to exact rationals and verify; fall back along the trace."""
    for rec in [None] + list(reversed(trace.records[:-1])):
        if rec is not None:
            c, x = rec.c, rec.x
            trace.gap_bound = None
        verdict = verify_exact(cone, t_exact, Fraction(c), float_to_rational(x))
        if verdict.certified:
            cert = DualCertificate(cone, float_to_rational(x))
            return c, cert, trace
        if trace.status != "numeric-failure":
            trace.status = "numeric-failure"
            trace.message = "final iterate failed exact verification; backtracking"
    raise NumericFailureError("no iterate could be verified exactly")
