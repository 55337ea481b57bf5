"""Dual certificates of weighted-SOS membership and their exact checks.

An interior dual vector x certifies a coefficient vector s when
Lambda(H(x)^{-1} s) is positive semidefinite; the associated Gram matrix

    S(x, s) = Lambda(x)^{-1} Lambda(H(x)^{-1} s) Lambda(x)^{-1}

always reconstructs s through the adjoint and is block PSD exactly when the
certificate is valid.  All predicates here are decided in exact rational
arithmetic; the one numeric routine is the damped Newton search for the
gradient certificate, whose output is meant to be lifted and re-checked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .barrier import BarrierContext, NotInteriorError
from .cones import BlockSymMatrix, ConeOperator, exact_vector, float_vector, is_exact
from .rational import ldlt_rational


class NotCertifiedError(ValueError):
    """The exact positive semidefiniteness check failed."""


class CertificateSearchError(RuntimeError):
    """Newton iteration for a gradient certificate failed to converge."""


@dataclass
class DualCertificate:
    """Interior dual vector carried in rational form.

    Construction proves Lambda(x) > 0 exactly; the exact barrier context is
    kept for reuse by the certification predicates.
    """

    cone: ConeOperator
    x: np.ndarray
    ctx: BarrierContext = field(init=False, repr=False)

    def __post_init__(self):
        self.x = exact_vector(self.cone.check_vector(self.x))
        self.ctx = BarrierContext(self.cone, self.x)  # raises if not interior


@dataclass
class GramCertificate:
    """Block PSD Gram matrix witnessing that `target` is weighted SOS."""

    S: BlockSymMatrix
    target: np.ndarray


def _psd_exact(blocks) -> bool:
    # zero pivots are allowed: the dual cone is closed
    return all(ldlt_rational(B).psd for B in blocks)


def certifies(cert: DualCertificate, s) -> bool:
    """Exact test of Definition: Lambda(H(x)^{-1} s) positive semidefinite."""
    s = exact_vector(cert.cone.check_vector(s))
    w = cert.ctx.hessian_solve(s)
    return _psd_exact(cert.cone.apply(w))


def gram_matrix(cert: DualCertificate, s) -> BlockSymMatrix:
    """S(x, s) = Lambda(x)^{-1} Lambda(H(x)^{-1} s) Lambda(x)^{-1}, exact."""
    s = exact_vector(cert.cone.check_vector(s))
    w = cert.ctx.hessian_solve(s)
    lam_w = cert.cone.apply(w)
    out = []
    for X, B in zip(cert.ctx.lambda_inverse, lam_w):
        out.append(X.dot(B).dot(X))
    return BlockSymMatrix(out)


def gram_certificate(cert: DualCertificate, s) -> GramCertificate:
    """Gram matrix of s at the certificate x, verified PSD exactly.

    The reconstruction identity Lambda^*(S) = s holds for every interior x;
    positive semidefiniteness of S is equivalent to x certifying s.
    """
    s = exact_vector(cert.cone.check_vector(s))
    S = gram_matrix(cert, s)
    recon = cert.cone.adjoint(S)
    if any(a != b for a, b in zip(recon, s)):
        raise NotCertifiedError("adjoint reconstruction failed; inputs are inconsistent")
    if not _psd_exact(S):
        raise NotCertifiedError("Gram matrix is not positive semidefinite; x does not certify s")
    return GramCertificate(S=S, target=s)


def sufficient_cone_check(x, t, cone: ConeOperator | None = None) -> bool:
    """Cheap sufficient membership test, no PSD factorization required.

    Returns true iff t^T (x x^T - (nu - 1) H(x)^{-1}) t >= 0 and <t, x> > 0;
    a true result implies x certifies t.  The pairing condition is needed
    for soundness: the quadratic form alone is also nonnegative for t in
    the negated cone.  Accepts a BarrierContext to reuse cached factors.
    """
    if isinstance(x, BarrierContext):
        ctx = x
    else:
        if cone is None:
            raise TypeError("pass a cone when x is a bare vector")
        ctx = BarrierContext(cone, x)
    nu = ctx.cone.nu
    if ctx.exact:
        t = exact_vector(ctx.cone.check_vector(t))
        pairing = (t * ctx.x).sum()
        form = pairing * pairing - (nu - 1) * ctx.dual_local_norm_sq(t)
        return form >= 0 and pairing > 0
    t = float_vector(ctx.cone.check_vector(t))
    pairing = float(t @ ctx.x)
    form = pairing * pairing - (nu - 1) * ctx.dual_local_norm_sq(t)
    return form >= 0.0 and pairing > 0.0


def gradient_certificate_of(
    cone: ConeOperator,
    s,
    x_start=None,
    tol: float = 1e-10,
    max_iters: int = 200,
) -> np.ndarray:
    """Solve -g(x) = s by damped Newton iteration in float arithmetic.

    The undamped step is x -> 2x - H(x)^{-1} s; when the full step leaves
    the cone the step length is halved (at most 60 times).  Convergence is
    declared when the dual local norm of -g(x) - s drops below tol.  The
    result is numeric; lift and re-verify to make it a DualCertificate.
    """
    s = float_vector(cone.check_vector(s))
    if x_start is None:
        x = cone.interior_point()
    else:
        x = float_vector(cone.check_vector(x_start))
    ctx = BarrierContext(cone, x)
    for _ in range(max_iters):
        resid = -ctx.gradient - s
        # the unclamped form goes negative when roundoff breaks the metric;
        # that is divergence, not convergence
        resid_sq = ctx.dual_local_norm_sq(resid)
        if 0.0 <= resid_sq <= tol * tol:
            return ctx.x
        step = ctx.x - ctx.hessian_solve(s)  # full Newton increment
        alpha = 1.0
        for _ in range(60):
            try:
                nxt = BarrierContext(cone, ctx.x + alpha * step)
                break
            except NotInteriorError:
                alpha *= 0.5
        else:
            raise CertificateSearchError(
                "step-halving exhausted; the target is likely outside the open cone"
            )
        ctx = nxt
    raise CertificateSearchError(
        f"no convergence after {max_iters} iterations; "
        "the target is likely on or outside the cone boundary"
    )


def corollary_guard(x, y, cone: ConeOperator | None = None) -> bool:
    """True iff ||x - y||_x < 1/2, the certification-transfer radius.

    Within this radius, a gradient certificate at y certifying t implies x
    certifies t as well.  Decided exactly when both points are exact.
    """
    if isinstance(x, BarrierContext):
        ctx = x
    else:
        if cone is None:
            raise TypeError("pass a cone when x is a bare vector")
        ctx = BarrierContext(cone, x)
    y = ctx.cone.check_vector(y)
    if ctx.exact and is_exact(np.asarray(y)):
        diff = ctx.x - exact_vector(y)
        return ctx.local_norm_sq(diff) < Fraction(1, 4)
    diff = float_vector(ctx.x) - float_vector(y)
    return ctx.local_norm_sq(diff) < 0.25
