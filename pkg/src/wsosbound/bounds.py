"""Best lower bounds certified by one fixed dual certificate.

For a certificate x and target t, the set {gamma : x certifies t - gamma*1}
is an interval unbounded to the left; its supremum c_max is approached by
binary search with exact certification of every probe.  A cheaper closed
form c'_max <= c_max comes from the sufficient-cone quadratic

    q(gamma) = (t - gamma*1)^T (x x^T - (nu - 1) H(x)^{-1}) (t - gamma*1),

whose admissible root is certified by construction.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .certificates import DualCertificate, certifies
from .cones import ConeError, evaluate_at_zero, exact_vector


class InvalidStartError(ValueError):
    """The supplied starting bound is not certified by the certificate."""


class NoCertifiableBoundError(ValueError):
    """The closed-form quadratic certifies no bound for this input."""


def _certifies_at(cert: DualCertificate, t: np.ndarray, gamma: Fraction) -> bool:
    return certifies(cert, t - gamma * cert.cone.one())


def best_bound_exact(cert: DualCertificate, t, c_lo, tol: float = 1e-10) -> Fraction:
    """Binary search for the best bound this certificate can witness.

    Maintains a certified lower endpoint and an uncertified upper endpoint;
    the upper endpoint starts at the value of t at a domain point, which
    always dominates c_max.  Returns a certified rational gamma within tol
    of c_max.
    """
    cone = cert.cone
    t = exact_vector(cone.check_vector(t))
    lo = Fraction(c_lo)
    if not _certifies_at(cert, t, lo):
        raise InvalidStartError(f"certificate does not certify the starting bound {c_lo}")
    try:
        hi = Fraction(evaluate_at_zero(cone, t))
    except ConeError:
        # no canonical domain point: grow an uncertified upper endpoint
        width = Fraction(1)
        hi = lo + width
        for _ in range(200):
            if not _certifies_at(cert, t, hi):
                break
            lo = hi
            width *= 2
            hi = lo + width
        else:
            raise NoCertifiableBoundError("no finite upper endpoint found") from None
    if _certifies_at(cert, t, hi):
        # the domain-point value itself is certified, so it equals c_max
        return hi
    tol = Fraction(tol)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _certifies_at(cert, t, mid):
            lo = mid
        else:
            hi = mid
    return lo


def quadratic_coefficients(cert: DualCertificate, t) -> tuple[Fraction, Fraction, Fraction]:
    """Exact coefficients (a0, a1, a2) of q(gamma) = a0 - a1*gamma + a2*gamma^2."""
    cone = cert.cone
    t = exact_vector(cone.check_vector(t))
    one = cone.one()
    ctx = cert.ctx
    nu = cone.nu
    tx = (t * ctx.x).sum()
    ox = (one * ctx.x).sum()
    w = ctx.hessian_solve(np.stack([t, one], axis=1))
    t_ht = (t * w[:, 0]).sum()
    t_ho = (t * w[:, 1]).sum()
    o_ho = (one * w[:, 1]).sum()
    a0 = tx * tx - (nu - 1) * t_ht
    a1 = 2 * (tx * ox - (nu - 1) * t_ho)
    a2 = ox * ox - (nu - 1) * o_ho
    return a0, a1, a2


def best_bound_quadratic(cert: DualCertificate, t) -> float:
    """Closed-form bound from the sufficient-cone quadratic.

    Returns the admissible root of q (the supremum of the branch where
    q(gamma) >= 0 and <t - gamma*1, x> > 0); the result is nudged down by
    ulps if needed so the exact sufficient test passes at the returned
    value.  Raises when the quadratic certifies nothing.
    """
    cone = cert.cone
    t = exact_vector(cone.check_vector(t))
    a0, a1, a2 = quadratic_coefficients(cert, t)
    b = a1 / 2  # q = a2 g^2 - 2 b g + a0
    disc = b * b - a0 * a2
    if a2 == 0:
        if b <= 0:
            raise NoCertifiableBoundError("degenerate quadratic certifies no bound")
        gamma = float(a0) / float(a1)
    else:
        if disc < 0:
            raise NoCertifiableBoundError("quadratic has no real root")
        gamma = (float(b) - math.sqrt(float(disc))) / float(a2)

    tx = (t * cert.ctx.x).sum()
    ox = (cone.one() * cert.ctx.x).sum()

    def admissible(g: Fraction) -> bool:
        return a0 - a1 * g + a2 * g * g >= 0 and tx - g * ox > 0

    # float roundoff may land a hair past the root; step down a few ulps
    for _ in range(10):
        g = Fraction(gamma)
        if admissible(g):
            return gamma
        gamma = math.nextafter(gamma, -math.inf)
    raise NoCertifiableBoundError("no admissible root: the pairing condition fails")
