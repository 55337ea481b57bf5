"""Convergence constants for the bound-improvement stopping rule.

The solver stops once the per-iteration bound increase falls below
rho_r * C * epsilon, where C = k1 * k2 / (k3 * nu * ||1||).  Every stored
constant is one-sided: k1, k2, and C are rounded down, k3 up, so the stop
test never overstates the optimality gap.  For the Chebyshev-basis even
interval cone all constants have closed forms; general cones get k2 from a
singular value computation and k3 from a Gershgorin row-sum bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cones import CHEBYSHEV, INTERVAL_EVEN, INTERVAL_ODD, ConeOperator

# relative slack applied to numerically computed lower bounds
_DOWNWARD_MARGIN = Fraction(1) - Fraction(1, 10**8)


class ConstantsError(ValueError):
    """Parameter outside the validated range of a constants formula."""


def rho(r) -> Fraction:
    """Guaranteed fraction of the remaining gap gained per iteration.

    rho_r = r (1 - 3r - 2r^2) / (1 - r - 2r^2), positive on (0, 1/4].
    """
    r = Fraction(r)
    if not 0 < r <= Fraction(1, 4):
        raise ConstantsError(f"radius must lie in (0, 1/4], got {r}")
    return r * (1 - 3 * r - 2 * r * r) / (1 - r - 2 * r * r)


@dataclass
class ConvergenceConstants:
    """One-sided bounds assembling the stopping constant C.

    C_lower = k1 * k2 / (k3 * nu * one_norm) with k1, k2 lower bounds and
    k3 an upper bound, so C_lower never exceeds the true constant.
    """

    rho_r: Fraction
    k1: Fraction
    k2: Fraction
    k3: Fraction
    nu: int
    one_norm: Fraction
    C_lower: Fraction
    provenance: dict[str, str] = field(default_factory=dict)


def _sqrt_lower(value_num: int, value_den: int, bits: int = 64) -> Fraction:
    # rational q with q^2 <= num/den, within 2^-bits relatively
    scale = 1 << bits
    n = math.isqrt(value_num * value_den * scale * scale)
    return Fraction(n, value_den * scale)


def _golden_gap_sqrt_lower(bits: int = 64) -> Fraction:
    """Rational lower bound on sqrt(3 - sqrt(5)), accurate to ~2^-bits."""
    scale = 1 << bits
    sqrt5_upper = math.isqrt(5 * scale * scale) + 1
    n = math.isqrt(scale * (3 * scale - sqrt5_upper))
    return Fraction(n, scale)


def univariate_flattening_gram(d: int) -> np.ndarray:
    """The (2d+1)x(2d+1) rational matrix whose least eigenvalue bounds k2^2.

    For the Chebyshev even interval cone, tr(Lambda_1(w)^2) >= w^T M w with
    M_ii = 5/4 for i < d, M_dd = 2, M_ii = 1/4 for i > d, and M_ij = 1/4 on
    the anti-diagonal i + j = 2d; its least eigenvalue is (3 - sqrt(5))/4
    independent of d.
    """
    n = 2 * d + 1
    M = np.zeros((n, n), dtype=object)
    M[:] = Fraction(0)
    for i in range(n):
        if i < d:
            M[i, i] = Fraction(5, 4)
        elif i == d:
            M[i, i] = Fraction(2)
        else:
            M[i, i] = Fraction(1, 4)
    for i in range(n):
        j = 2 * d - i
        if 0 <= j < n and j != i:
            M[i, j] = M[i, j] + Fraction(1, 4)
    return M


def univariate_C(d: int, r=Fraction(1, 4)) -> ConvergenceConstants:
    """Closed-form constants for the Chebyshev even cone on [-1, 1].

    k1 = 1, k2 = sqrt(3 - sqrt(5))/2 (a rational lower bound thereof),
    k3 = d + 1, nu = 2d + 1, ||1|| = 1, so
    C >= sqrt(3 - sqrt(5)) / (2 (d + 1)(2d + 1)).
    """
    if d < 1:
        raise ConstantsError(f"degree parameter must be at least 1, got {d}")
    k1 = Fraction(1)
    k2 = _golden_gap_sqrt_lower() / 2
    k3 = Fraction(d + 1)
    nu = 2 * d + 1
    one_norm = Fraction(1)
    C_lower = k1 * k2 / (k3 * nu * one_norm)
    return ConvergenceConstants(
        rho_r=rho(r),
        k1=k1,
        k2=k2,
        k3=k3,
        nu=nu,
        one_norm=one_norm,
        C_lower=C_lower,
        provenance={
            "k1": "closed-form",
            "k2": "closed-form",
            "k3": "closed-form",
            "C_lower": "closed-form",
        },
    )


def k2_general(op: ConeOperator) -> float:
    """Numeric lower bound on the least singular value of the flattening.

    The flattened operator maps coefficient vectors to stacked block
    entries under the trace inner product; the result carries a downward
    relative margin of 1e-8 to absorb SVD roundoff.
    """
    J = op.flattened()
    if J.shape[0] < op.U:
        # a wide flattening cannot have U nonzero singular values
        raise ConstantsError("the cone operator is not injective")
    svals = np.linalg.svd(J, compute_uv=False)
    sigma = svals[-1]
    if sigma <= svals[0] * 1e-13:
        raise ConstantsError("the cone operator is not injective")
    return float(sigma) * float(_DOWNWARD_MARGIN)


def k3_gershgorin(op: ConeOperator) -> Fraction:
    """Row-sum upper bound on the operator norm of Lambda over the unit box.

    max over blocks i and rows j of sum_k sum_u |T_i[j, k, u]|; by the
    Gershgorin circle theorem this dominates lambda_max(Lambda(y)) for
    every y with ||y||_inf <= 1.  Exact rational arithmetic.
    """
    best = Fraction(0)
    for blk in op.blocks:
        row_sums = [Fraction(0)] * blk.dim
        for j, v in zip(blk.rows, blk.vals):
            row_sums[j] += abs(v)
        if blk.dim:
            best = max(best, max(row_sums))
    return best


def euclidean_norm_lower(v) -> Fraction:
    """Rational lower bound on the euclidean norm of an exact vector."""
    sq = Fraction(0)
    for val in v:
        f = Fraction(val)
        sq += f * f
    if sq == 0:
        return Fraction(0)
    return _sqrt_lower(sq.numerator, sq.denominator)


def general_constants(op: ConeOperator, r=Fraction(1, 4), k1=None) -> ConvergenceConstants | None:
    """Assemble stopping constants for a built-in interval cone.

    For the built-in cones the dual cone is the moment cone of measures on
    [-1, 1]; every basis polynomial is bounded by 1 there, so any dual
    vector satisfies ||v||_inf = v_0 = <1, v>, giving k1 = 1.  Custom cones
    have no such bound and return None (caller falls back to an absolute
    stopping threshold, or supplies k1).
    """
    if k1 is None:
        if op.family not in (INTERVAL_EVEN, INTERVAL_ODD):
            return None
        k1 = Fraction(1)
    else:
        k1 = Fraction(k1)
    if op.basis_tag == CHEBYSHEV and op.family == INTERVAL_EVEN:
        return univariate_C(op.degree, r)
    k2 = Fraction(k2_general(op))
    k3 = k3_gershgorin(op)
    # upper bound of the euclidean norm: lower bound of the reciprocal
    one = op.one()
    sq = sum((Fraction(v) * Fraction(v) for v in one), Fraction(0))
    num, den = sq.numerator, sq.denominator
    scale = 1 << 64
    upper = Fraction(math.isqrt(num * den * scale * scale) + 1, den * scale)
    C_lower = k1 * k2 / (k3 * op.nu * upper)
    return ConvergenceConstants(
        rho_r=rho(r),
        k1=k1,
        k2=k2,
        k3=k3,
        nu=op.nu,
        one_norm=upper,
        C_lower=C_lower,
        provenance={
            "k1": "closed-form" if op.family in (INTERVAL_EVEN, INTERVAL_ODD) else "user",
            "k2": "eigenvalue",
            "k3": "gershgorin",
            "C_lower": "assembled",
        },
    )
