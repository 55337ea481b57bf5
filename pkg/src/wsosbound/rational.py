"""Exact rational linear algebra and certificate post-processing.

Everything in this module computes with `fractions.Fraction`, so results are
decisions, not estimates: positive semidefiniteness is decided by an LDL^T
factorization with exact pivots, floating point vectors are lifted to their
exact binary values, and a certified bound comes with a machine-checkable
weighted sum-of-squares decomposition.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cones import (
    BlockSymMatrix,
    ConeOperator,
    exact_vector,
    is_exact,
)


class RationalError(ValueError):
    """Invalid input to an exact-arithmetic routine."""


class InvalidDenominatorError(ValueError):
    """The requested rounding denominator is too small to be safe."""


def _as_fraction_matrix(M) -> np.ndarray:
    A = np.asarray(M)
    n, m = A.shape
    out = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            out[i, j] = Fraction(A[i, j])
    return out


@dataclass
class RationalLDLT:
    """Exact LDL^T factorization of a symmetric rational matrix.

    `psd` reports whether the factorization proves M positive semidefinite;
    when it does not, `witness` holds an exact vector v with v^T M v < 0.
    Zero pivots are legal in the semidefinite case provided the rest of the
    pivot's row and column already vanished.
    """

    n: int
    L: np.ndarray
    D: np.ndarray
    psd: bool
    witness: np.ndarray | None = None
    _cols: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def positive_definite(self) -> bool:
        return self.psd and all(d > 0 for d in self.D)

    def det(self) -> Fraction:
        out = Fraction(1)
        for d in self.D:
            out *= d
        return out

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve M y = b; requires strictly positive pivots."""
        if not self.positive_definite:
            raise RationalError("solve requires a positive definite factorization")
        y = np.array([Fraction(v) for v in b], dtype=object)
        for j in range(self.n):  # forward: L z = b
            yj = y[j]
            if yj and len(self._cols[j]):
                idx = self._cols[j]
                y[idx] = y[idx] - self.L[idx, j] * yj
        for j in range(self.n):
            y[j] = y[j] / self.D[j]
        for j in range(self.n - 1, -1, -1):  # backward: L^T x = z
            idx = self._cols[j]
            if len(idx):
                acc = (self.L[idx, j] * y[idx]).sum()
                if acc:
                    y[j] = y[j] - acc
        return y

    def inverse(self) -> np.ndarray:
        cols = [self.solve(np.eye(self.n, dtype=object)[:, j] + Fraction(0)) for j in range(self.n)]
        return np.stack(cols, axis=1)


def ldlt_rational(M) -> RationalLDLT:
    """Factor a symmetric rational matrix as L D L^T with exact pivots.

    Column updates touch only structurally nonzero rows, so banded inputs
    factor in time proportional to their bandwidth rather than their size.
    """
    A = _as_fraction_matrix(M)
    n = A.shape[0]
    if A.shape[1] != n:
        raise RationalError(f"matrix is not square: {A.shape}")
    for i in range(n):
        for j in range(i):
            if A[i, j] != A[j, i]:
                raise RationalError(f"matrix is not symmetric at ({i}, {j})")

    L = np.zeros((n, n), dtype=object)
    L[:] = Fraction(0)
    for i in range(n):
        L[i, i] = Fraction(1)
    D = np.array([Fraction(0)] * n, dtype=object)
    cols: list[np.ndarray] = []

    def finish(k: int) -> RationalLDLT:
        # pad remaining column index lists so solves on the partial factor work
        while len(cols) < n:
            cols.append(np.array([], dtype=np.intp))
        return RationalLDLT(n, L, D, psd=False, witness=None, _cols=cols)

    def lift_witness(z: np.ndarray) -> np.ndarray:
        # v = L^{-T} z so that v^T M v = z^T (D ++ remaining block) z
        v = z.copy()
        for j in range(n - 1, -1, -1):
            acc = Fraction(0)
            for i in range(j + 1, n):
                if L[i, j] and v[i]:
                    acc += L[i, j] * v[i]
            v[j] = v[j] - acc
        return v

    for j in range(n):
        d = A[j, j]
        below = np.array([i for i in range(j + 1, n) if A[i, j] != 0], dtype=np.intp)
        if d > 0:
            D[j] = d
            if len(below):
                w = np.array([A[i, j] / d for i in below], dtype=object)
                L[below, j] = w
                # rank-one update of the trailing submatrix, nonzero rows only
                for a, i in enumerate(below):
                    Ai = A[i]
                    wi_d = w[a] * d
                    for b, k in enumerate(below):
                        if k <= i:
                            Ai[k] = Ai[k] - wi_d * w[b]
                            A[k, i] = Ai[k]
            cols.append(below)
            continue
        if d == 0:
            if len(below) == 0:
                D[j] = Fraction(0)
                cols.append(below)
                continue
            # 0 pivot with a nonzero residual entry A[i, j]: indefinite
            i = int(below[0])
            a, b = A[i, j], A[i, i]
            t = (b + 1) / (2 * a)
            z = np.array([Fraction(0)] * n, dtype=object)
            z[j], z[i] = t, Fraction(-1)
            fac = finish(j)
            fac.witness = lift_witness(z)
            return fac
        # negative pivot
        z = np.array([Fraction(0)] * n, dtype=object)
        z[j] = Fraction(1)
        D[j] = d
        fac = finish(j)
        fac.witness = lift_witness(z)
        return fac

    return RationalLDLT(n, L, D, psd=True, witness=None, _cols=cols)


def float_to_rational(v) -> np.ndarray:
    """Exact rational lift of floating point values (no rounding).

    Every finite float is a dyadic rational; `Fraction(float)` recovers it
    exactly, so lifted vectors have power-of-two denominators.
    """
    arr = np.asarray(v, dtype=object)
    flat = arr.reshape(-1)
    out = np.empty(flat.shape, dtype=object)
    for i, val in enumerate(flat):
        if isinstance(val, (Fraction, int)):
            out[i] = Fraction(val)
        elif isinstance(val, np.integer):
            out[i] = Fraction(int(val))
        else:
            val = float(val)
            if not math.isfinite(val):
                raise RationalError(f"cannot lift non-finite value {val!r}")
            out[i] = Fraction(val)
    return out.reshape(arr.shape)


@dataclass
class Verdict:
    """Outcome of an exact certificate check."""

    certified: bool
    reason: str | None = None
    w: np.ndarray | None = None  # the exact vector H(x)^{-1}(t - c 1)
    gram: BlockSymMatrix | None = None

    def __bool__(self) -> bool:
        return self.certified


def verify_exact(cone: ConeOperator, t, c, x) -> Verdict:
    """Decide in exact arithmetic whether x certifies the bound c for t.

    Checks Lambda(x) > 0, solves H(x) w = t - c*1 exactly, and accepts if
    Lambda(w) is positive semidefinite.  A certified verdict implies the
    polynomial t - c is nonnegative on the cone's semialgebraic domain.
    """
    from .barrier import BarrierContext, NotInteriorError

    t = exact_vector(cone.check_vector(t))
    x = exact_vector(cone.check_vector(x))
    c = Fraction(c)
    try:
        ctx = BarrierContext(cone, x)
    except NotInteriorError:
        return Verdict(False, reason="not-interior")
    s = t - c * cone.one()
    w = ctx.hessian_solve(s)
    lam_w = cone.apply(w)
    for i, blk in enumerate(lam_w):
        fac = ldlt_rational(blk)
        if not fac.psd:
            return Verdict(False, reason=f"not-certified:block-{i}", w=w)
    return Verdict(True, w=w)


def round_certificate(
    cone: ConeOperator,
    t,
    c,
    x,
    r1: Fraction,
    r2: Fraction,
    N: int,
):
    """Round a certificate componentwise to the grid (1/N) Z^U.

    Admissibility requires the spectral bound
        ||H(x)^{1/2}|| <= (2 N / sqrt(U)) * (r2 - r1) / (1 + r2),
    under which a certificate within local distance r1 of the gradient
    certificate stays within r2 after rounding and remains valid.  The
    rounded vector is re-verified exactly before being returned; if that
    re-verification fails the original certificate is returned unchanged
    (sound fallback) with a warning.
    """
    from .barrier import BarrierContext
    from .certificates import DualCertificate

    if isinstance(x, DualCertificate):
        x = x.x
    x = exact_vector(cone.check_vector(x))
    r1, r2 = Fraction(r1), Fraction(r2)
    if not (0 < r1 < Fraction(1, 2)):
        raise RationalError(f"r1 must lie in (0, 1/2), got {r1}")
    if not (r1 < r2 <= Fraction(1, 2)):
        raise RationalError(f"r2 must lie in (r1, 1/2], got {r2}")
    if N < 1:
        raise InvalidDenominatorError(f"denominator must be a positive integer, got {N}")

    ctx = BarrierContext(cone, np.asarray([float(v) for v in x], dtype=np.float64))
    h_norm = math.sqrt(max(np.linalg.eigvalsh(ctx.hessian).max(), 0.0))
    limit = (2 * N / math.sqrt(cone.U)) * float((r2 - r1) / (1 + r2))
    # small multiplicative margin so borderline float comparisons stay safe
    if h_norm * (1 + 1e-9) > limit:
        raise InvalidDenominatorError(
            f"N = {N} violates the rounding bound: ||H^(1/2)|| ~ {h_norm:.6g} "
            f"exceeds {limit:.6g}"
        )
    rounded = np.array([Fraction(round(v * N), N) for v in x], dtype=object)
    if verify_exact(cone, t, c, rounded).certified:
        return DualCertificate(cone, rounded)
    warnings.warn("rounded certificate failed exact re-verification; returning the original")
    return DualCertificate(cone, x)


@dataclass
class SosTerm:
    weight_index: int
    coefficient: Fraction  # nonnegative multiplier of the square
    square: list[Fraction]  # polynomial in the weight's multiplier basis


@dataclass
class SosDecomposition:
    """Weighted sum of squares with exact rational data.

    Satisfies sum_i g_i * sum_j lambda_ij * q_ij^2 = target - bound * 1 as an
    exact identity in the cone's coefficient space.
    """

    terms: list[SosTerm]
    target: np.ndarray
    bound: Fraction

    def to_json_dict(self) -> dict:
        return {
            "bound": {"num": self.bound.numerator, "den": self.bound.denominator},
            "terms": [
                {
                    "weight_index": t.weight_index,
                    "lambda": {"num": t.coefficient.numerator, "den": t.coefficient.denominator},
                    "square": [{"num": q.numerator, "den": q.denominator} for q in t.square],
                }
                for t in self.terms
            ],
        }


def expand_decomposition(cone: ConeOperator, dec: SosDecomposition) -> np.ndarray:
    """Expand the weighted squares back into a coefficient vector.

    Reconstructs the block Gram matrix sum_j lambda_j q_j q_j^T per weight
    and pushes it through the adjoint; the result should equal
    target - bound * 1 exactly.
    """
    blocks = []
    for i, blk in enumerate(cone.blocks):
        G = np.zeros((blk.dim, blk.dim), dtype=object)
        G[:] = Fraction(0)
        blocks.append(G)
    for term in dec.terms:
        q = np.array(term.square, dtype=object)
        blocks[term.weight_index] += term.coefficient * np.outer(q, q)
    return cone.adjoint(BlockSymMatrix(blocks))


def sos_decomposition(cone: ConeOperator, gram, target=None, bound=Fraction(0)) -> SosDecomposition:
    """Factor a block PSD Gram matrix into an explicit weighted SOS.

    Each block's LDL^T factorization S = sum_j D_jj l_j l_j^T contributes
    terms with coefficient D_jj and square polynomial l_j (column j of L)
    over that weight's multiplier basis.  The identity is re-verified by
    exact expansion before returning.
    """
    from .certificates import GramCertificate

    if isinstance(gram, GramCertificate):
        target = gram.target if target is None else target
        blocks = gram.S
    else:
        blocks = gram
    if target is None:
        raise RationalError("a target coefficient vector is required")
    target = exact_vector(cone.check_vector(target))
    bound = Fraction(bound)

    terms: list[SosTerm] = []
    for i, M in enumerate(blocks):
        fac = ldlt_rational(M)
        if not fac.psd:
            raise RationalError(f"Gram block {i} is not positive semidefinite")
        for j in range(fac.n):
            if fac.D[j] > 0:
                terms.append(SosTerm(i, fac.D[j], [Fraction(v) for v in fac.L[:, j]]))
    dec = SosDecomposition(terms=terms, target=target, bound=bound)
    expected = target - bound * cone.one()
    got = expand_decomposition(cone, dec)
    if any(a != b for a, b in zip(got, expected)):
        raise RationalError("sum-of-squares expansion failed to reproduce the target")
    return dec
