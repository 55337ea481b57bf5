"""Log-determinant barrier for the dual cone, in float or exact arithmetic.

The barrier is f(x) = -sum_i ln det Lambda_i(x) on the set where every block
is positive definite.  Its gradient and Hessian,

    g(x) = -Lambda^*(Lambda(x)^{-1}),
    H(x)[:, u] = Lambda^*(Lambda(x)^{-1} Lambda(e_u) Lambda(x)^{-1}),

induce the local norms used throughout: ||v||_x = sqrt(v^T H(x) v) and the
dual norm ||s||_x* = sqrt(s^T H(x)^{-1} s).  Arithmetic mode follows the
evaluation point: a float64 vector gives a numeric context, an object array
of Fractions gives an exact one with identical semantics.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property

import numpy as np

from .cones import BlockSymMatrix, ConeOperator, is_exact
from .rational import RationalLDLT, ldlt_rational

# Numeric positive-definiteness rule: every factorization pivot must clear
# this fraction of the largest diagonal entry.
PIVOT_TOL = 1e-12

_INT64_SAFE = 2**62


class NotInteriorError(ValueError):
    """The evaluation point does not have Lambda(x) positive definite."""


def _integerize_matrix(M: np.ndarray) -> tuple[np.ndarray, int]:
    """Write an exact matrix as (integer numerators, common denominator)."""
    flat = [Fraction(v) for v in M.reshape(-1).tolist()]
    den = 1
    for f in flat:
        den = den * f.denominator // math.gcd(den, f.denominator)
    nums = np.array([f.numerator * (den // f.denominator) for f in flat], dtype=object)
    return nums.reshape(M.shape), den


def _numeric_cholesky(block: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, or NotInteriorError under the pivot rule."""
    try:
        C = np.linalg.cholesky(block)
    except np.linalg.LinAlgError:
        raise NotInteriorError("a weight block is not positive definite") from None
    pivots = np.diag(C) ** 2
    if pivots.min() <= PIVOT_TOL * max(np.diag(block).max(), 0.0):
        raise NotInteriorError("a weight block pivot fell below the tolerance")
    return C


class BarrierContext:
    """Evaluation point plus every factorization the barrier calculus needs.

    Construction verifies interiority (all pivots of Lambda(x) strictly
    positive); gradient, Hessian, and the Hessian factorization are built
    lazily and cached.  Instances are immutable.
    """

    def __init__(self, cone: ConeOperator, x):
        x = cone.check_vector(x)
        self.cone = cone
        self.exact = is_exact(x)
        self.x = x.copy() if self.exact else np.asarray(x, dtype=np.float64).copy()
        self.lam = cone.apply(self.x)
        if self.exact:
            self.lambda_factor = [ldlt_rational(B) for B in self.lam]
            for fac in self.lambda_factor:
                if not fac.positive_definite:
                    raise NotInteriorError("a weight block is not positive definite")
        else:
            if not np.all(np.isfinite(self.x)):
                raise NotInteriorError("evaluation point is not finite")
            self.lambda_factor = [_numeric_cholesky(B) for B in self.lam]

    @cached_property
    def lambda_inverse(self) -> list[np.ndarray]:
        if self.exact:
            return [fac.inverse() for fac in self.lambda_factor]
        return [np.linalg.inv(B) for B in self.lam]

    @cached_property
    def gradient(self) -> np.ndarray:
        return -self.cone.adjoint(BlockSymMatrix(self.lambda_inverse))

    @cached_property
    def hessian(self) -> np.ndarray:
        if self.exact:
            return self._hessian_exact()
        return self._hessian_float()

    @cached_property
    def hessian_factor(self):
        """Triangular factorization of H(x): LDL^T exact, Cholesky numeric."""
        H = self.hessian
        if self.exact:
            fac = ldlt_rational(H)
            if not fac.positive_definite:
                raise NotInteriorError("Hessian is not positive definite")
            return fac
        return _numeric_cholesky(H)

    # -- Hessian assembly -----------------------------------------------------

    def _hessian_float(self) -> np.ndarray:
        U = self.cone.U
        H = np.zeros((U, U), dtype=np.float64)
        for i, blk in enumerate(self.cone.blocks):
            X = self.lambda_inverse[i]
            A = self.cone._dense_float[i]
            W = np.matmul(X, A)  # W[u] = X A_u, batched over u
            Y = np.matmul(W, X)  # Y[u] = X A_u X
            # H[u, v] = tr(Y_u A_v), accumulated over the stored entries of A_v
            contrib = Y[:, blk.rows, blk.cols] * blk.float_vals
            HT = np.zeros((U, U), dtype=np.float64)
            np.add.at(HT, blk.uidx, contrib.T)
            H += HT.T
        return (H + H.T) / 2.0

    def _hessian_exact(self) -> np.ndarray:
        U = self.cone.U
        parts = []
        for i in range(len(self.cone.blocks)):
            X = self.lambda_inverse[i]
            NX, den_x = _integerize_matrix(X)
            den_a = self.cone._exact_scaled[i][1]
            L = NX.shape[0]
            max_x = max((abs(int(v)) for v in NX.reshape(-1).tolist()), default=0)
            max_a = self.cone._exact_maxabs[i]
            w_bound = L * max_x * max_a
            h_bound = L * L * w_bound * w_bound
            if max_x < _INT64_SAFE and h_bound < _INT64_SAFE:
                W = np.matmul(NX.astype(np.int64), self.cone._dense_exact_i64[i])
            else:
                NA = self.cone._dense_exact[i][0]
                W = np.stack([NX.dot(NA[u]) for u in range(U)], axis=0)
            Wf = W.reshape(U, -1)
            Wt = np.ascontiguousarray(W.transpose(0, 2, 1)).reshape(U, -1)
            raw = Wf.dot(Wt.T)  # raw[u, v] = tr(N_u N_v), integer and symmetric
            parts.append((raw, den_x * den_x * den_a * den_a))
        den_all = 1
        for _, den in parts:
            den_all = den_all * den // math.gcd(den_all, den)
        total = np.zeros((U, U), dtype=object)
        for raw, den in parts:
            total = total + raw.astype(object) * (den_all // den)
        H = np.empty((U, U), dtype=object)
        for u in range(U):
            for v in range(u + 1):
                val = Fraction(int(total[u, v]), den_all)
                H[u, v] = val
                H[v, u] = val
        return H

    # -- scalar quantities ------------------------------------------------------

    def barrier_value(self) -> float:
        """f(x) = -sum_i ln det Lambda_i(x), from the cached pivots."""
        total = 0.0
        for fac in self.lambda_factor:
            if self.exact:
                for p in fac.D:
                    total += math.log(p.numerator) - math.log(p.denominator)
            else:
                total += 2.0 * float(np.sum(np.log(np.diag(fac))))
        return -total

    def hessian_solve(self, b: np.ndarray) -> np.ndarray:
        """H(x)^{-1} b for a vector or a matrix of stacked column vectors."""
        if self.exact:
            fac: RationalLDLT = self.hessian_factor
            b = np.asarray(b, dtype=object)
            if b.ndim == 1:
                return fac.solve(b)
            return np.stack([fac.solve(b[:, j]) for j in range(b.shape[1])], axis=1)
        return np.linalg.solve(self.hessian, np.asarray(b, dtype=np.float64))

    def local_norm_sq(self, v: np.ndarray):
        """v^T H(x) v; a Fraction in exact mode, a float otherwise."""
        v = self.cone.check_vector(v)
        if self.exact:
            v = np.array([Fraction(val) for val in v], dtype=object)
            return (v * self.hessian.dot(v)).sum()
        v = np.asarray(v, dtype=np.float64)
        return float(v @ self.hessian @ v)

    def dual_local_norm_sq(self, s: np.ndarray):
        """s^T H(x)^{-1} s; a Fraction in exact mode, a float otherwise."""
        s = self.cone.check_vector(s)
        if self.exact:
            s = np.array([Fraction(val) for val in s], dtype=object)
            return (s * self.hessian_solve(s)).sum()
        s = np.asarray(s, dtype=np.float64)
        return float(s @ self.hessian_solve(s))

    def local_norm(self, v: np.ndarray) -> float:
        return math.sqrt(max(float(self.local_norm_sq(v)), 0.0))

    def dual_local_norm(self, s: np.ndarray) -> float:
        return math.sqrt(max(float(self.dual_local_norm_sq(s)), 0.0))


# Module-level operation spellings; each forwards to the cached context.


def barrier_value(ctx: BarrierContext) -> float:
    return ctx.barrier_value()


def gradient(ctx: BarrierContext) -> np.ndarray:
    return ctx.gradient


def hessian(ctx: BarrierContext) -> np.ndarray:
    return ctx.hessian


def local_norm(ctx: BarrierContext, v) -> float:
    return ctx.local_norm(v)


def dual_local_norm(ctx: BarrierContext, s) -> float:
    return ctx.dual_local_norm(s)
