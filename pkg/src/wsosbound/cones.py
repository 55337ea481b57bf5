"""Weighted-sum-of-squares cones represented through a block linear operator.

A cone is described by the linear map Lambda sending a coefficient vector
x in R^U to a tuple of symmetric matrices, one per weight polynomial:

    Lambda_i(x)[j, k] = sum_u T_i[j, k, u] * x[u],

where T_i[j, k] is the coefficient vector of g_i * p_j * p_k in the fixed
degree basis of the ambient polynomial space.  A polynomial s is weighted
SOS exactly when s = Lambda^*(S) for some block positive semidefinite S.

Vectors are plain numpy arrays: float64 arrays select numeric arithmetic,
object arrays of `fractions.Fraction` select exact arithmetic.  The same
operator instance serves both modes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

MONOMIAL = "monomial"
CHEBYSHEV = "chebyshev"
CUSTOM = "custom"

INTERVAL_EVEN = "interval-even"
INTERVAL_ODD = "interval-odd"

# Largest intermediate magnitude allowed on the int64 fast paths.  Products
# and dot-product accumulations are bounded a priori before committing to
# machine integers; anything bigger falls back to Python integers.
_INT64_SAFE = 2**62


class ConeError(ValueError):
    """Invalid cone construction or mismatched operands."""


def exact_vector(values) -> np.ndarray:
    """Object array of Fractions from any iterable of rational-like scalars."""
    out = []
    for v in values:
        # numpy scalars would survive inside Fraction and overflow later
        if isinstance(v, np.integer):
            v = int(v)
        elif isinstance(v, np.floating):
            v = float(v)
        out.append(Fraction(v))
    return np.array(out, dtype=object)


def float_vector(values) -> np.ndarray:
    return np.asarray([float(v) for v in values], dtype=np.float64)


def is_exact(arr: np.ndarray) -> bool:
    return getattr(arr, "dtype", None) == np.dtype(object)


def integerize_vector(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Write an exact vector as (integer numerators, common denominator)."""
    fracs = [Fraction(v) for v in x]
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    nums = np.array([f.numerator * (den // f.denominator) for f in fracs], dtype=object)
    return nums, den


def _fractionize_matrix(nums: np.ndarray, den: int) -> np.ndarray:
    flat = [Fraction(int(v), den) for v in nums.reshape(-1).tolist()]
    return np.array(flat, dtype=object).reshape(nums.shape)


@dataclass
class BlockSymMatrix:
    """Block-diagonal symmetric matrix, one block per cone weight."""

    blocks: list[np.ndarray]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.blocks[i]

    @property
    def block_dims(self) -> tuple[int, ...]:
        return tuple(b.shape[0] for b in self.blocks)

    def copy(self) -> "BlockSymMatrix":
        return BlockSymMatrix([b.copy() for b in self.blocks])


class ConeBlock:
    """One weight's structure tensor, stored as symmetric sparse entries.

    Entries cover both (j, k) and (k, j) for off-diagonal positions, so
    applying and transposing never needs to special-case triangles.
    """

    def __init__(self, dim: int, entries: dict[tuple[int, int, int], Fraction]):
        self.dim = dim
        items = sorted((jk_u, v) for jk_u, v in entries.items() if v != 0)
        self.rows = np.array([j for (j, _, _), _ in items], dtype=np.intp)
        self.cols = np.array([k for (_, k, _), _ in items], dtype=np.intp)
        self.uidx = np.array([u for (_, _, u), _ in items], dtype=np.intp)
        self.vals = np.array([v for _, v in items], dtype=object)
        self._fvals: np.ndarray | None = None

    def nnz(self) -> int:
        return len(self.vals)

    @property
    def float_vals(self) -> np.ndarray:
        if self._fvals is None:
            self._fvals = np.array([float(v) for v in self.vals], dtype=np.float64)
        return self._fvals

    def dense_float(self, U: int) -> np.ndarray:
        A = np.zeros((U, self.dim, self.dim), dtype=np.float64)
        np.add.at(A, (self.uidx, self.rows, self.cols), [float(v) for v in self.vals])
        return A

    def exact_scaled(self) -> tuple[list[int], int]:
        """Entry values as integers over one cleared common denominator."""
        den = 1
        for v in self.vals:
            den = den * v.denominator // math.gcd(den, v.denominator)
        return [int(v * den) for v in self.vals], den


class ConeOperator:
    """The Lambda map of a WSOS cone plus its dimensions.

    Immutable after construction; all heavyweight derived representations
    (dense tensors, magnitude bounds) are cached lazily.
    """

    def __init__(
        self,
        U: int,
        block_entries: list[tuple[int, dict[tuple[int, int, int], Fraction]]],
        basis_tag: str = CUSTOM,
        family: str = CUSTOM,
        degree: int | None = None,
        one: np.ndarray | None = None,
        interior_hint: np.ndarray | None = None,
        validate: bool = True,
    ):
        if U < 1:
            raise ConeError(f"polynomial space dimension must be positive, got {U}")
        self.U = U
        self.basis_tag = basis_tag
        self.family = family
        self.degree = degree
        self.blocks = [ConeBlock(dim, entries) for dim, entries in block_entries]
        self.block_dims = tuple(b.dim for b in self.blocks)
        self.nu = sum(self.block_dims)
        if one is None:
            one = np.array([Fraction(1)] + [Fraction(0)] * (U - 1), dtype=object)
        self._one = one
        self._interior_hint = interior_hint
        for blk in self.blocks:
            bad = (blk.uidx < 0) | (blk.uidx >= U)
            if bad.any():
                raise ConeError("structure tensor references a coefficient outside R^U")
        if validate and not self.is_injective():
            raise ConeError("Lambda is not injective; the cone has an empty interior")

    # -- basic vectors ------------------------------------------------------

    def one(self, exact: bool = True) -> np.ndarray:
        """Coefficient vector of the constant-one polynomial."""
        if exact:
            return self._one.copy()
        return float_vector(self._one)

    def interior_point(self, exact: bool = False) -> np.ndarray:
        """A canonical point with Lambda(x) positive definite (built-in cones)."""
        if self._interior_hint is None:
            raise ConeError("no interior point is known for this cone; supply a start vector")
        return self._interior_hint.copy() if exact else float_vector(self._interior_hint)

    def check_vector(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.U,):
            raise ConeError(f"expected a vector of length {self.U}, got shape {x.shape}")
        return x

    # -- cached dense representations ---------------------------------------

    @cached_property
    def _dense_float(self) -> list[np.ndarray]:
        return [blk.dense_float(self.U) for blk in self.blocks]

    @cached_property
    def _exact_scaled(self) -> list[tuple[list[int], int]]:
        return [blk.exact_scaled() for blk in self.blocks]

    @cached_property
    def _dense_exact(self) -> list[tuple[np.ndarray, int]]:
        # entry keys are unique per block, so scatter assignment is exact
        out = []
        for blk, (scaled, den) in zip(self.blocks, self._exact_scaled):
            A = np.zeros((self.U, blk.dim, blk.dim), dtype=object)
            if scaled:
                A[blk.uidx, blk.rows, blk.cols] = np.array(scaled, dtype=object)
            out.append((A, den))
        return out

    @cached_property
    def _dense_exact_i64(self) -> list[np.ndarray | None]:
        out = []
        for blk, (scaled, _), m in zip(self.blocks, self._exact_scaled, self._exact_maxabs):
            if m >= _INT64_SAFE:
                out.append(None)
                continue
            A = np.zeros((self.U, blk.dim, blk.dim), dtype=np.int64)
            if scaled:
                A[blk.uidx, blk.rows, blk.cols] = np.array(scaled, dtype=np.int64)
            out.append(A)
        return out

    @cached_property
    def _exact_maxabs(self) -> list[int]:
        return [max((abs(v) for v in scaled), default=0) for scaled, _ in self._exact_scaled]

    @cached_property
    def _exact_colsum(self) -> list[int]:
        # max over (j, k) of sum_u |A[u, j, k]|; bounds apply() accumulations
        out = []
        for blk, (scaled, _) in zip(self.blocks, self._exact_scaled):
            s = np.zeros((blk.dim, blk.dim), dtype=object)
            if scaled:
                np.add.at(s, (blk.rows, blk.cols), [abs(v) for v in scaled])
            out.append(max((int(v) for v in s.reshape(-1).tolist()), default=0))
        return out

    # -- the operator and its adjoint ---------------------------------------

    def apply(self, x) -> BlockSymMatrix:
        """Lambda(x): block symmetric matrices, exact when x is exact."""
        x = self.check_vector(x)
        if not is_exact(x):
            x = np.asarray(x, dtype=np.float64)
            return BlockSymMatrix([np.tensordot(x, A, axes=(0, 0)) for A in self._dense_float])
        nums, den_x = integerize_vector(x)
        max_x = max((abs(int(v)) for v in nums.tolist()), default=0)
        out = []
        for i, (_, den_a) in enumerate(self._exact_scaled):
            bound = max_x * self._exact_colsum[i]
            A64 = self._dense_exact_i64[i]
            if A64 is not None and max_x < _INT64_SAFE and bound < _INT64_SAFE:
                raw = np.tensordot(nums.astype(np.int64), A64, axes=(0, 0))
            else:
                raw = np.tensordot(nums, self._dense_exact[i][0], axes=(0, 0))
            out.append(_fractionize_matrix(raw, den_x * den_a))
        return BlockSymMatrix(out)

    def adjoint(self, S: BlockSymMatrix) -> np.ndarray:
        """Lambda^*(S): satisfies <Lambda(x), S> = <x, Lambda^*(S)> exactly."""
        if len(S) != len(self.blocks):
            raise ConeError(f"expected {len(self.blocks)} blocks, got {len(S)}")
        for blk, M in zip(self.blocks, S):
            if M.shape != (blk.dim, blk.dim):
                raise ConeError(f"block shape mismatch: {M.shape} vs {(blk.dim, blk.dim)}")
        exact = any(is_exact(M) for M in S)
        if not exact:
            out = np.zeros(self.U, dtype=np.float64)
            for A, M in zip(self._dense_float, S):
                out += np.tensordot(A, np.asarray(M, dtype=np.float64), axes=([1, 2], [0, 1]))
            return out
        out = np.array([Fraction(0)] * self.U, dtype=object)
        for blk, M in zip(self.blocks, S):
            Mx = np.asarray(M, dtype=object)
            if not is_exact(M):
                # rewrap floats so mixed inputs still sum exactly
                Mx = np.array([[Fraction(v) for v in row] for row in Mx], dtype=object)
            prod = blk.vals * Mx[blk.rows, blk.cols]
            np.add.at(out, blk.uidx, prod)
        return out

    # -- diagnostics ---------------------------------------------------------

    def flattened(self) -> np.ndarray:
        """Dense float matrix of Lambda as a map R^U -> stacked block entries."""
        return np.concatenate([A.reshape(self.U, -1) for A in self._dense_float], axis=1).T

    def is_injective(self) -> bool:
        J = self.flattened()
        return np.linalg.matrix_rank(J) == self.U

    # -- serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        entries = []
        for i, blk in enumerate(self.blocks):
            for j, k, u, v in zip(blk.rows, blk.cols, blk.uidx, blk.vals):
                if j > k:
                    continue  # emit each unordered pair once
                entries.append(
                    {
                        "block": i,
                        "row": int(j),
                        "col": int(k),
                        "coeff_index": int(u),
                        "value_num": v.numerator,
                        "value_den": v.denominator,
                    }
                )
        return {"U": self.U, "block_dims": list(self.block_dims), "entries": entries}


def _interval_even_entries(d: int, basis: str):
    """Structure tensors for weights (1, 1 - z^2) with degrees (d, d - 1)."""
    U = 2 * d + 1
    b1: dict[tuple[int, int, int], int] = {}
    b2: dict[tuple[int, int, int], int] = {}

    # accumulate integer multiples of 1/scale; Fractions are built once at the end
    def add(tbl, j, k, u, v):
        key = (j, k, u)
        tbl[key] = tbl.get(key, 0) + v

    if basis == MONOMIAL:
        scale = 1
        for j in range(d + 1):
            for k in range(d + 1):
                add(b1, j, k, j + k, 1)
        for j in range(d):
            for k in range(d):
                add(b2, j, k, j + k, 1)
                add(b2, j, k, j + k + 2, -1)
    elif basis == CHEBYSHEV:
        scale = 8
        half, eighth = 4, 1
        for j in range(d + 1):
            for k in range(d + 1):
                add(b1, j, k, j + k, half)
                add(b1, j, k, abs(j - k), half)
        for j in range(d):
            for k in range(d):
                s, m = j + k, abs(j - k)
                add(b2, j, k, s, 2 * eighth)
                add(b2, j, k, m, 2 * eighth)
                add(b2, j, k, s + 2, -eighth)
                add(b2, j, k, abs(s - 2), -eighth)
                add(b2, j, k, m + 2, -eighth)
                add(b2, j, k, abs(m - 2), -eighth)
    else:
        raise ConeError(f"unsupported basis {basis!r}")
    f1 = {key: Fraction(v, scale) for key, v in b1.items()}
    f2 = {key: Fraction(v, scale) for key, v in b2.items()}
    return U, [(d + 1, f1), (d, f2)]


def _interval_odd_entries(d: int, basis: str):
    """Structure tensors for weights (1 - z, 1 + z) with degrees (d, d)."""
    U = 2 * d + 2
    b1: dict[tuple[int, int, int], int] = {}
    b2: dict[tuple[int, int, int], int] = {}

    # accumulate integer multiples of 1/scale; Fractions are built once at the end
    def add(tbl, j, k, u, v):
        key = (j, k, u)
        tbl[key] = tbl.get(key, 0) + v

    if basis == MONOMIAL:
        scale = 1
        for j in range(d + 1):
            for k in range(d + 1):
                add(b1, j, k, j + k, 1)
                add(b1, j, k, j + k + 1, -1)
                add(b2, j, k, j + k, 1)
                add(b2, j, k, j + k + 1, 1)
    elif basis == CHEBYSHEV:
        scale = 4
        q = 1
        for j in range(d + 1):
            for k in range(d + 1):
                s, m = j + k, abs(j - k)
                for tbl, sign in ((b1, -1), (b2, 1)):
                    add(tbl, j, k, s, 2 * q)
                    add(tbl, j, k, m, 2 * q)
                    add(tbl, j, k, s + 1, sign * q)
                    add(tbl, j, k, abs(s - 1), sign * q)
                    add(tbl, j, k, m + 1, sign * q)
                    add(tbl, j, k, abs(m - 1), sign * q)
    else:
        raise ConeError(f"unsupported basis {basis!r}")
    f1 = {key: Fraction(v, scale) for key, v in b1.items()}
    f2 = {key: Fraction(v, scale) for key, v in b2.items()}
    return U, [(d + 1, f1), (d + 1, f2)]


def _uniform_moments(U: int, basis: str) -> np.ndarray:
    """Moments of the uniform probability measure on [-1, 1] in the basis.

    The moment vector of any fully supported measure is interior to the
    dual cone, which makes this a safe generic starting point.
    """
    out = []
    for u in range(U):
        if u % 2 == 1:
            out.append(Fraction(0))
        elif basis == MONOMIAL:
            out.append(Fraction(1, u + 1))
        else:  # chebyshev: integral of T_u over [-1, 1] is 2 / (1 - u^2)
            out.append(Fraction(1, 1 - u * u))
    return np.array(out, dtype=object)


def build_interval_cone(d: int, basis: str = MONOMIAL) -> ConeOperator:
    """Cone of polynomials of degree 2d that are WSOS on [-1, 1].

    Weights (1, 1 - z^2) with multiplier degrees (d, d - 1); U = nu = 2d + 1.
    """
    if d < 1:
        raise ConeError(f"degree parameter must be at least 1, got {d}")
    U, entries = _interval_even_entries(d, basis)
    return ConeOperator(
        U,
        entries,
        basis_tag=basis,
        family=INTERVAL_EVEN,
        degree=d,
        interior_hint=_uniform_moments(U, basis),
        validate=False,
    )


def build_interval_cone_odd(d: int, basis: str = MONOMIAL) -> ConeOperator:
    """Cone of polynomials of degree 2d + 1 that are WSOS on [-1, 1].

    Weights (1 - z, 1 + z) with multiplier degrees (d, d); U = nu = 2d + 2.
    The degenerate d = 0 cone (linear polynomials) is allowed.
    """
    if d < 0:
        raise ConeError(f"degree parameter must be nonnegative, got {d}")
    U, entries = _interval_odd_entries(d, basis)
    return ConeOperator(
        U,
        entries,
        basis_tag=basis,
        family=INTERVAL_ODD,
        degree=d,
        interior_hint=_uniform_moments(U, basis),
        validate=False,
    )


def lambda_apply(op: ConeOperator, x) -> BlockSymMatrix:
    """Evaluate Lambda(x); exact for object arrays, float otherwise."""
    return op.apply(x)


def lambda_adjoint(op: ConeOperator, S: BlockSymMatrix) -> np.ndarray:
    """Evaluate the adjoint Lambda^*(S) under the trace inner product."""
    return op.adjoint(S)


def evaluate_at_zero(op: ConeOperator, t) -> float:
    """Value of the polynomial with coefficients t at the domain point z = 0.

    Defined for the built-in interval cones; z = 0 always lies in [-1, 1],
    so this value is an upper bound on the minimum over the interval.
    """
    t = op.check_vector(t)
    if op.basis_tag == MONOMIAL:
        return float(t[0])
    if op.basis_tag == CHEBYSHEV:
        total = 0.0
        for u in range(0, op.U, 2):
            total += float(t[u]) * (-1.0) ** (u // 2)
        return total
    raise ConeError("no canonical domain point is known for a custom cone")


def load_cone(source) -> ConeOperator:
    """Build a custom cone from a JSON file path, JSON string, or dict.

    Expected fields: U, block_dims, entries = [{block, row, col, coeff_index,
    value_num, value_den}]; optional "one" and "interior_point" rational
    string vectors.  Each unordered (row, col) pair is listed once and is
    mirrored automatically.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = source if str(source).lstrip().startswith("{") else open(source).read()
        data = json.loads(text)
    try:
        U = int(data["U"])
        dims = [int(v) for v in data["block_dims"]]
        raw = data["entries"]
    except KeyError as e:
        raise ConeError(f"cone file is missing field {e}") from None
    tables: list[dict[tuple[int, int, int], Fraction]] = [{} for _ in dims]
    for e in raw:
        b, j, k, u = int(e["block"]), int(e["row"]), int(e["col"]), int(e["coeff_index"])
        if not 0 <= b < len(dims):
            raise ConeError(f"entry references unknown block {b}")
        if not (0 <= j < dims[b] and 0 <= k < dims[b]):
            raise ConeError(f"entry ({j}, {k}) is outside block {b} of side {dims[b]}")
        v = Fraction(int(e["value_num"]), int(e["value_den"]))
        for jj, kk in {(j, k), (k, j)}:
            key = (jj, kk, u)
            tables[b][key] = tables[b].get(key, Fraction(0)) + v
    one = exact_vector(data["one"]) if "one" in data else None
    hint = exact_vector(data["interior_point"]) if "interior_point" in data else None
    return ConeOperator(
        U,
        list(zip(dims, tables)),
        basis_tag=CUSTOM,
        family=CUSTOM,
        one=one,
        interior_hint=hint,
    )
