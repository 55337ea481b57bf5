"""Shared helpers: exact basis evaluation and random rational cone points."""

from fractions import Fraction

import numpy as np
from hypothesis import settings

from wsosbound.cones import CHEBYSHEV, ConeOperator

settings.register_profile("suite", deadline=None, max_examples=25)
settings.load_profile("suite")


def basis_values(basis: str, U: int, z) -> np.ndarray:
    """Exact vector (b_0(z), ..., b_{U-1}(z)) for the monomial or Chebyshev basis."""
    z = Fraction(z)
    vals = [Fraction(1), z]
    while len(vals) < U:
        if basis == CHEBYSHEV:
            vals.append(2 * z * vals[-1] - vals[-2])
        else:
            vals.append(z * vals[-1])
    return np.array(vals[:U], dtype=object)


def poly_value(basis: str, coeffs, z) -> Fraction:
    """Evaluate a coefficient vector at a rational point."""
    b = basis_values(basis, len(coeffs), z)
    return sum((Fraction(c) * v for c, v in zip(coeffs, b)), Fraction(0))


def moment_vector(cone: ConeOperator, rng: np.random.Generator) -> np.ndarray:
    """Moments of a random discrete positive measure: an exact interior point.

    A measure supported on at least max(block dims) distinct points of
    (-1, 1) makes every Lambda block a positive definite sum of rank-one
    outer products.
    """
    n_nodes = max(cone.block_dims) + 2
    # distinct rational nodes strictly inside (-1, 1)
    ks = rng.choice(np.arange(-19, 20), size=n_nodes, replace=False)
    nodes = [Fraction(int(k), 20) for k in ks]
    weights = [Fraction(int(w), 8) for w in rng.integers(1, 40, size=n_nodes)]
    x = np.array([Fraction(0)] * cone.U, dtype=object)
    for z, w in zip(nodes, weights):
        x = x + w * basis_values(cone.basis_tag, cone.U, z)
    return x


def rational_objective(U: int, rng: np.random.Generator) -> np.ndarray:
    nums = rng.integers(-9, 10, size=U)
    dens = rng.integers(1, 9, size=U)
    return np.array([Fraction(int(n), int(d)) for n, d in zip(nums, dens)], dtype=object)


def dump_cone(cone) -> dict:
    """Serialize a cone in the custom-file schema, one entry per unordered pair."""
    entries = []
    for b, blk in enumerate(cone.blocks):
        for j, k, u, v in zip(blk.rows, blk.cols, blk.uidx, blk.vals):
            if j <= k:
                entries.append(
                    {
                        "block": b,
                        "row": int(j),
                        "col": int(k),
                        "coeff_index": int(u),
                        "value_num": v.numerator,
                        "value_den": v.denominator,
                    }
                )
    return {"U": cone.U, "block_dims": list(cone.block_dims), "entries": entries}
