"""Structure and adjointness of the Lambda operators."""

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import dump_cone, basis_values, moment_vector, poly_value, rational_objective
from wsosbound.cones import (
    CHEBYSHEV,
    MONOMIAL,
    ConeError,
    build_interval_cone,
    build_interval_cone_odd,
    evaluate_at_zero,
    exact_vector,
    float_vector,
    integerize_vector,
    is_exact,
    lambda_adjoint,
    lambda_apply,
    load_cone,
)


def test_even_cone_dimensions():
    for d in range(1, 6):
        cone = build_interval_cone(d)
        assert cone.U == 2 * d + 1
        assert cone.block_dims == (d + 1, d)
        assert cone.nu == 2 * d + 1


def test_odd_cone_dimensions():
    for d in range(0, 5):
        cone = build_interval_cone_odd(d)
        assert cone.U == 2 * d + 2
        assert cone.block_dims == (d + 1, d + 1)


def test_hankel_structure_monomial():
    # unit-weight block of the degree-2 even cone indexes plain moments
    cone = build_interval_cone(2, basis=MONOMIAL)
    x = exact_vector([5, 0, Fraction(5, 2), 0, Fraction(15, 8)])
    blocks = lambda_apply(cone, x)
    hankel = np.array([[x[0], x[1], x[2]], [x[1], x[2], x[3]], [x[2], x[3], x[4]]])
    assert (blocks[0] == hankel).all()
    second = np.array([[x[0] - x[2], x[1] - x[3]], [x[1] - x[3], x[2] - x[4]]])
    assert (blocks[1] == second).all()


def test_blocks_are_symmetric():
    rng = np.random.default_rng(7)
    for d in (1, 2, 4):
        for basis in (MONOMIAL, CHEBYSHEV):
            for builder in (build_interval_cone, build_interval_cone_odd):
                cone = builder(d, basis=basis)
                x = rational_objective(cone.U, rng)
                for blk in lambda_apply(cone, x):
                    assert (blk == blk.T).all()


def test_adjoint_identity_exact():
    # <Lambda(x), S> == <x, Lambda*(S)> for random rational x and S
    rng = np.random.default_rng(11)
    for basis in (MONOMIAL, CHEBYSHEV):
        cone = build_interval_cone(3, basis=basis)
        for _ in range(5):
            x = rational_objective(cone.U, rng)
            S_blocks = []
            for L in cone.block_dims:
                B = np.array(
                    [[Fraction(int(v)) for v in row] for row in rng.integers(-5, 6, (L, L))],
                    dtype=object,
                )
                S_blocks.append(B + B.T)
            lam = lambda_apply(cone, x)
            lhs = sum((lam[i] * S_blocks[i]).sum() for i in range(len(S_blocks)))
            from wsosbound.cones import BlockSymMatrix

            rhs = x @ lambda_adjoint(cone, BlockSymMatrix(S_blocks))
            assert lhs == rhs


def test_moment_vectors_are_interior():
    rng = np.random.default_rng(3)
    for d in range(1, 7):
        for basis in (MONOMIAL, CHEBYSHEV):
            for builder in (build_interval_cone, build_interval_cone_odd):
                cone = builder(d, basis=basis)
                x = moment_vector(cone, rng)
                for blk in lambda_apply(cone, float_vector(x)):
                    assert np.linalg.eigvalsh(blk).min() > 0


def test_interior_hint_is_interior():
    for d in range(1, 8):
        for basis in (MONOMIAL, CHEBYSHEV):
            cone = build_interval_cone(d, basis=basis)
            for blk in lambda_apply(cone, cone.interior_point()):
                assert np.linalg.eigvalsh(blk).min() > 0
            codd = build_interval_cone_odd(d, basis=basis)
            for blk in lambda_apply(codd, codd.interior_point()):
                assert np.linalg.eigvalsh(blk).min() > 0


def test_one_vector_reconstruction():
    # Lambda*(Lambda(x)^{-1}) pairing with one: <1, x> equals total measure
    rng = np.random.default_rng(5)
    for basis in (MONOMIAL, CHEBYSHEV):
        cone = build_interval_cone(2, basis=basis)
        one = cone.one()
        # the one-polynomial evaluates to 1 everywhere
        assert poly_value(basis, one, Fraction(1, 3)) == 1
        assert poly_value(basis, one, Fraction(-2, 5)) == 1
        x = moment_vector(cone, rng)
        b = basis_values(basis, cone.U, Fraction(1, 2))
        assert (one @ b) == 1


@given(st.integers(-9, 9), st.integers(-9, 9), st.integers(-9, 9))
def test_evaluate_at_zero_matches_direct_evaluation(a, b, c):
    for basis in (MONOMIAL, CHEBYSHEV):
        cone = build_interval_cone(1, basis=basis)
        t = exact_vector([a, b, c])
        assert Fraction(evaluate_at_zero(cone, t)) == poly_value(basis, t, 0)


def test_vector_helpers():
    x = exact_vector([1, Fraction(1, 3), 2])
    assert is_exact(x)
    f = float_vector(x)
    assert f.dtype == np.float64
    assert not is_exact(f)
    nums, den = integerize_vector(exact_vector([Fraction(1, 2), Fraction(2, 3)]))
    assert den == 6
    assert list(nums) == [3, 4]
    with pytest.raises(ConeError):
        build_interval_cone(2).check_vector(np.ones(4))


def test_exact_vector_normalizes_numpy_scalars():
    x = exact_vector(np.array([1, -2, 3], dtype=np.int64))
    for v in x:
        assert type(v.numerator) is int
        assert type(v.denominator) is int
    # big-integer arithmetic must not fall back to fixed-width multiplication
    assert x[0] * Fraction(2**200) == Fraction(2**200)
    y = exact_vector(np.array([0.5, -0.25], dtype=np.float64))
    assert list(y) == [Fraction(1, 2), Fraction(-1, 4)]
    assert type(y[0].numerator) is int



def test_load_cone_round_trip(tmp_path):
    cone = build_interval_cone(2, basis=MONOMIAL)
    path = tmp_path / "cone.json"
    path.write_text(json.dumps(dump_cone(cone)))
    loaded = load_cone(str(path))
    assert loaded.U == cone.U
    assert loaded.block_dims == cone.block_dims
    rng = np.random.default_rng(13)
    x = rational_objective(cone.U, rng)
    for a, b in zip(lambda_apply(cone, x), lambda_apply(loaded, x)):
        assert (a == b).all()


def test_load_cone_rejects_garbage():
    with pytest.raises(ConeError):
        load_cone({"U": 0, "block_dims": [], "entries": []})
    with pytest.raises(ConeError):
        load_cone({"U": 3, "block_dims": [2], "entries": [
            {"block": 0, "row": 0, "col": 0, "coeff_index": 5, "value_num": 1, "value_den": 1}
        ]})
    with pytest.raises(ConeError):
        load_cone({"U": 2, "block_dims": [1]})


def test_degenerate_cone_rejected():
    # a Lambda that ignores one coordinate is not injective
    with pytest.raises(ConeError):
        load_cone({"U": 2, "block_dims": [1], "entries": [
            {"block": 0, "row": 0, "col": 0, "coeff_index": 0, "value_num": 1, "value_den": 1}
        ]})
