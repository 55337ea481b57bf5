"""Barrier calculus: values, gradients, Hessians, and their exact identities."""

import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import moment_vector, rational_objective
from wsosbound.barrier import (
    BarrierContext,
    NotInteriorError,
    barrier_value,
    dual_local_norm,
    gradient,
    hessian,
    local_norm,
)
from wsosbound.cones import CHEBYSHEV, MONOMIAL, build_interval_cone, build_interval_cone_odd, float_vector


def contexts(d=2, seed=0):
    rng = np.random.default_rng(seed)
    for basis in (MONOMIAL, CHEBYSHEV):
        cone = build_interval_cone(d, basis=basis)
        x = moment_vector(cone, rng)
        yield cone, x


def test_exact_and_float_agree():
    for cone, x in contexts():
        exact = BarrierContext(cone, x)
        approx = BarrierContext(cone, float_vector(x))
        assert exact.exact and not approx.exact
        np.testing.assert_allclose(float(exact.barrier_value()), approx.barrier_value(),
                                   rtol=1e-12)
        np.testing.assert_allclose([float(v) for v in exact.gradient], approx.gradient,
                                   rtol=1e-9, atol=1e-12)
        H_exact = np.array([[float(v) for v in row] for row in exact.hessian])
        np.testing.assert_allclose(H_exact, approx.hessian, rtol=1e-8, atol=1e-10)


def test_gradient_identities_exact():
    for cone, x in contexts(seed=1):
        ctx = BarrierContext(cone, x)
        g, H = ctx.gradient, ctx.hessian
        # H x = -g and <-g, x> = nu, both as exact rational equalities
        assert ((H @ x) == -g).all()
        assert (-g) @ x == cone.nu
        assert ctx.local_norm_sq(x) == cone.nu
        assert ctx.dual_local_norm_sq(g) == cone.nu


def test_log_homogeneity_exact():
    for cone, x in contexts(seed=2):
        ctx = BarrierContext(cone, x)
        for alpha in (Fraction(1, 3), Fraction(2), Fraction(7)):
            scaled = BarrierContext(cone, alpha * x)
            assert (scaled.gradient == ctx.gradient / alpha).all()
            assert (scaled.hessian == ctx.hessian / alpha**2).all()


def test_barrier_value_scaling():
    # f(alpha x) = f(x) - nu ln(alpha)
    for cone, x in contexts(seed=3):
        ctx = BarrierContext(cone, x)
        scaled = BarrierContext(cone, 2 * x)
        np.testing.assert_allclose(
            float(scaled.barrier_value()),
            float(ctx.barrier_value()) - cone.nu * math.log(2.0),
            rtol=1e-12,
        )


def test_finite_difference_gradient():
    h = 1e-5
    for cone, x in contexts(seed=4):
        xf = float_vector(x)
        g = gradient(BarrierContext(cone, xf))
        for u in range(cone.U):
            e = np.zeros(cone.U)
            e[u] = h
            hi = barrier_value(BarrierContext(cone, xf + e))
            lo = barrier_value(BarrierContext(cone, xf - e))
            np.testing.assert_allclose((hi - lo) / (2 * h), g[u], rtol=1e-6, atol=1e-8)


def test_finite_difference_hessian():
    h = 1e-5
    for cone, x in contexts(seed=5):
        xf = float_vector(x)
        H = hessian(BarrierContext(cone, xf))
        rng = np.random.default_rng(0)
        v = rng.standard_normal(cone.U)
        gp = gradient(BarrierContext(cone, xf + h * v))
        gm = gradient(BarrierContext(cone, xf - h * v))
        np.testing.assert_allclose((gp - gm) / (2 * h), H @ v, rtol=1e-5, atol=1e-7)


def test_norm_duality():
    # ||x||_x = sqrt(nu), and the gradient has dual norm sqrt(nu)
    for cone, x in contexts(seed=6):
        ctx = BarrierContext(cone, float_vector(x))
        np.testing.assert_allclose(local_norm(ctx, ctx.x), math.sqrt(cone.nu), rtol=1e-10)
        np.testing.assert_allclose(dual_local_norm(ctx, ctx.gradient), math.sqrt(cone.nu),
                                   rtol=1e-10)


def test_hessian_solve_matches_columns():
    rng = np.random.default_rng(7)
    cone = build_interval_cone(3)
    x = moment_vector(cone, rng)
    for ctx in (BarrierContext(cone, x), BarrierContext(cone, float_vector(x))):
        B = np.stack([float_vector(rational_objective(cone.U, rng)) for _ in range(3)], axis=1)
        if ctx.exact:
            B = np.asarray(B, dtype=object)
        W = ctx.hessian_solve(B)
        for j in range(3):
            col = ctx.hessian_solve(B[:, j])
            if ctx.exact:
                assert (W[:, j] == col).all()
            else:
                np.testing.assert_allclose(W[:, j], col, rtol=1e-12)


def test_not_interior_rejected():
    cone = build_interval_cone(2)
    with pytest.raises(NotInteriorError):
        BarrierContext(cone, np.zeros(5))
    with pytest.raises(NotInteriorError):
        BarrierContext(cone, np.array([Fraction(0)] * 5, dtype=object))
    rng = np.random.default_rng(8)
    x = moment_vector(cone, rng)
    with pytest.raises(NotInteriorError):
        BarrierContext(cone, -x)
    with pytest.raises(NotInteriorError):
        BarrierContext(cone, np.array([np.nan, 0, 0, 0, 0.5]))


def test_odd_cone_barrier():
    rng = np.random.default_rng(9)
    for basis in (MONOMIAL, CHEBYSHEV):
        cone = build_interval_cone_odd(2, basis=basis)
        x = moment_vector(cone, rng)
        ctx = BarrierContext(cone, x)
        assert ((ctx.hessian @ x) == -ctx.gradient).all()
        assert (-ctx.gradient) @ x == cone.nu
