import math

import numpy as np
import pytest

from nodallab.fd import (EigenpairEstimate, assemble_operator, discrete_eigenvalue,
                         solve_eigenpair, validate_against_catalog)
from nodallab.geometry import GridSpec, ScalarField
from nodallab.modes import make_mode, sample


def test_constants_in_kernel(torus2):
    op = assemble_operator(GridSpec(torus2, 16))
    assert np.max(np.abs(op.apply(np.ones(op.size)))) < 1e-12


def test_apply_to_sin_x(torus2):
    grid = GridSpec(torus2, 64)
    op = assemble_operator(grid, "periodic")
    u = sample(make_mode(torus2, (1, 0), "sin"), grid).flat
    assert np.max(np.abs(op.apply(u) - u)) < 1e-2


def test_operator_symmetry(torus2, box2):
    rng = np.random.default_rng(5)
    for grid in (GridSpec(torus2, 24), GridSpec(box2, 25)):
        op = assemble_operator(grid)
        for _ in range(50):
            u, v = rng.standard_normal((2, op.size))
            a, b = op.apply(u) @ v, u @ op.apply(v)
            assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))


def test_sign_definiteness(torus2, box2):
    rng = np.random.default_rng(1)
    for grid in (GridSpec(torus2, 16), GridSpec(box2, 17)):
        op = assemble_operator(grid)
        for _ in range(20):
            u = rng.standard_normal(op.size)
            # -Delta_h is positive semidefinite, so Delta_h is negative (semi)definite
            assert u @ op.apply(u) > 0


def test_box_closure_no_wrap(box2):
    grid = GridSpec(box2, 9)
    op = assemble_operator(grid, "dirichlet")
    u = np.zeros(op.unknown_shape)
    u[0, 0] = 1.0
    out = op.apply(u.ravel()).reshape(op.unknown_shape)
    h = grid.spacing[0]
    assert out[0, 0] == pytest.approx(4 / h**2)
    assert out[0, 1] == pytest.approx(-1 / h**2) and out[1, 0] == pytest.approx(-1 / h**2)
    assert out[-1, 0] == 0 and out[0, -1] == 0


@pytest.mark.parametrize("k", [(1, 0), (2, 3), (5, 1)])
def test_discrete_eigenvalue_identity(torus2, k):
    grid = GridSpec(torus2, 32)
    op = assemble_operator(grid)
    u = sample(make_mode(torus2, k, "cos"), grid).flat
    np.testing.assert_allclose(op.apply(u), discrete_eigenvalue(grid, k) * u, atol=1e-9)


def test_discrete_eigenvalue_box(box2):
    grid = GridSpec(box2, 33)
    op = assemble_operator(grid)
    f = sample(make_mode(box2, (2, 1)), grid)
    u = op.restrict(f)
    np.testing.assert_allclose(op.apply(u), discrete_eigenvalue(grid, (2, 1)) * u, atol=1e-9)


def test_solver_torus_lambda_one(torus2):
    grid = GridSpec(torus2, 64)
    est = solve_eigenpair(assemble_operator(grid), 0.9)
    assert est.converged
    assert est.lambda_hat == pytest.approx(1.0, rel=5e-3)
    assert est.lambda_hat == pytest.approx(discrete_eigenvalue(grid, (1, 0)), rel=1e-8)
    report = validate_against_catalog(est, make_mode(torus2, (1, 0), "sin"))
    assert report["lambda_rel_err"] < 5e-3
    assert report["subspace_angle"] < 0.05
    assert math.cos(report["subspace_angle"]) > 0.999
    assert np.linalg.norm(est.field.flat) == pytest.approx(1.0)


def test_solver_box_lambda_two(box2):
    est = solve_eigenpair(assemble_operator(GridSpec(box2, 65)), 1.8)
    assert est.lambda_hat == pytest.approx(2.0, rel=5e-3)
    assert validate_against_catalog(est, make_mode(box2, (1, 1)))["subspace_angle"] < 0.05


def test_solver_error_shrinks_fourfold(torus2):
    mode = make_mode(torus2, (1, 0), "sin")
    errs = [validate_against_catalog(solve_eigenpair(assemble_operator(GridSpec(torus2, r)), 0.9),
                                     mode)["lambda_rel_err"] for r in (32, 64)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.3)


def test_rayleigh_quotient_bracket(torus2):
    op = assemble_operator(GridSpec(torus2, 32))
    est = solve_eigenpair(op, 4.3, tol=1e-6)
    x = op.restrict(est.field)
    rq = x @ op.apply(x) / (x @ x)
    assert est.lambda_hat - est.residual_norm <= rq <= est.lambda_hat + est.residual_norm
    assert est.residual_norm == pytest.approx(np.linalg.norm(op.apply(x) - est.lambda_hat * x))


def test_validate_exact_mode_against_itself(torus2):
    grid = GridSpec(torus2, 32)
    mode = make_mode(torus2, (1, 2), "sin")
    f = sample(mode, grid)
    est = EigenpairEstimate(mode.lam, ScalarField(grid, f.values / np.linalg.norm(f.flat)), 0.0)
    report = validate_against_catalog(est, mode)
    assert report["lambda_rel_err"] == 0
    assert report["subspace_angle"] < 1e-6
