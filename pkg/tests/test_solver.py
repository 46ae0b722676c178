# -------------------------------------------------
# Tests for the dense solver, the penalty sweep and the potential evaluator.
# -------------------------------------------------

from types import SimpleNamespace

import numpy as np
import pytest

from assembly.nitsche import NitscheParams, QuadratureOrders, assemble_full
from geometry.mesh import mesh_stats
from geometry.screen import build_model_screen, build_split_screen
from helpers.errors import DomainError, SolverError
from postproc.surrogate import l2_distance
from solver.dense import solve_dense
from solver.potential import evaluate_potential
from spaces.dofs import CONFORMING, NONCONFORMING, build_dofs
from spaces.jumps import jump_l2_norm

COARSE = QuadratureOrders(4, 5, 5, 6, far=3)


def dense_system(matrix, rhs, level=None):
    return SimpleNamespace(matrix=np.asarray(matrix), rhs=np.asarray(rhs), kind="nonconforming", level=level)


def test_identity_system():
    print("TEST: Identity System")
    b = np.array([1.0, 2.0 - 1j, -3.0])
    solution = solve_dense(dense_system(np.eye(3, dtype=complex), b))
    assert np.allclose(solution.coefficients, b)
    assert solution.residual == 0.0
    assert solution.condition == pytest.approx(1.0)
    assert len(solution) == 3
    print("PASS: x = b")


def test_manufactured_solution():
    print("\nTEST: Manufactured Solution")
    rng = np.random.default_rng(11)
    n = 30
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + n * np.eye(n)
    x = np.ones(n, dtype=complex)
    solution = solve_dense(dense_system(A, A @ x, level=2))
    assert np.allclose(solution.coefficients, x, rtol=1e-12, atol=0.0)
    assert solution.residual <= 1e-12
    assert solution.level == 2
    print("PASS: recovers x = 1")


def test_singular_system_reports_level():
    print("\nTEST: Singular System")
    with pytest.raises(SolverError) as info:
        solve_dense(dense_system(np.zeros((3, 3)), np.ones(3), level=4))
    assert info.value.level == 4
    assert "level 4" in str(info.value)
    with pytest.raises(SolverError):
        solve_dense(dense_system(np.eye(3), np.ones(2)))
    with pytest.raises(SolverError):
        solve_dense(dense_system(np.array([[1.0, np.nan], [0.0, 1.0]]), np.ones(2)))
    print("PASS: singular, mismatched and non-finite systems rejected")


def test_penalty_sweep_approaches_conforming():
    print("\nTEST: Penalty Sweep On Matching Meshes")
    _, meshes, skeleton = build_split_screen(1)
    h = mesh_stats(meshes)[0]
    nonconforming = build_dofs(meshes, NONCONFORMING)
    conforming = build_dofs(meshes, CONFORMING)
    reference = solve_dense(assemble_full(2.0, conforming, skeleton, None, COARSE))

    system = assemble_full(2.0, nonconforming, skeleton, NitscheParams(nu=100.0), COARSE, h=h)
    distances, jumps = [], []
    for nu in (100.0, 1000.0, 10000.0):
        solution = solve_dense(system.withPenalty(nu))
        distances.append(l2_distance(nonconforming, solution.coefficients, conforming, reference.coefficients))
        jumps.append(jump_l2_norm(nonconforming, skeleton, solution.coefficients))
    assert distances[0] > distances[1] > distances[2]
    assert jumps[0] > jumps[1] > jumps[2]
    print("PASS: distance to the conforming solution and jumps shrink as nu grows")


def _model_solution():
    _, meshes, skeleton = build_model_screen(0)
    dofs = build_dofs(meshes)
    coefficients = np.random.default_rng(12).normal(size=dofs.num_dofs)
    return dofs, coefficients


def test_potential_zero_solution():
    print("\nTEST: Potential Of The Zero Solution")
    dofs, _ = _model_solution()
    assert evaluate_potential(2.0, np.zeros(dofs.num_dofs), dofs, np.array([0.1, 0.2, 0.3])) == 0.0
    print("PASS: U = 0")


def test_potential_rejects_points_on_screen():
    print("\nTEST: Potential On The Screen")
    dofs, coefficients = _model_solution()
    with pytest.raises(DomainError):
        evaluate_potential(2.0, coefficients, dofs, np.array([0.1, 0.2, 0.0]))
    with pytest.raises(DomainError):
        evaluate_potential(2.0, coefficients[:-1], dofs, np.array([0.1, 0.2, 0.3]))
    # beside the screen in its own plane is fine
    value = evaluate_potential(2.0, coefficients, dofs, np.array([0.9, 0.0, 0.0]))
    assert value == 0.0
    print("PASS: on-screen points raise a domain error")


def test_potential_values():
    print("\nTEST: Potential Values")
    dofs, coefficients = _model_solution()
    above = np.array([0.1, -0.2, 0.3])
    below = np.array([0.1, -0.2, -0.3])
    laplace = evaluate_potential(0.0, coefficients, dofs, above)
    assert laplace.imag == 0.0
    for k in (0.0, 2.0):
        up = evaluate_potential(k, coefficients, dofs, above)
        down = evaluate_potential(k, coefficients, dofs, below)
        assert down == pytest.approx(-up, rel=1e-14)
    values = evaluate_potential(2.0, coefficients, dofs, np.stack([above, below]))
    assert values.shape == (2,)
    assert values[0] == evaluate_potential(2.0, coefficients, dofs, above)
    print("PASS: real for k = 0, odd in z, vectorised over points")


if __name__ == "__main__":
    test_identity_system()
    test_manufactured_solution()
    test_singular_system_reports_level()
    test_penalty_sweep_approaches_conforming()
    test_potential_zero_solution()
    test_potential_rejects_points_on_screen()
    test_potential_values()
