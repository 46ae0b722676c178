# -------------------------------------------------
# Tests for the Nitsche system blocks: curl-curl, normal, coupling, penalty
# and the load vector.
# -------------------------------------------------

import math
import tracemalloc
from functools import lru_cache

import numpy as np
import pytest
from scipy import sparse

from assembly import far_field
from assembly.blocks import (
    assemble_coupling_blocks, assemble_curl_curl_block, assemble_normal_block, assemble_penalty_block,
    single_layer_blocks
)
from assembly.far_field import element_table, far_single_layer, near_pairs
from assembly.nitsche import NitscheParams, QuadratureOrders, assemble_full, assemble_rhs
from geometry.mesh import mesh_stats
from geometry.screen import build_model_screen, build_split_screen, build_unit_screen
from helpers.errors import ConfigurationError
from spaces.dofs import CONFORMING, NONCONFORMING, build_dofs, injection
from tests.oracles import UNIT_COINCIDENT, laplace

COARSE = QuadratureOrders(4, 5, 5, 6, far=3)
MEDIUM = QuadratureOrders(6, 8, 8, 8, far=3)


@lru_cache(maxsize=None)
def model(level: int = 0):
    _, meshes, skeleton = build_model_screen(level)
    return build_dofs(meshes, NONCONFORMING), skeleton, mesh_stats(meshes)[0]


def indicator(dofs, j: int) -> np.ndarray:
    v = np.zeros(dofs.num_dofs)
    v[dofs.subdomainDofs(j)] = 1.0
    return v


def scaled_max(matrix) -> float:
    return float(np.abs(matrix).max())


def test_laplace_curl_block():
    print("TEST: Laplace Curl-Curl Block")
    dofs, _, _ = model()
    M = assemble_curl_curl_block(0.0, dofs, MEDIUM)
    scale = scaled_max(M)
    assert np.abs(M.imag).max() == 0.0
    assert np.abs(M - M.T).max() <= 1e-6 * scale
    for j in range(3):
        assert np.abs(M @ indicator(dofs, j)).max() <= 1e-10 * scale
    eigenvalues = np.linalg.eigvalsh(0.5 * (M.real + M.real.T))
    assert eigenvalues.min() >= -1e-10 * eigenvalues.max()
    assert np.sum(eigenvalues < 1e-6 * eigenvalues.max()) == 3
    print("PASS: symmetric, positive semidefinite, kernel spanned by the 3 subdomain indicators")


def test_conforming_laplace_system_is_positive_definite():
    print("\nTEST: Conforming Laplace System")
    _, meshes, skeleton = build_unit_screen(1)
    dofs = build_dofs(meshes, CONFORMING)
    system = assemble_full(0.0, dofs, skeleton, None, MEDIUM)
    assert system.coupling() is None and system.penalty() is None
    A = system.matrix
    assert np.abs(A - A.conj().T).max() <= 1e-6 * scaled_max(A)
    assert np.linalg.eigvalsh(0.5 * (A + A.conj().T)).min() > 0.0
    print("PASS: Hermitian positive definite")


def test_scalar_block_matches_closed_form():
    print("\nTEST: Scalar Single Layer Block")
    _, meshes, _ = build_unit_screen(0)
    dofs = build_dofs(meshes)
    _, S = single_layer_blocks(0.0, dofs, QuadratureOrders(far_ratio=math.inf))
    ones = np.ones(dofs.num_dofs)
    assert (ones @ S @ ones).real == pytest.approx(laplace(UNIT_COINCIDENT), rel=1e-6)
    print("PASS: <V 1, 1> of the unit square")


def test_normal_block():
    print("\nTEST: Normal Block")
    dofs, _, _ = model()
    assert np.all(assemble_normal_block(0.0, dofs, COARSE) == 0.0)
    N = assemble_normal_block(2.0, dofs, COARSE)
    _, S = single_layer_blocks(2.0, dofs, COARSE)
    assert np.allclose(N, -4.0 * S, rtol=1e-15, atol=0.0)
    print("PASS: zero for k = 0, -k^2 times the scalar block otherwise")


def test_conjugate_wave_number():
    print("\nTEST: Assembly At -k")
    dofs, skeleton, h = model()
    params = NitscheParams(nu=10.0)
    for k in (0.0, 2.0, 5.0):
        plus = assemble_full(k, dofs, skeleton, params, COARSE, h=h).matrix
        minus = assemble_full(-k, dofs, skeleton, params, COARSE, h=h).matrix
        assert np.abs(minus - plus.conj()).max() <= 1e-10 * scaled_max(plus)
    print("PASS: A(-k) = conj(A(k)) for k in {0, 2, 5}")


def test_coupling_adjoint():
    print("\nTEST: Coupling Adjoint")
    dofs, skeleton, _ = model()
    for k in (0.0, 2.0, 5.0):
        c1, c2 = assemble_coupling_blocks(k, dofs, skeleton, COARSE)
        assert np.array_equal(c2, c1.T)
        e1, e2 = assemble_coupling_blocks(k, dofs, skeleton, COARSE, explicit_adjoint=True)
        assert np.array_equal(e1, c1)
        assert np.abs(e2 - c1.T).max() <= 1e-10 * max(scaled_max(c1), 1e-300)
    print("PASS: C2 = C1(-k)^H = C1(k)^T")


def test_nitsche_matrix_adjoint_symmetry():
    print("\nTEST: A(k) Against A(-k)^H")
    dofs, skeleton, h = model()
    params = NitscheParams(nu=10.0)
    for k in (0.0, 2.0, 5.0):
        plus = assemble_full(k, dofs, skeleton, params, MEDIUM, h=h).matrix
        minus = assemble_full(-k, dofs, skeleton, params, MEDIUM, h=h).matrix
        assert np.abs(plus - minus.conj().T).max() <= 1e-10 * scaled_max(plus)
    print("PASS: A(k) = A(-k)^H for k in {0, 2, 5}")


def test_consistency_on_matching_meshes():
    print("\nTEST: Consistency On Matching Meshes")
    _, meshes, skeleton = build_split_screen(1)
    nonconforming = build_dofs(meshes, NONCONFORMING)
    conforming = build_dofs(meshes, CONFORMING)
    P = injection(conforming, nonconforming).toarray()
    h = mesh_stats(meshes)[0]

    nitsche = assemble_full(2.0, nonconforming, skeleton, NitscheParams(nu=10.0), COARSE, h=h)
    scale = scaled_max(nitsche.matrix)
    assert np.abs(nitsche.penalty() @ P).max() <= 1e-12 * scale
    assert np.abs(nitsche.coupling_c2 @ P).max() <= 1e-12 * scale
    reference = assemble_full(2.0, conforming, skeleton, None, COARSE)
    assert np.abs(P.T @ nitsche.matrix @ P - reference.matrix).max() <= 1e-10 * scale
    print("PASS: on conforming functions the Nitsche form is the conforming one")


def test_coupling_kills_subdomain_constants():
    print("\nTEST: Coupling On Subdomain Constants")
    dofs, skeleton, _ = model()
    c1, _ = assemble_coupling_blocks(5.0, dofs, skeleton, COARSE)
    for j in range(3):
        assert np.abs(c1 @ indicator(dofs, j)).max() <= 1e-10 * scaled_max(c1)
    print("PASS: curl of a subdomain indicator vanishes")


def test_penalty_block():
    print("\nTEST: Penalty Block")
    dofs, skeleton, _ = model()
    G = assemble_penalty_block(dofs, skeleton, 1.0)
    v = indicator(dofs, 2)
    assert v @ G @ v == pytest.approx(2.0, rel=1e-12)
    assert np.allclose(assemble_penalty_block(dofs, skeleton, 7.0), 7.0 * G)
    assert np.linalg.eigvalsh(G).min() >= -1e-12
    print("PASS: indicator penalty equals its perimeter")


def test_rhs():
    print("\nTEST: Load Vector")
    dofs, _, _ = model()
    assert assemble_rhs(1.0, dofs).sum() == pytest.approx(1.0, rel=1e-14)
    assert assemble_rhs(lambda x: x[:, 0] ** 2, dofs).sum() == pytest.approx(1.0 / 12.0, rel=1e-13)
    assert assemble_rhs(2j, dofs).sum() == pytest.approx(2j, rel=1e-14)
    print("PASS: integrals of 1, x^2 and a complex constant")


def test_parameter_validation():
    print("\nTEST: Parameter Validation")
    assert QuadratureOrders.fromString("8,10,10,12") == QuadratureOrders()
    assert QuadratureOrders().label() == "8,10,10,12"
    for bad in (lambda: QuadratureOrders(0, 10, 10, 12), lambda: QuadratureOrders(far_ratio=1.0),
                lambda: QuadratureOrders.fromString("8,10"), lambda: NitscheParams(),
                lambda: NitscheParams(nu=-1.0), lambda: NitscheParams(nu0=1.0, epsilon=-0.5)):
        with pytest.raises(ConfigurationError):
            bad()
    assert NitscheParams(nu0=2.0, epsilon=0.5).value(0.25) == pytest.approx(4.0)
    assert NitscheParams(nu=3.0, nu0=2.0).value(0.25) == 3.0

    dofs, skeleton, _ = model()
    with pytest.raises(ConfigurationError):
        assemble_full(1.0, dofs, skeleton, None, COARSE)
    with pytest.raises(ConfigurationError):
        assemble_full(1.0, dofs, skeleton, NitscheParams(nu0=1.0), COARSE)
    print("PASS: bad orders and penalties rejected")


def test_with_penalty():
    print("\nTEST: Changing The Penalty")
    dofs, skeleton, h = model()
    system = assemble_full(2.0, dofs, skeleton, NitscheParams(nu=10.0), COARSE, h=h)
    changed = system.withPenalty(1000.0)
    assert changed.nu == 1000.0
    direct = assemble_full(2.0, dofs, skeleton, NitscheParams(nu=1000.0), COARSE, h=h)
    assert np.allclose(changed.matrix, direct.matrix, rtol=0.0, atol=1e-13 * scaled_max(direct.matrix))
    assert np.allclose(system.withPenalty(10.0).matrix, system.matrix, rtol=0.0, atol=1e-13 * scaled_max(system.matrix))
    assert system.nu == 10.0
    with pytest.raises(ConfigurationError):
        system.withPenalty(0.0)

    _, meshes, skel = build_unit_screen(0)
    conforming = assemble_full(2.0, build_dofs(meshes, CONFORMING), skel, None, COARSE)
    with pytest.raises(ConfigurationError):
        conforming.withPenalty(10.0)
    print("PASS: same matrix as assembling with the new penalty")


def test_system_holds_one_dense_matrix():
    print("\nTEST: System Storage")
    dofs, skeleton, h = model()
    system = assemble_full(5.0, dofs, skeleton, NitscheParams(nu=10.0), COARSE, h=h)
    n = dofs.num_dofs
    square = [name for name, value in vars(system).items()
              if isinstance(value, np.ndarray) and value.shape == (n, n)]
    assert square == ["matrix"]
    assert sparse.issparse(system.gram) and sparse.issparse(system.jumps)

    curl = assemble_curl_curl_block(5.0, dofs, COARSE)
    normal = assemble_normal_block(5.0, dofs, COARSE)
    c1, c2 = assemble_coupling_blocks(5.0, dofs, skeleton, COARSE)
    penalty = assemble_penalty_block(dofs, skeleton, 10.0)
    scale = scaled_max(system.matrix)
    assert np.abs(system.matrix - (curl + normal + c1 + c2 + penalty)).max() <= 1e-12 * scale
    assert np.abs(system.coupling_c1 - c1).max() <= 1e-12 * scale
    terms = system.terms()
    assert np.abs(terms["hypersingular"] - (curl + normal)).max() <= 1e-12 * scale

    u = np.random.default_rng(4).normal(size=n) + 1j * np.random.default_rng(5).normal(size=n)
    expected = (curl + normal) @ u
    assert np.abs(system.applyHypersingular(u) - expected).max() <= 1e-10 * np.abs(expected).max()
    explicit = assemble_full(5.0, dofs, skeleton, NitscheParams(nu=10.0), COARSE, h=h, explicit_adjoint=True)
    assert np.abs(explicit.applyHypersingular(u) - expected).max() <= 1e-10 * np.abs(expected).max()
    print("PASS: one N x N array, sparse penalty, terms recovered from J and K")


def test_far_tier_adds_in_place():
    print("\nTEST: Far Tier Memory")
    _, meshes, _ = build_model_screen(3)
    dofs = build_dofs(meshes, NONCONFORMING)
    table = element_table(dofs)
    ia, ib = near_pairs(table.centres, table.diameters, table.centres, table.diameters, COARSE.far_ratio)
    out = np.zeros((dofs.num_dofs, dofs.num_dofs), dtype=complex)
    saved = far_field.BATCH_ENTRIES
    far_field.BATCH_ENTRIES = 100_000
    tracemalloc.start()
    try:
        far_single_layer(2.0, table, ia, ib, COARSE.far, [(out, 1.0, -4.0)])
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
        far_field.BATCH_ENTRIES = saved
    assert np.abs(out).max() > 0.0
    assert peak < out.nbytes
    print(f"PASS: peak {peak / 1e6:.1f} MB against {out.nbytes / 1e6:.1f} MB for one N x N matrix")


def test_far_tier_accuracy():
    print("\nTEST: Far Tier Against All-Near Assembly")
    dofs, skeleton, h = model()
    params = NitscheParams(nu=10.0)
    near_only = assemble_full(2.0, dofs, skeleton, params, QuadratureOrders(far_ratio=math.inf), h=h)
    tiered = assemble_full(2.0, dofs, skeleton, params, QuadratureOrders(far_ratio=2.0), h=h)
    assert np.abs(tiered.matrix - near_only.matrix).max() <= 1e-5 * scaled_max(near_only.matrix)
    print("PASS: far pairs agree within 1e-5")


def test_thread_count_does_not_change_results():
    print("\nTEST: Deterministic Threaded Assembly")
    dofs, skeleton, h = model()
    params = NitscheParams(nu=10.0)
    one = assemble_full(2.0, dofs, skeleton, params, COARSE, threads=1, h=h)
    three = assemble_full(2.0, dofs, skeleton, params, COARSE, threads=3, h=h)
    assert np.array_equal(one.matrix, three.matrix)
    assert np.array_equal(one.rhs, three.rhs)
    print("PASS: bitwise identical for 1 and 3 threads")


if __name__ == "__main__":
    test_laplace_curl_block()
    test_conforming_laplace_system_is_positive_definite()
    test_scalar_block_matches_closed_form()
    test_normal_block()
    test_conjugate_wave_number()
    test_coupling_adjoint()
    test_nitsche_matrix_adjoint_symmetry()
    test_consistency_on_matching_meshes()
    test_coupling_kills_subdomain_constants()
    test_penalty_block()
    test_rhs()
    test_parameter_validation()
    test_with_penalty()
    test_system_holds_one_dense_matrix()
    test_far_tier_adds_in_place()
    test_far_tier_accuracy()
    test_thread_count_does_not_change_results()
