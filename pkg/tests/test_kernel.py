import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphadvect.errors import NotSymmetric, ValidationError
from graphadvect.graphs import (
    FamilyKind,
    GraphFamily,
    LinearOperator,
    OperatorKind,
    advection_operator,
    from_edge_list,
    generate,
)
from graphadvect.kernel import (
    MaternHyperparams,
    matern_kernel,
    psd_check,
    spectral_weights,
    symmetrized_average,
    thin_svd,
)

from conftest import random_graph

UPWIND3 = np.array([[1.0, 0, 0], [-1, 1, 0], [0, -1, 0]])


def op_of(m):
    m = np.asarray(m, dtype=float)
    return LinearOperator(m, OperatorKind.ADVECTION, m.shape[0])


def check_factorization(f, m):
    n = m.shape[0]
    scale = max(1.0, np.linalg.norm(m))
    assert np.linalg.norm(f.reconstruct() - m) <= 1e-10 * scale
    np.testing.assert_allclose(f.left_vectors.T @ f.left_vectors, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(f.right_vectors.T @ f.right_vectors, np.eye(n), atol=1e-10)
    assert np.all(np.diff(f.singular_values) <= 0) and f.singular_values[-1] >= 0


def test_svd_zero_matrix():
    f = thin_svd(op_of(np.zeros((3, 3))))
    np.testing.assert_array_equal(f.singular_values, 0)
    check_factorization(f, np.zeros((3, 3)))


def test_svd_diagonal():
    f = thin_svd(op_of(np.diag([3.0, 2.0, 1.0])))
    np.testing.assert_allclose(f.singular_values, [3, 2, 1])


def test_svd_upwind3_against_eig_of_product():
    f = thin_svd(op_of(UPWIND3))
    oracle = np.sqrt(np.clip(np.sort(np.linalg.eigvalsh(UPWIND3.T @ UPWIND3))[::-1], 0, None))
    np.testing.assert_allclose(f.singular_values, oracle, rtol=1e-8, atol=1e-12)
    check_factorization(f, UPWIND3)


@pytest.mark.parametrize("seed", range(15))
def test_svd_random_graphs(seed):
    g = random_graph(np.random.default_rng(seed), (2, 30))
    m = advection_operator(g).matrix
    f = thin_svd(advection_operator(g))
    check_factorization(f, m)
    oracle = np.sqrt(np.clip(np.sort(np.linalg.eigvalsh(m.T @ m))[::-1], 0, None))
    # relative to the largest value; small ones lose digits through m^T m
    np.testing.assert_allclose(f.singular_values, oracle, rtol=0, atol=1e-8 * max(1, oracle[0]))


def test_svd_sign_convention_deterministic(rng):
    g = random_graph(rng, (6, 12))
    a, b = thin_svd(advection_operator(g)), thin_svd(advection_operator(g))
    np.testing.assert_array_equal(a.right_vectors, b.right_vectors)
    for col in a.right_vectors.T:
        lead = col[np.abs(col) > 1e-10][0]
        assert lead > 0


def test_kernel_scalar_case():
    f = thin_svd(op_of(np.zeros((1, 1))))
    k = matern_kernel(f, MaternHyperparams(1.0, np.sqrt(2.0), 1.0))
    np.testing.assert_allclose(k.matrix, [[1.0]], rtol=1e-15)


def test_kernel_isotropic_case():
    s = 1.7
    f = thin_svd(op_of(s * np.eye(4)))
    h = MaternHyperparams(0.8, 1.3, 2.0)
    expected = 4.0 * (2 * 0.8 / 1.3**2 + s**2) ** -0.8
    np.testing.assert_allclose(matern_kernel(f, h).matrix, expected * np.eye(4), rtol=1e-13, atol=1e-15)


def test_complete_graph_diagonal_uniform():
    f = thin_svd(advection_operator(generate(GraphFamily(FamilyKind.COMPLETE, 5))))
    d = np.diag(matern_kernel(f, MaternHyperparams(1.5, 2.0, 1.0)).matrix)
    assert np.ptp(d) <= 1e-10


def test_kernel_symmetric():
    f = thin_svd(advection_operator(generate(GraphFamily(FamilyKind.UPWIND_LINE, 20))))
    k = matern_kernel(f, MaternHyperparams(0.7, 3.0, 1.2)).matrix
    np.testing.assert_array_equal(k, k.T)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), nu=st.floats(0.2, 3.0), kappa=st.floats(0.2, 8.0), scale=st.floats(0.2, 4.0))
def test_kernel_eigenvalues_are_spectral_weights(seed, nu, kappa, scale):
    g = random_graph(np.random.default_rng(seed), (2, 25))
    f = thin_svd(advection_operator(g))
    h = MaternHyperparams(nu, kappa, scale)
    k = matern_kernel(f, h)
    ok, lo = psd_check(k)
    assert ok and lo > 0
    expected = np.sort(spectral_weights(f.singular_values, h))
    np.testing.assert_allclose(np.linalg.eigvalsh(k.matrix), expected, rtol=1e-10, atol=1e-8)


def test_nu_monotone_when_base_at_least_one():
    f = thin_svd(advection_operator(generate(GraphFamily(FamilyKind.LOOP, 12))))
    kappa = 1.0
    eig = []
    for nu in (0.5, 1.0, 2.0):
        assert np.all(2 * nu / kappa**2 + f.singular_values**2 >= 1)
        eig.append(np.linalg.eigvalsh(matern_kernel(f, MaternHyperparams(nu, kappa)).matrix))
    assert np.all(eig[1] <= eig[0] + 1e-12) and np.all(eig[2] <= eig[1] + 1e-12)


def test_relabel_invariance(rng):
    g = random_graph(rng, (6, 15))
    h = MaternHyperparams(1.2, 2.0, 1.0)
    a = np.linalg.eigvalsh(matern_kernel(thin_svd(advection_operator(g)), h).matrix)
    perm = rng.permutation(g.node_count)
    b = np.linalg.eigvalsh(matern_kernel(thin_svd(advection_operator(g.relabel(perm))), h).matrix)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_symmetrized_average():
    sym = np.array([[2.0, -1], [-1, 3]])
    np.testing.assert_array_equal(symmetrized_average(op_of(sym)).matrix, sym)
    out = symmetrized_average(op_of(UPWIND3))
    assert out.kind is OperatorKind.SYMMETRIZED_AVERAGE
    np.testing.assert_array_equal(out.matrix, [[1, -0.5, 0], [-0.5, 1, -0.5], [0, -0.5, 0]])
    # trailing 2x2 minor is 1*0 - 0.25 < 0: indefinite
    ok, lo = psd_check(out)
    assert not ok and lo < 0


def test_symmetrized_average_balanced_loop_is_psd():
    op = advection_operator(generate(GraphFamily(FamilyKind.LOOP, 9, 2.0, 0.5)))
    ok, lo = psd_check(symmetrized_average(op))
    assert ok


def test_psd_check():
    assert psd_check(np.eye(3)) == (True, 1.0)
    ok, lo = psd_check(np.diag([1.0, -1.0]))
    assert not ok and lo == -1.0
    with pytest.raises(NotSymmetric):
        psd_check(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize("kw", [dict(nu=0, kappa=1), dict(nu=1, kappa=-1), dict(nu=1, kappa=1, output_scale=0),
                                dict(nu=1, kappa=1, noise_variance=-1e-3), dict(nu=float("inf"), kappa=1)])
def test_hyperparams_validated(kw):
    with pytest.raises(ValidationError):
        MaternHyperparams(**kw)
