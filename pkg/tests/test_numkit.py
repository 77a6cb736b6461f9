import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geophase import model, numkit
from conftest import random_hermitian, random_unitary


def test_matmul_identity_and_permutation():
    a = np.array([[1 + 2j, 3], [4, 5 - 1j]])
    assert np.array_equal(numkit.matmul(np.eye(2), a), a)
    assert np.array_equal(numkit.matmul([[0, 1], [1, 0]], [[1], [0]]), [[0], [1]])


def test_matmul_half_turn_composition():
    # M(pi/2) = [[c, -c], [c, c]] with c = 1/sqrt2; squared by hand gives [[0, -1], [1, 0]]
    m = model.evolution(math.pi / 2)
    np.testing.assert_allclose(numkit.matmul(m, m), [[0, -1], [1, 0]], atol=1e-15)


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        numkit.matmul(np.eye(2), np.eye(3))


def test_matmul_associative(rng):
    for _ in range(50):
        a, b, c = (rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)) for _ in range(3))
        left = numkit.matmul(numkit.matmul(a, b), c)
        right = numkit.matmul(a, numkit.matmul(b, c))
        assert np.linalg.norm(left - right) <= 1e-12 * np.linalg.norm(left)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        numkit.as_matrix([[np.nan, 0], [0, 1]])


class TestEig2x2:
    def test_diagonal(self):
        e = numkit.eig_hermitian_2x2([[1, 0], [0, -1]])
        np.testing.assert_array_equal(e.values, [-1, 1])
        np.testing.assert_array_equal(e.vector(0), [0, 1])
        np.testing.assert_array_equal(e.vector(1), [1, 0])

    def test_sigma_x(self):
        e = numkit.eig_hermitian_2x2([[0, 1], [1, 0]])
        np.testing.assert_allclose(e.values, [-1, 1], atol=1e-15)
        s = 1 / math.sqrt(2)
        # the hand result (1/sqrt2)[-1, 1] spans the same line; the phase
        # convention (tie -> lowest index positive) picks [1, -1]/sqrt2
        hand = np.array([-s, s])
        np.testing.assert_allclose(np.outer(e.vector(0), e.vector(0).conj()), np.outer(hand, hand), atol=1e-15)
        np.testing.assert_allclose(e.vector(0), [s, -s], atol=1e-15)
        np.testing.assert_allclose(e.vector(1), [s, s], atol=1e-15)

    def test_full_model_hamiltonian(self):
        h = model.hamiltonian(model.ModelParams(K=1, phi=0))
        np.testing.assert_allclose(numkit.eig_hermitian_2x2(h).values, [0, 2], atol=1e-15)

    def test_rejects_non_hermitian(self):
        with pytest.raises(numkit.NotHermitianError):
            numkit.eig_hermitian_2x2([[1, 2], [0, 1]])

    def test_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            numkit.eig_hermitian_2x2(np.eye(3))

    def test_complex_offdiagonal_phase_convention(self):
        e = numkit.eig_hermitian_2x2([[0.3, 0.2 - 0.7j], [0.2 + 0.7j, -1.1]])
        for j in range(2):
            v = e.vector(j)
            k = int(np.argmax(np.abs(v)))
            assert v[k].imag == 0 and v[k].real > 0


class TestJacobi:
    def test_diagonal(self):
        np.testing.assert_array_equal(numkit.eig_hermitian(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])

    def test_matches_closed_form_2x2(self, rng):
        for _ in range(1000):
            a = random_hermitian(rng, 2)
            j, c = numkit.eig_hermitian(a), numkit.eig_hermitian_2x2(a)
            np.testing.assert_allclose(j.values, c.values, atol=1e-10)
            np.testing.assert_allclose(j.vectors, c.vectors, atol=1e-10)

    @pytest.mark.parametrize("n", [3, 5, 8, 16])
    def test_similarity_invariance(self, rng, n):
        for _ in range(20):
            a = random_hermitian(rng, n)
            u = random_unitary(rng, n)
            b = u.conj().T @ a @ u
            b = (b + b.conj().T) / 2
            np.testing.assert_allclose(numkit.eig_hermitian(a).values, numkit.eig_hermitian(b).values, atol=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 3, 6, 16])
    def test_against_lapack(self, rng, n):
        for _ in range(20):
            a = random_hermitian(rng, n)
            np.testing.assert_allclose(numkit.eig_hermitian(a).values, np.linalg.eigvalsh(a), atol=1e-10)

    def test_degenerate_projectors(self):
        a = np.diag([2.0, 2.0, -1.0]).astype(complex)
        u = np.array([[1, 1j, 0], [1, -1j, 0], [0, 0, math.sqrt(2)]]) / math.sqrt(2)
        b = u @ a @ u.conj().T
        e = numkit.eig_hermitian(b)
        np.testing.assert_allclose(e.values, [-1, 2, 2], atol=1e-12)
        got = e.vectors[:, 1:] @ e.vectors[:, 1:].conj().T
        want = u[:, :2] @ u[:, :2].conj().T
        np.testing.assert_allclose(got, want, atol=1e-10)

    def test_rejects_non_hermitian(self):
        with pytest.raises(numkit.NotHermitianError):
            numkit.eig_hermitian([[1, 1j], [1j, 1]])

    def test_non_convergence_is_reported(self, rng):
        with pytest.raises(numkit.ConvergenceError):
            numkit.eig_hermitian(random_hermitian(rng, 6), max_sweeps=1)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(numkit.eig_hermitian(np.zeros((4, 4))).values, np.zeros(4))


def _check_decomposition(a, e):
    norm_a = max(np.linalg.norm(a), 1e-300)
    assert np.all(np.diff(e.values) >= 0)
    for i in range(len(e.values)):
        v = e.vector(i)
        assert abs(np.linalg.norm(v) - 1) <= 1e-12
        assert np.linalg.norm(a @ v - e.values[i] * v) <= 1e-10 * norm_a
    gram = e.vectors.conj().T @ e.vectors
    assert np.abs(gram - np.eye(len(e.values))).max() <= 1e-10
    assert np.linalg.norm(e.reconstruct() - a) <= 1e-10 * norm_a


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 7), seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_decomposition_invariants(n, seed, scale):
    a = random_hermitian(np.random.default_rng(seed), n, scale)
    e = numkit.eig_hermitian(a)
    _check_decomposition(a, e)
    assert abs(e.values.sum() - np.trace(a).real) <= 1e-10 * max(1.0, np.linalg.norm(a))


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([2, 3]))
def test_trace_and_determinant(seed, n):
    a = random_hermitian(np.random.default_rng(seed), n)
    e = numkit.eig_hermitian_2x2(a) if n == 2 else numkit.eig_hermitian(a)
    _check_decomposition(a, e)
    assert abs(e.values.sum() - np.trace(a).real) <= 1e-10
    assert abs(np.prod(e.values) - np.linalg.det(a).real) <= 1e-10
