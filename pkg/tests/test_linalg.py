import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import gram_schmidt_classical
from wellround.errors import DimensionMismatch, NonFiniteEntries, OutOfConvergenceRegion, SingularMatrix
from wellround.linalg import (
    as_matrix,
    kan_decompose,
    matrix_exp,
    matrix_from_doc,
    matrix_log,
    matrix_to_doc,
    matrix_to_text,
    parse_matrix_text,
)

finite = st.floats(-3, 3, allow_nan=False)


def test_kan_identity():
    d = kan_decompose(np.eye(3))
    np.testing.assert_allclose(d.k, np.eye(3))
    np.testing.assert_allclose(d.a, np.ones(3))
    np.testing.assert_allclose(d.n, np.eye(3))


def test_kan_known_2x2():
    d = kan_decompose([[2.0, 1.0], [0.0, 3.0]])
    np.testing.assert_allclose(d.k, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(d.a, [2.0, 3.0])
    np.testing.assert_allclose(d.n, [[1.0, 0.5], [0.0, 1.0]])


def test_kan_reconstructs_random_det_one():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4))
    m /= abs(np.linalg.det(m)) ** 0.25
    if np.linalg.det(m) < 0:
        m[:, 0] *= -1
    d = kan_decompose(m)
    np.testing.assert_allclose(d.reconstruct(), m, atol=1e-12)
    assert np.linalg.det(d.k) == pytest.approx(1.0, abs=1e-10)


def test_kan_matches_classical_gram_schmidt():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(5, 5))
    q, a, n = gram_schmidt_classical(m)
    d = kan_decompose(m)
    np.testing.assert_allclose(d.k, q, atol=1e-10)
    np.testing.assert_allclose(d.a, a, atol=1e-10)
    np.testing.assert_allclose(d.n, n, atol=1e-10)


@given(arrays(float, (3, 3), elements=finite))
def test_kan_invariants(m):
    if abs(np.linalg.det(m)) < 1e-3:
        return
    d = kan_decompose(m)
    assert np.all(d.a > 0)
    np.testing.assert_allclose(d.k.T @ d.k, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(np.tril(d.n, -1), 0)
    np.testing.assert_allclose(np.diag(d.n), 1)
    np.testing.assert_allclose(d.reconstruct(), m, atol=1e-9)
    assert abs(abs(np.linalg.det(d.k)) - 1) < 1e-10
    if np.linalg.det(m) > 0:
        assert np.linalg.det(d.k) > 0


def test_kan_rejects_singular_and_nonsquare():
    with pytest.raises(SingularMatrix):
        kan_decompose([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(DimensionMismatch):
        kan_decompose([[1.0, 2.0, 3.0]])
    with pytest.raises(NonFiniteEntries):
        as_matrix([[1.0, np.nan], [0.0, 1.0]])


def test_exp_of_zero_and_nilpotent():
    np.testing.assert_allclose(matrix_exp(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(matrix_exp([[0.0, 2.0], [0.0, 0.0]]), [[1.0, 2.0], [0.0, 1.0]])


def test_exp_rotation():
    t = 0.7
    r = matrix_exp([[0.0, -t], [t, 0.0]])
    np.testing.assert_allclose(r, [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], atol=1e-13)


@given(arrays(float, (3, 3), elements=st.floats(-2, 2)))
def test_exp_matches_scipy(x):
    ours = matrix_exp(x)
    ref = scipy.linalg.expm(x)
    np.testing.assert_allclose(ours, ref, rtol=1e-11, atol=1e-11 * max(1.0, np.max(np.abs(ref))))


def test_exp_batched_matches_single():
    rng = np.random.default_rng(0)
    xs = rng.normal(size=(6, 3, 3)) * np.array([0.001, 0.1, 1, 2, 3, 5])[:, None, None]
    batch = matrix_exp(xs)
    for x, b in zip(xs, batch):
        np.testing.assert_allclose(b, matrix_exp(x), rtol=1e-14)


@given(arrays(float, (3, 3), elements=st.floats(-0.15, 0.15)))
def test_log_inverts_exp(x):
    np.testing.assert_allclose(matrix_log(matrix_exp(x)), x, atol=1e-12)


def test_log_unipotent_terminates():
    m = np.array([[1.0, 3.0, 5.0], [0.0, 1.0, 7.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(matrix_exp(matrix_log(m)), m, atol=1e-12)


def test_log_precondition():
    with pytest.raises(OutOfConvergenceRegion):
        matrix_log(np.diag([3.0, 1.0 / 3.0]))


def test_text_and_doc_roundtrip():
    m = np.array([[1.0, 0.5], [0.0, 0.1]])
    np.testing.assert_array_equal(parse_matrix_text(matrix_to_text(m)), m)
    np.testing.assert_array_equal(matrix_from_doc(matrix_to_doc(m)), m)
    with pytest.raises(DimensionMismatch):
        parse_matrix_text("2 2\n1 2\n3\n")


def test_large_entries_are_not_mistaken_for_singular():
    # well-conditioned but with entries in the thousands (a basis times a long unimodular word)
    m = np.array([[1.0, 0.0], [0.3, 1.0]]) @ np.array([[1597.0, 987.0], [987.0, 610.0]])
    d = kan_decompose(m)
    np.testing.assert_allclose(d.reconstruct(), m, rtol=1e-10)
    with pytest.raises(SingularMatrix):
        kan_decompose([[1e6, 2e6], [1.0, 2.0]])
