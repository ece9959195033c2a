import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import brute_shortest_length, brute_shortest_vectors_2d
from wellround.errors import DimensionMismatch, RankTooLarge, SingularBlock, SingularMatrix
from wellround.linalg import kan_decompose
from wellround.reduction import (
    LatticeBasis,
    ReducedBasis,
    boundary_flags,
    canonicalize,
    duality_map,
    extend_to_unimodular,
    int_det,
    int_identity,
    is_in_fundamental_domain,
    is_in_reduced_siegel_set,
    random_unimodular,
    reduce_basis,
    same_lattice,
    shape_representative,
    shortest_vector,
    sign_condition_holds,
)

THIN = np.array([[1.0, 0.5], [0.0, 0.1]])
HEX = np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]])


def test_shortest_vector_thin_basis():
    coords, length = shortest_vector(THIN)
    assert tuple(coords) == (-1, 2)
    assert length == pytest.approx(0.2, rel=1e-12)
    np.testing.assert_allclose(THIN @ coords, [0.0, 0.2], atol=1e-15)
    best, vecs = brute_shortest_vectors_2d(THIN)
    assert best == pytest.approx(length)
    assert tuple(coords) in vecs


def test_shortest_vector_hexagonal_prefers_first_column():
    coords, length = shortest_vector(HEX)
    assert tuple(coords) == (1, 0)
    assert length == pytest.approx(1.0)
    assert len(brute_shortest_vectors_2d(HEX)[1]) == 6


def test_shortest_vector_identity_tie():
    coords, _ = shortest_vector(np.eye(3))
    assert tuple(coords) == (1, 0, 0)


def test_reduce_thin_basis():
    rb = reduce_basis(THIN)
    np.testing.assert_allclose(rb.a, [0.2, 0.5], rtol=1e-12)
    assert abs(rb.n_coeffs[0, 1]) <= 0.5
    assert np.linalg.det(rb.reduced) > 0
    assert same_lattice(THIN, rb.reduced)


def test_reduce_2d_step_by_step():
    # a_1 is the shortest length, a_2 = covolume / a_1, |n_12| <= 1/2
    rng = np.random.default_rng(8)
    for _ in range(30):
        b = rng.normal(size=(2, 2))
        rb = reduce_basis(b)
        best, _ = brute_shortest_vectors_2d(b, box=25)
        assert rb.a[0] == pytest.approx(best, rel=1e-9)
        assert rb.a[1] == pytest.approx(abs(np.linalg.det(b)) / best, rel=1e-9)
        assert abs(rb.n_coeffs[0, 1]) <= 0.5 + 1e-12


def _check_reduced(b, rb):
    m = b.shape[0]
    n = rb.n_coeffs
    assert np.max(np.abs(np.triu(n, 1))) <= 0.5 + 1e-9
    a = rb.a
    assert np.all(a[1:] >= math.sqrt(3) / 2 * a[:-1] - 1e-9)
    assert abs(int_det(rb.transform)) == 1
    np.testing.assert_allclose(b @ np.array(rb.transform, dtype=float), rb.reduced, atol=1e-9)
    assert np.linalg.det(rb.reduced) > 0
    np.testing.assert_allclose(rb.kan.reconstruct(), rb.reduced, atol=1e-9)
    assert rb.m == m


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_reduce_random_integer_bases(m, seed):
    rng = np.random.default_rng(seed)
    b = rng.integers(-5, 6, size=(m, m)).astype(float)
    if abs(np.linalg.det(b)) < 0.5:
        return
    rb = reduce_basis(b)
    _check_reduced(b, rb)
    assert rb.a[0] == pytest.approx(brute_shortest_length(b), rel=1e-9)
    assert is_in_reduced_siegel_set(rb.reduced).member


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_reduce_is_basis_independent(m, seed):
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(m, m))
    u = random_unimodular(m, rng)
    r1, r2 = reduce_basis(b), reduce_basis(b @ np.array(u, dtype=float))
    # a_1 is a lattice invariant; the covolume too
    assert r1.a[0] == pytest.approx(r2.a[0], rel=1e-9)
    assert np.prod(r1.a) == pytest.approx(np.prod(r2.a), rel=1e-9)


def test_siegel_membership_violations():
    bad_n = np.array([[1.0, 0.7], [0.0, 1.0]])
    rep = is_in_reduced_siegel_set(bad_n)
    assert not rep.member
    assert any(v[0] == ("n", 1, 2) for v in rep.violations)
    # a_2 much smaller than a_1: the second column projects to a shorter vector
    bad_a = np.array([[1.0, 0.0], [0.0, 0.5]])
    rep = is_in_reduced_siegel_set(bad_a)
    assert not rep.member
    assert any(v[0][0] == "dist" for v in rep.violations)
    assert rep.candidate_vectors_tested > 0


def test_siegel_membership_of_identity_is_on_boundary():
    rep = is_in_reduced_siegel_set(np.eye(2))
    assert rep.member
    assert rep.active
    assert is_in_fundamental_domain(np.eye(2))


def test_hex_basis_is_reduced():
    assert is_in_reduced_siegel_set(HEX).member


def _as_rb(m):
    m = np.asarray(m, dtype=float)
    return ReducedBasis(reduced=m, transform=int_identity(m.shape[0]), kan=kan_decompose(m), original=m)


def test_canonicalize_flips_first_row_sign_m3():
    n = np.array([[1.0, -0.3, 0.2], [0.0, 1.0, 0.1], [0.0, 0.0, 1.0]])
    m = np.diag([1.0, 1.1, 1.2]) @ n
    c = canonicalize(_as_rb(m))
    assert c.n_coeffs[0, 1] == pytest.approx(0.3)
    assert c.n_coeffs[0, 2] >= 0
    assert np.linalg.det(c.reduced) == pytest.approx(np.linalg.det(m))
    assert same_lattice(m, c.reduced)
    assert sign_condition_holds(c.n_coeffs)


def test_canonicalize_even_flip_invariance():
    rng = np.random.default_rng(9)
    rb = reduce_basis(rng.normal(size=(3, 3)))
    flipped = rb.reduced * np.array([-1.0, -1.0, 1.0])
    t = rb.transform.copy()
    t[:, 0], t[:, 1] = -t[:, 0], -t[:, 1]
    rb2 = ReducedBasis(flipped, t, kan_decompose(flipped), rb.original)
    np.testing.assert_allclose(canonicalize(rb).reduced, canonicalize(rb2).reduced, atol=1e-12)


def test_canonicalize_even_dimension_sign_rules():
    rng = np.random.default_rng(10)
    for _ in range(20):
        rb = reduce_basis(rng.normal(size=(4, 4)))
        c = canonicalize(rb)
        assert np.all(c.n_coeffs[0, 2:] >= -1e-12)
        assert np.linalg.det(c.reduced) > 0
        np.testing.assert_allclose(c.kan.reconstruct(), c.reduced, atol=1e-10)
        np.testing.assert_allclose(rb.original @ np.array(c.transform, dtype=float), c.reduced, atol=1e-9)


def test_shape_representative_formula():
    rb = reduce_basis(THIN)
    s = shape_representative(rb)
    c = canonicalize(rb)
    expected = np.diag([0.2, 0.5]) @ c.n_coeffs / math.sqrt(0.1)
    np.testing.assert_allclose(s, expected, rtol=1e-10)
    assert np.linalg.det(s) == pytest.approx(1.0)
    assert np.allclose(np.tril(s, -1), 0)


def test_boundary_flags_for_identity():
    flags = boundary_flags(reduce_basis(np.eye(2)))
    assert ("dist", 1, (0, 1)) in flags


def test_duality_map_example_and_twice():
    a = np.array([[1.0], [1.0]])
    b = np.array([[1.0], [0.0]])
    pb, a2 = duality_map(a, b)
    np.testing.assert_allclose(pb, [[0.5], [-0.5]])
    np.testing.assert_allclose(a2, a)
    assert float((a.T @ pb)[0, 0]) == pytest.approx(0.0)
    # applying twice: (A, (I - P_A) B)
    x, y = duality_map(pb, a2)
    np.testing.assert_allclose(y, pb)
    proj = np.eye(2) - pb @ np.linalg.pinv(pb)
    np.testing.assert_allclose(x, proj @ a)


@given(arrays(float, (4, 4), elements=st.floats(-2, 2)), st.integers(1, 3))
def test_duality_map_orthogonality(m, d):
    if abs(np.linalg.det(m)) < 1e-2:
        return
    a, b = m[:, :d], m[:, d:]
    pb, _ = duality_map(a, b)
    np.testing.assert_allclose(a.T @ pb, 0, atol=1e-8)


def test_duality_map_errors():
    with pytest.raises(SingularBlock):
        duality_map(np.zeros((2, 1)), np.ones((2, 1)))
    with pytest.raises(DimensionMismatch):
        duality_map(np.ones((3, 1)), np.ones((3, 1)))


@given(st.lists(st.integers(-30, 30), min_size=2, max_size=5))
def test_extend_to_unimodular(v):
    g = math.gcd(*v)
    if g == 0:
        return
    y = [x // g for x in v]
    w = extend_to_unimodular(y)
    assert [int(x) for x in w[:, 0]] == y
    assert int_det(w) == 1


def test_errors():
    with pytest.raises(SingularMatrix):
        reduce_basis([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(RankTooLarge):
        reduce_basis(np.eye(9))
    with pytest.raises(DimensionMismatch):
        reduce_basis(np.ones((2, 3)))


def test_lattice_basis_type():
    lb = LatticeBasis.from_matrix(THIN)
    assert lb.m == 2
    assert lb.covolume == pytest.approx(0.1)
    assert shortest_vector(lb)[1] == pytest.approx(0.2)


def test_reduce_rank_8_runs():
    rng = np.random.default_rng(12)
    rb = reduce_basis(rng.normal(size=(8, 8)))
    _check_reduced(rb.original, rb)
