import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wellround.certifier import kan_box
from wellround.errors import NoWindow, UnknownGroup
from wellround.groups import (
    SpecialLinear2,
    ad_operator_norm,
    additivity_constant,
    ball_sample,
    builtin_group,
    diagonal_A,
    euclidean,
    haar_sample_window,
    product,
    rotation,
    special_linear,
    special_orthogonal,
    unipotent_N,
)

GROUPS = ["R1", "R3", "A3", "N3", "SO2", "SO3", "SL2", "R1xSO2", "A2xN2"]


@pytest.mark.parametrize("name", GROUPS)
def test_exp_lands_in_group(name):
    g = builtin_group(name)
    rng = np.random.default_rng(0)
    coords = 0.4 * g.unit_ball_coords(rng, 50)
    assert np.max(g.constraint_residual(g.exp(coords))) < 1e-9


@pytest.mark.parametrize("name", GROUPS)
def test_log_inverts_exp_in_chart(name):
    g = builtin_group(name)
    rng = np.random.default_rng(1)
    coords = 0.3 * g.unit_ball_coords(rng, 20)
    np.testing.assert_allclose(g.log(g.exp(coords)), coords, atol=1e-10)


@pytest.mark.parametrize("name", GROUPS)
def test_ball_samples_within_radius(name):
    g = builtin_group(name)
    u = ball_sample(g, 0.2, np.random.default_rng(2), 200)
    assert np.all(g.chart_norm(g.log(u)) <= 0.2 + 1e-10)


def test_lie_bases_orthonormal():
    for name in GROUPS:
        g = builtin_group(name)
        b = np.stack(g.lie_basis)
        gram = np.einsum("iab,jab->ij", b, b)
        np.testing.assert_allclose(gram, np.eye(g.dim), atol=1e-12)


def test_dimensions():
    assert euclidean(3).dim == 3
    assert diagonal_A(4).dim == 3
    assert unipotent_N(4).dim == 6
    assert special_orthogonal(3).dim == 3
    assert special_linear(2).dim == 3
    assert product([euclidean(1), euclidean(2)]).dim == 3


def test_unknown_groups():
    with pytest.raises(UnknownGroup):
        builtin_group("Q2")
    with pytest.raises(UnknownGroup):
        special_linear(3)
    with pytest.raises(UnknownGroup):
        builtin_group("SO1")


def test_ad_norm_of_diagonal():
    g = special_linear(2)
    t = 0.3
    assert ad_operator_norm(g, np.diag([math.exp(t), math.exp(-t)])) == pytest.approx(math.exp(2 * t))
    assert ad_operator_norm(g, rotation(1.1)) == pytest.approx(1.0)


def test_abelian_ad_is_identity():
    g = euclidean(2)
    assert ad_operator_norm(g, g.exp([3.0, -1.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["R2", "SO3", "SL2"])
def test_additivity_constant_close_to_one(name):
    rep = additivity_constant(builtin_group(name), np.random.default_rng(0), n_samples=20_000)
    assert rep.c >= 1.0
    assert rep.c < 1.1


def test_so_haar_first_column_uniform():
    # for Haar-random rotations the first column is uniform on the sphere: E[x_i^2] = 1/3
    g = special_orthogonal(3)
    mats, w = haar_sample_window(g, np.random.default_rng(5), 40_000)
    assert np.all(w == 1.0)
    second = np.mean(mats[:, :, 0] ** 2, axis=0)
    np.testing.assert_allclose(second, 1 / 3, atol=0.01)
    assert np.allclose(np.linalg.det(mats), 1.0)


def _haar_mass(indicator, group, n, seed):
    mats, w = group.sample_window(np.random.default_rng(seed), n)
    vals = w * indicator(mats)
    vol = group.window_volume()
    return vol * vals.mean(), vol * vals.std(ddof=1) / math.sqrt(n)


def test_sl2_haar_is_left_and_right_invariant():
    g = special_linear(2)
    s = kan_box((-0.3, 0.3), (-0.3, 0.3), group=g)
    exact = 2 * math.pi * (math.exp(0.3) - math.exp(-0.3)) * 0.6
    h = g.exp([0.12, -0.08, 0.1])
    h_inv = np.linalg.inv(h)
    left, se_l = _haar_mass(lambda m: s.member(h_inv @ m), g, 400_000, 1)
    right, se_r = _haar_mass(lambda m: s.member(m @ h_inv), g, 400_000, 2)
    base, se_b = _haar_mass(s.member, g, 400_000, 3)
    for est, se in ((left, se_l), (right, se_r), (base, se_b)):
        assert abs(est - exact) < 4 * se


def test_sl2_kan_coordinates_roundtrip():
    rng = np.random.default_rng(4)
    th = rng.uniform(0, 2 * math.pi, 50)
    t = rng.uniform(-1, 1, 50)
    x = rng.uniform(-1, 1, 50)
    m = SpecialLinear2.from_kan(th, t, x)
    c = SpecialLinear2.kan_coords(m)
    np.testing.assert_allclose(np.mod(c[:, 0], 2 * math.pi), th, atol=1e-12)
    np.testing.assert_allclose(c[:, 1], t, atol=1e-12)
    np.testing.assert_allclose(c[:, 2], x, atol=1e-12)


def test_window_required():
    g = special_orthogonal(2)
    assert g.window_volume() == 1.0
    from wellround.groups import GroupModel

    bare = GroupModel("X", 2, (np.eye(2),), True)
    with pytest.raises(NoWindow):
        bare.window_volume()


@given(st.floats(0.01, 0.4), st.integers(0, 10_000))
def test_product_ball_is_product_of_balls(eps, seed):
    g = product([euclidean(1), special_orthogonal(2)])
    u = ball_sample(g, eps, np.random.default_rng(seed), 5)
    for f, block in g.blocks(u):
        assert np.all(f.chart_norm(f.log(block)) <= eps + 1e-12)


def test_with_window_changes_volume_only():
    g = euclidean(2).with_window((-3, -3), (3, 3))
    assert g.window_volume() == 36.0
    assert g.name == "R2"
