import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import gauss_circle, sl2z_double_loop
from wellround.certifier import ball, box, disk, polygon, square
from wellround.counting import (
    count_integer_points,
    count_sl2z_bruteforce,
    count_sl2z_norm_ball,
    counting_report,
    sl2_ball_volume,
    sl2_ball_volume_mc,
)
from wellround.errors import ParameterOutOfRange, ScaleTooLarge
from wellround.groups import special_orthogonal


@pytest.mark.parametrize("T,expected", [(1, 5), (2, 13), (10, 317)])
def test_gauss_circle_examples(T, expected):
    assert count_integer_points(disk(1.0), T) == expected
    assert gauss_circle(T) == expected


def test_gauss_circle_error_bound():
    for T in (25, 50, 100, 200):
        assert abs(count_integer_points(disk(1.0), T) - math.pi * T * T) <= 10 * T


def test_oracle_equivalence_random_disks():
    rng = np.random.default_rng(0)
    for T in rng.integers(1, 40, size=20):
        assert count_integer_points(disk(1.0), int(T)) == gauss_circle(int(T))


def test_count_3d_ball_against_loop():
    T = 6
    ref = sum(1 for p in itertools.product(range(-T, T + 1), repeat=3) if sum(v * v for v in p) <= T * T)
    assert count_integer_points(ball(1.0, n=3), T) == ref


def test_count_square_and_polygon():
    assert count_integer_points(square(2.0), 3) == 49
    tri = polygon([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
    # lattice triangle of leg T has (T+1)(T+2)/2 points
    assert count_integer_points(tri, 7) == 36


@given(st.integers(-3, 3), st.integers(-3, 3), st.floats(0.5, 6.0))
def test_translation_invariance(a, b, T):
    body = disk(1.0, center=(0.31, -0.17))
    assert count_integer_points(body, T, shift=(a, b)) == count_integer_points(body, T)


def test_integer_translation_of_body():
    assert count_integer_points(disk(1.5, center=(2.0, -1.0)), 1) == count_integer_points(disk(1.5), 1)


def test_count_errors():
    with pytest.raises(ScaleTooLarge):
        count_integer_points(disk(1.0), 2e4)
    with pytest.raises(ScaleTooLarge):
        count_integer_points(box([-1] * 5, [1] * 5), 1)
    with pytest.raises(ParameterOutOfRange):
        count_integer_points(disk(1.0), 2, shift=(0.5, 0.0))
    from wellround.certifier import whole

    with pytest.raises(ParameterOutOfRange):
        count_integer_points(whole(special_orthogonal(2)), 1)


def test_sl2z_examples():
    assert count_sl2z_norm_ball(1.5) == 4
    assert count_sl2z_norm_ball(math.sqrt(2) - 1e-9) == 0
    assert count_sl2z_norm_ball(math.sqrt(2)) == 4
    assert sl2z_double_loop(1.5) == 4


def test_sl2z_oracle_equivalence():
    rng = np.random.default_rng(1)
    for bound in rng.uniform(1.0, 12.0, size=20):
        n = count_sl2z_norm_ball(bound)
        assert n == sl2z_double_loop(bound)
        assert n % 2 == 0


def test_sl2z_against_four_fold_scan():
    for bound in (2, 3.3, 5):
        assert count_sl2z_norm_ball(bound) == count_sl2z_bruteforce(bound)


def test_sl2z_inverse_symmetry():
    # the set of elements found is closed under inversion and negation
    L = 30
    m = math.isqrt(L)
    found = {
        (a, b, c, d)
        for a, b, c, d in itertools.product(range(-m, m + 1), repeat=4)
        if a * d - b * c == 1 and a * a + b * b + c * c + d * d <= L
    }
    assert {(d, -b, -c, a) for a, b, c, d in found} == found
    assert {(-a, -b, -c, -d) for a, b, c, d in found} == found
    assert len(found) == count_sl2z_norm_ball(math.sqrt(L))


def test_sl2z_doubling():
    c50, c100, c200 = (count_sl2z_norm_ball(T) for T in (50, 100, 200))
    assert 3.6 <= c100 / c50 <= 4.4
    assert 3.6 <= c200 / c100 <= 4.4


def test_sl2z_scale_limit():
    with pytest.raises(ScaleTooLarge):
        count_sl2z_norm_ball(501)


def test_sl2_volume_analytic_vs_mc():
    for bound in (2.0, 5.0):
        v = sl2_ball_volume(bound)
        mc, se = sl2_ball_volume_mc(bound, n=200_000)
        assert abs(v - mc) <= 4 * se
    assert sl2_ball_volume(1.4) == 0.0
    assert sl2_ball_volume(math.sqrt(2)) == pytest.approx(0.0, abs=1e-6)


def test_sl2_volume_grows_quadratically():
    assert sl2_ball_volume(200) / sl2_ball_volume(100) == pytest.approx(4.0, rel=0.01)


def test_report_integer_points():
    rep = counting_report("integer_points", [10, 20, 50], body=disk(1.0))
    assert rep.counts[0] == 317
    for T, c, r in zip(rep.T_grid, rep.counts, rep.ratios):
        assert abs(c / T**2 - math.pi) * T < 10
        assert r == pytest.approx(c / (math.pi * T * T))
    assert rep.counts == sorted(rep.counts)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "T,count,volume,ratio,doubling"
    assert len(lines) == 4


def test_report_monte_carlo_reference():
    rep = counting_report("integer_points", [10], reference="monte_carlo_volume", body=disk(1.0))
    assert rep.reference_volumes[0] == pytest.approx(100 * math.pi, rel=0.02)


def test_report_sl2z():
    rep = counting_report("sl2z_ball", [50, 100])
    assert all(3.6 <= d <= 4.4 for d in rep.doubling_ratios)
    assert rep.counts == [count_sl2z_norm_ball(50), count_sl2z_norm_ball(100)]


def test_report_sl2z_doubling_beyond_limit_is_none():
    rep = counting_report("sl2z_ball", [300])
    assert rep.doubling_ratios == [None]
    assert rep.to_csv().splitlines()[1].endswith(",")


def test_report_empty_grid():
    rep = counting_report("sl2z_ball", [])
    assert rep.counts == [] and rep.to_csv() == "T,count,volume,ratio,doubling\n"


def test_report_errors():
    with pytest.raises(ParameterOutOfRange):
        counting_report("primes", [1])
    with pytest.raises(ParameterOutOfRange):
        counting_report("integer_points", [1])
    with pytest.raises(ParameterOutOfRange):
        counting_report("sl2z_ball", [1], reference="guess")
