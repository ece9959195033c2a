"""Acceptance criteria 1-10.

Every test records one ``ACCEPTANCE <n>: PASS|FAIL <detail>`` line; the
lines are printed as they happen and again in the pytest terminal summary.
Run this file directly (``python tests/test_acceptance.py``) to print the
lines without pytest.
"""

import contextlib
import io
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_shortest_length, distance_to_polygon_boundary, gauss_circle, sl2z_double_loop
from wellround.calculus import (
    blc_from_dilation,
    certificate,
    family_certificate,
    fibered_constant,
    fibered_oracle,
    product_certificate,
    pullback_certificate,
    shipped_disk_family,
)
from wellround.certifier import certify, combine_sets, disk, pointwise_tube_check, single_set_constant, square
from wellround.cli import run
from wellround.counting import count_integer_points, count_sl2z_norm_ball
from wellround.reduction import boundary_flags, canonicalize, random_unimodular, reduce_basis

FIX = Path(__file__).parent / "fixtures"
RESULTS = {}


def _record(n: int, ok: bool, detail: str):
    line = f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _integer_corpus(size=1000, seed=2024):
    rng = np.random.default_rng(seed)
    corpus = []
    while len(corpus) < size:
        m = int(rng.choice([2, 3, 4, 5]))
        b = rng.integers(-5, 6, size=(m, m)).astype(float)
        if round(abs(np.linalg.det(b))) >= 1:
            corpus.append(b)
    return corpus


@pytest.fixture(scope="module")
def corpus():
    t0 = time.perf_counter()
    bases = _integer_corpus()
    reduced = [reduce_basis(b) for b in bases]
    return bases, reduced, time.perf_counter() - t0


def test_criterion_1_reduced_basis_invariants(corpus):
    bases, reduced, elapsed = corpus
    bad = 0
    for rb in reduced:
        n_ok = np.max(np.abs(np.triu(rb.n_coeffs, 1))) <= 0.5 + 1e-9
        a = rb.a
        a_ok = np.all(a[1:] >= math.sqrt(3) / 2 * a[:-1] - 1e-9)
        bad += not (n_ok and a_ok)
    ok = bad == 0 and elapsed < 60
    _record(1, ok, f"{len(bases) - bad}/{len(bases)} bases satisfy |n_ij|<=1/2 and a_(j+1)>=(sqrt3/2)a_j; {elapsed:.1f}s")


def test_criterion_2_shortest_vector_agreement(corpus):
    bases, reduced, _ = corpus
    worst = max(abs(rb.a[0] - brute_shortest_length(b)) / brute_shortest_length(b) for b, rb in zip(bases, reduced))
    _record(2, worst <= 1e-9, f"max relative error of a_1 vs box-scan oracle {worst:.2e} on {len(bases)} bases")


def test_criterion_3_fundamental_domain_uniqueness():
    rng = np.random.default_rng(3)
    flagged = compared = 0
    worst = 0.0
    for _ in range(200):
        m = int(rng.choice([2, 3, 4]))
        b = rng.normal(size=(m, m))
        u = np.array(random_unimodular(m, rng), dtype=float)
        c1 = canonicalize(reduce_basis(b))
        c2 = canonicalize(reduce_basis(b @ u))
        if boundary_flags(c1) or boundary_flags(c2):
            flagged += 1
            continue
        compared += 1
        worst = max(worst, float(np.max(np.abs(c1.reduced - c2.reduced))))
    ok = worst <= 1e-6 and flagged < 0.05 * 200
    _record(3, ok, f"{compared} pairs agree to {worst:.1e}; {flagged} boundary cases excluded")


def test_criterion_4_certifier_exact_mode():
    t0 = time.perf_counter()
    rep = certify(disk(1.0), eps_grid=(0.01, 0.02, 0.05), n_points=200_000, mode="exact")
    elapsed = time.perf_counter() - t0
    zs = []
    for c in rep.cells:
        e = c["eps"]
        zs.append(abs(c["vol_plus"] - math.pi * (1 + 2 * e) ** 2) / c["se_plus"])
        zs.append(abs(c["vol_minus"] - math.pi * (1 - 2 * e) ** 2) / c["se_minus"])
    c_ok = abs(rep.fitted_C - 8) <= 0.15 * 8
    ok = max(zs) <= 3 and c_ok and elapsed < 30
    _record(
        4,
        ok,
        f"max |z| {max(zs):.2f}; fitted_C ({rep.fit_method}) {rep.fitted_C:.3f} "
        f"(max_slope {rep.max_slope_C:.3f}); {elapsed:.1f}s",
    )


def test_criterion_5_tube_identity():
    verts = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
    sq = square(1.0)
    own = pointwise_tube_check(sq, 0.05, n_points=10_000)
    ind = pointwise_tube_check(
        sq,
        0.05,
        n_points=10_000,
        boundary_distance=lambda g: np.array([distance_to_polygon_boundary(p, verts) for p in sq.group.log(g)]),
    )
    ok = own.disagreements == 0 and ind.disagreements == 0
    _record(
        5,
        ok,
        f"disagreements {own.disagreements} (signed distance) and {ind.disagreements} (segment oracle) on 10^4 samples",
    )


def test_criterion_6_constant_calculus_exactness():
    checks = {
        "2c/mu": single_set_constant(1, 2) == (1, 1) and single_set_constant(1, 1) == (2, Fraction(1, 2)),
        "intersection": combine_sets(1, 1, 1, 1, Fraction(1, 2), Fraction(3, 2))[0] == 8,
        "pullback": pullback_certificate(certificate(2), 3).C == 6
        and pullback_certificate(certificate(Fraction(1, 2)), 1).C == 1,
        "product": product_certificate([certificate(1), certificate(1)]).C == 3
        and product_certificate([certificate(1)] * 3).C == 9,
        "fibered": fibered_constant(1, 1, 1, 1, 2).C == 18,
        "blc": blc_from_dilation(1, 1, 1) == 256 and blc_from_dilation(1, 1, 2) == 4096,
    }
    exact = isinstance(fibered_constant(1, 1, 1, 1, 2).C, Fraction)
    failed = [k for k, v in checks.items() if not v]
    _record(6, not failed and exact, f"{len(checks) - len(failed)}/{len(checks)} formula families exact" + (f"; failed {failed}" if failed else ""))


def test_criterion_7_dominance():
    fam = shipped_disk_family()
    bound = family_certificate(fam).C
    rep = certify(fibered_oracle(fam), eps_grid=(0.01, 0.05), n_points=200_000)
    worst = max(rep.fitted_C, rep.max_slope_C, rep.C_band[1])
    _record(
        7,
        worst <= float(bound),
        f"Monte Carlo C {rep.fitted_C:.2f} (max_slope {rep.max_slope_C:.2f}, band top {rep.C_band[1]:.2f}) "
        f"<= formula {float(bound):.2f}",
    )


def test_criterion_8_gauss_circle():
    t0 = time.perf_counter()
    small = [count_integer_points(disk(1.0), T) for T in (1, 2, 10)]
    oracle = [gauss_circle(T) for T in (1, 2, 10)]
    worst = max(abs(count_integer_points(disk(1.0), T) - math.pi * T * T) / T for T in range(1, 201))
    elapsed = time.perf_counter() - t0
    ok = small == [5, 13, 317] == oracle and worst <= 10 and elapsed < 10
    _record(8, ok, f"counts {small}; max |N(T)-piT^2|/T over T<=200 is {worst:.2f}; {elapsed:.1f}s")


def test_criterion_9_sl2z_growth():
    t0 = time.perf_counter()
    c50, c100, c200 = (count_sl2z_norm_ball(T) for T in (50, 100, 200))
    r1, r2 = c100 / c50, c200 / c100
    low = count_sl2z_norm_ball(math.sqrt(2) - 1e-9)
    at15 = count_sl2z_norm_ball(1.5)
    elapsed = time.perf_counter() - t0
    oracle_ok = sl2z_double_loop(1.5) == at15 and sl2z_double_loop(1.41) == low
    ok = 3.6 <= r1 <= 4.4 and 3.6 <= r2 <= 4.4 and low == 0 and at15 == 4 and oracle_ok and elapsed < 60
    _record(9, ok, f"doubling ratios {r1:.3f}, {r2:.3f}; count below sqrt2 {low}, at 1.5 {at15}; {elapsed:.1f}s")


CLI_COMMANDS = [
    ["reduce", "--in", str(FIX / "basis3.txt")],
    ["kan", "--in", str(FIX / "sl2.json")],
    ["certify", "--group", "R2", "--set", "disk:1", "--mode", "exact", "--points", "50000"],
    ["certify", "--set", str(FIX / "triangle.json"), "--mode", "sampled", "--points", "10000", "--perts", "8"],
    ["certify", "--group", "SL2", "--set", "kanbox:-0.3,0.3,-0.3,0.3", "--points", "5000", "--perts", "8"],
    ["certify", "--family", str(FIX / "disk_family.json"), "--points", "20000"],
    ["blc-check", "--family", str(FIX / "disk_family.json")],
    ["count", "--kind", "integer_points", "--T-grid", "1,2,10"],
    ["count", "--kind", "sl2z_ball", "--T-grid", "10,50", "--reference", "monte_carlo_volume"],
]


def _cli(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run(argv)
    return code, buf.getvalue()


def test_criterion_10_reproducibility():
    problems = []
    for argv in CLI_COMMANDS:
        runs = [_cli(argv), _cli(argv), _cli(argv + ["--threads", "1"]), _cli(argv + ["--threads", "4"])]
        codes = {c for c, _ in runs}
        texts = {t for _, t in runs}
        if codes != {0} or len(texts) != 1:
            problems.append(" ".join(argv[:3]))
        json.loads(runs[0][1])
    ok = not problems
    _record(10, ok, f"{len(CLI_COMMANDS) - len(problems)}/{len(CLI_COMMANDS)} commands byte-identical across reruns and --threads 1/4")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
