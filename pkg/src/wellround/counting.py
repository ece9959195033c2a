"""Lattice-point counts for well-rounded families.

* integer points of ``T * body`` for a convex body in R^n (n <= 4),
* elements of SL(2, Z) with Frobenius norm at most a bound.

Both counters use exact integer arithmetic for membership decisions that
are integral (the SL2 norm test and determinant); the convex-body counter
evaluates the body's own predicate on the scaled integer points.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from .certifier import DEFAULT_SEED, SetOracle, _block_rng
from .errors import ParameterOutOfRange, ScaleTooLarge
from .groups import Euclidean, special_linear

MAX_DIM = 4
MAX_EXTENT = 1e4
MAX_SL2_BOUND = 500
_CLOSED_TOL = 1e-12


def count_integer_points(body: SetOracle, T: float, shift=None) -> int:
    """``#{x in Z^n : x in T * body + shift}`` by a box scan.

    Points are classified by the signed distance (``<= 1e-12`` counts as
    inside, so closed bodies keep their boundary points) or by ``member``
    when no distance is available.  ``shift`` must be an integer vector.
    """
    if not isinstance(body.group, Euclidean):
        raise ParameterOutOfRange("integer points need a euclidean body")
    n = body.group.dim
    if n > MAX_DIM:
        raise ScaleTooLarge(f"dimension {n} exceeds {MAX_DIM}")
    if T < 0:
        raise ParameterOutOfRange("T must be nonnegative")
    if body.bounds is None:
        raise ParameterOutOfRange("body has no bounding box")
    s = np.zeros(n) if shift is None else np.asarray(shift, dtype=float)
    if s.shape != (n,) or np.any(s != np.round(s)):
        raise ParameterOutOfRange("shift must be an integer vector")
    lo, hi = np.asarray(body.bounds[0], dtype=float), np.asarray(body.bounds[1], dtype=float)
    if T * max(np.max(np.abs(lo)), np.max(np.abs(hi))) > MAX_EXTENT:
        raise ScaleTooLarge("T times the body's extent exceeds 1e4")
    if T == 0:
        return int(_inside(body, body.group.identity(1))[0])
    ranges = [np.arange(math.floor(T * a + c) - 1, math.ceil(T * b + c) + 2) for a, b, c in zip(lo, hi, s)]
    total = 0
    # chunk over the first coordinate to bound memory
    for x0 in ranges[0]:
        grids = np.meshgrid(*([np.array([x0])] + ranges[1:]), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1).astype(float)
        total += int(np.sum(_inside(body, body.group.exp((pts - s) / T))))
    return total


def _inside(body: SetOracle, mats):
    if body.signed_distance is not None:
        return body.signed_distance(mats) <= _CLOSED_TOL
    return np.asarray(body.member(mats), dtype=bool)


def _sl2_limit(bound) -> int:
    b = Fraction(bound)
    if b < 0:
        raise ParameterOutOfRange("bound must be nonnegative")
    if b > MAX_SL2_BOUND:
        raise ScaleTooLarge(f"norm bound {float(b)} exceeds {MAX_SL2_BOUND}")
    return math.floor(b * b)


def _ext_gcd(a: int, b: int):
    """``(g, x, y)`` with ``a x + b y = g = gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q = a // b
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _count_quadratic(A: int, B: int, Cc: int) -> int:
    """``#{k in Z : A k^2 + 2 B k + Cc <= 0}`` for ``A > 0``."""
    disc = B * B - A * Cc
    if disc < 0:
        return 0
    r = math.isqrt(disc)
    # roots (-B +- sqrt(disc)) / A; widen then tighten with exact tests
    lo = (-B - r - 1) // A - 1
    hi = (-B + r + 1) // A + 1

    def ok(k):
        return A * k * k + 2 * B * k + Cc <= 0

    while lo <= hi and not ok(lo):
        lo += 1
    while hi >= lo and not ok(hi):
        hi -= 1
    return max(0, hi - lo + 1)


def count_sl2z_norm_ball(bound) -> int:
    """``#{g in SL(2, Z) : ||g||_F <= bound}``.

    For each first row ``(a, b)`` with ``gcd(a, b) = 1`` the second rows
    with ``a d - b c = 1`` are ``(c0 + k a, d0 + k b)``; the norm condition
    is a quadratic inequality in ``k`` counted exactly with integer roots.
    """
    L = _sl2_limit(bound)
    m = math.isqrt(L)
    total = 0
    for a in range(-m, m + 1):
        rest = L - a * a
        bm = math.isqrt(max(rest, 0))
        for b in range(-bm, bm + 1):
            g, x, y = _ext_gcd(a, b)
            if g != 1:
                continue
            # a x + b y = 1  ->  (c, d) = (-y, x) solves a d - b c = 1
            c0, d0 = -y, x
            budget = L - a * a - b * b
            # (c0 + k a)^2 + (d0 + k b)^2 <= budget
            A = a * a + b * b
            B = c0 * a + d0 * b
            Cc = c0 * c0 + d0 * d0 - budget
            total += _count_quadratic(A, B, Cc)
    return total


def count_sl2z_bruteforce(bound) -> int:
    """Direct scan over all entries; the reference for small bounds."""
    L = _sl2_limit(bound)
    m = math.isqrt(L)
    r = range(-m, m + 1)
    total = 0
    for a in r:
        for b in r:
            for c in r:
                for d in r:
                    if a * d - b * c == 1 and a * a + b * b + c * c + d * d <= L:
                        total += 1
    return total


# -- reference volumes ------------------------------------------------------------------------------


def sl2_ball_volume(bound: float) -> float:
    """Haar volume of ``{g in SL(2, R) : ||g||_F <= bound}`` with density ``e^t dtheta dt dx``.

    For ``g = k(theta) a(t) n(x)``, ``||g||_F^2 = e^t (1 + x^2) + e^-t``.
    """
    s = float(bound) ** 2
    if s <= 2:
        return 0.0

    def inner(t):
        q = (s - math.exp(-t)) * math.exp(-t) - 1.0
        return 2.0 * math.sqrt(q) * math.exp(t) if q > 0 else 0.0

    # e^t + e^-t <= s bounds t
    tmax = math.log((s + math.sqrt(s * s - 4)) / 2)
    val, _ = integrate.quad(inner, -tmax, tmax, limit=200)
    return 2 * math.pi * val


def sl2_ball_volume_mc(bound: float, n: int = 200_000, seed: int = DEFAULT_SEED) -> tuple:
    """Monte Carlo version of :func:`sl2_ball_volume` (value, stderr)."""
    s = float(bound) ** 2
    if s <= 2:
        return 0.0, 0.0
    tmax = math.log((s + math.sqrt(s * s - 4)) / 2)
    # x^2 <= s e^-t - e^-2t - 1 peaks at e^-t = s / 2
    xmax = math.sqrt(s * s / 4 - 1)
    g = special_linear(2).with_window((0.0, -tmax, -xmax), (2 * math.pi, tmax, xmax))
    mats, w = g.sample_window(_block_rng(seed, 4), n)
    inside = np.sum(mats * mats, axis=(-2, -1)) <= s
    vals = w * inside
    vol = g.window_volume()
    return float(vol * vals.mean()), float(vol * vals.std(ddof=1) / math.sqrt(n))


def body_volume_mc(body: SetOracle, n: int = 200_000, seed: int = DEFAULT_SEED) -> tuple:
    lo, hi = np.asarray(body.bounds[0]), np.asarray(body.bounds[1])
    rng = _block_rng(seed, 5)
    pts = lo + (hi - lo) * rng.random((n, lo.size))
    inside = np.asarray(body.member(body.group.exp(pts)), dtype=float)
    box = float(np.prod(hi - lo))
    return box * float(inside.mean()), box * float(inside.std(ddof=1) / math.sqrt(n))


# -- reports ---------------------------------------------------------------------------------------------


@dataclass
class CountReport:
    kind: str
    T_grid: list
    counts: list
    reference_volumes: list
    ratios: list
    doubling_ratios: list
    reference: str
    meta: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "reference": self.reference,
            "T_grid": self.T_grid,
            "counts": self.counts,
            "reference_volumes": self.reference_volumes,
            "ratios": self.ratios,
            "doubling_ratios": self.doubling_ratios,
            "meta": self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "count", "volume", "ratio", "doubling"])
        for row in zip(self.T_grid, self.counts, self.reference_volumes, self.ratios, self.doubling_ratios):
            w.writerow(["" if v is None else repr(v) for v in row])
        return buf.getvalue()


def counting_report(kind: str, T_grid, reference: str = "analytic", body: SetOracle | None = None, seed=DEFAULT_SEED):
    """Counts, reference volumes, ``count / volume`` and ``count(2T) / count(T)`` on a grid.

    Doubling ratios are ``None`` when ``2T`` lies beyond the counter's scale limit.
    """
    if kind not in ("integer_points", "sl2z_ball"):
        raise ParameterOutOfRange(f"unknown kind {kind!r}")
    if reference not in ("analytic", "monte_carlo_volume"):
        raise ParameterOutOfRange(f"unknown reference {reference!r}")
    T_grid = [float(t) for t in T_grid]
    if kind == "integer_points":
        if body is None:
            raise ParameterOutOfRange("integer_points needs a body")
        n = body.group.dim
        if reference == "analytic" and body.volume is not None:
            unit = body.volume
        else:
            unit = body_volume_mc(body, seed=seed)[0]

        def count(T):
            return count_integer_points(body, T)

        def volume(T):
            return unit * T**n

    else:

        def count(T):
            return count_sl2z_norm_ball(T)

        def volume(T):
            return sl2_ball_volume(T) if reference == "analytic" else sl2_ball_volume_mc(T, seed=seed)[0]

    counts, vols, ratios, doubling = [], [], [], []
    for T in T_grid:
        c = count(T)
        v = volume(T)
        counts.append(c)
        vols.append(v)
        ratios.append(c / v if v > 0 and c > 0 else None)
        try:
            c2 = count(2 * T)
            doubling.append(c2 / c if c > 0 else None)
        except ScaleTooLarge:
            doubling.append(None)
    return CountReport(kind, T_grid, counts, vols, ratios, doubling, reference, {"seed": int(seed)})
