"""Monte Carlo certification of Lipschitz well-roundedness.

For a set ``B`` in a group ``G`` with coordinate balls ``O_eps``:

* ``B^(+eps) = O_eps B O_eps`` (two-sided fattening),
* ``B^(-eps) = intersection of u B v over u, v in O_eps`` (erosion),

and ``B`` is LWR with constant ``C`` when
``mu(B^(+eps)) <= (1 + C eps) mu(B^(-eps))`` for small ``eps``.

Two evaluation modes:

``exact``
    Available when the group is abelian and the oracle can decide the
    dilated/eroded sets directly.  For a single euclidean factor
    ``O_eps B O_eps = B + B_{2 eps}``, so a signed distance suffices.
``sampled``
    ``g`` counts as a member of ``B^(+eps)`` when some sampled pair
    ``(u, v)`` gives ``u^-1 g v^-1`` in ``B``, and of ``B^(-eps)`` when all
    sampled pairs do.  The identity pair is always included.  Finite
    sampling under-covers the fattening and over-covers the erosion.

Window points are drawn in fixed-size blocks, each from its own
``SeedSequence`` child, so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import (
    DegenerateMinus,
    EmptyIntersection,
    EpsilonTooLarge,
    ExactModeUnavailable,
    NonpositiveInput,
    ParameterOutOfRange,
    WindowTooSmall,
)
from .groups import DiagonalA, Euclidean, GroupModel, SpecialLinear2, euclidean, special_linear

BLOCK = 4096
DEFAULT_EPS_GRID = (0.01, 0.02, 0.05)
DEFAULT_SEED = 0xC0FFEE
PERT_STUDY = (8, 32, 128)


# -- set oracles ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class SetOracle:
    """A measurable set ``B`` inside ``group``, given by a vectorized predicate.

    ``member`` and ``signed_distance`` take a stack of group elements.
    ``bounds`` is a box in window coordinates containing ``B``.
    ``exact_plus`` / ``exact_minus`` (elements, eps) -> bool decide the
    fattened / eroded sets exactly when the oracle knows how.
    """

    group: GroupModel
    member: Callable
    signed_distance: Callable | None = None
    bounds: tuple | None = None
    name: str = "set"
    volume: float | None = None
    exact_plus: Callable | None = None
    exact_minus: Callable | None = None
    params: dict = field(default_factory=dict)

    def has_exact(self) -> bool:
        if self.exact_plus is not None and self.exact_minus is not None:
            return True
        return self.signed_distance is not None and isinstance(self.group, Euclidean)

    def plus_exact(self, mats, eps):
        if self.exact_plus is not None:
            return self.exact_plus(mats, eps)
        return self.signed_distance(mats) <= 2 * eps

    def minus_exact(self, mats, eps):
        if self.exact_minus is not None:
            return self.exact_minus(mats, eps)
        return self.signed_distance(mats) <= -2 * eps

    def describe(self) -> dict:
        return {"name": self.name, "group": self.group.name, **self.params}


def _coords_fn(group, fn):
    return lambda mats: fn(group.log(mats))


def _default_group(n, group):
    return euclidean(n) if group is None else group


def ball(radius: float, center=None, group: GroupModel | None = None, n: int = 2) -> SetOracle:
    """Closed euclidean ball."""
    if radius <= 0:
        raise NonpositiveInput("radius must be positive")
    if center is not None:
        n = len(center)
    group = _default_group(n, group)
    n = group.dim
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def sd(x):
        return np.linalg.norm(x - c, axis=-1) - radius

    vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) * radius**n
    return SetOracle(
        group,
        _coords_fn(group, lambda x: sd(x) <= 0),
        _coords_fn(group, sd),
        (tuple(c - radius), tuple(c + radius)),
        f"ball:{radius}",
        vol,
        params={"kind": "ball", "radius": radius, "center": c.tolist()},
    )


def disk(radius: float = 1.0, center=None, group: GroupModel | None = None) -> SetOracle:
    return ball(radius, center, group, n=2)


def box(lows, highs, group: GroupModel | None = None) -> SetOracle:
    """Closed axis-parallel box."""
    lo = np.asarray(lows, dtype=float)
    hi = np.asarray(highs, dtype=float)
    if lo.shape != hi.shape or np.any(hi < lo):
        raise ParameterOutOfRange("box needs lows <= highs")
    group = _default_group(lo.size, group)
    c, h = (lo + hi) / 2, (hi - lo) / 2

    def sd(x):
        q = np.abs(x - c) - h
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def member(x):
        return np.all((x >= lo) & (x <= hi), axis=-1)

    return SetOracle(
        group,
        _coords_fn(group, member),
        _coords_fn(group, sd),
        (tuple(lo), tuple(hi)),
        "box",
        float(np.prod(hi - lo)),
        params={"kind": "box", "lows": lo.tolist(), "highs": hi.tolist()},
    )


def square(side: float = 2.0, center=(0.0, 0.0), group: GroupModel | None = None) -> SetOracle:
    c = np.asarray(center, dtype=float)
    o = box(c - side / 2, c + side / 2, group)
    return replace(o, name=f"square:{side}", params={"kind": "square", "side": side, "center": c.tolist()})


def interval(lo: float, hi: float, group: GroupModel | None = None) -> SetOracle:
    o = box([lo], [hi], _default_group(1, group))
    return replace(o, name=f"interval:{lo},{hi}", params={"kind": "interval", "lo": lo, "hi": hi})


def _segment_distance(x, a, b):
    d = b - a
    t = np.clip(((x - a) @ d) / (d @ d), 0.0, 1.0)
    return np.linalg.norm(x - (a + t[..., None] * d), axis=-1)


def polygon(vertices, group: GroupModel | None = None) -> SetOracle:
    """Closed convex polygon in R^2 (vertices in either orientation)."""
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ParameterOutOfRange("polygon needs at least 3 planar vertices")
    area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    if area2 < 0:
        v = v[::-1]
    if abs(area2) < 1e-14:
        raise ParameterOutOfRange("polygon is degenerate")
    edges = np.roll(v, -1, axis=0) - v
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    offsets = np.sum(normals * v, axis=1)
    if np.any(normals @ v.T - offsets[:, None] > 1e-12):
        raise ParameterOutOfRange("polygon is not convex")
    group = _default_group(2, group)

    def member(x):
        return np.all(x @ normals.T - offsets <= 0, axis=-1)

    def sd(x):
        dist = np.min(np.stack([_segment_distance(x, v[i], v[(i + 1) % len(v)]) for i in range(len(v))]), axis=0)
        return np.where(member(x), -dist, dist)

    return SetOracle(
        group,
        _coords_fn(group, member),
        _coords_fn(group, sd),
        (tuple(v.min(axis=0)), tuple(v.max(axis=0))),
        "polygon",
        abs(area2) / 2,
        params={"kind": "polygon", "vertices": v.tolist()},
    )


def empty(group: GroupModel | None = None) -> SetOracle:
    group = _default_group(2, group)
    lead = lambda mats: np.asarray(mats).shape[:-2]  # noqa: E731
    return SetOracle(
        group,
        lambda mats: np.zeros(lead(mats), dtype=bool),
        lambda mats: np.full(lead(mats), np.inf),
        None,
        "empty",
        0.0,
        params={"kind": "empty"},
    )


def whole(group: GroupModel | None = None) -> SetOracle:
    """The whole group; its window mass is the window's Haar measure."""
    group = _default_group(2, group)
    lead = lambda mats: np.asarray(mats).shape[:-2]  # noqa: E731
    return SetOracle(
        group,
        lambda mats: np.ones(lead(mats), dtype=bool),
        lambda mats: np.full(lead(mats), -np.inf),
        None,
        "whole",
        None,
        params={"kind": "whole"},
    )


def _merge_bounds(b1, b2, op):
    if b1 is None or b2 is None:
        return None
    if op == "and":
        lo, hi = np.maximum(b1[0], b2[0]), np.minimum(b1[1], b2[1])
    else:
        lo, hi = np.minimum(b1[0], b2[0]), np.maximum(b1[1], b2[1])
    return tuple(lo), tuple(hi)


def intersection(o1: SetOracle, o2: SetOracle) -> SetOracle:
    """Intersection oracle (sampled mode only: max of signed distances is not exact)."""
    return SetOracle(
        o1.group,
        lambda m: o1.member(m) & o2.member(m),
        None,
        _merge_bounds(o1.bounds, o2.bounds, "and"),
        f"({o1.name})&({o2.name})",
        params={"kind": "intersection", "parts": [o1.describe(), o2.describe()]},
    )


def union(o1: SetOracle, o2: SetOracle) -> SetOracle:
    return SetOracle(
        o1.group,
        lambda m: o1.member(m) | o2.member(m),
        None,
        _merge_bounds(o1.bounds, o2.bounds, "or"),
        f"({o1.name})|({o2.name})",
        params={"kind": "union", "parts": [o1.describe(), o2.describe()]},
    )


def kan_box(t_range=(-0.5, 0.5), x_range=(-0.5, 0.5), theta_range=(0.0, 2 * math.pi), group=None) -> SetOracle:
    """``{k(theta) a(t) n(x)}`` with each KAN coordinate in a range, inside SL(2, R)."""
    group = special_linear(2) if group is None else group
    if not isinstance(group, SpecialLinear2):
        raise ParameterOutOfRange("kan_box lives in SL2")
    lo = np.array([theta_range[0], t_range[0], x_range[0]])
    hi = np.array([theta_range[1], t_range[1], x_range[1]])
    full_circle = theta_range[1] - theta_range[0] >= 2 * math.pi

    def member(mats):
        c = SpecialLinear2.kan_coords(mats)
        ok = (c[..., 1] >= lo[1]) & (c[..., 1] <= hi[1]) & (c[..., 2] >= lo[2]) & (c[..., 2] <= hi[2])
        if not full_circle:
            th = np.mod(c[..., 0] - lo[0], 2 * math.pi)
            ok &= th <= hi[0] - lo[0]
        return ok

    vol = (hi[0] - lo[0]) * (math.exp(hi[1]) - math.exp(lo[1])) * (hi[2] - lo[2])
    return SetOracle(
        group,
        member,
        None,
        None,
        "kanbox",
        vol,
        params={"kind": "kanbox", "theta": list(theta_range), "t": list(t_range), "x": list(x_range)},
    )


# -- estimation core -------------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    mode: str
    bias: str
    n_points: int
    n_pert: int


@dataclass
class _Sums:
    """Weighted indicator sums for one epsilon.

    ``p``/``m``/``t`` are sums of ``w * 1_plus``, ``w * 1_minus``,
    ``w * (1_plus - 1_minus)``; the ``*2`` fields are sums of squares.
    """

    p: float = 0.0
    p2: float = 0.0
    m: float = 0.0
    m2: float = 0.0
    t: float = 0.0
    t2: float = 0.0

    def add(self, other: "_Sums"):
        for k in ("p", "p2", "m", "m2", "t", "t2"):
            setattr(self, k, getattr(self, k) + getattr(other, k))


def _window_lie_coords(group) -> bool:
    return all(isinstance(f, (Euclidean, DiagonalA)) for f in group.components)


def _check_eps(oracle: SetOracle, eps_grid, plus: bool):
    group = oracle.group
    for eps in eps_grid:
        if not eps > 0:
            raise ParameterOutOfRange("epsilon must be positive")
        if eps > group.eps_chart:
            raise EpsilonTooLarge(f"epsilon {eps} exceeds the chart radius {group.eps_chart}")
    if oracle.bounds is None or group.window is None or not _window_lie_coords(group):
        return
    reach = 2 * max(eps_grid) * 2.0 if plus else 0.0  # 2 eps (1 + ||Ad||), ||Ad|| = 1 for abelian groups
    lo = np.asarray(oracle.bounds[0]) - reach
    hi = np.asarray(oracle.bounds[1]) + reach
    if np.any(lo < np.asarray(group.window.lows) - 1e-12) or np.any(hi > np.asarray(group.window.highs) + 1e-12):
        raise WindowTooSmall(f"set {oracle.name} with margin {reach} leaves the Haar window")


def ensure_window(oracle: SetOracle, eps_max: float) -> SetOracle:
    """Enlarge a euclidean window (symmetrically) so the set plus its margin fits."""
    g = oracle.group
    if oracle.bounds is None or not isinstance(g, Euclidean):
        return oracle
    reach = 4 * eps_max
    lo = np.minimum(np.asarray(g.window.lows), np.floor(np.asarray(oracle.bounds[0]) - reach))
    hi = np.maximum(np.asarray(g.window.highs), np.ceil(np.asarray(oracle.bounds[1]) + reach))
    if np.allclose(lo, g.window.lows) and np.allclose(hi, g.window.highs):
        return oracle
    return replace(oracle, group=g.with_window(lo, hi))


def _block_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(index,)))


def _eval_block(oracle: SetOracle, eps_grid, size: int, n_pert: int, seed: int, index: int, mode: str):
    rng = _block_rng(seed, index)
    group = oracle.group
    g, w = group.sample_window(rng, size)
    base = np.asarray(oracle.member(g), dtype=bool)
    out = []
    if mode == "sampled":
        k = n_pert + 1
        x = group.unit_ball_coords(rng, size * k).reshape(size, k, group.dim)
        y = group.unit_ball_coords(rng, size * k).reshape(size, k, group.dim)
        x[:, 0] = 0.0
        y[:, 0] = 0.0
    for eps in eps_grid:
        if mode == "exact":
            plus = np.asarray(oracle.plus_exact(g, eps), dtype=bool)
            minus = np.asarray(oracle.minus_exact(g, eps), dtype=bool)
        else:
            u_inv = group.exp(-eps * x)
            v_inv = group.exp(-eps * y)
            h = u_inv @ g[:, None] @ v_inv
            hit = np.asarray(oracle.member(h.reshape((-1,) + h.shape[-2:])), dtype=bool).reshape(size, k)
            plus, minus = hit.any(axis=1), hit.all(axis=1)
        wp, wm = w * plus, w * minus
        wt = wp - wm
        out.append(
            _Sums(
                float(wp.sum()),
                float((wp * wp).sum()),
                float(wm.sum()),
                float((wm * wm).sum()),
                float(wt.sum()),
                float((wt * wt).sum()),
            )
        )
    wb = w * base
    return out, (float(wb.sum()), float((wb * wb).sum()))


def _resolve_mode(oracle: SetOracle, mode: str) -> str:
    if mode == "auto":
        return "exact" if oracle.has_exact() else "sampled"
    if mode == "exact" and not oracle.has_exact():
        raise ExactModeUnavailable(f"no exact dilation available for {oracle.name} in {oracle.group.name}")
    if mode not in ("exact", "sampled"):
        raise ParameterOutOfRange(f"unknown mode {mode!r}")
    return mode


def _run(oracle, eps_grid, n_points, n_pert, seed, mode, threads):
    if n_points < 2 or n_pert < 1:
        raise ParameterOutOfRange("need n_points >= 2 and n_pert >= 1")
    sizes = [min(BLOCK, n_points - s) for s in range(0, n_points, BLOCK)]
    jobs = [(oracle, eps_grid, size, n_pert, seed, i, mode) for i, size in enumerate(sizes)]
    workers = max(1, int(threads or 1))
    if workers == 1:
        results = [_eval_block(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda j: _eval_block(*j), jobs))
    totals = [_Sums() for _ in eps_grid]
    base1 = base2 = 0.0
    for sums, (b1, b2) in results:  # merged in block order
        for acc, s in zip(totals, sums):
            acc.add(s)
        base1 += b1
        base2 += b2
    return totals, (base1, base2)


def _mean_se(s1, s2, n, vol):
    mean = s1 / n
    var = max(s2 - s1 * s1 / n, 0.0) / (n - 1)
    return vol * mean, vol * math.sqrt(var / n)


def _bias(mode: str, which: str) -> str:
    if mode == "exact":
        return "none"
    return {"plus": "low", "minus": "high", "tube": "low"}[which]


def estimate_plus(oracle, eps, n_points=100_000, n_pert=32, seed=DEFAULT_SEED, mode="auto", threads=1) -> Estimate:
    """Haar measure of ``O_eps B O_eps``."""
    mode = _resolve_mode(oracle, mode)
    _check_eps(oracle, [eps], plus=True)
    (s,), _ = _run(oracle, [eps], n_points, n_pert, seed, mode, threads)
    v, se = _mean_se(s.p, s.p2, n_points, oracle.group.window_volume())
    return Estimate(v, se, mode, _bias(mode, "plus"), n_points, n_pert)


def estimate_minus(oracle, eps, n_points=100_000, n_pert=32, seed=DEFAULT_SEED, mode="auto", threads=1) -> Estimate:
    """Haar measure of the two-sided erosion of ``B``."""
    mode = _resolve_mode(oracle, mode)
    _check_eps(oracle, [eps], plus=False)
    (s,), _ = _run(oracle, [eps], n_points, n_pert, seed, mode, threads)
    v, se = _mean_se(s.m, s.m2, n_points, oracle.group.window_volume())
    return Estimate(v, se, mode, _bias(mode, "minus"), n_points, n_pert)


def boundary_tube(oracle, eps, n_points=100_000, n_pert=32, seed=DEFAULT_SEED, mode="auto", threads=1) -> Estimate:
    """``mu(B^(+eps)) - mu(B^(-eps))``, i.e. the measure of ``O_eps (boundary B) O_eps``.

    The standard error is computed from the per-point difference of the
    two indicators, which accounts for their correlation.
    """
    mode = _resolve_mode(oracle, mode)
    _check_eps(oracle, [eps], plus=True)
    (s,), _ = _run(oracle, [eps], n_points, n_pert, seed, mode, threads)
    v, se = _mean_se(s.t, s.t2, n_points, oracle.group.window_volume())
    return Estimate(v, se, mode, _bias(mode, "tube"), n_points, n_pert)


@dataclass(frozen=True)
class TubeCheck:
    n_points: int
    disagreements: int
    in_band: int
    eps: float


def pointwise_tube_check(oracle, eps, n_points=10_000, seed=DEFAULT_SEED, band=1e-9, boundary_distance=None):
    """Compare ``1_plus - 1_minus`` (exact mode) with ``dist(g, boundary) <= 2 eps`` pointwise.

    ``boundary_distance`` defaults to ``|signed_distance|``; pass an
    independent implementation to cross-check.  Points whose distance lies
    within ``band`` of ``2 eps`` are excluded and counted in ``in_band``.
    """
    if not oracle.has_exact():
        raise ExactModeUnavailable(f"no exact dilation available for {oracle.name}")
    rng = _block_rng(seed, 0)
    g, _ = oracle.group.sample_window(rng, n_points)
    tube = np.asarray(oracle.plus_exact(g, eps), dtype=bool) & ~np.asarray(oracle.minus_exact(g, eps), dtype=bool)
    dist = np.abs(oracle.signed_distance(g)) if boundary_distance is None else np.asarray(boundary_distance(g))
    near = np.abs(dist - 2 * eps) <= band
    ref = dist <= 2 * eps
    bad = int(np.sum((tube != ref) & ~near))
    return TubeCheck(n_points, bad, int(near.sum()), eps)


# -- Lipschitz fit ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class LipschitzFit:
    C: float
    lower: float
    upper: float
    method: str
    slopes: tuple
    slope_stderrs: tuple


def _row(r):
    r = tuple(float(v) for v in r)
    eps, vp, vm = r[:3]
    sp = r[3] if len(r) > 3 else 0.0
    sm = r[4] if len(r) > 4 else 0.0
    if vm <= 0 or vm <= 2 * sm:
        raise DegenerateMinus(f"eroded volume {vm} is not resolved (stderr {sm}) at eps={eps}")
    ratio = vp / vm
    if len(r) > 5:
        rse = r[5]
    else:
        rse = ratio * math.sqrt((sp / vp) ** 2 + (sm / vm) ** 2) if vp > 0 else 0.0
    return eps, ratio, rse


def fit_lipschitz(rows, method: str = "max_slope") -> LipschitzFit:
    """Fit ``C`` in ``vol_plus / vol_minus <= 1 + C eps`` from ``(eps, vol_plus, vol_minus[, se_plus, se_minus[, se_ratio]])`` rows.

    ``max_slope`` takes the worst ``(ratio - 1)/eps`` over the grid (the
    inequality must hold uniformly).  ``zero_limit`` fits the slopes
    linearly in ``eps`` and reports the intercept, i.e. the constant
    governing ``eps -> 0``.  Bands are +-2 propagated standard errors.
    """
    rows = [_row(r) for r in rows]
    if len(rows) < 2:
        raise ParameterOutOfRange("need at least two grid points")
    eps = np.array([r[0] for r in rows])
    slopes = np.array([(r[1] - 1.0) / r[0] for r in rows])
    ses = np.array([r[2] / r[0] for r in rows])
    if method == "max_slope":
        c = max(0.0, float(slopes.max()))
        lo = max(0.0, float((slopes - 2 * ses).max()))
        hi = max(0.0, float((slopes + 2 * ses).max()))
    elif method == "zero_limit":
        design = np.stack([np.ones_like(eps), eps], axis=1)
        coef_map = np.linalg.pinv(design)[0]  # intercept as a linear functional of the slopes
        a = float(coef_map @ slopes)
        se = float(math.sqrt(np.sum((coef_map * ses) ** 2)))
        c, lo, hi = max(0.0, a), max(0.0, a - 2 * se), max(0.0, a + 2 * se)
    else:
        raise ParameterOutOfRange(f"unknown fit method {method!r}")
    return LipschitzFit(c, lo, hi, method, tuple(slopes.tolist()), tuple(ses.tolist()))


# -- closed-form constants --------------------------------------------------------------------------------


def _exact(*xs):
    """Fractions when every input is an int or Fraction, floats otherwise."""
    if all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in xs):
        return tuple(Fraction(x) for x in xs)
    return tuple(float(x) for x in xs)


def single_set_constant(c, mu_B):
    """``(2c / mu(B), mu(B) / (2c))`` for a set whose boundary tube has measure ``<= c eps``."""
    c, mu_B = _exact(c, mu_B)
    if c <= 0 or mu_B <= 0:
        raise NonpositiveInput("c and mu(B) must be positive")
    return 2 * c / mu_B, mu_B / (2 * c)


def combine_sets(C, C2, mu_B, mu_B2, mu_meet, mu_join):
    """Constants for the intersection and the union of two LWR sets."""
    C, C2, mu_B, mu_B2, mu_meet, mu_join = _exact(C, C2, mu_B, mu_B2, mu_meet, mu_join)
    if mu_meet <= 0:
        raise EmptyIntersection("the sets do not meet")
    if min(mu_B, mu_B2, mu_join) <= 0 or min(C, C2) < 0:
        raise NonpositiveInput("measures must be positive and constants nonnegative")
    top = 2 * max(C, C2) * (mu_B + mu_B2)
    return top / mu_meet, top / mu_join


# -- reports -----------------------------------------------------------------------------------------------


@dataclass
class WrReport:
    set_description: dict
    group: str
    mode: str
    epsilons: list
    T_values: list
    cells: list
    fitted_C: float
    fit_method: str
    max_slope_C: float
    zero_limit_C: float
    C_band: tuple
    mu_B: tuple
    sample_counts: dict
    bias_direction: dict
    seed: int
    pert_study: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        return [c["ratio"] for c in self.cells]

    def vol_plus(self) -> list:
        return [c["vol_plus"] for c in self.cells]

    def vol_minus(self) -> list:
        return [c["vol_minus"] for c in self.cells]

    def to_doc(self) -> dict:
        return {
            "set": self.set_description,
            "group": self.group,
            "mode": self.mode,
            "epsilons": list(self.epsilons),
            "T_values": list(self.T_values),
            "cells": self.cells,
            "fitted_C": self.fitted_C,
            "fit_method": self.fit_method,
            "max_slope_C": self.max_slope_C,
            "zero_limit_C": self.zero_limit_C,
            "C_band": list(self.C_band),
            "mu_B": list(self.mu_B),
            "sample_counts": self.sample_counts,
            "bias_direction": self.bias_direction,
            "seed": self.seed,
            "pert_study": self.pert_study,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "eps", "ratio", "stderr"])
        for c in self.cells:
            w.writerow(["" if c["T"] is None else repr(c["T"]), repr(c["eps"]), repr(c["ratio"]), repr(c["ratio_se"])])
        return buf.getvalue()


def _cells(oracle, eps_grid, totals, n_points, T):
    vol = oracle.group.window_volume()
    cells = []
    for eps, s in zip(eps_grid, totals):
        vp, sp = _mean_se(s.p, s.p2, n_points, vol)
        vm, sm = _mean_se(s.m, s.m2, n_points, vol)
        tb, st = _mean_se(s.t, s.t2, n_points, vol)
        ratio = vp / vm if vm > 0 else math.inf
        if vm > 0:
            # delta method on sum(w p - r w m); uses (w p)(w m) = (w m)^2 for nested indicators
            q2 = s.p2 - 2 * ratio * s.m2 + ratio * ratio * s.m2
            q1 = s.p - ratio * s.m
            var = max(q2 - q1 * q1 / n_points, 0.0) / (n_points - 1)
            rse = math.sqrt(var / n_points) / (s.m / n_points)
        else:
            rse = math.inf
        cells.append(
            {
                "T": T,
                "eps": eps,
                "vol_plus": vp,
                "se_plus": sp,
                "vol_minus": vm,
                "se_minus": sm,
                "tube": tb,
                "se_tube": st,
                "ratio": ratio,
                "ratio_se": rse,
            }
        )
    return cells


def _fit_cells(cells):
    rows = [(c["eps"], c["vol_plus"], c["vol_minus"], c["se_plus"], c["se_minus"], c["ratio_se"]) for c in cells]
    return fit_lipschitz(rows, "max_slope"), fit_lipschitz(rows, "zero_limit")


def pert_convergence(oracle, eps, n_points=10_000, seed=DEFAULT_SEED, perts=PERT_STUDY, threads=1) -> list:
    """Sampled-mode plus/minus estimates as the number of perturbation pairs grows."""
    _check_eps(oracle, [eps], plus=True)
    out = []
    vol = oracle.group.window_volume()
    for k in perts:
        (s,), _ = _run(oracle, [eps], n_points, k, seed, "sampled", threads)
        vp, sp = _mean_se(s.p, s.p2, n_points, vol)
        vm, sm = _mean_se(s.m, s.m2, n_points, vol)
        out.append({"n_pert": k, "eps": eps, "vol_plus": vp, "se_plus": sp, "vol_minus": vm, "se_minus": sm})
    return out


def certify(
    oracle: SetOracle,
    eps_grid=DEFAULT_EPS_GRID,
    n_points: int = 200_000,
    n_pert: int = 32,
    seed: int = DEFAULT_SEED,
    mode: str = "auto",
    fit_method: str = "zero_limit",
    threads: int = 1,
    pert_study: bool | None = None,
    T=None,
) -> WrReport:
    """Estimate ``mu(B^(+eps))``, ``mu(B^(-eps))`` on a grid and fit the Lipschitz constant.

    Plus and minus sets for every ``eps`` are evaluated on the same window
    points and perturbation directions (common random numbers), which keeps
    the ratios smooth in ``eps``.
    """
    eps_grid = [float(e) for e in eps_grid]
    mode = _resolve_mode(oracle, mode)
    _check_eps(oracle, eps_grid, plus=True)
    totals, (b1, b2) = _run(oracle, eps_grid, n_points, n_pert, seed, mode, threads)
    cells = _cells(oracle, eps_grid, totals, n_points, T)
    ms, zl = _fit_cells(cells)
    chosen = zl if fit_method == "zero_limit" else ms
    if fit_method not in ("zero_limit", "max_slope"):
        raise ParameterOutOfRange(f"unknown fit method {fit_method!r}")
    mu = _mean_se(b1, b2, n_points, oracle.group.window_volume())
    study = []
    if pert_study is None:
        pert_study = mode == "sampled"
    if pert_study:
        study = pert_convergence(oracle, eps_grid[len(eps_grid) // 2], min(n_points, 10_000), seed, threads=threads)
    return WrReport(
        set_description=oracle.describe(),
        group=oracle.group.name,
        mode=mode,
        epsilons=eps_grid,
        T_values=[T],
        cells=cells,
        fitted_C=chosen.C,
        fit_method=fit_method,
        max_slope_C=ms.C,
        zero_limit_C=zl.C,
        C_band=(chosen.lower, chosen.upper),
        mu_B=mu,
        sample_counts={"n_points": n_points, "n_pert": n_pert if mode == "sampled" else 0},
        bias_direction={"plus": _bias(mode, "plus"), "minus": _bias(mode, "minus")},
        seed=int(seed),
        pert_study=study,
    )


def certify_family(members, **kwargs) -> WrReport:
    """Certify ``{T: oracle}`` member by member; ``fitted_C`` is the worst over ``T``."""
    reports = [certify(oracle, T=T, **kwargs) for T, oracle in sorted(members.items())]
    if not reports:
        raise ParameterOutOfRange("empty family")
    worst = max(reports, key=lambda r: r.fitted_C)
    merged = replace(
        worst,
        T_values=[r.T_values[0] for r in reports],
        cells=[c for r in reports for c in r.cells],
        max_slope_C=max(r.max_slope_C for r in reports),
        zero_limit_C=max(r.zero_limit_C for r in reports),
    )
    return merged
