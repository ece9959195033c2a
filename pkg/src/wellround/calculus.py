"""Algebra of well-roundedness certificates.

Certificates ``(C, T0, eps0)`` are combined by closed-form rules: pullback
along a roundomorphism with Lipschitz modulus ``F``, products of families,
fibered sets over a base, and the dilation bounds for convex fibers.
Arithmetic stays in ``Fraction`` whenever every input is an int or Fraction.

Roundomorphisms are measure-preserving, locally Lipschitz maps between
groups: ``r(O_eps g O_eps)`` is inside ``O_{f(g) eps} r(g) O_{f(g) eps}``.
Both properties are checked here by sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import optimize, stats

from .certifier import (
    DEFAULT_SEED,
    SetOracle,
    _block_rng,
    _exact,
    disk,
    interval,
    single_set_constant,
)
from .errors import (
    ChartOverflow,
    EmptyList,
    GroupMismatch,
    NonpositiveF,
    NotStarShaped,
    ParameterOutOfRange,
)
from .groups import (
    GroupModel,
    ProductGroup,
    diagonal_A,
    euclidean,
    product,
    special_linear,
    special_orthogonal,
    unipotent_N,
)

# -- certificates -------------------------------------------------------------------------------


@dataclass(frozen=True)
class WrCertificate:
    C: object
    T0: object = 0
    eps0: object = None
    provenance: tuple = ()

    def to_doc(self) -> dict:
        return {
            "C": _num_doc(self.C),
            "T0": _num_doc(self.T0),
            "eps0": _num_doc(self.eps0),
            "provenance": [list(p) for p in self.provenance],
        }


def _num_doc(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x.numerator)
    return x


def certificate(C, T0=0, eps0=None, label="given") -> WrCertificate:
    (C,) = _exact(C)
    if C <= 0:
        raise ParameterOutOfRange("C must be positive")
    return WrCertificate(C, T0, 1 / C if eps0 is None else eps0, ((label, _num_doc(C)),))


def pullback_certificate(cert: WrCertificate, F) -> WrCertificate:
    """Certificate of the preimage family under a roundomorphism with modulus bound ``F``."""
    F, C = _exact(F, cert.C)
    if F <= 0:
        raise NonpositiveF("the modulus bound F must be positive")
    new_c = F * max(C, 1)
    return WrCertificate(new_c, cert.T0, 1 / new_c, cert.provenance + (("pullback", _num_doc(F)),))


def product_certificate(certs, F=1) -> WrCertificate:
    """Left fold of ``C <- 3 max(C, C_next)``, then pullback by ``F``."""
    certs = list(certs)
    if not certs:
        raise EmptyList("product of zero certificates")
    acc = _exact(*[c.C for c in certs])
    c = acc[0]
    trace = certs[0].provenance
    for nxt, cert in zip(acc[1:], certs[1:]):
        c = 3 * max(c, nxt)
        trace = trace + (("product_fold", _num_doc(c)),)
    folded = WrCertificate(c, max(x.T0 for x in certs), 1 / c, trace)
    return pullback_certificate(folded, F)


def fibered_constant(C_D, C_E, c, V_min, V_max) -> WrCertificate:
    """Constant of the fibered family ``union over z in E_T of z x D_z``.

    ``C = C_D c (1 + C_D)`` controls the fibers and
    ``C_B = 6 (V_max / V_min) C_E + 3 C``; valid for ``eps < 1 / (C + C_E)``.
    """
    C_D, C_E, c, V_min, V_max = _exact(C_D, C_E, c, V_min, V_max)
    if C_D < 1 or c < 1:
        raise ParameterOutOfRange("need C_D >= 1 and c >= 1")
    if V_min <= 0 or V_max <= 0 or C_E < 0:
        raise ParameterOutOfRange("volumes must be positive and C_E nonnegative")
    if V_max < V_min:
        raise ParameterOutOfRange("V_max must be at least V_min")
    inner = C_D * c * (1 + C_D)
    total = 6 * (V_max / V_min) * C_E + 3 * inner
    trace = (("fibered", {"C": _num_doc(inner), "C_E": _num_doc(C_E), "V_ratio": _num_doc(V_max / V_min)}),)
    return WrCertificate(total, 0, 1 / (inner + C_E), trace)


def blc_from_dilation(C, R, n: int):
    """``16^(n+1) R C``: the BLC constant of fibers with ``D + B_eps <= (1 + C eps) D`` inside a radius-``R`` ball."""
    C, R = _exact(C, R)
    if C < 1 or R <= 0 or int(n) != n or n < 1:
        raise ParameterOutOfRange("need C >= 1, R > 0 and integer n >= 1")
    return 16 ** (int(n) + 1) * R * C


# -- roundomorphisms ------------------------------------------------------------------------------


@dataclass(frozen=True)
class Roundomorphism:
    source: GroupModel
    target: GroupModel
    map: Callable
    modulus: Callable
    measure_preserving_checked: bool = False
    mp_metadata: dict = field(default_factory=dict)
    name: str = "r"


def compose_roundomorphisms(r1: Roundomorphism, r2: Roundomorphism) -> Roundomorphism:
    """``r2 o r1`` with modulus ``f2(r1(g)) f1(g)``."""
    if r1.target != r2.source:
        raise GroupMismatch(f"cannot compose: {r1.target.name} != {r2.source.name}")
    return Roundomorphism(
        r1.source,
        r2.target,
        lambda g: r2.map(r1.map(g)),
        lambda g: np.asarray(r2.modulus(r1.map(g))) * np.asarray(r1.modulus(g)),
        r1.measure_preserving_checked and r2.measure_preserving_checked,
        {"composed": [r1.name, r2.name]},
        f"{r2.name}o{r1.name}",
    )


def _const(value):
    return lambda g: np.full(np.asarray(g).shape[:-2], float(value))


def identity_roundomorphism(group: GroupModel) -> Roundomorphism:
    return Roundomorphism(group, group, lambda g: np.asarray(g), _const(1.0), name="id")


def scaling_roundomorphism(n: int, s: float, claimed_modulus: float | None = None) -> Roundomorphism:
    """``x -> s x`` on R^n (a dilation: locally Lipschitz with ``f = |s|``, not measure preserving)."""
    g = euclidean(n)
    f = abs(s) if claimed_modulus is None else claimed_modulus
    return Roundomorphism(g, g, lambda m: g.exp(s * g.log(m)), _const(f), name=f"scale{s}")


def projection_roundomorphism(group: ProductGroup, index: int = 0) -> Roundomorphism:
    """Projection of a direct product onto one factor (``f = 1``)."""
    factor = group.factors[index]
    off = group.offsets[index]
    k = factor.ambient_dim

    def proj(m):
        return np.asarray(m)[..., off : off + k, off : off + k].copy()

    return Roundomorphism(group, factor, proj, _const(1.0), name=f"proj{index}")


def iwasawa_kan(g) -> tuple:
    """Batched ``g = k a n`` for 2x2 matrices of determinant one."""
    g = np.asarray(g, dtype=float)
    c0 = g[..., :, 0]
    r11 = np.linalg.norm(c0, axis=-1)
    cs, sn = c0[..., 0] / r11, c0[..., 1] / r11
    k = np.stack([np.stack([cs, -sn], -1), np.stack([sn, cs], -1)], -2)
    r12 = cs * g[..., 0, 1] + sn * g[..., 1, 1]
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    r22 = det / r11
    zero = np.zeros_like(r11)
    a = np.stack([np.stack([r11, zero], -1), np.stack([zero, r22], -1)], -2)
    one = np.ones_like(r11)
    n = np.stack([np.stack([one, r12 / r11], -1), np.stack([zero, one], -1)], -2)
    return k, a, n


def iwasawa_roundomorphism(modulus: Callable) -> Roundomorphism:
    """``SL2 -> SO2 x A2 x N2``, ``g -> (k, a, n)`` with a caller-supplied modulus."""
    src = special_linear(2)
    tgt = product([special_orthogonal(2), diagonal_A(2), unipotent_N(2)])

    def fwd(g):
        return tgt.assemble(iwasawa_kan(g))

    return Roundomorphism(src, tgt, fwd, modulus, name="iwasawa")


# -- local Lipschitz verification ------------------------------------------------------------------


def _safe_norm(target, mats):
    with np.errstate(all="ignore"):
        v = target.chart_norm(target.log(mats))
    v = np.asarray(v, dtype=float)
    return np.where(np.isfinite(v), v, np.inf)


def decompose_two_sided(target: GroupModel, base, h, hints=(), optimize_search: bool = True, budget=None):
    """Smallest ``max(|log u'|, |log v'|)`` found with ``h = u' base v'``.

    Candidates: pure right (``u' = 1``), pure left (``v' = 1``), the even
    split of the left displacement, and caller hints (Lie coordinates of
    ``u'``); a Nelder-Mead search over ``u'`` refines the best one unless it
    already meets ``budget``.
    """
    base_inv = target.inverse(base)

    def cost(x):
        x = np.asarray(x, dtype=float)
        u = target.exp(x)
        v = base_inv @ target.inverse(u) @ h
        return float(max(target.chart_norm(x), _safe_norm(target, v)))

    with np.errstate(all="ignore"):
        left = target.log(h @ base_inv)
    cands = [np.zeros(target.dim)]
    if np.all(np.isfinite(left)):
        cands += [left, 0.5 * left]
    cands += [np.asarray(c, dtype=float) for c in hints]
    values = [cost(c) for c in cands]
    best = int(np.argmin(values))
    x0, val = cands[best], values[best]
    if optimize_search and (budget is None or val > budget):
        res = optimize.minimize(
            cost, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400 * target.dim}
        )
        if res.fun < val:
            val = float(res.fun)
    return val


@dataclass
class LipschitzReport:
    worst_ratio: float
    passed: bool
    slack: float
    n_checks: int
    worst_witness: dict
    eps_grid: list


def verify_local_lipschitz(
    r: Roundomorphism, test_elements, eps_grid=(0.01, 0.05), n_pert: int = 16, seed: int = DEFAULT_SEED, slack=0.05
) -> LipschitzReport:
    """Sample ``u, v`` in ``O_eps`` and check ``r(u g v) = u' r(g) v'`` with ``|log u'|, |log v'| <= f(g) eps``."""
    g = np.asarray(test_elements, dtype=float)
    if g.ndim == 2:
        g = g[None]
    f = np.asarray(r.modulus(g), dtype=float).reshape(len(g))
    for eps in eps_grid:
        if np.any(eps * f > r.target.eps_chart):
            raise ChartOverflow(f"eps * f(g) exceeds the chart radius at eps={eps}")
    rng = _block_rng(seed, 0)
    same = r.source == r.target
    worst, witness, n_checks = 0.0, {}, 0
    for i, gi in enumerate(g):
        base = r.map(gi[None])[0]
        for eps in eps_grid:
            xs = eps * r.source.unit_ball_coords(rng, n_pert)
            ys = eps * r.source.unit_ball_coords(rng, n_pert)
            u, v = r.source.exp(xs), r.source.exp(ys)
            h = r.map(u @ gi @ v)
            budget = f[i] * eps
            for j in range(n_pert):
                hints = [xs[j]] if same else []
                val = decompose_two_sided(r.target, base, h[j], hints, budget=budget)
                ratio = val / budget
                n_checks += 1
                if ratio > worst:
                    worst = ratio
                    witness = {"element": i, "eps": eps, "value": val, "f": float(f[i])}
    return LipschitzReport(worst, worst <= 1 + slack, slack, n_checks, witness, list(eps_grid))


# -- measure preservation ------------------------------------------------------------------------------


def _box_haar(group: GroupModel, lo, hi, rng, n=200_000) -> float:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    mats, w = group.sample_window(rng, n)
    c = group.window_coords(mats)
    inside = np.all((c >= lo) & (c <= hi), axis=-1)
    return float(group.window_volume() * np.mean(w * inside))


def check_measure_preserving(r: Roundomorphism, boxes, n_samples: int = 20_000, seed: int = DEFAULT_SEED, alpha=0.01):
    """Chi-square test of ``r_* (Haar on the source window)`` against target Haar on ``boxes``.

    ``boxes`` are ``(lows, highs)`` in target window coordinates and must
    lie inside the image of the source window.  Returns the roundomorphism
    with ``measure_preserving_checked`` set and the test metadata attached.
    """
    rng = _block_rng(seed, 1)
    g, w = r.source.sample_window(rng, n_samples)
    mass = r.source.window_volume() * float(np.mean(w))
    idx = rng.choice(n_samples, size=n_samples, p=w / w.sum())
    coords = r.target.window_coords(r.map(g[idx]))
    observed, expected = [], []
    for lo, hi in boxes:
        inside = np.all((coords >= np.asarray(lo)) & (coords <= np.asarray(hi)), axis=-1)
        observed.append(int(inside.sum()))
        expected.append(n_samples * _box_haar(r.target, lo, hi, rng) / mass)
    rest = n_samples - sum(expected)
    if rest < 0:
        raise ParameterOutOfRange("boxes carry more target mass than the source window")
    observed.append(n_samples - sum(observed))
    expected.append(rest)
    obs, exp = np.array(observed, dtype=float), np.array(expected)
    keep = exp > 0
    chi2 = float(np.sum((obs[keep] - exp[keep]) ** 2 / exp[keep]))
    p = float(stats.chi2.sf(chi2, max(int(keep.sum()) - 1, 1)))
    meta = {"chi2": chi2, "p_value": p, "alpha": alpha, "observed": observed, "expected": expected}
    return replace(r, measure_preserving_checked=p > alpha, mp_metadata=meta)


# -- convex bodies ----------------------------------------------------------------------------------------


@dataclass
class ConvexDilationReport:
    C: float
    alpha: float
    passed: bool
    worst_excess: float
    n_samples: int
    blc_C: object
    lwr_C: float
    lwr_eps0: float


def _inradius(body: SetOracle, rng) -> float:
    origin = body.group.identity(1)
    if body.signed_distance is not None:
        return float(-body.signed_distance(origin)[0])
    n = body.group.dim
    dirs = rng.normal(size=(2000, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    lo, hi = np.zeros(len(dirs)), np.full(len(dirs), 1.0)
    while True:  # grow until outside
        inside = body.member(body.group.exp(dirs * hi[:, None]))
        if not inside.any():
            break
        hi = np.where(inside, 2 * hi, hi)
    for _ in range(50):
        mid = (lo + hi) / 2
        inside = body.member(body.group.exp(dirs * mid[:, None]))
        lo, hi = np.where(inside, mid, lo), np.where(inside, hi, mid)
    # radial function minimum overestimates the inradius of sampled directions; shrink slightly
    return float(lo.min()) * (1 - 1e-3)


def convex_dilation_check(
    body: SetOracle, eps_grid=(0.01, 0.05), n_samples: int = 10_000, seed: int = DEFAULT_SEED, alpha=None, tol=1e-9
) -> ConvexDilationReport:
    """Sample ``x`` in the body and unit ``v``; check ``x + eps v`` lies in ``(1 + eps/alpha) body``."""
    rng = _block_rng(seed, 2)
    if alpha is None:
        alpha = _inradius(body, rng)
    if not alpha > 0:
        raise NotStarShaped("the body has no interior ball around the origin")
    group = body.group
    n = group.dim
    lo, hi = np.asarray(body.bounds[0]), np.asarray(body.bounds[1])
    pts = []
    while sum(len(p) for p in pts) < n_samples:
        cand = lo + (hi - lo) * rng.random((n_samples, n))
        pts.append(cand[body.member(group.exp(cand))])
    x = np.concatenate(pts)[:n_samples]
    v = rng.normal(size=(len(x), n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    worst = -np.inf
    for eps in eps_grid:
        y = (x + eps * v) / (1 + eps / alpha)
        if body.signed_distance is not None:
            worst = max(worst, float(body.signed_distance(group.exp(y)).max()))
        else:
            worst = max(worst, 0.0 if body.member(group.exp(y)).all() else math.inf)
    if worst > tol:
        raise NotStarShaped(f"dilation containment fails by {worst:.3e}")
    C = 1.0 / alpha
    R = float(np.max(np.linalg.norm(np.stack(np.meshgrid(*zip(lo, hi))).reshape(n, -1).T, axis=1)))
    mu = body.volume if body.volume is not None else float(np.prod(hi - lo) * np.mean(body.member(group.exp(x))))
    # tube of a convex body: mu((1+x)D) - mu((1-x)D) <= 2 n x 1.5^(n-1) mu, x = 2 eps / alpha <= 1/2
    c_tube = 4 * n * 1.5 ** (n - 1) * mu / alpha
    lwr_C, lwr_eps0 = single_set_constant(c_tube, mu)
    return ConvexDilationReport(
        C, alpha, True, worst, len(x), blc_from_dilation(max(C, 1.0), R, n), lwr_C, min(lwr_eps0, alpha / 4)
    )


# -- BLC fiber families ------------------------------------------------------------------------------------


def _sin_range(u, v):
    """Elementwise min and max of ``sin`` over ``[u, v]``."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    su, sv = np.sin(u), np.sin(v)
    two_pi = 2 * math.pi
    peak = math.pi / 2 + two_pi * np.ceil((u - math.pi / 2) / two_pi) <= v
    trough = -math.pi / 2 + two_pi * np.ceil((u + math.pi / 2) / two_pi) <= v
    hi = np.where(peak, 1.0, np.maximum(su, sv))
    lo = np.where(trough, -1.0, np.minimum(su, sv))
    return lo, hi


@dataclass(frozen=True)
class DiskFibers:
    """Planar disks ``D_z`` of radius ``r0 + amp sin(freq z + phase)`` centred at ``z * drift``."""

    r0: float = 1.0
    amp: float = 0.0
    freq: float = 1.0
    phase: float = 0.0
    drift: tuple = (0.0, 0.0)

    @property
    def kind(self) -> str:
        if any(self.drift):
            return "affine"
        return "radius-function" if self.amp else "constant"

    def radius(self, z):
        return self.r0 + self.amp * np.sin(self.freq * np.asarray(z, dtype=float) + self.phase)

    def center(self, z):
        return np.asarray(z, dtype=float)[..., None] * np.asarray(self.drift, dtype=float)

    def radius_range(self, a, b):
        """Elementwise min and max of the radius over ``[a, b]``."""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if self.amp == 0 or self.freq == 0:
            r = self.radius(a)
            return r, r
        p, q = self.freq * a + self.phase, self.freq * b + self.phase
        lo, hi = _sin_range(np.minimum(p, q), np.maximum(p, q))
        if self.amp < 0:
            lo, hi = hi, lo
        return self.r0 + self.amp * lo, self.r0 + self.amp * hi

    def fiber_oracle(self, z: float) -> SetOracle:
        return disk(float(self.radius(z)), center=tuple(self.center(z)))

    def to_doc(self) -> dict:
        return {"kind": self.kind, "r0": self.r0, "amp": self.amp, "freq": self.freq, "phase": self.phase, "drift": list(self.drift)}


@dataclass(frozen=True)
class BlcFamily:
    base_group: GroupModel
    base_set: SetOracle
    fiber: DiskFibers
    C_D: float
    V_min: float
    bound_R: float
    c: float = 1.0

    @property
    def base_interval(self):
        return self.base_set.params["lo"], self.base_set.params["hi"]

    def to_doc(self) -> dict:
        lo, hi = self.base_interval
        return {
            "base": {"lo": lo, "hi": hi},
            "fiber": self.fiber.to_doc(),
            "C_D": self.C_D,
            "V_min": self.V_min,
            "R": self.bound_R,
            "c": self.c,
        }


def disk_family(lo=-1.0, hi=1.0, fiber: DiskFibers | None = None, C_D=16, V_min=None, R=None, c=1) -> BlcFamily:
    fiber = DiskFibers(1.0, 0.1) if fiber is None else fiber
    if C_D < 1:
        raise ParameterOutOfRange("C_D must be at least 1")
    rmin, rmax = (float(v) for v in fiber.radius_range(lo, hi))
    if rmin <= 0:
        raise ParameterOutOfRange("fiber radius must stay positive on the base")
    if V_min is None:
        V_min = math.pi * rmin**2
    if R is None:
        shift = max(float(np.linalg.norm(fiber.center(lo))), float(np.linalg.norm(fiber.center(hi))))
        R = shift + rmax
    return BlcFamily(euclidean(1), interval(lo, hi), fiber, C_D, V_min, R, c)


def shipped_disk_family() -> BlcFamily:
    """Base ``[-1, 1]``, fibers of radius ``1 + 0.1 sin z``, ``C_D = 16``."""
    return disk_family(-1.0, 1.0, DiskFibers(1.0, 0.1), C_D=16, V_min=math.pi * 0.81, R=1.1)


def fibered_oracle(family: BlcFamily) -> SetOracle:
    """``union over z in base of {z} x D_z`` in ``R1 x R2``.

    Coordinate balls of the product are products of balls, so in this
    abelian group ``O_eps B O_eps = B + (B_{2eps} x B_{2eps})``; the exact
    hooks evaluate that sum (and the matching erosion) in closed form for
    constant, radius-function and pure-drift fibers.
    """
    lo, hi = family.base_interval
    fib = family.fiber
    # default windows, widened by a unit margin when the set would not fit
    w = max(2.0, math.ceil(family.bound_R + 1))
    base = euclidean(1).with_window((min(-2.0, math.floor(lo - 1)),), (max(2.0, math.ceil(hi + 1)),))
    group = product([base, euclidean(2).with_window((-w, -w), (w, w))])

    def split(mats):
        x = group.log(mats)
        return x[..., 0], x[..., 1:]

    def member(mats):
        z, y = split(mats)
        inside = (z >= lo) & (z <= hi)
        return inside & (np.linalg.norm(y - fib.center(z), axis=-1) <= fib.radius(z))

    exact_plus = exact_minus = None
    if not (fib.amp and any(fib.drift)):
        d = np.asarray(fib.drift, dtype=float)

        def exact_plus(mats, eps):
            z, y = split(mats)
            a, b = np.maximum(z - 2 * eps, lo), np.minimum(z + 2 * eps, hi)
            ok = a <= b
            if any(fib.drift):
                dd = d @ d
                t = np.clip((y @ d) / dd, a, b)
                dist = np.linalg.norm(y - t[..., None] * d, axis=-1)
                return ok & (dist <= fib.r0 + 2 * eps)
            rmax = np.where(ok, fib.radius_range(a, np.maximum(a, b))[1], -np.inf)
            return ok & (np.linalg.norm(y, axis=-1) <= rmax + 2 * eps)

        def exact_minus(mats, eps):
            z, y = split(mats)
            ok = (z - 2 * eps >= lo) & (z + 2 * eps <= hi)
            if any(fib.drift):
                far = np.maximum(
                    np.linalg.norm(y - (z - 2 * eps)[..., None] * d, axis=-1),
                    np.linalg.norm(y - (z + 2 * eps)[..., None] * d, axis=-1),
                )
                return ok & (far <= fib.r0 - 2 * eps)
            rmin = fib.radius_range(z - 2 * eps, z + 2 * eps)[0]
            return ok & (np.linalg.norm(y, axis=-1) <= rmin - 2 * eps)

    from scipy import integrate

    vol = integrate.quad(lambda z: math.pi * float(fib.radius(z)) ** 2, lo, hi)[0]
    R = family.bound_R
    return SetOracle(
        group,
        member,
        None,
        ((lo, -R, -R), (hi, R, R)),
        "fibered",
        vol,
        exact_plus,
        exact_minus,
        params={"kind": "fibered", **family.to_doc()},
    )


def family_certificate(family: BlcFamily) -> WrCertificate:
    """Closed-form constant of the fibered set.

    The base interval of length ``L`` has a boundary tube of measure
    ``8 eps`` (two points, each fattened to length ``4 eps``), so
    ``C_E = 16 / L``; ``V_max`` is the area of the bounding disk.
    """
    lo, hi = family.base_interval
    C_E, _ = single_set_constant(8, hi - lo)
    V_max = math.pi * family.bound_R**2
    return fibered_constant(family.C_D, C_E, family.c, family.V_min, V_max)


@dataclass
class BlcConditionResult:
    passed: bool
    worst: float
    witness: dict


@dataclass
class BlcReport:
    conditions: dict
    n_samples: int
    eps_grid: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_doc(self) -> dict:
        return {
            "passed": self.passed,
            "n_samples": self.n_samples,
            "eps_grid": self.eps_grid,
            "conditions": {k: {"passed": v.passed, "worst": v.worst, "witness": v.witness} for k, v in self.conditions.items()},
        }


def _worst(values, z, extra=None):
    i = int(np.argmax(values))
    w = {"z": float(z[i])}
    if extra is not None:
        w.update({k: float(v[i]) for k, v in extra.items()})
    return float(values[i]), w


def blc_check(family: BlcFamily, eps_grid=(0.01, 0.05), n_samples: int = 2000, seed: int = DEFAULT_SEED) -> BlcReport:
    """Check the four BLC conditions on sampled base points.

    1. each fiber is LWR with constant ``C_D`` for ``eps < 1/C_D``;
    2. ``z' = u z v`` implies ``D_z^(-C_D eps) <= D_z' <= D_z^(+C_D eps)``;
    3. fiber area ``>= V_min``;
    4. fibers lie in the bounding disk of radius ``R``.

    Fibers are planar disks, so their dilations and erosions are disks of
    radius ``r +- 2 delta`` and every check is a closed-form comparison.
    ``worst`` is the largest excess (``> 0`` means violated).
    """
    rng = _block_rng(seed, 3)
    lo, hi = family.base_interval
    fib, C_D = family.fiber, family.C_D
    z = lo + (hi - lo) * rng.random(n_samples)
    z = np.concatenate([z, [lo, hi]])
    r = fib.radius(z)
    cen = fib.center(z)
    out = {}

    ex1 = np.full(len(z), -np.inf)
    for eps in eps_grid:
        if eps >= 1 / C_D:
            continue
        lo_r = r - 2 * eps
        ratio = np.where(lo_r > 0, ((r + 2 * eps) / np.maximum(lo_r, 1e-300)) ** 2, np.inf)
        ex1 = np.maximum(ex1, ratio - (1 + C_D * eps))
    w, wit = _worst(ex1, z)
    out["1_fiber_lwr"] = BlcConditionResult(w <= 1e-12, w, wit)

    ex2 = np.full(len(z), -np.inf)
    zp_all = np.zeros(len(z))
    for eps in eps_grid:
        if eps >= 1 / C_D:
            continue
        delta = C_D * eps
        zp = z + eps * (2 * rng.random(len(z)) - 1) + eps * (2 * rng.random(len(z)) - 1)
        zp = np.clip(zp, lo, hi)
        rp, cp = fib.radius(zp), fib.center(zp)
        shift = np.linalg.norm(cen - cp, axis=-1)
        outer = shift + rp - (r + 2 * delta)
        inner = np.where(r - 2 * delta > 0, shift + (r - 2 * delta) - rp, -np.inf)
        e = np.maximum(outer, inner)
        upd = e > ex2
        zp_all = np.where(upd, zp, zp_all)
        ex2 = np.maximum(ex2, e)
    w, wit = _worst(ex2, z, {"z_prime": zp_all})
    out["2_lipschitz_in_base"] = BlcConditionResult(w <= 1e-12, w, wit)

    area = math.pi * r**2
    w, wit = _worst(family.V_min - area, z)
    out["3_volume_lower_bound"] = BlcConditionResult(w <= 1e-12, w, wit)

    reach = np.linalg.norm(cen, axis=-1) + r
    w, wit = _worst(reach - family.bound_R, z)
    out["4_bounded"] = BlcConditionResult(w <= 1e-12, w, wit)
    return BlcReport(out, len(z), list(eps_grid))
