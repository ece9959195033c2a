"""Matrix Lie groups used by the certifier.

Each model knows its Lie algebra basis (orthonormal for the Frobenius inner
product), the exponential chart, coordinate balls ``O_eps = exp(B_eps)``,
and a bounded Haar window for Monte Carlo integration.

Window sampling returns ``(elements, weights)`` where ``weights`` is the Haar
density with respect to Lebesgue measure on the window coordinates, so
``window.volume * mean(weights * indicator)`` estimates the Haar measure of
a set inside the window.  Global Haar normalization is arbitrary; only
ratios are ever used.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import NoWindow, UnknownGroup
from .linalg import matrix_exp, matrix_log

EPS_CHART = 0.5


@dataclass(frozen=True)
class HaarWindow:
    """Axis box in window coordinates; ``volume`` is the box's Lebesgue volume."""

    lows: tuple
    highs: tuple

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.highs, self.lows)))

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        lo = np.asarray(self.lows, dtype=float)
        hi = np.asarray(self.highs, dtype=float)
        return lo + (hi - lo) * rng.random((size, lo.size))


def _orthonormalize(mats):
    basis = []
    for z in mats:
        v = np.array(z, dtype=float)
        for b in basis:
            v = v - np.sum(b * v) * b
        nrm = np.sqrt(np.sum(v * v))
        if nrm < 1e-12:
            raise ValueError("Lie basis elements are linearly dependent")
        basis.append(v / nrm)
    return tuple(basis)


def _unit_ball(rng: np.random.Generator, size: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((size, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = rng.random(size) ** (1.0 / dim)
    return g * r[:, None]


@dataclass(frozen=True)
class GroupModel:
    name: str
    ambient_dim: int
    lie_basis: tuple = field(repr=False)
    is_abelian: bool
    window: HaarWindow | None = None
    eps_chart: float = EPS_CHART

    @property
    def dim(self) -> int:
        return len(self.lie_basis)

    @property
    def components(self) -> tuple:
        return (self,)

    def identity(self, size: int | None = None) -> np.ndarray:
        eye = np.eye(self.ambient_dim)
        return eye if size is None else np.broadcast_to(eye, (size,) + eye.shape).copy()

    def algebra(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        basis = np.stack(self.lie_basis)
        return np.tensordot(coords, basis, axes=([-1], [0]))

    def exp(self, coords) -> np.ndarray:
        return matrix_exp(self.algebra(coords))

    def log(self, mats) -> np.ndarray:
        """Lie-algebra coordinates of ``mats`` (valid inside the chart)."""
        x = matrix_log(np.asarray(mats, dtype=float), check=False)
        basis = np.stack(self.lie_basis)
        return np.einsum("...ij,kij->...k", x, basis)

    def chart_norm(self, coords) -> np.ndarray:
        return np.linalg.norm(np.asarray(coords, dtype=float), axis=-1)

    def inverse(self, mats) -> np.ndarray:
        return np.linalg.inv(mats)

    def unit_ball_coords(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return _unit_ball(rng, size, self.dim)

    def constraint_residual(self, mats) -> np.ndarray:
        """Violation of the defining equations; 0 for exact members."""
        raise NotImplementedError

    def with_window(self, lows, highs) -> "GroupModel":
        new = copy.copy(self)
        object.__setattr__(new, "window", HaarWindow(tuple(map(float, lows)), tuple(map(float, highs))))
        return new

    def window_volume(self) -> float:
        if self.window is None:
            raise NoWindow(f"group {self.name} has no Haar window")
        return self.window.volume

    def sample_window(self, rng: np.random.Generator, size: int):
        raise NoWindow(f"group {self.name} has no Haar window")

    def window_coords(self, mats) -> np.ndarray:
        raise NoWindow(f"group {self.name} has no window coordinates")

    def __hash__(self):
        return hash(self.name)

    def __eq__(self, other):
        return isinstance(other, GroupModel) and other.name == self.name


class Euclidean(GroupModel):
    """R^n embedded as affine translations ``[[I, x], [0, 1]]``."""

    def __init__(self, n: int, window: HaarWindow | None = None):
        basis = []
        for i in range(n):
            z = np.zeros((n + 1, n + 1))
            z[i, n] = 1.0
            basis.append(z)
        if window is None:
            window = HaarWindow((-2.0,) * n, (2.0,) * n)
        object.__setattr__(self, "n", n)
        super().__init__(f"R{n}", n + 1, tuple(basis), True, window)

    def exp(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        out = np.broadcast_to(np.eye(self.n + 1), coords.shape[:-1] + (self.n + 1, self.n + 1)).copy()
        out[..., : self.n, self.n] = coords
        return out

    def log(self, mats) -> np.ndarray:
        return np.asarray(mats)[..., : self.n, self.n].copy()

    def inverse(self, mats) -> np.ndarray:
        out = np.array(mats, dtype=float, copy=True)
        out[..., : self.n, self.n] *= -1.0
        return out

    def constraint_residual(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        ref = self.exp(self.log(mats))
        return np.max(np.abs(mats - ref), axis=(-2, -1))

    def sample_window(self, rng, size):
        coords = self.window.uniform(rng, size)
        return self.exp(coords), np.ones(size)

    def window_coords(self, mats) -> np.ndarray:
        return self.log(mats)

    def __reduce__(self):
        return (Euclidean, (self.n, self.window))


class DiagonalA(GroupModel):
    """Positive diagonal matrices of determinant one."""

    def __init__(self, m: int, window: HaarWindow | None = None):
        raw = []
        for i in range(m - 1):
            z = np.zeros((m, m))
            z[i, i] = 1.0
            z[i + 1, i + 1] = -1.0
            raw.append(z)
        if window is None:
            window = HaarWindow((-1.0,) * (m - 1), (1.0,) * (m - 1))
        object.__setattr__(self, "m", m)
        super().__init__(f"A{m}", m, _orthonormalize(raw), True, window)

    def exp(self, coords) -> np.ndarray:
        diag = self.algebra(coords).diagonal(axis1=-2, axis2=-1)
        return np.einsum("...i,ij->...ij", np.exp(diag), np.eye(self.m))

    def log(self, mats) -> np.ndarray:
        d = np.log(np.asarray(mats).diagonal(axis1=-2, axis2=-1))
        x = np.einsum("...i,ij->...ij", d, np.eye(self.m))
        return np.einsum("...ij,kij->...k", x, np.stack(self.lie_basis))

    def constraint_residual(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        off = np.max(np.abs(mats - np.einsum("...ii->...i", mats)[..., None] * np.eye(self.m)), axis=(-2, -1))
        return np.maximum(off, np.abs(np.linalg.det(mats) - 1.0))

    def sample_window(self, rng, size):
        coords = self.window.uniform(rng, size)
        return self.exp(coords), np.ones(size)

    def window_coords(self, mats) -> np.ndarray:
        return self.log(mats)

    def __reduce__(self):
        return (DiagonalA, (self.m, self.window))


class UnipotentN(GroupModel):
    """Unit upper-triangular matrices; window coordinates are the entries above the diagonal."""

    def __init__(self, m: int, window: HaarWindow | None = None):
        basis = []
        for i in range(m):
            for j in range(i + 1, m):
                z = np.zeros((m, m))
                z[i, j] = 1.0
                basis.append(z)
        k = len(basis)
        if window is None:
            window = HaarWindow((-1.0,) * k, (1.0,) * k)
        object.__setattr__(self, "m", m)
        super().__init__(f"N{m}", m, tuple(basis), m <= 2, window)

    def constraint_residual(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        lower = np.tril(mats) - np.eye(self.m)
        return np.max(np.abs(lower), axis=(-2, -1))

    def sample_window(self, rng, size):
        entries = self.window.uniform(rng, size)
        out = self.identity(size)
        iu = np.triu_indices(self.m, 1)
        out[:, iu[0], iu[1]] = entries
        return out, np.ones(size)

    def window_coords(self, mats) -> np.ndarray:
        iu = np.triu_indices(self.m, 1)
        return np.asarray(mats)[..., iu[0], iu[1]]

    def __reduce__(self):
        return (UnipotentN, (self.m, self.window))


class SpecialOrthogonal(GroupModel):
    """SO(m); the window is the whole group with total mass normalized to 1."""

    def __init__(self, m: int):
        raw = []
        for i in range(m):
            for j in range(i + 1, m):
                z = np.zeros((m, m))
                z[i, j] = 1.0
                z[j, i] = -1.0
                raw.append(z)
        object.__setattr__(self, "m", m)
        super().__init__(f"SO{m}", m, _orthonormalize(raw), m <= 2, HaarWindow((0.0,), (1.0,)))

    def constraint_residual(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        gram = np.swapaxes(mats, -1, -2) @ mats
        orth = np.max(np.abs(gram - np.eye(self.m)), axis=(-2, -1))
        return np.maximum(orth, np.abs(np.linalg.det(mats) - 1.0))

    def sample_window(self, rng, size):
        g = rng.standard_normal((size, self.m, self.m))
        q, r = np.linalg.qr(g)
        signs = np.sign(np.einsum("...ii->...i", r))
        signs[signs == 0] = 1.0
        q = q * signs[:, None, :]
        neg = np.linalg.det(q) < 0
        q[neg, :, 0] *= -1.0
        return q, np.ones(size)

    def window_coords(self, mats) -> np.ndarray:
        if self.m != 2:
            raise NoWindow("window coordinates are only defined for SO2")
        mats = np.asarray(mats)
        return (np.mod(np.arctan2(mats[..., 1, 0], mats[..., 0, 0]), 2 * np.pi) / (2 * np.pi))[..., None]

    def __reduce__(self):
        return (SpecialOrthogonal, (self.m,))


def rotation(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


class SpecialLinear2(GroupModel):
    """SL(2, R) with Haar window in Iwasawa coordinates ``g = k(theta) a(t) n(x)``.

    ``a(t) = diag(e^{t/2}, e^{-t/2})`` and ``n(x) = [[1, x], [0, 1]]``; in these
    coordinates Haar measure is ``e^t dtheta dt dx``.
    """

    def __init__(self, window: HaarWindow | None = None):
        h = np.diag([1.0, -1.0])
        e = np.array([[0.0, 1.0], [0.0, 0.0]])
        f = np.array([[0.0, 0.0], [1.0, 0.0]])
        if window is None:
            window = HaarWindow((0.0, -1.0, -1.0), (2 * np.pi, 1.0, 1.0))
        super().__init__("SL2", 2, _orthonormalize([h, e, f]), False, window)

    def constraint_residual(self, mats) -> np.ndarray:
        return np.abs(np.linalg.det(np.asarray(mats)) - 1.0)

    @staticmethod
    def from_kan(theta, t, x) -> np.ndarray:
        theta, t, x = np.broadcast_arrays(*map(np.asarray, (theta, t, x)))
        an = np.zeros(theta.shape + (2, 2))
        an[..., 0, 0] = np.exp(t / 2)
        an[..., 0, 1] = np.exp(t / 2) * x
        an[..., 1, 1] = np.exp(-t / 2)
        return rotation(theta) @ an

    @staticmethod
    def kan_coords(mats) -> np.ndarray:
        mats = np.asarray(mats, dtype=float)
        c0 = mats[..., :, 0]
        c1 = mats[..., :, 1]
        n0 = np.sum(c0 * c0, axis=-1)
        theta = np.mod(np.arctan2(c0[..., 1], c0[..., 0]), 2 * np.pi)
        t = np.log(n0)
        x = np.sum(c0 * c1, axis=-1) / n0
        return np.stack([theta, t, x], axis=-1)

    def sample_window(self, rng, size):
        c = self.window.uniform(rng, size)
        return self.from_kan(c[:, 0], c[:, 1], c[:, 2]), np.exp(c[:, 1])

    def window_coords(self, mats) -> np.ndarray:
        return self.kan_coords(mats)

    def __reduce__(self):
        return (SpecialLinear2, (self.window,))


class ProductGroup(GroupModel):
    """Direct product realized block-diagonally.

    Coordinate balls are products of the factors' balls with the same
    epsilon, i.e. the chart norm is the max of the factor norms.
    """

    def __init__(self, factors):
        factors = tuple(factors)
        total = sum(f.ambient_dim for f in factors)
        basis = []
        offsets = []
        off = 0
        for f in factors:
            for z in f.lie_basis:
                big = np.zeros((total, total))
                big[off : off + f.ambient_dim, off : off + f.ambient_dim] = z
                basis.append(big)
            offsets.append(off)
            off += f.ambient_dim
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "offsets", tuple(offsets))
        window = None
        if all(f.window is not None for f in factors):
            lows = sum((f.window.lows for f in factors), ())
            highs = sum((f.window.highs for f in factors), ())
            window = HaarWindow(lows, highs)
        super().__init__(
            "x".join(f.name for f in factors), total, tuple(basis), all(f.is_abelian for f in factors), window
        )

    @property
    def components(self) -> tuple:
        return self.factors

    def blocks(self, mats):
        mats = np.asarray(mats)
        for f, off in zip(self.factors, self.offsets):
            yield f, mats[..., off : off + f.ambient_dim, off : off + f.ambient_dim]

    def _coord_slices(self):
        start = 0
        for f in self.factors:
            yield f, slice(start, start + f.dim)
            start += f.dim

    def assemble(self, parts) -> np.ndarray:
        parts = [np.asarray(p) for p in parts]
        lead = parts[0].shape[:-2]
        out = np.zeros(lead + (self.ambient_dim, self.ambient_dim))
        for p, f, off in zip(parts, self.factors, self.offsets):
            out[..., off : off + f.ambient_dim, off : off + f.ambient_dim] = p
        return out

    def exp(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return self.assemble([f.exp(coords[..., sl]) for f, sl in self._coord_slices()])

    def log(self, mats) -> np.ndarray:
        return np.concatenate([f.log(b) for f, b in self.blocks(mats)], axis=-1)

    def inverse(self, mats) -> np.ndarray:
        return self.assemble([f.inverse(b) for f, b in self.blocks(mats)])

    def chart_norm(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        return np.max(np.stack([f.chart_norm(coords[..., sl]) for f, sl in self._coord_slices()], -1), axis=-1)

    def unit_ball_coords(self, rng, size):
        return np.concatenate([f.unit_ball_coords(rng, size) for f in self.factors], axis=-1)

    def constraint_residual(self, mats) -> np.ndarray:
        mats = np.asarray(mats)
        res = [f.constraint_residual(b) for f, b in self.blocks(mats)]
        mask = np.ones((self.ambient_dim, self.ambient_dim), dtype=bool)
        for f, off in zip(self.factors, self.offsets):
            mask[off : off + f.ambient_dim, off : off + f.ambient_dim] = False
        off_block = np.max(np.abs(mats * mask), axis=(-2, -1))
        return np.max(np.stack(res + [off_block], -1), axis=-1)

    def with_window(self, lows, highs):
        lows, highs = list(lows), list(highs)
        new = []
        start = 0
        for f in self.factors:
            k = len(f.window.lows)
            new.append(f.with_window(lows[start : start + k], highs[start : start + k]))
            start += k
        return ProductGroup(new)

    def sample_window(self, rng, size):
        if self.window is None:
            raise NoWindow(f"group {self.name} has no Haar window")
        parts, weight = [], np.ones(size)
        for f in self.factors:
            m, w = f.sample_window(rng, size)
            parts.append(m)
            weight = weight * w
        return self.assemble(parts), weight

    def window_coords(self, mats) -> np.ndarray:
        return np.concatenate([f.window_coords(b) for f, b in self.blocks(mats)], axis=-1)

    def __reduce__(self):
        return (ProductGroup, (self.factors,))


# -- constructors ---------------------------------------------------------------


def euclidean(n: int) -> GroupModel:
    return Euclidean(n)


def diagonal_A(m: int) -> GroupModel:
    return DiagonalA(m)


def unipotent_N(m: int) -> GroupModel:
    return UnipotentN(m)


def special_orthogonal(m: int) -> GroupModel:
    return SpecialOrthogonal(m)


def special_linear(m: int = 2) -> GroupModel:
    if m != 2:
        raise UnknownGroup("only special_linear(2) is built in")
    return SpecialLinear2()


def product(models) -> GroupModel:
    models = list(models)
    if not models:
        raise UnknownGroup("product of zero groups")
    flat = []
    for g in models:
        flat.extend(g.components)
    return ProductGroup(flat)


_NAME = re.compile(r"^(R|A|N|SO|SL)(\d+)$")
_CTORS = {"R": euclidean, "A": diagonal_A, "N": unipotent_N, "SO": special_orthogonal, "SL": special_linear}


def builtin_group(name: str) -> GroupModel:
    """Parse names like ``"R2"``, ``"SO3"``, ``"SL2"`` or ``"R1xSO2"``."""
    parts = name.split("x")
    models = []
    for p in parts:
        m = _NAME.match(p.strip())
        if not m:
            raise UnknownGroup(f"unknown group {p!r}")
        kind, k = m.group(1), int(m.group(2))
        if k < 1 or (kind in ("A", "N", "SO") and k < 2):
            raise UnknownGroup(f"unknown group {p!r}")
        models.append(_CTORS[kind](k))
    return models[0] if len(models) == 1 else product(models)


# -- operations -----------------------------------------------------------------


def ball_sample(group: GroupModel, eps: float, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` elements ``exp(Z)`` with ``Z`` uniform on the eps-ball of the algebra."""
    if eps == 0:
        return group.identity(size)
    return group.exp(eps * group.unit_ball_coords(rng, size))


def haar_sample_window(group: GroupModel, rng: np.random.Generator, size: int = 1):
    """Window samples and their Haar-density weights."""
    if group.window is None:
        raise NoWindow(f"group {group.name} has no Haar window")
    return group.sample_window(rng, size)


def ad_matrix(group: GroupModel, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    gi = np.linalg.inv(g)
    basis = np.stack(group.lie_basis)
    conj = g @ basis @ gi
    return np.einsum("iab,jab->ij", basis, conj)


def ad_operator_norm(group: GroupModel, g) -> float:
    """Largest singular value of ``Ad_g`` in the orthonormal Lie basis."""
    return float(np.linalg.svd(ad_matrix(group, g), compute_uv=False)[0])


@dataclass(frozen=True)
class AdditivityReport:
    c: float
    max_ratio: float
    n_samples: int
    eps_max: float


def additivity_constant(
    group: GroupModel, rng: np.random.Generator | None = None, n_samples: int = 100_000, eps_max: float = 0.1
) -> AdditivityReport:
    """Empirical ``c`` with ``O_eps O_delta`` inside ``O_{c(eps+delta)}``."""
    rng = np.random.default_rng(0) if rng is None else rng
    eps = eps_max * rng.random(n_samples)
    delta = eps_max * rng.random(n_samples)
    u = group.exp(eps[:, None] * group.unit_ball_coords(rng, n_samples))
    v = group.exp(delta[:, None] * group.unit_ball_coords(rng, n_samples))
    norms = group.chart_norm(group.log(u @ v))
    ratio = float(np.max(norms / (eps + delta)))
    return AdditivityReport(c=max(1.0, ratio), max_ratio=ratio, n_samples=n_samples, eps_max=eps_max)
