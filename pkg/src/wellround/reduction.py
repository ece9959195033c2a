"""Reduced bases, reduced Siegel sets and the fundamental domains of SL(m, Z).

A reduced basis is built inductively: ``v_j`` is a lattice vector whose
projection to the orthogonal complement of ``span(v_1..v_{j-1})`` is a
shortest nonzero vector of the projected lattice, then ``v_j`` is translated
by ``v_1..v_{j-1}`` so that every coefficient ``n_{i,j}`` lies in
``[-1/2, 1/2]``.

Change-of-basis matrices are kept exactly as Python integers (object
arrays); the float basis is always recomputed from them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RankTooLarge, SingularBlock, SingularMatrix
from .linalg import KanDecomposition, _check_invertible, as_matrix, kan_decompose

MAX_RANK = 8
TAU_RED = 1e-9
# relative slack when collecting length ties during enumeration
_TIE = 1e-10
_SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class LatticeBasis:
    basis: np.ndarray

    @classmethod
    def from_matrix(cls, m) -> "LatticeBasis":
        m = as_matrix(m, square=True)
        _check_invertible(m)
        return cls(m)

    @property
    def m(self) -> int:
        return self.basis.shape[0]

    @property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.basis)))


@dataclass(frozen=True)
class ReducedBasis:
    reduced: np.ndarray
    transform: np.ndarray  # exact integers, dtype=object
    kan: KanDecomposition
    original: np.ndarray = field(repr=False)

    @property
    def a(self) -> np.ndarray:
        return self.kan.a

    @property
    def n_coeffs(self) -> np.ndarray:
        return self.kan.n

    @property
    def phi(self) -> np.ndarray:
        return self.kan.k

    @property
    def m(self) -> int:
        return self.reduced.shape[0]


@dataclass
class SiegelMembershipReport:
    member: bool
    violations: list
    candidate_vectors_tested: int
    active: list = field(default_factory=list)


def _as_basis(basis) -> np.ndarray:
    if isinstance(basis, LatticeBasis):
        return basis.basis
    m = as_matrix(basis, square=True)
    _check_invertible(m)
    return m


def _check_rank(m: int) -> None:
    if m > MAX_RANK:
        raise RankTooLarge(f"rank {m} exceeds the enumeration limit {MAX_RANK}")


# -- exact integer helpers -------------------------------------------------------


def int_matrix(rows) -> np.ndarray:
    """Object array of Python ints (exact arithmetic under ``@``)."""
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        for j, v in enumerate(r):
            arr[i, j] = int(v)
    return arr


def int_identity(m: int) -> np.ndarray:
    return int_matrix([[int(i == j) for j in range(m)] for i in range(m)])


def int_det(u) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    a = [[int(v) for v in row] for row in np.asarray(u, dtype=object)]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def extend_to_unimodular(y) -> np.ndarray:
    """Integer matrix of determinant +1 whose first column is the primitive vector ``y``."""
    c = [int(v) for v in y]
    k = len(c)
    w = [[int(i == j) for j in range(k)] for i in range(k)]  # w[row][col]
    while sum(1 for v in c if v != 0) > 1:
        p = min((i for i in range(k) if c[i] != 0), key=lambda i: abs(c[i]))
        for i in range(k):
            if i != p and c[i] != 0:
                q = c[i] // c[p]
                c[i] -= q * c[p]
                for r in range(k):
                    w[r][p] += q * w[r][i]
    p = next(i for i in range(k) if c[i] != 0)
    if abs(c[p]) != 1:
        raise ValueError("vector is not primitive")
    for r in range(k):
        w[r][0], w[r][p] = w[r][p], w[r][0]
    if c[p] == -1:
        for r in range(k):
            w[r][0] = -w[r][0]
    out = int_matrix(w)
    if k > 1 and int_det(out) < 0:
        out[:, -1] = -out[:, -1]
    return out


def random_unimodular(m: int, rng: np.random.Generator, steps: int = 12, max_mult: int = 2) -> np.ndarray:
    """Product of random elementary integer matrices (exact, det +-1)."""
    u = int_identity(m)
    for _ in range(steps):
        i, j = rng.choice(m, size=2, replace=False)
        mult = int(rng.integers(-max_mult, max_mult + 1))
        u[:, j] = u[:, j] + mult * u[:, i]
    if rng.random() < 0.5:
        u[:, 0] = -u[:, 0]
    return u


# -- LLL preconditioning and enumeration ----------------------------------------------------


def _lll(b: np.ndarray, delta: float = 0.99):
    """LLL on the columns of ``b``; returns (reduced columns, exact transform)."""
    k = b.shape[1]
    u = int_identity(k)
    b = b.copy()

    def gso(mat):
        q, r = np.linalg.qr(mat)
        d = np.diag(r)
        return r / d[:, None], d * d

    mu, bstar = gso(b)
    i = 1
    while i < k:
        for j in range(i - 1, -1, -1):
            q = int(round(mu[j, i]))
            if q:
                b[:, i] -= q * b[:, j]
                u[:, i] = u[:, i] - q * u[:, j]
                mu[: j + 1, i] -= q * mu[: j + 1, j]
        if bstar[i] >= (delta - mu[i - 1, i] ** 2) * bstar[i - 1]:
            i += 1
        else:
            b[:, [i - 1, i]] = b[:, [i, i - 1]]
            u[:, [i - 1, i]] = u[:, [i, i - 1]]
            mu, bstar = gso(b)
            i = max(i - 1, 1)
    return b, u


def enumerate_short(r: np.ndarray, radius2: float, shrink: bool = False, limit: int = 5_000_000):
    """All nonzero integer ``x`` with ``||r @ x||^2 <= radius2`` for upper-triangular ``r``.

    With ``shrink=True`` the radius tightens to the best length found so far
    (plus a relative tie band), which turns the search into a shortest-vector
    search that still returns every tie.  Returns ``(list of (x, norm2), nodes)``.
    """
    k = r.shape[0]
    diag = np.abs(np.diag(r))
    x = [0] * k
    found = []
    bound = [radius2 * (1 + _TIE)]
    nodes = 0

    def recurse(level: int, partial: float):
        nonlocal nodes
        center_sum = sum(r[level, j] * x[j] for j in range(level + 1, k))
        c = -center_sum / r[level, level]
        rem = bound[0] - partial
        if rem < 0:
            return
        spread = math.sqrt(rem) / diag[level]
        lo, hi = math.ceil(c - spread - 1e-12), math.floor(c + spread + 1e-12)
        for v in range(lo, hi + 1):
            nodes += 1
            if nodes > limit:
                raise RankTooLarge("enumeration exceeded its node budget")
            x[level] = v
            t = r[level, level] * v + center_sum
            p = partial + t * t
            if p > bound[0]:
                continue
            if level == 0:
                if any(x):
                    found.append((tuple(x), p))
                    if shrink and p * (1 + _TIE) < bound[0]:
                        bound[0] = p * (1 + _TIE)
            else:
                recurse(level - 1, p)
        x[level] = 0

    recurse(k - 1, 0.0)
    if shrink and found:
        best = min(p for _, p in found)
        found = [(v, p) for v, p in found if p <= best * (1 + _TIE)]
    return found, nodes


def _tie_key(coords):
    return tuple(reversed(coords))


def _sign_normalize(coords):
    last = next(v for v in reversed(coords) if v != 0)
    return tuple(coords) if last > 0 else tuple(-v for v in coords)


def _shortest_coords(b: np.ndarray):
    """Shortest nonzero vector of the lattice spanned by the columns of ``b`` (n x k, rank k)."""
    reduced, u = _lll(b)
    _, r = np.linalg.qr(reduced)
    radius2 = float(np.min(np.sum(reduced * reduced, axis=0)))
    found, _ = enumerate_short(r, radius2, shrink=True)
    uu = [[int(v) for v in row] for row in u]
    candidates = set()
    for y, _ in found:
        xs = tuple(sum(uu[i][j] * y[j] for j in range(len(y))) for i in range(len(y)))
        candidates.add(_sign_normalize(xs))
    best = min(candidates, key=_tie_key)
    vec = b @ np.array(best, dtype=float)
    return best, float(np.linalg.norm(vec))


def shortest_vector(basis):
    """Exact shortest nonzero lattice vector as ``(integer coordinates, length)``.

    Ties are broken deterministically: coordinates are sign-normalized so the
    last nonzero entry is positive, then the vector whose coordinate tuple is
    smallest when read from the last entry backwards wins (this prefers
    vectors built from the earliest basis columns).
    """
    b = _as_basis(basis)
    _check_rank(b.shape[0])
    coords, length = _shortest_coords(b)
    return np.array(coords, dtype=int), length


# -- reduction ------------------------------------------------------------------------------------


def _float(u) -> np.ndarray:
    return np.array(u, dtype=float)


def reduce_basis(basis) -> ReducedBasis:
    """Inductive reduced basis of the lattice spanned by the columns of ``basis``."""
    b = _as_basis(basis)
    m = b.shape[0]
    _check_rank(m)
    u = int_identity(m)
    for j in range(m):
        cur = b @ _float(u)
        if j > 0:
            q, _ = np.linalg.qr(cur[:, :j])
            proj = cur[:, j:] - q @ (q.T @ cur[:, j:])
        else:
            proj = cur
        if j < m - 1:
            y, _ = _shortest_coords(proj)
            w = extend_to_unimodular(y)
            u[:, j:] = u[:, j:] @ w
        # size reduction of column j against columns j-1..0
        for i in range(j - 1, -1, -1):
            cur = b @ _float(u)
            kan = _gram_schmidt(cur[:, : j + 1])
            coef = kan[i, j]
            t = int(round(coef))
            if t:
                u[:, j] = u[:, j] - t * u[:, i]
    reduced = b @ _float(u)
    if np.linalg.det(reduced) < 0:
        u[:, 0] = -u[:, 0]
        reduced = b @ _float(u)
    return ReducedBasis(reduced=reduced, transform=u, kan=kan_decompose(reduced), original=b)


def _gram_schmidt(cols: np.ndarray) -> np.ndarray:
    """Unit upper-triangular coefficient matrix ``n`` of ``cols`` (n x k)."""
    _, r = np.linalg.qr(cols)
    d = np.diag(r)
    return r / d[:, None]


# -- reduced Siegel sets -----------------------------------------------------------------------------


def _dist_inequalities(z: np.ndarray, band: float):
    """Yield ``(j, w, a_j, ||proj||)`` for nontrivial ``w`` with ``||proj|| <= a_j (1 + band)``."""
    m = z.shape[0]
    tested = 0
    hits = []
    for j in range(m):
        a_j = z[j, j]
        block = z[j:, j:]
        found, nodes = enumerate_short(block, (a_j * (1 + band)) ** 2)
        tested += nodes
        for w, p in found:
            if w[0] in (1, -1) and not any(w[1:]):
                continue
            hits.append((j, w, a_j, math.sqrt(p)))
    return hits, tested


def is_in_reduced_siegel_set(m, tol: float = TAU_RED, active_tol: float = 1e-6) -> SiegelMembershipReport:
    """Check the defining inequalities of the reduced Siegel set.

    Violations are ``(id, lhs, rhs)`` with ids ``("n", i, j)`` for
    ``|n_ij| <= 1/2`` and ``("dist", j, w)`` for
    ``a_j <= ||projection of z w to span(e_j..e_m)||``, where ``w`` lists the
    integer coordinates ``j..m``.  ``active`` lists nontrivial inequalities
    holding with equality up to ``active_tol`` (relative).
    """
    m = as_matrix(m, square=True)
    _check_rank(m.shape[0])
    kan = kan_decompose(m)
    z = kan.an
    size = m.shape[0]
    violations, active = [], []
    for i in range(size):
        for j in range(i + 1, size):
            v = abs(kan.n[i, j])
            if v > 0.5 + tol:
                violations.append((("n", i + 1, j + 1), v, 0.5))
            elif abs(v - 0.5) <= active_tol:
                active.append((("n", i + 1, j + 1), v, 0.5))
    hits, tested = _dist_inequalities(z, max(tol, active_tol))
    for j, w, a_j, rhs in hits:
        ident = ("dist", j + 1, tuple(int(t) for t in w))
        if a_j > rhs + tol * a_j:
            violations.append((ident, a_j, rhs))
        elif abs(a_j - rhs) <= active_tol * a_j:
            active.append((ident, a_j, rhs))
    return SiegelMembershipReport(not violations, violations, tested, active)


def _required_sign_columns(m: int):
    start = 3 if m % 2 == 0 else 2
    return range(start - 1, m)


def sign_condition_holds(n: np.ndarray, tol: float = 0.0) -> bool:
    """First-row sign condition on ``n`` defining the fundamental domain."""
    m = n.shape[0]
    return all(n[0, j] >= -tol for j in _required_sign_columns(m))


def is_in_fundamental_domain(m, tol: float = TAU_RED) -> bool:
    m = as_matrix(m, square=True)
    if np.linalg.det(m) <= 0:
        return False
    if not is_in_reduced_siegel_set(m, tol).member:
        return False
    return sign_condition_holds(kan_decompose(m).n, tol)


# -- canonical forms -----------------------------------------------------------------------------------

_ZERO = 1e-12


def _first_nonzero_sign(col: np.ndarray) -> float:
    for v in col:
        if abs(v) > _ZERO:
            return float(np.sign(v))
    return 1.0


def canonical_signs(n: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Sign vector ``s`` (product +1) putting ``(S n S, k S)`` into canonical form."""
    m = n.shape[0]
    required = list(_required_sign_columns(m))
    ref = [_first_nonzero_sign(k[:, j]) for j in range(m)]
    best, best_key = None, None
    for s in itertools.product((1, -1), repeat=m):
        if math.prod(s) != 1:
            continue
        if any(s[0] * s[j] * n[0, j] < -_ZERO for j in required):
            continue
        key = tuple(s[j] * ref[j] for j in range(m))
        if best_key is None or key > best_key:
            best, best_key = s, key
    return np.array(best, dtype=int)


def apply_signs(rb: ReducedBasis, s) -> ReducedBasis:
    s = np.asarray(s, dtype=int)
    sf = s.astype(float)
    transform = rb.transform.copy()
    for j, sj in enumerate(s):
        if sj < 0:
            transform[:, j] = -transform[:, j]
    kan = KanDecomposition(k=rb.kan.k * sf, a=rb.kan.a.copy(), n=rb.kan.n * np.outer(sf, sf))
    return ReducedBasis(reduced=rb.reduced * sf, transform=transform, kan=kan, original=rb.original)


def canonicalize(rb: ReducedBasis) -> ReducedBasis:
    """Apply the even sign flips selecting the fundamental-domain representative.

    First-row conditions on ``n`` come first; any freedom left (zero
    entries, or the central ``-I`` when ``m`` is even) is spent making the
    first nonzero entry of ``phi_1``, then ``phi_2``, ... positive.
    """
    return apply_signs(rb, canonical_signs(rb.kan.n, rb.kan.k))


def shape_representative(rb: ReducedBasis) -> np.ndarray:
    """Upper-triangular determinant-one representative of the lattice shape."""
    c = canonicalize(rb)
    z = c.kan.an
    m = z.shape[0]
    return z / np.prod(c.kan.a) ** (1.0 / m)


def boundary_flags(rb: ReducedBasis, active_tol: float = 1e-6) -> list:
    """Inequalities of the fundamental domain that are active within ``active_tol``."""
    report = is_in_reduced_siegel_set(rb.reduced, active_tol=active_tol)
    flags = [ident for ident, _, _ in report.active]
    n = rb.kan.n
    for j in _required_sign_columns(n.shape[0]):
        if abs(n[0, j]) <= active_tol:
            flags.append(("sign", 1, j + 1))
    return flags


# -- duality ---------------------------------------------------------------------------------------------


def duality_map(a, b):
    """``(A | B) -> ((I - A (A^t A)^-1 A^t) B | A)``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] != b.shape[0] or a.shape[1] + b.shape[1] != a.shape[0]:
        raise DimensionMismatch("blocks must be n x d and n x (n - d)")
    gram = a.T @ a
    if np.linalg.cond(gram) > 1e12:
        raise SingularBlock("A^t A is singular")
    proj = np.eye(a.shape[0]) - a @ np.linalg.solve(gram, a.T)
    return proj @ b, a.copy()


def same_lattice(b1, b2, tol: float = 1e-8) -> bool:
    """True when the columns of ``b1`` and ``b2`` generate the same lattice.

    Works for bases of the same rank-k lattice in R^n (k <= n).
    """
    b1 = np.atleast_2d(np.asarray(b1, dtype=float))
    b2 = np.atleast_2d(np.asarray(b2, dtype=float))
    if b1.shape != b2.shape:
        return False
    x, *_ = np.linalg.lstsq(b1, b2, rcond=None)
    if np.max(np.abs(b1 @ x - b2)) > tol * max(1.0, np.max(np.abs(b2))):
        return False
    xi = np.rint(x)
    if np.max(np.abs(x - xi)) > 1e-6:
        return False
    return abs(abs(round(float(np.linalg.det(xi)))) - 1) == 0
