"""Small dense linear algebra: KAN (Iwasawa) factorization, exp and log.

Matrices are plain ``numpy.ndarray`` objects of dtype float64.  ``as_matrix``
is the single validation point; everything downstream assumes its output.
Functions that act on group elements accept stacks of shape ``(..., n, n)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteEntries,
    OutOfConvergenceRegion,
    SingularMatrix,
)

TAU_LIN = 1e-10
TAU_EXP = 1e-12
TAU_DET = 1e-12

# Taylor degree and the norm below which the truncated series is used.
_EXP_DEGREE = 6
_EXP_THETA = 1.0 / 64.0
_LOG_THETA = 0.1
_LOG_TERMS = 20


def as_matrix(x, square: bool = False) -> np.ndarray:
    """Validate ``x`` as a finite 2-d float64 array."""
    m = np.array(x, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteEntries("matrix has NaN or infinite entries")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    return m


# -- text / document formats ----------------------------------------------


def parse_matrix_text(text: str) -> np.ndarray:
    """Parse either the ``rows cols`` text form or the JSON document form."""
    stripped = text.strip()
    if stripped.startswith("{"):
        return matrix_from_doc(json.loads(stripped))
    lines = [ln for ln in stripped.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DimensionMismatch("empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise DimensionMismatch("first line must be 'rows cols'")
    rows, cols = int(header[0]), int(header[1])
    body = [[float(tok) for tok in ln.split()] for ln in lines[1:]]
    if len(body) != rows or any(len(r) != cols for r in body):
        raise DimensionMismatch(f"header says {rows}x{cols} but body does not match")
    return as_matrix(body)


def read_matrix(path) -> np.ndarray:
    return parse_matrix_text(Path(path).read_text())


def matrix_to_text(m) -> str:
    m = as_matrix(m)
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(repr(float(v)) for v in row) for row in m]
    return "\n".join(lines) + "\n"


def matrix_to_doc(m) -> dict:
    m = np.asarray(m)
    return {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "entries": [float(v) for v in m.ravel()]}


def matrix_from_doc(doc: dict) -> np.ndarray:
    rows, cols, entries = doc["rows"], doc["cols"], doc["entries"]
    if len(entries) != rows * cols:
        raise DimensionMismatch("entries length must equal rows*cols")
    return as_matrix(np.array(entries, dtype=float).reshape(rows, cols))


# -- KAN ----------------------------------------------------------------------


@dataclass(frozen=True)
class KanDecomposition:
    k: np.ndarray
    a: np.ndarray
    n: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.k @ (self.a[:, None] * self.n)

    @property
    def an(self) -> np.ndarray:
        """The upper-triangular factor ``diag(a) @ n``."""
        return self.a[:, None] * self.n


def _check_invertible(m: np.ndarray) -> None:
    # Hadamard: |det| <= product of column norms, so the ratio is a scale-free volume defect
    scale = float(np.prod(np.linalg.norm(m, axis=0)))
    det = np.linalg.det(m)
    if scale == 0.0 or abs(det) <= TAU_DET * scale:
        raise SingularMatrix(f"matrix is singular (det={det:.3e})")


def kan_decompose(m) -> KanDecomposition:
    """Factor ``m = k @ diag(a) @ n`` by column-wise Gram-Schmidt.

    Modified Gram-Schmidt with one re-orthogonalization pass, so the j-th
    column of ``k * a`` is the projection of the j-th column of ``m`` onto
    the orthogonal complement of the previous columns.
    """
    m = as_matrix(m, square=True)
    _check_invertible(m)
    size = m.shape[0]
    q = np.zeros_like(m)
    r = np.zeros_like(m)
    for j in range(size):
        v = m[:, j].copy()
        for _ in range(2):
            for i in range(j):
                c = q[:, i] @ v
                r[i, j] += c
                v -= c * q[:, i]
        r[j, j] = np.linalg.norm(v)
        q[:, j] = v / r[j, j]
    a = np.diag(r).copy()
    n = r / a[:, None]
    np.fill_diagonal(n, 1.0)
    n = np.triu(n)
    return KanDecomposition(k=q, a=a, n=n)


# -- exp / log ----------------------------------------------------------------


def _onenorm(x: np.ndarray) -> np.ndarray:
    return np.max(np.sum(np.abs(x), axis=-2), axis=-1)


def opnorm(x) -> np.ndarray:
    """Spectral norm, broadcast over leading axes."""
    return np.linalg.norm(np.asarray(x, dtype=float), ord=2, axis=(-2, -1))


def matrix_exp(x) -> np.ndarray:
    """Matrix exponential by scaling and squaring a degree-6 Taylor series."""
    x = np.asarray(x, dtype=float)
    if x.ndim < 2 or x.shape[-1] != x.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {x.shape}")
    norms = _onenorm(x)
    s = np.where(norms > _EXP_THETA, np.ceil(np.log2(np.maximum(norms, 1e-300) / _EXP_THETA)), 0)
    s = s.astype(int)
    scaled = x / (2.0 ** s)[..., None, None]
    eye = np.broadcast_to(np.eye(x.shape[-1]), x.shape)
    result = eye.copy()
    term = eye.copy()
    for k in range(1, _EXP_DEGREE + 1):
        term = term @ scaled / k
        result = result + term
    smax = int(s.max()) if s.size else 0
    for step in range(smax):
        squared = result @ result
        mask = (s > step)[..., None, None]
        result = np.where(mask, squared, result)
    return result


def _is_unipotent(y: np.ndarray) -> bool:
    """True when ``y = M - I`` is nilpotent to machine precision for every stack entry."""
    size = y.shape[-1]
    scale = max(float(np.max(np.abs(y))), 1.0)
    p = np.linalg.matrix_power(y, size) if y.ndim == 2 else _batched_power(y, size)
    return bool(np.max(np.abs(p)) <= 1e-13 * scale ** size)


def _batched_power(y: np.ndarray, k: int) -> np.ndarray:
    out = y
    for _ in range(k - 1):
        out = out @ y
    return out


def _mercator(y: np.ndarray, terms: int) -> np.ndarray:
    out = np.zeros_like(y)
    power = np.broadcast_to(np.eye(y.shape[-1]), y.shape).copy()
    for k in range(1, terms + 1):
        power = power @ y
        out = out + ((-1) ** (k + 1) / k) * power
    return out


def _sqrtm_db(m: np.ndarray) -> np.ndarray:
    # Denman-Beavers iteration
    y = m.copy()
    z = np.broadcast_to(np.eye(m.shape[-1]), m.shape).copy()
    for _ in range(60):
        yi = np.linalg.inv(y)
        zi = np.linalg.inv(z)
        y_next = 0.5 * (y + zi)
        z = 0.5 * (z + yi)
        delta = np.max(np.abs(y_next - y))
        y = y_next
        if delta < 1e-16 * max(1.0, float(np.max(np.abs(y)))):
            break
    return y


def matrix_log(m, check: bool = True) -> np.ndarray:
    """Principal logarithm of matrices near the identity.

    Unipotent inputs use the terminating series.  Otherwise the input must
    satisfy ``||M - I||_op < 1``; square roots are taken until
    ``||M - I||_1 <= 0.1`` and the Mercator series finishes the job.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DimensionMismatch(f"expected square matrices, got shape {m.shape}")
    size = m.shape[-1]
    y = m - np.eye(size)
    if _is_unipotent(y):
        return _mercator(y, size)
    if check and np.any(opnorm(y) >= 1.0):
        raise OutOfConvergenceRegion("||M - I|| must be < 1 for the logarithm")
    work = m.copy()
    s = 0
    while np.max(_onenorm(work - np.eye(size))) > _LOG_THETA and s < 60:
        work = _sqrtm_db(work)
        s += 1
    return (2.0 ** s) * _mercator(work - np.eye(size), _LOG_TERMS)
