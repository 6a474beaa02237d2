"""Dense real linear algebra: factorizations, pseudoinverse and norms.

Thin wrappers over numpy/scipy that add the finiteness, symmetry and
definiteness checks the rest of the package relies on.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from .exceptions import NotPositiveDefiniteError, NotSymmetricError, SvdFailure

FloatArray = NDArray[np.float64]

PINV_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12


class SvdResult(NamedTuple):
    """Thin SVD ``M = U @ diag(s) @ V.T`` with ``s`` non-increasing."""

    u: FloatArray
    singular_values: FloatArray
    v: FloatArray


def as_matrix(m: ArrayLike) -> FloatArray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def svd(m: ArrayLike) -> SvdResult:
    """Thin singular value decomposition.

    Raises:
        SvdFailure: LAPACK did not converge (reports the matrix shape)
    """
    arr = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise SvdFailure(arr.shape) from e
    return SvdResult(u, s, vt.T)


def pinv(m: ArrayLike, rtol: float = PINV_RTOL) -> FloatArray:
    """Moore-Penrose pseudoinverse; singular values <= rtol * s_max count as zero."""
    u, s, v = svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((v.shape[0], u.shape[0]))
    keep = s > rtol * s[0]
    return (v[:, keep] / s[keep]) @ u[:, keep].T


def rank(m: ArrayLike, rtol: float = PINV_RTOL) -> int:
    s = svd(m).singular_values
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def spectral_norm(m: ArrayLike) -> float:
    s = svd(m).singular_values
    return float(s[0]) if s.size else 0.0


def nuclear_norm(m: ArrayLike) -> float:
    return float(np.sum(svd(m).singular_values))


def frobenius_norm(m: ArrayLike) -> float:
    arr = as_matrix(m)
    return float(np.sqrt(np.sum(arr * arr)))


def check_symmetric(m: ArrayLike, rtol: float = SYMMETRY_RTOL) -> FloatArray:
    arr = as_matrix(m)
    if arr.shape[0] != arr.shape[1]:
        raise NotSymmetricError(float("inf"))
    asym = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
    if asym > rtol * max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0):
        raise NotSymmetricError(asym)
    return arr


def sym_eigs(m: ArrayLike) -> FloatArray:
    """All eigenvalues of a symmetric matrix, ascending.

    Raises:
        NotSymmetricError: ``m`` is not symmetric to 1e-12 relative
    """
    arr = check_symmetric(m)
    return np.linalg.eigvalsh(0.5 * (arr + arr.T))


def cholesky_factor(q: ArrayLike, name: str = "Q") -> FloatArray:
    """Lower Cholesky factor L with Q = L L^T.

    Raises:
        NotPositiveDefiniteError: factorization failed
    """
    arr = check_symmetric(q)
    try:
        return sla.cholesky(0.5 * (arr + arr.T), lower=True)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefiniteError(name) from e


def q_norm(x: ArrayLike, q: ArrayLike) -> float:
    """sqrt(x^T Q x), computed as ||L^T x||_2 with Q = L L^T."""
    l = cholesky_factor(q)
    return float(np.linalg.norm(l.T @ np.asarray(x, dtype=float)))


# ---------------------------------------------------------------------------
# Symmetric-vector packing
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _svec_layout(side: int) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray]:
    rows, cols = np.tril_indices(side)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    rows.setflags(write=False)
    cols.setflags(write=False)
    scale.setflags(write=False)
    return (rows, cols), scale


def svec_dim(side: int) -> int:
    return side * (side + 1) // 2


def svec(s: ArrayLike) -> FloatArray:
    """Pack the lower triangle row by row, off-diagonals scaled by sqrt(2).

    ``svec(X) @ svec(Y) == trace(X @ Y)`` for symmetric X, Y.
    """
    arr = np.asarray(s, dtype=float)
    (rows, cols), scale = _svec_layout(arr.shape[0])
    return arr[rows, cols] * scale


def smat(v: ArrayLike) -> FloatArray:
    """Inverse of ``svec``."""
    vec = np.asarray(v, dtype=float)
    side = int(round((np.sqrt(8 * vec.size + 1) - 1) / 2))
    if svec_dim(side) != vec.size:
        raise ValueError(f"length {vec.size} is not a triangular number")
    (rows, cols), scale = _svec_layout(side)
    out = np.zeros((side, side))
    out[rows, cols] = vec / scale
    out[cols, rows] = vec / scale
    return out
