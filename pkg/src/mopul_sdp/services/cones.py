"""Cone arithmetic for the interior-point solver.

Each symmetric cone (nonnegative orthant, second-order cone, PSD cone in
symmetric-vector packing) provides its identity element, Jordan product and
division, membership margin, maximum step to the boundary and Nesterov-Todd
scaling. Zero cones only take part in margins.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ..linalg import smat, svec
from ..models.conic import ConeBlock

INF = float("inf")


@dataclass(frozen=True)
class BlockScaling:
    """NT scaling of one block: W z == W^{-T} s == lam.

    ``w``/``w_inv`` are 1-D (diagonal) for the orthant and dense otherwise.
    """

    w: np.ndarray
    w_inv: np.ndarray
    lam: np.ndarray

    @property
    def diagonal(self) -> bool:
        return self.w.ndim == 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.w * v if self.diagonal else self.w @ v

    def apply_t(self, v: np.ndarray) -> np.ndarray:
        return self.w * v if self.diagonal else self.w.T @ v

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        return self.w_inv * v if self.diagonal else self.w_inv @ v

    def apply_inv_t(self, v: np.ndarray) -> np.ndarray:
        """W^{-T} v; ``v`` may be a matrix (rows of G)."""
        if self.diagonal:
            return self.w_inv[:, None] * v if v.ndim == 2 else self.w_inv * v
        return self.w_inv.T @ v


class Orthant:
    def __init__(self, dim: int):
        self.dim = dim
        self.degree = dim

    def identity(self) -> np.ndarray:
        return np.ones(self.dim)

    def margin(self, v: np.ndarray) -> float:
        return float(np.min(v)) if v.size else INF

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return u * v

    def divide(self, lam: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v / lam

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        neg = dv < 0
        if not np.any(neg):
            return INF
        return float(np.min(-v[neg] / dv[neg]))

    def scaling(self, s: np.ndarray, z: np.ndarray) -> BlockScaling:
        if s.size and (s.min() <= 0 or z.min() <= 0):
            raise np.linalg.LinAlgError("point left the nonnegative orthant interior")
        w = np.sqrt(s / z)
        return BlockScaling(w=w, w_inv=1.0 / w, lam=np.sqrt(s * z))


class SecondOrder:
    def __init__(self, dim: int):
        self.dim = dim
        self.degree = 1

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def margin(self, v: np.ndarray) -> float:
        return float(v[0] - np.linalg.norm(v[1:]))

    @staticmethod
    def _jdet(v: np.ndarray) -> float:
        # factored form keeps relative accuracy near the boundary
        tail = float(np.linalg.norm(v[1:]))
        return float((v[0] - tail) * (v[0] + tail))

    def _interior_root(self, v: np.ndarray) -> float:
        det = self._jdet(v)
        if v[0] <= 0 or det <= 0:
            raise np.linalg.LinAlgError(f"point left the second-order cone interior (J = {det:.3e})")
        return float(np.sqrt(det))

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(u)
        out[0] = u @ v
        out[1:] = u[0] * v[1:] + v[0] * u[1:]
        return out

    def divide(self, lam: np.ndarray, v: np.ndarray) -> np.ndarray:
        out = np.empty_like(v)
        out[0] = (lam[0] * v[0] - lam[1:] @ v[1:]) / self._jdet(lam)
        out[1:] = (v[1:] - out[0] * lam[1:]) / lam[0]
        return out

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        """Largest a with v + a dv in the cone, via the rotation taking v to e."""
        try:
            root = self._interior_root(v)
        except np.linalg.LinAlgError:
            return 0.0
        vb = v / root
        rho0 = (vb[0] * dv[0] - vb[1:] @ dv[1:]) / root
        rho1 = (dv[1:] - (rho0 * root + dv[0]) / (vb[0] + 1.0) * vb[1:]) / root
        reach = float(np.linalg.norm(rho1)) - rho0
        return 1.0 / reach if reach > 0 else INF

    def scaling(self, s: np.ndarray, z: np.ndarray) -> BlockScaling:
        s_det = self._interior_root(s)
        z_det = self._interior_root(z)
        s_bar = s / s_det
        z_bar = z / z_det
        # <s_bar, z_bar> >= 1 for J-normalized interior points
        gamma = np.sqrt(0.5 * (1.0 + max(1.0, float(z_bar @ s_bar))))
        jz = -z_bar
        jz[0] = z_bar[0]
        w_bar = (s_bar + jz) / (2.0 * gamma)
        beta = np.sqrt(s_det / z_det)

        w0, w1 = w_bar[0], w_bar[1:]
        tail = np.eye(self.dim - 1) + np.outer(w1, w1) / (1.0 + w0)
        w = np.empty((self.dim, self.dim))
        w[0, 0] = w0
        w[0, 1:] = w1
        w[1:, 0] = w1
        w[1:, 1:] = tail
        w_inv = w.copy()
        w_inv[0, 1:] = -w1
        w_inv[1:, 0] = -w1
        w *= beta
        w_inv /= beta
        return BlockScaling(w=w, w_inv=w_inv, lam=w @ z)


class Semidefinite:
    def __init__(self, side: int):
        self.side = side
        self.dim = side * (side + 1) // 2
        self.degree = side
        basis = np.stack([smat(e) for e in np.eye(self.dim)])
        self._basis = basis

    def identity(self) -> np.ndarray:
        return svec(np.eye(self.side))

    def margin(self, v: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(smat(v))[0])

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        um, vm = smat(u), smat(v)
        return svec(0.5 * (um @ vm + vm @ um))

    def divide(self, lam: np.ndarray, v: np.ndarray) -> np.ndarray:
        # lam is diagonal after NT scaling
        d = np.diag(smat(lam))
        return svec(2.0 * smat(v) / (d[:, None] + d[None, :]))

    def max_step(self, v: np.ndarray, dv: np.ndarray) -> float:
        try:
            l = np.linalg.cholesky(smat(v))
        except np.linalg.LinAlgError:
            return 0.0
        li = sla.solve_triangular(l, smat(dv), lower=True)
        li = sla.solve_triangular(l, li.T, lower=True)
        lowest = float(np.linalg.eigvalsh(0.5 * (li + li.T))[0])
        return -1.0 / lowest if lowest < 0 else INF

    def _congruence(self, r: np.ndarray) -> np.ndarray:
        """Matrix of svec(Y) -> svec(R^T Y R)."""
        mapped = np.einsum("ai,jab,bc->jic", r, self._basis, r)
        return np.stack([svec(m) for m in mapped], axis=1)

    def scaling(self, s: np.ndarray, z: np.ndarray) -> BlockScaling:
        l_s = np.linalg.cholesky(smat(s))
        l_z = np.linalg.cholesky(smat(z))
        u, sing, vt = np.linalg.svd(l_z.T @ l_s)
        r = l_s @ vt.T / np.sqrt(sing)[None, :]
        r_inv = np.linalg.inv(r)
        return BlockScaling(
            w=self._congruence(r), w_inv=self._congruence(r_inv), lam=svec(np.diag(sing))
        )


def cone_ops(block: ConeBlock) -> Orthant | SecondOrder | Semidefinite:
    if block.kind == "nonneg":
        return Orthant(block.dim)
    if block.kind == "second_order":
        return SecondOrder(block.dim)
    if block.kind == "psd":
        return Semidefinite(block.side)
    raise ValueError(f"no interior-point arithmetic for {block.kind} cones")


def block_margin(block: ConeBlock, v: np.ndarray, dual: bool = False) -> float:
    """Membership margin of ``v`` in the block's cone (dual cone if ``dual``).

    The zero cone's dual is the whole space, so its dual margin is +inf and its
    primal margin is minus the largest entry magnitude.
    """
    if block.kind == "zero":
        if dual:
            return INF
        return -float(np.max(np.abs(v))) if v.size else 0.0
    return cone_ops(block).margin(v)
