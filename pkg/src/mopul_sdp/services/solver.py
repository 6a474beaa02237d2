"""Dense primal-dual interior-point solver for cone programs.

Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector. Zero-cone rows become equality constraints A x = b and all
other rows inequality constraints G x + s = h with s in the product cone.

Each iteration factors the quasi-definite augmented system

    [[D + dI,  A^T,  G~_r^T],
     [A,      -dI,   0     ],
     [G~_r,    0,   -I     ]],      G~ = W^{-T} G,

in (dx, dy, W dz_r). Orthant rows with a single nonzero (variable bounds) are
eliminated into the diagonal D; every other row of G~ stays in the matrix, so
its conditioning grows like 1/mu rather than 1/mu^2. The factor is computed
once (LU with iterative refinement against the unregularized matrix) and reused
for the predictor, the corrector and the embedding column.
"""

import time
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.linalg as sla

from ..exceptions import SolverError
from ..models.conic import ConicProgram
from ..models.solution import (
    BlockMargin,
    IterationRecord,
    KktReport,
    Residuals,
    Solution,
    SolverConfig,
)
from ..utils.logger import get_logger
from .cones import INF, BlockScaling, Orthant, block_margin, cone_ops

logger = get_logger("solver")

STALL_STEP = 1e-12
NEAR_OPTIMAL_FACTOR = 10.0


class _Breakdown(Exception):
    """Raised inside an iteration when the linear algebra cannot continue."""


@dataclass
class _Layout:
    eq_rows: np.ndarray
    cone_rows: np.ndarray
    cones: list
    slices: list[slice]
    degree: int
    # positions (within cone rows) of single-entry orthant rows, their column and coefficient
    bound_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    bound_cols: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    kept_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @classmethod
    def from_program(cls, program: ConicProgram) -> "_Layout":
        eq_rows: list[int] = []
        cone_rows: list[int] = []
        cones, slices = [], []
        for block, rows in program.block_slices():
            idx = range(rows.start, rows.stop)
            if block.kind == "zero":
                eq_rows.extend(idx)
                continue
            start = len(cone_rows)
            cone_rows.extend(idx)
            cones.append(cone_ops(block))
            slices.append(slice(start, len(cone_rows)))
        degree = sum(c.degree for c in cones)
        layout = cls(
            np.array(eq_rows, dtype=int), np.array(cone_rows, dtype=int), cones, slices, degree
        )
        layout._split_bounds(program.constraint_matrix[layout.cone_rows])
        return layout

    def _split_bounds(self, g: np.ndarray) -> None:
        bound = np.zeros(g.shape[0], dtype=bool)
        for cone, sl in zip(self.cones, self.slices):
            if isinstance(cone, Orthant):
                bound[sl] = np.count_nonzero(g[sl], axis=1) == 1
        self.bound_rows = np.flatnonzero(bound)
        self.bound_cols = np.argmax(g[self.bound_rows] != 0, axis=1) if self.bound_rows.size else self.bound_rows
        self.kept_rows = np.flatnonzero(~bound)

    def identity(self) -> np.ndarray:
        if not self.cones:
            return np.zeros(0)
        return np.concatenate([c.identity() for c in self.cones])


@dataclass
class _Point:
    """One iterate of the embedding together with its residual measures."""

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    z: np.ndarray
    tau: float
    kappa: float
    pres: float = INF
    dres: float = INF
    relgap: float = INF

    def score(self, cfg: SolverConfig) -> float:
        return max(self.pres / cfg.tol_primal, self.dres / cfg.tol_dual, self.relgap / cfg.tol_gap)


@dataclass
class _Ray:
    """Best infeasibility ray seen so far: measure and the normalized vector."""

    measure: float = INF
    ray: np.ndarray | None = None
    point: _Point | None = None

    def offer(self, measure: float, ray: np.ndarray, point: _Point) -> None:
        if measure < self.measure:
            self.measure, self.ray, self.point = measure, ray, point


class InteriorPointSolver:
    """Solves a ``ConicProgram``; one instance may be reused for many programs."""

    def __init__(self, config: SolverConfig | None = None, trace: TextIO | None = None):
        self.config = config or SolverConfig()
        self.trace = trace

    # ------------------------------------------------------------------
    # Blockwise helpers
    # ------------------------------------------------------------------

    def _blockwise(self, layout: _Layout, fn, *vectors: np.ndarray) -> np.ndarray:
        if not layout.cones:
            return np.zeros(0)
        return np.concatenate(
            [fn(cone, *(v[sl] for v in vectors)) for cone, sl in zip(layout.cones, layout.slices)]
        )

    @staticmethod
    def _scaled(layout: _Layout, scalings: list[BlockScaling], method: str, v: np.ndarray):
        if not layout.cones:
            return np.zeros_like(v)
        parts = [getattr(w, method)(v[sl]) for w, sl in zip(scalings, layout.slices)]
        return np.concatenate(parts) if v.ndim == 1 else np.vstack(parts)

    def _max_step(self, layout: _Layout, s, ds, z, dz, tau, dtau, kappa, dkappa) -> float:
        alpha = INF
        for cone, sl in zip(layout.cones, layout.slices):
            alpha = min(alpha, cone.max_step(s[sl], ds[sl]), cone.max_step(z[sl], dz[sl]))
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        return alpha

    # ------------------------------------------------------------------
    # Main loop
    # ------------------------------------------------------------------

    def solve(self, program: ConicProgram) -> Solution:
        """Run the interior-point method.

        When the iteration stalls or hits the cap, the best iterate seen is
        reported as optimal if its residuals are within 10x the tolerances, and
        otherwise the best infeasibility ray is checked against the same window.

        Raises:
            SolverError: a PSD block is larger than ``psd_side_cap``
        """
        cfg = self.config
        for block in program.cone_blocks:
            if block.kind == "psd" and block.side > cfg.psd_side_cap:
                raise SolverError(
                    f"PSD block of side {block.side} exceeds psd_side_cap={cfg.psd_side_cap}"
                )

        started = time.perf_counter()
        layout = _Layout.from_program(program)
        mat, off = program.constraint_matrix, program.offsets
        c = np.asarray(program.objective_coeffs, dtype=float)
        a, b = mat[layout.eq_rows], off[layout.eq_rows]
        g, h = mat[layout.cone_rows], off[layout.cone_rows]
        nx, ny = program.num_vars, a.shape[0]
        logger.debug(
            "KKT layout",
            num_vars=nx,
            equalities=ny,
            cone_rows=layout.cone_rows.size,
            eliminated_bounds=layout.bound_rows.size,
        )

        e = layout.identity()
        pt = _Point(np.zeros(nx), np.zeros(ny), e.copy(), e.copy(), 1.0, 1.0)

        norm_c = max(1.0, float(np.linalg.norm(c)))
        norm_bh = max(1.0, float(np.linalg.norm(np.concatenate([b, h]))))
        history: list[IterationRecord] = []
        status = "iteration_limit"
        message = ""
        certificate = None
        step = sigma = 0.0
        best: _Point | None = None
        farkas, unbounded = _Ray(), _Ray()

        for k in range(cfg.max_iters + 1):
            x, y, s, z, tau, kappa = pt.x, pt.y, pt.s, pt.z, pt.tau, pt.kappa
            rx = a.T @ y + g.T @ z + c * tau
            ry = a @ x - b * tau
            rz = g @ x + s - h * tau
            rt = c @ x + b @ y + h @ z + kappa
            mu = (s @ z + tau * kappa) / (layout.degree + 1)

            pt.pres = float(np.linalg.norm(np.concatenate([ry, rz]))) / tau / norm_bh
            pt.dres = float(np.linalg.norm(rx)) / tau / norm_c
            pcost = c @ x / tau
            dcost = -(b @ y + h @ z) / tau
            pt.relgap = float(s @ z) / tau**2 / max(1.0, abs(pcost), abs(dcost))

            record = IterationRecord(
                iteration=k, mu=float(mu), primal=pt.pres, dual=pt.dres, gap=pt.relgap,
                step=step, sigma=sigma, tau=tau, kappa=kappa,
            )
            history.append(record)
            self._emit(record)

            if not all(np.isfinite([pt.pres, pt.dres, pt.relgap, tau, kappa])):
                status, message = "numerical_failure", f"non-finite iterate at iteration {k}"
                break
            if best is None or pt.score(cfg) < best.score(cfg):
                best = pt
            if pt.score(cfg) <= 1.0:
                status = "optimal"
                break

            dual_ray = -(b @ y + h @ z)
            if dual_ray > 0:
                measure = float(np.linalg.norm(a.T @ y + g.T @ z)) / norm_c / dual_ray
                farkas.offer(measure, self._rows(layout, program.num_rows, y, z) / dual_ray, pt)
                if measure <= cfg.tol_primal:
                    status = "primal_infeasible"
                    break
            primal_ray = -(c @ x)
            if primal_ray > 0:
                measure = float(np.linalg.norm(np.concatenate([a @ x, g @ x + s]))) / norm_bh / primal_ray
                unbounded.offer(measure, x / primal_ray, pt)
                if measure <= cfg.tol_dual:
                    status = "dual_infeasible"
                    break
            if k == cfg.max_iters:
                break

            try:
                step, sigma, pt = self._iterate(layout, a, b, g, h, c, pt, rx, ry, rz, rt, mu, e, k)
            except _Breakdown as err:
                status, message = "numerical_failure", str(err)
                break
            if step < STALL_STEP:
                status, message = "numerical_failure", f"step length collapsed at iteration {k}"
                break

        if status == "primal_infeasible":
            pt, certificate = farkas.point, farkas.ray
        elif status == "dual_infeasible":
            pt, certificate = unbounded.point, unbounded.ray
        elif status != "optimal":
            status, message, pt, certificate = self._fallback(status, message, best or pt, farkas, unbounded)

        scale = pt.tau if status not in ("primal_infeasible", "dual_infeasible") else 1.0
        x_out = np.nan_to_num(pt.x / scale)
        slacks = np.zeros(program.num_rows)
        slacks[layout.cone_rows] = pt.s / scale
        duals = self._rows(layout, program.num_rows, pt.y, pt.z) / scale
        objective = float(c @ x_out) + program.objective_offset
        dual_objective = -float(off @ duals) + program.objective_offset

        solution = Solution(
            status=status,
            x=x_out,
            slacks=np.nan_to_num(slacks),
            duals=np.nan_to_num(duals),
            y=np.nan_to_num(pt.y / scale),
            z=np.nan_to_num(pt.z / scale),
            objective=objective,
            dual_objective=dual_objective,
            residuals=Residuals(primal=pt.pres, dual=pt.dres, gap=pt.relgap),
            iterations=len(history) - 1,
            certificate=None if certificate is None else np.nan_to_num(certificate),
            history=history,
            message=message,
            solve_time_sec=time.perf_counter() - started,
        )
        logger.info(
            "Solve finished",
            status=status,
            iterations=solution.iterations,
            objective=objective,
            primal=pt.pres,
            dual=pt.dres,
            gap=pt.relgap,
            num_vars=nx,
            rows=program.num_rows,
        )
        return solution

    def _fallback(
        self, status: str, message: str, best: _Point, farkas: _Ray, unbounded: _Ray
    ) -> tuple[str, str, _Point, np.ndarray | None]:
        cfg = self.config
        reason = status + (f": {message}" if message else "")
        if best.score(cfg) <= NEAR_OPTIMAL_FACTOR:
            return "optimal", f"accepted at reduced accuracy after {reason}", best, None
        if farkas.point is not None and farkas.measure <= NEAR_OPTIMAL_FACTOR * cfg.tol_primal:
            return (
                "primal_infeasible",
                f"infeasibility certificate at reduced accuracy after {reason}",
                farkas.point,
                farkas.ray,
            )
        if unbounded.point is not None and unbounded.measure <= NEAR_OPTIMAL_FACTOR * cfg.tol_dual:
            return (
                "dual_infeasible",
                f"unboundedness certificate at reduced accuracy after {reason}",
                unbounded.point,
                unbounded.ray,
            )
        return status, message, best, None

    @staticmethod
    def _rows(layout: _Layout, num_rows: int, y: np.ndarray, z: np.ndarray) -> np.ndarray:
        out = np.zeros(num_rows)
        out[layout.eq_rows] = y
        out[layout.cone_rows] = z
        return out

    def _emit(self, record: IterationRecord) -> None:
        logger.debug("Iteration", **record.model_dump())
        if self.trace is not None:
            self.trace.write(
                f"{record.iteration:4d}  mu={record.mu:.3e}  pres={record.primal:.3e}  "
                f"dres={record.dual:.3e}  gap={record.gap:.3e}  step={record.step:.4f}\n"
            )

    def _factor(self, layout: _Layout, a: np.ndarray, g: np.ndarray, scalings: list[BlockScaling], k: int):
        """LU factor of the regularized augmented matrix, the unregularized matrix and bound-row scales."""
        delta = self.config.regularization
        nx, ny = g.shape[1], a.shape[0]
        g_t = self._scaled(layout, scalings, "apply_inv_t", g) if g.size else g
        bound_vals = g_t[layout.bound_rows, layout.bound_cols]
        kept = g_t[layout.kept_rows]
        nr = kept.shape[0]
        dim = nx + ny + nr

        exact = np.zeros((dim, dim))
        exact[:nx, :nx] = np.diag(np.bincount(layout.bound_cols, bound_vals**2, minlength=nx))
        exact[:nx, nx : nx + ny] = a.T
        exact[nx : nx + ny, :nx] = a
        exact[:nx, nx + ny :] = kept.T
        exact[nx + ny :, :nx] = kept
        exact[nx + ny :, nx + ny :] = -np.eye(nr)
        reg = np.concatenate([np.full(nx, delta), np.full(ny, -delta), np.zeros(nr)])

        try:
            factor = sla.lu_factor(exact + np.diag(reg), check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as err:
            raise _Breakdown(f"KKT factorization failed at iteration {k}: {err}") from err
        pivots = np.abs(np.diag(factor[0]))
        if pivots.size and (not np.all(np.isfinite(pivots)) or pivots.min() == 0.0):
            worst = int(np.nanargmin(np.where(np.isfinite(pivots), pivots, 0.0)))
            raise _Breakdown(
                f"KKT factorization broke down at iteration {k}: pivot {worst} = {pivots[worst]:.3e}"
            )
        return factor, exact, bound_vals

    def _iterate(self, layout, a, b, g, h, c, pt: _Point, rx, ry, rz, rt, mu, e, k):
        cfg = self.config
        s, z, tau, kappa = pt.s, pt.z, pt.tau, pt.kappa
        try:
            scalings = [
                cone.scaling(s[sl], z[sl]) for cone, sl in zip(layout.cones, layout.slices)
            ]
        except np.linalg.LinAlgError as err:
            raise _Breakdown(f"scaling failed at iteration {k}: {err}") from err
        lam = np.concatenate([w.lam for w in scalings]) if scalings else np.zeros(0)
        if not np.all(np.isfinite(lam)):
            raise _Breakdown(f"non-finite scaling at iteration {k}")

        factor, exact, bound_vals = self._factor(layout, a, g, scalings, k)
        nx, ny = pt.x.size, pt.y.size

        def solve_kkt(r1, r2, r3):
            q = self._scaled(layout, scalings, "apply_inv_t", r3)
            folded = np.bincount(layout.bound_cols, bound_vals * q[layout.bound_rows], minlength=nx)
            rhs = np.concatenate([r1 + folded, r2, q[layout.kept_rows]])
            sol = sla.lu_solve(factor, rhs)
            for _ in range(cfg.refinement_steps):
                sol = sol + sla.lu_solve(factor, rhs - exact @ sol)
            dx, dy = sol[:nx], sol[nx : nx + ny]
            dz_scaled = np.empty_like(q)
            dz_scaled[layout.kept_rows] = sol[nx + ny :]
            dz_scaled[layout.bound_rows] = bound_vals * dx[layout.bound_cols] - q[layout.bound_rows]
            dz = self._scaled(layout, scalings, "apply_inv", dz_scaled)
            return dx, dy, dz

        x2, y2, z2 = solve_kkt(-c, b, h)
        denom_base = c @ x2 + b @ y2 + h @ z2 - kappa / tau

        def direction(sig, corr, corr_k):
            eta = 1.0 - sig
            d_s = sig * mu * e - self._blockwise(layout, lambda cn, u: cn.product(u, u), lam) - corr
            ds_tilde = self._blockwise(layout, lambda cn, l, v: cn.divide(l, v), lam, d_s)
            d_k = sig * mu - tau * kappa - corr_k
            r3 = -eta * rz - self._scaled(layout, scalings, "apply_t", ds_tilde)
            x1, y1, z1 = solve_kkt(-eta * rx, -eta * ry, r3)
            r4 = -eta * rt - d_k / tau
            dtau = (r4 - c @ x1 - b @ y1 - h @ z1) / denom_base
            dx, dy, dz = x1 + dtau * x2, y1 + dtau * y2, z1 + dtau * z2
            ds = self._scaled(
                layout, scalings, "apply_t", ds_tilde - self._scaled(layout, scalings, "apply", dz)
            )
            dkappa = (d_k - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        zero = np.zeros_like(lam)
        dx, dy, dz, ds, dtau, dkappa = direction(0.0, zero, 0.0)
        alpha_aff = min(1.0, self._max_step(layout, s, ds, z, dz, tau, dtau, kappa, dkappa))
        sig = (1.0 - alpha_aff) ** 3

        corr = self._blockwise(
            layout,
            lambda cn, u, v: cn.product(u, v),
            self._scaled(layout, scalings, "apply_inv_t", ds),
            self._scaled(layout, scalings, "apply", dz),
        )
        dx, dy, dz, ds, dtau, dkappa = direction(sig, corr, dtau * dkappa)
        alpha = min(
            1.0, cfg.step_fraction * self._max_step(layout, s, ds, z, dz, tau, dtau, kappa, dkappa)
        )
        if not np.isfinite(alpha):
            raise _Breakdown(f"non-finite step at iteration {k}")

        return alpha, sig, _Point(
            pt.x + alpha * dx,
            pt.y + alpha * dy,
            s + alpha * ds,
            z + alpha * dz,
            tau + alpha * dtau,
            kappa + alpha * dkappa,
        )


def solve(
    program: ConicProgram, config: SolverConfig | None = None, trace: TextIO | None = None
) -> Solution:
    """Solve ``program`` with a fresh ``InteriorPointSolver``."""
    return InteriorPointSolver(config, trace).solve(program)


def check_kkt(program: ConicProgram, solution: Solution) -> KktReport:
    """Recompute residuals and cone margins of ``solution`` from scratch."""
    mat, off = program.constraint_matrix, program.offsets
    c = program.objective_coeffs
    x, s, d = solution.x, solution.slacks, solution.duals

    primal = float(np.linalg.norm(mat @ x + s - off)) / max(1.0, float(np.linalg.norm(off)))
    dual = float(np.linalg.norm(mat.T @ d + c)) / max(1.0, float(np.linalg.norm(c)))
    pobj, dobj = float(c @ x), float(-(off @ d))
    gap = abs(pobj - dobj) / max(1.0, abs(pobj), abs(dobj))

    margins = []
    for index, (block, rows) in enumerate(program.block_slices()):
        margins.append(
            BlockMargin(
                index=index,
                kind=block.kind,
                primal=block_margin(block, s[rows]),
                dual=block_margin(block, d[rows], dual=True),
            )
        )

    cert_residual = cert_value = cert_margin = None
    if solution.certificate is not None and solution.status == "primal_infeasible":
        ray = solution.certificate
        cert_residual = float(np.linalg.norm(mat.T @ ray))
        cert_value = float(off @ ray)
        cert_margin = min(
            (block_margin(block, ray[rows], dual=True) for block, rows in program.block_slices()),
            default=INF,
        )
    elif solution.certificate is not None and solution.status == "dual_infeasible":
        ray = solution.certificate
        slack = -(mat @ ray)
        cert_margin = min(
            (block_margin(block, slack[rows]) for block, rows in program.block_slices()),
            default=INF,
        )
        cert_residual = max(0.0, -cert_margin)
        cert_value = float(c @ ray)

    return KktReport(
        primal_residual=primal,
        dual_residual=dual,
        gap=gap,
        margins=margins,
        min_primal_margin=min((m.primal for m in margins), default=INF),
        min_dual_margin=min((m.dual for m in margins), default=INF),
        certificate_residual=cert_residual,
        certificate_value=cert_value,
        certificate_margin=cert_margin,
    )
