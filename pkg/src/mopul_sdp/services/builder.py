"""Assembly of the decoupled conic program and the map back to (A, U, omega, xi).

Variables are laid out as A (row-major), U (stage-major), omega (variable mode
only), xi_1..xi_N, then auxiliaries: the Frobenius epigraph, the control-effort
epigraphs and the lower triangles of W1/W2 for a nuclear-norm ball.

Every constraint is collected as an affine expression ``F x + f`` that must lie
in a cone; the program stores ``M = -F`` and ``offsets = f`` so that
``M x + s == offsets``. Rows are grouped as one Zero block, one Nonneg block,
then second-order blocks and PSD blocks in emission order.
"""

from typing import Literal, NamedTuple

import numpy as np

from ..exceptions import DimensionError
from ..linalg import svd, svec_dim
from ..models.conic import (
    ConicProgram,
    NonnegCone,
    PsdCone,
    SecondOrderCone,
    VariableSlice,
    ZeroCone,
)
from ..models.problem import MopulProblem
from ..utils.logger import get_logger
from .cones import block_margin

logger = get_logger("builder")

Form = Literal["soc", "lmi"]


class DecisionPoint(NamedTuple):
    """(A, U, omega, xi) read back from a program vector."""

    a: np.ndarray
    u: np.ndarray
    omega: float
    xi: np.ndarray


class _Layout:
    """Variable allocation in the fixed order."""

    def __init__(self) -> None:
        self.slices: dict[str, VariableSlice] = {}
        self.size = 0

    def alloc(self, name: str, shape: tuple[int, ...]) -> VariableSlice:
        count = int(np.prod(shape))
        sl = VariableSlice(start=self.size, stop=self.size + count, shape=shape)
        self.slices[name] = sl
        self.size += count
        return sl


class _Assembler:
    def __init__(self, num_vars: int):
        self.num_vars = num_vars
        self.zero: list[tuple[np.ndarray, np.ndarray]] = []
        self.nonneg: list[tuple[np.ndarray, np.ndarray]] = []
        self.cones: list[tuple[object, np.ndarray, np.ndarray]] = []

    def rows(self, count: int) -> np.ndarray:
        return np.zeros((count, self.num_vars))

    def add_zero(self, f: np.ndarray, const: np.ndarray) -> None:
        self.zero.append((np.atleast_2d(f), np.atleast_1d(const)))

    def add_nonneg(self, f: np.ndarray, const: np.ndarray) -> None:
        self.nonneg.append((np.atleast_2d(f), np.atleast_1d(const)))

    def add_soc(self, f: np.ndarray, const: np.ndarray) -> None:
        self.cones.append((SecondOrderCone(dim=f.shape[0]), f, const))

    def add_psd(self, side: int, entries: dict[tuple[int, int], tuple[np.ndarray, float]]) -> None:
        """PSD block from its lower-triangle entries ``(i, j) -> (coeff row, constant)``."""
        rows, cols = np.tril_indices(side)
        f = self.rows(rows.size)
        const = np.zeros(rows.size)
        for k, (i, j) in enumerate(zip(rows, cols)):
            if (i, j) not in entries:
                continue
            coef, c0 = entries[(i, j)]
            scale = 1.0 if i == j else np.sqrt(2.0)
            f[k] = scale * coef
            const[k] = scale * c0
        self.cones.append((PsdCone(side=side), f, const))

    def finish(self, **fields) -> ConicProgram:
        blocks, mats, offs = [], [], []
        if self.zero:
            f = np.vstack([z[0] for z in self.zero])
            blocks.append(ZeroCone(dim=f.shape[0]))
            mats.append(f)
            offs.append(np.concatenate([z[1] for z in self.zero]))
        if self.nonneg:
            f = np.vstack([z[0] for z in self.nonneg])
            blocks.append(NonnegCone(dim=f.shape[0]))
            mats.append(f)
            offs.append(np.concatenate([z[1] for z in self.nonneg]))
        for block, f, const in self.cones:
            blocks.append(block)
            mats.append(f)
            offs.append(const)
        return ConicProgram(
            num_vars=self.num_vars,
            constraint_matrix=-np.vstack(mats),
            offsets=np.concatenate(offs),
            cone_blocks=blocks,
            **fields,
        )


def _allocate(problem: MopulProblem) -> _Layout:
    spec, cons, obj = problem.system, problem.constraints, problem.objective
    n, horizon = spec.n, spec.horizon
    layout = _Layout()
    layout.alloc("A", (n, n))
    layout.alloc("U", (horizon, spec.m))
    if problem.omega_fixed is None:
        layout.alloc("omega", (1,))
    layout.alloc("xi", (horizon,))
    if "f1" in obj.active_terms:
        layout.alloc("frobenius", (1,))
    if "f2" in obj.active_terms and horizon >= 2:
        layout.alloc("effort", (horizon - 1,))
    if cons.nuclear_ball is not None:
        layout.alloc("W1", (svec_dim(n),))
        layout.alloc("W2", (svec_dim(n),))
    return layout


def _index(sl: VariableSlice, *idx: int) -> int:
    return sl.start + int(np.ravel_multi_index(idx, sl.shape))


def error_residual_map(problem: MopulProblem, layout_slices: dict[str, VariableSlice], t: int):
    """Coefficients (F, f) of L^T (C A C^+ r_{t-1} + C B u_{t-1} - r_t) over the program vector.

    L is the Cholesky factor of Q under the Q-norm and the identity otherwise.
    """
    spec = problem.system
    num_vars = max(sl.stop for sl in layout_slices.values())
    a_sl, u_sl = layout_slices["A"], layout_slices["U"]
    z = spec.c_pinv @ spec.reference(t - 1)
    f = np.zeros((spec.p, num_vars))
    f[:, a_sl.start : a_sl.stop] = np.kron(spec.c, z[None, :])
    u_start = _index(u_sl, t - 1, 0)
    f[:, u_start : u_start + spec.m] = spec.c @ spec.b
    const = -spec.reference(t)
    factor = problem.error_norm.factor
    if factor is not None:
        f = factor.T @ f
        const = factor.T @ const
    return f, const


def build_amopul(problem: MopulProblem, form: Form = "soc") -> ConicProgram:
    """Lower ``problem`` to a cone program.

    ``form="soc"`` encodes each stage error as a second-order cone
    (xi_t, v_t); ``form="lmi"`` as the arrow matrix [[xi_t I, v_t], [v_t^T, xi_t]] >= 0.
    """
    if form not in ("soc", "lmi"):
        raise ValueError(f"unknown form {form!r}")
    spec, cons, obj = problem.system, problem.constraints, problem.objective
    n, m, p, horizon = spec.n, spec.m, spec.p, spec.horizon
    layout = _allocate(problem)
    sl = layout.slices
    asm = _Assembler(layout.size)

    def unit(k: int) -> np.ndarray:
        row = np.zeros(layout.size)
        row[k] = 1.0
        return row

    a_idx = np.arange(sl["A"].start, sl["A"].stop).reshape(n, n)
    u_idx = np.arange(sl["U"].start, sl["U"].stop).reshape(horizon, m)
    xi_idx = np.arange(sl["xi"].start, sl["xi"].stop)

    # stage errors
    for t in range(1, horizon + 1):
        f, const = error_residual_map(problem, sl, t)
        xi = unit(xi_idx[t - 1])
        if form == "soc":
            asm.add_soc(np.vstack([xi, f]), np.concatenate([[0.0], const]))
        else:
            entries = {(i, i): (xi, 0.0) for i in range(p + 1)}
            for j in range(p):
                entries[(p, j)] = (f[j], const[j])
            asm.add_psd(p + 1, entries)

    # sum_t xi_t <= omega
    level = asm.rows(1)[0]
    level[xi_idx] = -1.0
    if problem.omega_fixed is None:
        w = sl["omega"].start
        level[w] = 1.0
        asm.add_nonneg(level, 0.0)
        asm.add_nonneg(unit(w), 0.0)
        asm.add_nonneg(-unit(w), cons.omega_mode.upper)
    else:
        asm.add_nonneg(level, problem.omega_fixed)

    # entrywise boxes on A and U
    def add_box(idx: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> None:
        idx, lower, upper = idx.ravel(), np.ravel(lower), np.ravel(upper)
        pinned = lower == upper
        for k in np.flatnonzero(pinned):
            asm.add_zero(unit(idx[k]), -lower[k])
        free = np.flatnonzero(~pinned)
        if free.size:
            f = asm.rows(free.size)
            f[np.arange(free.size), idx[free]] = 1.0
            asm.add_nonneg(f, -lower[free])
            asm.add_nonneg(-f, upper[free])

    if cons.a_box is not None:
        add_box(a_idx, cons.a_box.lower, cons.a_box.upper)
    u_bounds = problem.u_box_full()
    if u_bounds is not None:
        add_box(u_idx, *u_bounds)

    if cons.u_rate is not None:
        for t in range(1, horizon):
            f = asm.rows(m)
            f[np.arange(m), u_idx[t]] = 1.0
            f[np.arange(m), u_idx[t - 1]] = -1.0
            asm.add_nonneg(f, -cons.u_rate.lower)
            asm.add_nonneg(-f, cons.u_rate.upper)

    if cons.u_balls is not None:
        for t, ball in enumerate(cons.u_balls):
            f = asm.rows(m)
            f[np.arange(m), u_idx[t]] = 1.0
            if ball.radius == 0.0:
                asm.add_zero(f, -ball.center)
            else:
                asm.add_soc(np.vstack([asm.rows(1), f]), np.concatenate([[ball.radius], -ball.center]))

    for ineq in cons.a_linear:
        f = asm.rows(1)[0]
        f[a_idx.ravel()] = -ineq.coeffs.ravel()
        asm.add_nonneg(f, ineq.rhs)

    if cons.stochastic_columns:
        f = asm.rows(n * n)
        f[np.arange(n * n), a_idx.ravel()] = 1.0
        asm.add_nonneg(f, np.zeros(n * n))
        cols = asm.rows(n)
        for j in range(n):
            cols[j, a_idx[:, j]] = 1.0
        asm.add_zero(cols, -np.ones(n))

    if cons.io_structure is not None:
        io = cons.io_structure
        pattern = io.assemble(np.zeros((io.m1, io.m1)), np.zeros((io.m2, io.m1)))
        mask = io.fixed_pattern()
        for i, j in zip(*np.nonzero(mask)):
            asm.add_zero(unit(a_idx[i, j]), -pattern[i, j])
        for ineq in io.inequalities:
            f = asm.rows(1)[0]
            f[a_idx[: io.m1, : io.m1].ravel()] = ineq.g_coeffs.ravel()
            f[a_idx[io.m1 :, : io.m1].ravel()] = ineq.h_coeffs.ravel()
            asm.add_nonneg(f, ineq.rhs - float(np.trace(ineq.g_coeffs)))

    if cons.nuclear_ball is not None:
        w1, w2 = sl["W1"], sl["W2"]
        tril_r, tril_c = np.tril_indices(n)
        pos = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(tril_r, tril_c))}
        entries: dict[tuple[int, int], tuple[np.ndarray, float]] = {}
        for (i, j), k in pos.items():
            entries[(i, j)] = (unit(w1.start + k), 0.0)
            entries[(n + i, n + j)] = (unit(w2.start + k), 0.0)
        for i in range(n):
            for j in range(n):
                # lower-left block is A^T
                entries[(n + i, j)] = (unit(a_idx[j, i]), 0.0)
        asm.add_psd(2 * n, entries)
        trace = asm.rows(1)[0]
        for i in range(n):
            trace[w1.start + pos[(i, i)]] = -1.0
            trace[w2.start + pos[(i, i)]] = -1.0
        asm.add_nonneg(trace, 2.0 * cons.nuclear_ball)

    if cons.spectral_ball is not None:
        alpha = cons.spectral_ball
        zero_row = np.zeros(layout.size)
        entries = {(i, i): (zero_row, alpha) for i in range(2 * n)}
        for i in range(n):
            for j in range(n):
                entries[(n + i, j)] = (unit(a_idx[j, i]), 0.0)
        asm.add_psd(2 * n, entries)

    # objective epigraphs
    coeffs = np.zeros(layout.size)
    offset = 0.0
    if "frobenius" in sl:
        fr = sl["frobenius"].start
        f = asm.rows(n * n)
        f[np.arange(n * n), a_idx.ravel()] = 1.0
        asm.add_soc(np.vstack([unit(fr), f]), np.concatenate([[0.0], -obj.a_ref.ravel()]))
        coeffs[fr] = obj.lambda1
    if "effort" in sl:
        eff = sl["effort"]
        for t in range(1, horizon):
            f = asm.rows(m)
            f[np.arange(m), u_idx[t]] = 1.0
            f[np.arange(m), u_idx[t - 1]] = -1.0
            asm.add_soc(np.vstack([unit(eff.start + t - 1), f]), np.zeros(m + 1))
            coeffs[eff.start + t - 1] = obj.lambda2
    if "f3" in obj.active_terms:
        if problem.omega_fixed is None:
            coeffs[sl["omega"].start] = obj.lambda3
        else:
            offset += obj.lambda3 * problem.omega_fixed

    program = asm.finish(
        form=form,
        objective_coeffs=coeffs,
        objective_offset=offset,
        var_names=dict(sl),
        fixed_omega=problem.omega_fixed,
        dims={"n": n, "m": m, "p": p, "N": horizon},
    )
    logger.info(
        "Program assembled",
        problem=problem.name,
        form=form,
        num_vars=program.num_vars,
        rows=program.num_rows,
        zero=program.count_blocks("zero"),
        nonneg=program.count_blocks("nonneg"),
        soc=program.count_blocks("second_order"),
        psd=program.count_blocks("psd"),
    )
    return program


def extract_solution(program: ConicProgram, x: np.ndarray) -> DecisionPoint:
    """Read (A, U, omega, xi) out of a program vector.

    Raises:
        DimensionError: ``x`` does not have ``num_vars`` entries
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (program.num_vars,):
        raise DimensionError("program vector", (program.num_vars,), x.shape)
    names = program.var_names
    if "omega" in names:
        omega = float(names["omega"].take(x)[0])
    else:
        omega = float(program.fixed_omega if program.fixed_omega is not None else np.nan)
    return DecisionPoint(
        a=names["A"].take(x).copy(),
        u=names["U"].take(x).copy(),
        omega=omega,
        xi=names["xi"].take(x).copy(),
    )


def lift_point(
    problem: MopulProblem,
    program: ConicProgram,
    a: np.ndarray,
    u: np.ndarray,
    omega: float | None = None,
) -> np.ndarray:
    """Pack a candidate (A, U) into a program vector with every auxiliary tight.

    xi_t is set to the achieved stage residual norm, omega (variable mode) to
    sum(xi) unless given, epigraphs to their norms and the nuclear-norm blocks to
    W1 = U S U^T, W2 = V S V^T from the SVD of A.
    """
    spec = problem.system
    a, u = spec.check_decision(a, u)
    names = program.var_names
    x = np.zeros(program.num_vars)
    x[names["A"].start : names["A"].stop] = a.ravel()
    x[names["U"].start : names["U"].stop] = u.ravel()

    xi = np.empty(spec.horizon)
    for t in range(1, spec.horizon + 1):
        f, const = error_residual_map(problem, names, t)
        xi[t - 1] = np.linalg.norm(f @ x + const)
    x[names["xi"].start : names["xi"].stop] = xi

    if "omega" in names:
        x[names["omega"].start] = float(np.sum(xi)) if omega is None else omega
    if "frobenius" in names:
        x[names["frobenius"].start] = np.linalg.norm(a - problem.objective.a_ref)
    if "effort" in names:
        eff = names["effort"]
        x[eff.start : eff.stop] = np.linalg.norm(np.diff(u, axis=0), axis=1)
    if "W1" in names:
        left, sing, right = svd(a)
        rows, cols = np.tril_indices(spec.n)
        w1 = (left * sing) @ left.T
        w2 = (right * sing) @ right.T
        x[names["W1"].start : names["W1"].stop] = w1[rows, cols]
        x[names["W2"].start : names["W2"].stop] = w2[rows, cols]
    return x


def program_residuals(program: ConicProgram, x: np.ndarray) -> list[float]:
    """Membership margin of s = offsets - M x for every block, in block order."""
    s = program.slack(x)
    return [block_margin(block, s[rows]) for block, rows in program.block_slices()]
