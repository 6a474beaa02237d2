"""Randomized experiment protocol: ideal instances, noisy references and sweeps.

An ideal instance is drawn once per run seed; each grid cell then draws its own
reference sets from streams keyed by (instance, cell parameters). Sweeps fan out
over a thread pool and are reduced in submission order, so results do not depend
on the thread count.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..models.experiment import IdealInstance, InstanceResult, MetricSummary, NoiseSpec
from ..models.problem import MopulProblem
from ..models.solution import SolverConfig
from ..system import approx_cumulative_error, exact_cumulative_error
from ..utils import rng
from ..utils.logger import get_logger
from .builder import build_amopul, extract_solution
from .presets import preset_amopul1_box, preset_amopul2
from .solver import InteriorPointSolver

logger = get_logger("experiments")

TABLE1_GRID_PAPER: tuple[tuple[float, float], ...] = (
    *((0.0, s) for s in (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)),
    (1.0, 2.5),
    (1.0, 3.0),
)
TABLE1_GRID_DESK: tuple[tuple[float, float], ...] = (
    *((0.0, s) for s in (0.05, 0.1, 0.2, 0.4, 0.8)),
    (1.0, 3.0),
)
TABLE2_SIGMAS = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
TABLE3_OMEGA_TILDE_PAPER = (2.0, *map(float, range(10, 170, 10)))
TABLE3_OMEGA_TILDE_DESK = (2.0, 10.0, 20.0, 40.0, 80.0, 120.0, 160.0)
TABLE3_OMEGA_T = (3.0, 4.5, 6.0, 8.0)

# reference sizes the control levels are quoted for
REFERENCE_DIM = 100
REFERENCE_HORIZON = 30


class ExperimentScale(BaseModel):
    """Sizes and grids of one sweep configuration."""

    model_config = ConfigDict(frozen=True)

    name: Literal["desk", "paper"]
    n: int = Field(ge=1)
    horizon: int = Field(ge=1)
    instances: int = Field(ge=1)
    table1_grid: tuple[tuple[float, float], ...]
    table2_sigmas: tuple[float, ...] = TABLE2_SIGMAS
    table3_omega_tilde: tuple[float, ...]
    table3_omega_t: tuple[float, ...] = TABLE3_OMEGA_T

    def control_factors(self) -> tuple[float, float]:
        return control_factors(self.n, self.horizon)


SCALES = {
    "desk": ExperimentScale(
        name="desk",
        n=20,
        horizon=10,
        instances=10,
        table1_grid=TABLE1_GRID_DESK,
        table3_omega_tilde=TABLE3_OMEGA_TILDE_DESK,
    ),
    "paper": ExperimentScale(
        name="paper",
        n=100,
        horizon=30,
        instances=20,
        table1_grid=TABLE1_GRID_PAPER,
        table3_omega_tilde=TABLE3_OMEGA_TILDE_PAPER,
    ),
}


def control_factors(n: int, horizon: int) -> tuple[float, float]:
    """(per-stage, cumulative) multipliers rescaling control levels quoted for n=100, N=30.

    Stage norms of componentwise noise grow like sqrt(n); the cumulative level
    additionally grows with N.
    """
    stage = float(np.sqrt(n / REFERENCE_DIM))
    return stage, stage * horizon / REFERENCE_HORIZON


class SweepResult(BaseModel):
    """Summaries (one per cell and metric) and the per-instance rows behind them."""

    model_config = ConfigDict(frozen=True)

    table: int
    summaries: list[MetricSummary]
    results: list[InstanceResult]
    plot_axes: tuple[str, str] = Field(description="(series parameter, x parameter) for plot data")


def gen_ideal(n: int, horizon: int, seed: int) -> IdealInstance:
    """Draw A_hat ~ N(0, 0.1^2) entrywise, r_0 ~ U(-0.5, 0.5)^n, u_hat_t = 1 * U(-0.5, 0.5)."""
    if n < 1 or horizon < 1:
        raise ValueError(f"need n >= 1 and N >= 1, got n={n}, N={horizon}")
    gen = rng.stream(seed, "ideal", n, horizon)
    r0 = rng.uniform(gen, -0.5, 0.5, n)
    a_hat = rng.normal(gen, 0.0, 0.1, (n, n))
    u_hat = np.repeat(rng.uniform(gen, -0.5, 0.5, horizon)[:, None], n, axis=1)
    x_hat = np.empty((horizon + 1, n))
    x_hat[0] = r0
    for t in range(1, horizon + 1):
        x_hat[t] = a_hat @ x_hat[t - 1] + u_hat[t - 1]
    return IdealInstance(a_hat=a_hat, u_hat=u_hat, x_hat=x_hat, seed=seed)


def perturb_refs(inst: IdealInstance, noise: NoiseSpec, seed: int, instance: int = 0) -> np.ndarray:
    """r_t = x_hat_t + e_t for t = 1..N with e_t ~ N(mu, sigma^2) componentwise; r_0 is untouched."""
    gen = rng.stream(seed, "noise", instance, rng.cell_key(noise.mu, noise.sigma))
    return inst.x_hat[1:] + rng.normal(gen, noise.mu, noise.sigma, inst.x_hat[1:].shape)


def _relative(diff: np.ndarray, base: np.ndarray) -> float | None:
    scale = float(np.linalg.norm(base))
    return None if scale == 0.0 else float(np.linalg.norm(diff)) / scale


def metrics(inst: IdealInstance, refs: np.ndarray, a: np.ndarray, u: np.ndarray) -> dict[str, float | None]:
    """CE (exact re-rollout), ACE (decoupled rollout), REA and REU of a solution (A, U).

    REA/REU are None when the ideal matrix is zero.
    """
    spec = inst.spec(refs)
    return {
        "CE": exact_cumulative_error(spec, a, u),
        "ACE": approx_cumulative_error(spec, a, u),
        "REA": _relative(a - inst.a_hat, inst.a_hat),
        "REU": _relative(u - inst.u_hat, inst.u_hat),
    }


def summarize(
    results: Sequence[InstanceResult], metric_names: Sequence[str], config: dict[str, float]
) -> list[MetricSummary]:
    """Mean and sample std per metric over successful instances; failures are counted."""
    failures = sum(1 for r in results if r.status != "optimal")
    out = []
    for name in metric_names:
        values = np.array(
            [r.metrics[name] for r in results if r.status == "optimal" and r.metrics.get(name) is not None]
        )
        if values.size == 0:
            continue
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        out.append(
            MetricSummary(
                metric=name,
                mean=float(np.mean(values)),
                std=std,
                count=int(values.size),
                failures=failures,
                config=config,
            )
        )
    return out


def _solve_one(
    problem: MopulProblem, inst: IdealInstance, refs: np.ndarray, cell: dict[str, float], index: int,
    config: SolverConfig,
) -> InstanceResult:
    program = build_amopul(problem)
    solution = InteriorPointSolver(config).solve(program)
    values: dict[str, float | None] = {}
    if solution.ok:
        point = extract_solution(program, solution.x)
        values = metrics(inst, refs, point.a, point.u)
    else:
        logger.warning(
            "Instance solve failed", cell=cell, instance=index, status=solution.status, message=solution.message
        )
    return InstanceResult(
        cell=cell,
        instance=index,
        status=solution.status,
        metrics=values,
        iterations=solution.iterations,
        solve_time_sec=solution.solve_time_sec,
    )


def _sweep(
    table: int,
    inst: IdealInstance,
    cells: Sequence[dict[str, float]],
    make_problem: Callable[[dict[str, float], np.ndarray], MopulProblem],
    noise_of: Callable[[dict[str, float]], NoiseSpec],
    instances: int,
    seed: int,
    metric_names: Sequence[str],
    threads: int,
    config: SolverConfig | None,
    plot_axes: tuple[str, str],
) -> SweepResult:
    config = config or SolverConfig()
    jobs = []
    for cell in cells:
        for i in range(instances):
            refs = perturb_refs(inst, noise_of(cell), seed, i)
            jobs.append((make_problem(cell, refs), refs, cell, i))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(
            pool.map(lambda job: _solve_one(job[0], inst, job[1], job[2], job[3], config), jobs)
        )

    summaries = []
    for k, cell in enumerate(cells):
        # jobs are laid out cell-major, so each cell owns one contiguous slice
        cell_results = results[k * instances : (k + 1) * instances]
        cell_summaries = summarize(cell_results, metric_names, cell)
        summaries.extend(cell_summaries)
        logger.info(
            "Cell finished",
            table=table,
            cell=cell,
            solved=sum(r.status == "optimal" for r in cell_results),
            instances=len(cell_results),
            means={s.metric: s.mean for s in cell_summaries},
        )
    return SweepResult(table=table, summaries=summaries, results=results, plot_axes=plot_axes)


def run_table1(
    n: int,
    horizon: int,
    instances: int,
    noise_grid: Sequence[tuple[float, float]],
    seed: int,
    threads: int = 1,
    config: SolverConfig | None = None,
    a_bound: float = 0.4,
    u_bound: float = 0.5,
) -> SweepResult:
    """Box-constrained error minimization over a (mu, sigma) noise grid; CE, REA, REU."""
    inst = gen_ideal(n, horizon, seed)
    cells = [{"mu": float(mu), "sigma": float(sigma)} for mu, sigma in noise_grid]
    return _sweep(
        1,
        inst,
        cells,
        lambda cell, refs: preset_amopul1_box(inst.spec(refs), a_bound, u_bound),
        lambda cell: NoiseSpec(mu=cell["mu"], sigma=cell["sigma"]),
        instances,
        seed,
        ("CE", "REA", "REU"),
        threads,
        config,
        ("mu", "sigma"),
    )


def run_table2(
    n: int,
    horizon: int,
    instances: int,
    sigmas: Sequence[float],
    omega_tilde: float,
    omega_t: float,
    seed: int,
    threads: int = 1,
    config: SolverConfig | None = None,
    mu: float = 0.0,
) -> SweepResult:
    """Closest-to-A_hat recovery at fixed control levels over a sigma grid; REA, ACE."""
    inst = gen_ideal(n, horizon, seed)
    cells = [{"mu": float(mu), "sigma": float(s)} for s in sigmas]
    return _sweep(
        2,
        inst,
        cells,
        lambda cell, refs: preset_amopul2(inst.spec(refs), inst.a_hat, inst.u_hat, omega_tilde, omega_t),
        lambda cell: NoiseSpec(mu=cell["mu"], sigma=cell["sigma"]),
        instances,
        seed,
        ("REA", "ACE"),
        threads,
        config,
        ("mu", "sigma"),
    )


def run_table3(
    n: int,
    horizon: int,
    instances: int,
    omega_tilde_grid: Sequence[float],
    omega_t_grid: Sequence[float],
    noise: NoiseSpec,
    seed: int,
    threads: int = 1,
    config: SolverConfig | None = None,
) -> SweepResult:
    """Closest-to-A_hat recovery over a (omega_t, omega_tilde) grid at fixed noise; REA, ACE.

    All cells share the same reference sets, so only the control levels vary.
    """
    inst = gen_ideal(n, horizon, seed)
    cells = [
        {"omega_t": float(wt), "omega_tilde": float(w)} for wt in omega_t_grid for w in omega_tilde_grid
    ]
    return _sweep(
        3,
        inst,
        cells,
        lambda cell, refs: preset_amopul2(
            inst.spec(refs), inst.a_hat, inst.u_hat, cell["omega_tilde"], cell["omega_t"]
        ),
        lambda cell: noise,
        instances,
        seed,
        ("REA", "ACE"),
        threads,
        config,
        ("omega_t", "omega_tilde"),
    )


def run_scaled(
    table: int, scale: ExperimentScale, seed: int, threads: int = 1, config: SolverConfig | None = None
) -> SweepResult:
    """Run one table at a named scale, rescaling the control levels to its (n, N)."""
    stage, cumulative = scale.control_factors()
    if table == 1:
        return run_table1(scale.n, scale.horizon, scale.instances, scale.table1_grid, seed, threads, config)
    if table == 2:
        return run_table2(
            scale.n,
            scale.horizon,
            scale.instances,
            scale.table2_sigmas,
            10.0 * cumulative,
            3.0 * stage,
            seed,
            threads,
            config,
        )
    if table == 3:
        return run_table3(
            scale.n,
            scale.horizon,
            scale.instances,
            [w * cumulative for w in scale.table3_omega_tilde],
            [w * stage for w in scale.table3_omega_t],
            NoiseSpec(mu=0.0, sigma=0.5),
            seed,
            threads,
            config,
        )
    raise ValueError(f"unknown table {table}; expected 1, 2 or 3")


def plot_rows(sweep: SweepResult, metric: str) -> list[dict[str, float]]:
    """(series, x, mean, std) rows of one metric, in cell order."""
    series_key, x_key = sweep.plot_axes
    return [
        {"series": s.config[series_key], "x": s.config[x_key], "mean": s.mean, "std": s.std}
        for s in sweep.summaries
        if s.metric == metric
    ]
