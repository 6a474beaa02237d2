"""Command-line interface: generate, solve, bounds, experiment and validate.

Usage:
    mopul-sdp generate --preset amopul1 --n 5 --N 4 --seed 7 --out runs/gen
    mopul-sdp solve runs/gen/problem.json --form lmi --out runs/solve
    mopul-sdp bounds --theorem t3 --beta 1 --N 4 --omega-c 8
    mopul-sdp experiment --table 2 --scale desk --seed 1 --out runs/t2
    mopul-sdp validate runs/gen/problem.json runs/solve/solution.json

Exit codes: 0 ok, 2 usage or parse error, 3 infeasible, 4 solver failure,
5 validation failure.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from ..config import load_config
from ..exceptions import MopulError, SolverError
from ..models.experiment import NoiseSpec
from ..models.problem import MopulProblem, OmegaMode
from ..models.solution import SolutionRecord, SolverConfig
from ..services import bounds
from ..services.builder import build_amopul, extract_solution
from ..services.experiments import SCALES, gen_ideal, perturb_refs, plot_rows, run_scaled
from ..services.presets import preset_amopul1_box, preset_amopul2
from ..services.solver import InteriorPointSolver
from ..services.storage import ArtifactStore
from ..services.validation import validate
from ..utils.logger import get_logger, set_level

logger = get_logger("cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER_FAILURE = 4
EXIT_VALIDATION_FAILURE = 5


class InputError(Exception):
    """Unreadable or invalid input file; carries a JSON-able report."""

    def __init__(self, report: dict[str, Any]):
        super().__init__(report.get("error", "invalid input"))
        self.report = report


def _load_json(path: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError({"error": str(e), "path": path}) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError({"error": e.msg, "path": path, "line": e.lineno, "column": e.colno}) from e


def _load_model(path: str, model: type[BaseModel]) -> Any:
    data = _load_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise InputError(
            {"error": "schema validation failed", "path": path, "details": e.errors(include_url=False)}
        ) from e
    except MopulError as e:
        raise InputError({"error": str(e), "path": path, "error_type": type(e).__name__}) from e


def _print_json(payload: BaseModel | dict[str, Any]) -> None:
    if isinstance(payload, BaseModel):
        print(payload.model_dump_json(indent=2))
    else:
        print(json.dumps(payload, indent=2, default=str))


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config = load_config()
    inst = gen_ideal(args.n, args.N, args.seed)
    refs = perturb_refs(inst, NoiseSpec(mu=args.mu, sigma=args.sigma), args.seed, args.instance)
    spec = inst.spec(refs)
    if args.preset == "amopul1":
        problem = preset_amopul1_box(spec, args.a_bound, args.u_bound)
        problem = problem.model_copy(
            update={
                "constraints": problem.constraints.model_copy(
                    update={"omega_mode": OmegaMode(upper=config.omega_upper)}
                )
            }
        )
    else:
        stage, cumulative = (1.0, 1.0) if args.raw_levels else SCALES["desk"].control_factors()
        problem = preset_amopul2(
            spec, inst.a_hat, inst.u_hat, args.omega_tilde * cumulative, args.omega_t * stage
        )

    store = ArtifactStore(args.out)
    store.write_json("problem.json", problem)
    store.write_json("ideal.json", inst)
    store.write_csv(
        "references.csv",
        [{"t": t, **{f"r{i}": v for i, v in enumerate(row)}} for t, row in enumerate(spec.all_references())],
    )
    store.write_manifest("generate", vars(args), seed=args.seed)
    print(f"✓ Generated {problem.name} (n={spec.n}, N={spec.horizon}) -> {store.path('problem.json')}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args: argparse.Namespace) -> int:
    config = load_config()
    problem = _load_model(args.problem, MopulProblem)
    program = build_amopul(problem, form=args.form)
    solver = InteriorPointSolver(SolverConfig.from_settings(config), trace=sys.stderr if args.trace else None)
    solution = solver.solve(program)
    point = extract_solution(program, solution.x)

    record = SolutionRecord(
        problem=problem.name,
        form=args.form,
        status=solution.status,
        objective=solution.objective,
        a=point.a,
        u=point.u,
        omega=None if np.isnan(point.omega) else point.omega,
        xi=point.xi,
        residuals=solution.residuals,
        iterations=solution.iterations,
        certificate=solution.certificate,
        message=solution.message,
    )
    store = ArtifactStore(args.out)
    store.write_json("solution.json", record)
    store.write_manifest("solve", {"problem": args.problem, "form": args.form})

    print("=" * 60)
    print(f"Problem:     {problem.name}  (form={args.form})")
    print(f"Status:      {solution.status}")
    print(f"Objective:   {solution.objective:.10g}")
    print(f"Iterations:  {solution.iterations}")
    print(
        f"Residuals:   primal={solution.residuals.primal:.2e} dual={solution.residuals.dual:.2e} "
        f"gap={solution.residuals.gap:.2e}"
    )
    if solution.message:
        print(f"Message:     {solution.message}")
    print("=" * 60)

    if solution.ok:
        return EXIT_OK
    if solution.status in ("primal_infeasible", "dual_infeasible"):
        return EXIT_INFEASIBLE
    return EXIT_SOLVER_FAILURE


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _solved_pair(args: argparse.Namespace) -> tuple[MopulProblem, SolutionRecord] | None:
    if args.problem is None or args.solution is None:
        return None
    return _load_model(args.problem, MopulProblem), _load_model(args.solution, SolutionRecord)


def cmd_bounds(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    pair = _solved_pair(args)
    beta = args.beta
    if beta is None and pair is not None:
        beta = bounds.default_beta(pair[0])
    theorem = args.theorem

    if theorem == "t4":
        if args.eps is None:
            parser.error("t4 requires --eps")
        if pair is None:
            if args.gamma is None:
                parser.error("t4 without --problem/--solution requires --gamma")
            _print_json({"theorem": "T4", "bound": bounds.theorem4_bound(np.array(args.eps), args.gamma)})
            return EXIT_OK
        problem, sol = pair
        cert = bounds.theorem4_certificate(problem.system, sol.a, sol.u, sol.objective, np.array(args.eps), args.gamma)
        return _emit_certificate(args, cert)

    if beta is None:
        parser.error(f"{theorem} requires --beta (no bound on A to derive one from)")

    if theorem == "t3" and pair is None:
        if args.omega_c is None or args.N is None:
            parser.error("t3 requires --omega-c and --N")
        _print_json({"theorem": "T3", "omega_tilde": bounds.theorem3_tighten(args.omega_c, beta, args.N)})
        return EXIT_OK
    if pair is None:
        parser.error(f"{theorem} requires --problem and --solution")
    problem, sol = pair
    spec = problem.system

    if theorem == "t2":
        omega_u = args.omega_u if args.omega_u is not None else problem.constraints.omega_mode.upper
        cert = bounds.theorem2_certificate(spec, sol.a, sol.u, beta, omega_u)
    elif theorem == "t3":
        if args.omega_c is None:
            parser.error("t3 requires --omega-c")
        cert = bounds.theorem3_check(spec, sol.a, sol.u, args.omega_c, beta)
    elif theorem == "t7":
        if args.omega_c is None:
            parser.error("t7 requires --omega-c (the exact-problem level omega)")
        cert = bounds.theorem7_certificate(spec, args.omega_c, beta, sol.a, sol.u, sol.objective)
    else:
        if args.omega_c is None:
            parser.error("r3 requires --omega-c")
        if problem.error_norm.q is None:
            parser.error("r3 requires a problem with a q_norm error norm")
        cert = bounds.remark3_certificate(spec, sol.a, sol.u, args.omega_c, beta, problem.error_norm.q)
    return _emit_certificate(args, cert)


def _emit_certificate(args: argparse.Namespace, cert: BaseModel) -> int:
    _print_json(cert)
    if args.out is not None:
        store = ArtifactStore(args.out)
        store.write_json(f"certificate_{args.theorem}.json", cert)
        store.write_manifest("bounds", vars(args))
    return EXIT_OK


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------


def cmd_experiment(args: argparse.Namespace) -> int:
    config = load_config()
    scale = SCALES[args.scale]
    if args.instances is not None:
        scale = scale.model_copy(update={"instances": args.instances})
    threads = args.threads or config.threads

    print(f"Running table {args.table} at {scale.name} scale (n={scale.n}, N={scale.horizon}, "
          f"{scale.instances} instances, {threads} threads)...")
    sweep = run_scaled(args.table, scale, args.seed, threads, SolverConfig.from_settings(config))

    store = ArtifactStore(args.out)
    store.write_csv(
        "summary.csv",
        [
            {**s.config, "metric": s.metric, "mean": s.mean, "std": s.std, "count": s.count, "failures": s.failures}
            for s in sweep.summaries
        ],
    )
    metric_names = sorted({s.metric for s in sweep.summaries})
    store.write_csv(
        "raw.csv",
        [
            {**r.cell, "instance": r.instance, "status": r.status, "iterations": r.iterations}
            | {m: r.metrics.get(m) for m in metric_names}
            for r in sweep.results
        ],
    )
    for metric in metric_names:
        store.write_csv(f"plot_{metric}.csv", plot_rows(sweep, metric), ["series", "x", "mean", "std"])
    store.write_manifest(
        "experiment",
        {"table": args.table, "scale": scale.model_dump(mode="json"), "threads": threads},
        seed=args.seed,
    )

    failures = sum(r.status != "optimal" for r in sweep.results)
    print(f"✓ {len(sweep.results) - failures}/{len(sweep.results)} solves optimal -> {store.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    problem = _load_model(args.problem, MopulProblem)
    sol = _load_model(args.solution, SolutionRecord)
    report = validate(problem, sol.a, sol.u, sol.omega if problem.omega_fixed is None else None, args.tol)

    print(f"{'constraint':<24} {'margin':>14}  ok")
    print("-" * 44)
    for check in report.checks:
        print(f"{check.name:<24} {check.margin:>14.6e}  {'✓' if check.satisfied else '✗'}")
    print("-" * 44)
    print(f"exact cumulative error:  {report.exact_error:.10g}")
    print(f"approx cumulative error: {report.approx_error:.10g}")
    print(f"objective:               {report.objective:.10g}")
    if args.out is not None:
        store = ArtifactStore(args.out)
        store.write_json("validation.json", report)
        store.write_manifest("validate", {"problem": args.problem, "solution": args.solution, "tol": args.tol})
    return EXIT_OK if report.ok else EXIT_VALIDATION_FAILURE


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mopul-sdp",
        description="Build, solve and certify conic approximations of matrix optimization over linear systems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Generate a random experiment problem")
    gen.add_argument("--preset", choices=["amopul1", "amopul2"], default="amopul1")
    gen.add_argument("--n", type=int, default=5, help="State dimension (n = m = p)")
    gen.add_argument("--N", type=int, default=4, help="Horizon")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--instance", type=int, default=0, help="Noise draw index")
    gen.add_argument("--mu", type=float, default=0.0, help="Reference noise mean")
    gen.add_argument("--sigma", type=float, default=0.0, help="Reference noise std")
    gen.add_argument("--a-bound", type=float, default=0.4, help="amopul1 box on A")
    gen.add_argument("--u-bound", type=float, default=0.5, help="amopul1 box on u_t")
    gen.add_argument("--omega-tilde", type=float, default=10.0, help="amopul2 cumulative level")
    gen.add_argument("--omega-t", type=float, default=3.0, help="amopul2 per-stage control radius")
    gen.add_argument(
        "--raw-levels", action="store_true", help="Use amopul2 levels as given (no rescaling to n, N)"
    )
    gen.add_argument("--out", default=None, help="Output directory")

    solve = sub.add_parser("solve", help="Solve a problem file")
    solve.add_argument("problem", help="Problem JSON")
    solve.add_argument("--form", choices=["soc", "lmi"], default="soc")
    solve.add_argument("--trace", action="store_true", help="Stream the iteration trace to stderr")
    solve.add_argument("--out", default=None)

    bnd = sub.add_parser("bounds", help="Evaluate a theoretical bound")
    bnd.add_argument("--theorem", choices=["t2", "t3", "t4", "t7", "r3"], required=True)
    bnd.add_argument("--problem", default=None)
    bnd.add_argument("--solution", default=None)
    bnd.add_argument("--beta", type=float, default=None)
    bnd.add_argument("--omega-c", type=float, default=None)
    bnd.add_argument("--omega-u", type=float, default=None)
    bnd.add_argument("--N", type=int, default=None)
    bnd.add_argument("--eps", type=float, nargs="+", default=None)
    bnd.add_argument("--gamma", type=float, default=None)
    bnd.add_argument("--out", default=None)

    exp = sub.add_parser("experiment", help="Run a randomized sweep")
    exp.add_argument("--table", type=int, choices=[1, 2, 3], required=True)
    exp.add_argument("--scale", choices=sorted(SCALES), default="desk")
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--instances", type=int, default=None, help="Override instances per cell")
    exp.add_argument("--threads", type=int, default=None, help="Worker threads (default MOPUL_THREADS)")
    exp.add_argument("--out", default=None)

    val = sub.add_parser("validate", help="Re-check a solution against its problem")
    val.add_argument("problem")
    val.add_argument("solution")
    val.add_argument("--tol", type=float, default=1e-6)
    val.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = load_config()
    set_level(config.log_level)
    if args.command in ("generate", "solve", "experiment") and args.out is None:
        args.out = str(Path(config.out_dir) / args.command)

    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "bounds":
            return cmd_bounds(args, parser)
        if args.command == "experiment":
            return cmd_experiment(args)
        return cmd_validate(args)
    except InputError as e:
        print(json.dumps(e.report, default=str), file=sys.stderr)
        return EXIT_USAGE
    except SolverError as e:
        logger.error("Solver rejected program", error=str(e), error_type=type(e).__name__)
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except (MopulError, ValidationError) as e:
        logger.error("Command failed", command=args.command, error=str(e), error_type=type(e).__name__)
        print(f"✗ {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
