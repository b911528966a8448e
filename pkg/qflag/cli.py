"""
Command line driver: builds systems, runs the verification suites and prints
a rich table or the SuiteReport JSON.

Exit codes: 0 when every relation holds, 1 when a suite fails or a numerical
construction breaks down, 2 on I/O, schema and other input errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from qflag.aseries import hirota_grid_A, random_system_A, tcheck
from qflag.bethe_chains import (
    ChainSpec,
    bethe_residual,
    census_report,
    oracle_report,
    r_matrix_D,
    random_system_D,
    solve_small_chain,
    yang_baxter_residual,
)
from qflag.characters import (
    TGrid,
    character_reports,
    character_system,
    hirota_residual,
    random_twist,
    t_grid,
)
from qflag.config import Settings
from qflag.errors import DegenerateTwist, InvalidAlgebraError, NonReducedWord, QFlagError, SchemaError
from qflag.lie_core import (
    Series,
    alternating_height,
    build_cartan,
    cartan_info,
    is_gamma_closed,
    lambda_spectrum,
    parse_algebra,
    pf_vector,
    random_height,
    verify_fusion_arithmetic,
    weight_system,
    weight_system_of,
)
from qflag.logging_setup import configure_logging
from qflag.qsystem import (
    ExtendedQSystem,
    SUITES,
    so6_dictionary,
    system_from_model,
    verify_system,
)
from qflag.rep_clifford import (
    check_chevalley,
    check_clifford,
    check_lambda_spectrum,
    check_torus_signs,
    defining_rep_A,
    exterior_power,
    spinor_reps_D,
    vector_rep_D,
)
from qflag.reporting import console, render_mapping, render_suite
from qflag.schemas import ChainSpecModel, RelationReport, SuiteReport, SystemModel, TGridModel, complex_pair
from qflag.spectral import TwistParams, sample_points

logger = logging.getLogger("qflag.cli")

# input faults exit with 2; every other domain error is a failed run
USAGE_ERRORS = (InvalidAlgebraError, SchemaError, DegenerateTwist, NonReducedWord)

VERIFY_SUITES = (
    "clifford",
    "chevalley",
    "lambda",
    "qq",
    "projection",
    "quantisation",
    "fusion",
    "covariance",
    "fusion-arithmetic",
    "hirota",
    "all",
)


# --- Builders ---
def random_system(series: str, rank: int, settings: Settings, stream: int = 0) -> ExtendedQSystem:
    """Random twisted system for the A or D series."""
    spec = parse_algebra(series, rank)
    rng = settings.rng(stream)
    if spec.series is Series.A:
        return random_system_A(rank, rng, twisted=True)
    if spec.series is Series.D:
        return random_system_D(rank, rng)
    raise QFlagError(f"{spec.label}: random Q-systems are built for the A and D series")


def so6_system(settings: Settings, stream: int = 0) -> ExtendedQSystem:
    """D_3 system through the so(6) = sl(4) dictionary from a normalized A_3 system."""
    return so6_dictionary(random_system_A(3, settings.rng(stream), twisted=False))


def load_chain(path: str) -> ChainSpec:
    model = ChainSpecModel.model_validate_json(Path(path).read_text())
    return ChainSpec.from_model(model)


def load_system(path: str) -> ExtendedQSystem:
    return system_from_model(SystemModel.model_validate_json(Path(path).read_text()))


def parse_magnons(raw: str, rank: int) -> List[int]:
    try:
        magnons = [int(x) for x in raw.split(",")]
    except ValueError as e:
        raise SchemaError(f"magnon numbers must be comma-separated integers, got {raw!r}") from e
    if len(magnons) != rank:
        raise SchemaError(f"expected {rank} magnon numbers, got {len(magnons)}")
    return magnons


def twist_from_args(args, settings: Settings) -> TwistParams:
    if args.x:
        if any(x == 0 for x in args.x):
            raise SchemaError("twist values must be nonzero")
        logs = np.log(np.asarray(args.x, dtype=complex))
        if args.series.upper() == "A" and len(logs) == args.rank:
            logs = np.append(logs, -np.sum(logs))
        expected = args.rank + 1 if args.series.upper() == "A" else args.rank
        if len(logs) != expected:
            raise SchemaError(f"expected {expected} twist values, got {len(args.x)}")
        return TwistParams(logs=logs)
    if args.series.upper() == "A":
        logs = random_twist(args.rank + 1, settings.rng(5)).logs
        return TwistParams(logs=logs - logs.mean())
    return random_twist(args.rank, settings.rng(5))


# --- Suites ---
def chevalley_reports(series: str, rank: int) -> List[RelationReport]:
    cartan = build_cartan(parse_algebra(series, rank))
    if cartan.spec.series is Series.A:
        base = defining_rep_A(cartan)
        reps = [base] + [exterior_power(base, k) for k in range(2, rank + 1)]
    elif cartan.spec.series is Series.D:
        base = vector_rep_D(cartan)
        reps = [base, *spinor_reps_D(cartan)] + [exterior_power(base, k) for k in range(2, rank - 1)]
    else:
        raise QFlagError(f"{cartan.spec.label}: matrix representations are built for the A and D series")
    return [check_chevalley(rep) for rep in reps] + [check_torus_signs(rep) for rep in reps]


def lambda_reports(series: str, rank: int, settings: Settings) -> List[RelationReport]:
    cartan = build_cartan(parse_algebra(series, rank))
    p = alternating_height(cartan)
    if cartan.spec.series is Series.A:
        return [check_lambda_spectrum(defining_rep_A(cartan), p, settings.tol_eigen)]
    if cartan.spec.series is Series.D:
        return [check_lambda_spectrum(vector_rep_D(cartan), p, settings.tol_eigen)]
    return []


def hirota_reports(series: str, rank: int, smax: int, settings: Settings) -> List[RelationReport]:
    spec = parse_algebra(series, rank)
    if spec.series is Series.A:
        system = random_system_A(rank, settings.rng(0), twisted=False)
        return [hirota_residual(hirota_grid_A(system, smax, settings), settings)]
    if spec.series is Series.D:
        system = character_system("D", random_twist(rank, settings.rng(5)))
        return [hirota_residual(t_grid(system, smax, settings), settings)]
    raise QFlagError(f"{spec.label}: Hirota grids are built for the A and D series")


def verify_reports(args, settings: Settings) -> List[RelationReport]:
    series, rank = ("D", 3) if args.so6 else (args.series.upper(), args.rank)
    chosen = VERIFY_SUITES[:-1] if args.suite == "all" else (args.suite,)
    spec = parse_algebra(series, rank)
    reports: List[RelationReport] = []
    system: Optional[ExtendedQSystem] = None
    for name in chosen:
        if name == "clifford":
            if spec.series is Series.D:
                reports.append(check_clifford(rank))
        elif name == "chevalley":
            if spec.series in (Series.A, Series.D):
                reports += chevalley_reports(series, rank)
        elif name == "lambda":
            reports += lambda_reports(series, rank, settings)
        elif name == "fusion-arithmetic":
            reports.append(verify_fusion_arithmetic(spec, settings.tol_eigen))
        elif name == "hirota":
            if spec.series in (Series.A, Series.D):
                reports += hirota_reports(series, rank, args.smax, settings)
        elif name in SUITES:
            if spec.series is Series.E:
                continue
            if system is None:
                system = so6_system(settings) if args.so6 else random_system(series, rank, settings)
            reports += verify_system(system, name, settings)
    return reports


# --- Commands ---
def cmd_algebra_info(args, settings: Settings) -> Optional[SuiteReport]:
    cartan = build_cartan(parse_algebra(args.series, args.rank))
    info = cartan_info(cartan, pf_vector(cartan))
    if args.json:
        print(info.model_dump_json(indent=2))
    else:
        render_mapping(cartan.spec.label, info.model_dump())
    return None


def cmd_lambda_spectrum(args, settings: Settings) -> Optional[SuiteReport]:
    cartan = build_cartan(parse_algebra(args.series, args.rank))
    pf = pf_vector(cartan)
    p = random_height(cartan, settings.rng(3)) if args.random_height else alternating_height(cartan)
    if args.adjoint:
        weights = weight_system_of(cartan, cartan.root_labels(cartan.highest_root))
    else:
        weights = weight_system(cartan, args.node)
    values = lambda_spectrum(weights, p, pf)
    closed = is_gamma_closed(values, pf, settings.tol_eigen)
    data = {
        "height": [int(x) for x in p.p],
        "dimension": len(values),
        "gamma_closed": closed,
        "spectrum": [complex_pair(np.round(z, 12)) for z in values],
    }
    if args.json:
        print(json.dumps(data, indent=2))
    else:
        render_mapping(f"{cartan.spec.label} Lambda spectrum", data)
    return None


def cmd_verify(args, settings: Settings) -> SuiteReport:
    return SuiteReport(command=f"verify {args.suite}", seed=settings.seed, reports=verify_reports(args, settings))


def cmd_character(args, settings: Settings) -> SuiteReport:
    params = twist_from_args(args, settings)
    system = character_system(args.series, params)
    reports = character_reports(system, args.smax, settings)
    if args.grid_out:
        points = sample_points(settings.rng(11), settings.samples)
        grid = t_grid(system, args.smax, settings)
        Path(args.grid_out).write_text(grid.to_model(points, degree=0).model_dump_json(indent=2))
        logger.info("wrote T-grid to %s", args.grid_out)
    return SuiteReport(command="character", seed=settings.seed, reports=reports)


def cmd_hirota(args, settings: Settings) -> SuiteReport:
    model = TGridModel.model_validate_json(Path(args.grid).read_text())
    grid = TGrid.from_model(model, sample_points(settings.rng(12), settings.samples))
    return SuiteReport(command="hirota", seed=settings.seed, reports=[hirota_residual(grid, settings)])


def cmd_qsystem_build(args, settings: Settings) -> Optional[SuiteReport]:
    system = so6_system(settings) if args.so6 else random_system(args.series, args.rank, settings)
    payload = system.to_model().model_dump_json(indent=2)
    if args.output:
        Path(args.output).write_text(payload)
        console.print(f"[bold blue]Wrote[/] {system.spec.label} system to {args.output}")
    else:
        print(payload)
    return None


def cmd_qsystem_verify(args, settings: Settings) -> SuiteReport:
    system = load_system(args.system)
    reports = verify_system(system, args.suite, settings)
    return SuiteReport(command=f"qsystem verify {args.suite}", seed=settings.seed, reports=reports)


def cmd_aseries_tcheck(args, settings: Settings) -> SuiteReport:
    if args.system:
        system = load_system(args.system)
    else:
        system = random_system_A(args.rank, settings.rng(0), twisted=args.twisted)
    return SuiteReport(command="aseries tcheck", seed=settings.seed, reports=tcheck(system, settings))


def solution_hirota(system: ExtendedQSystem, settings: Settings, smax: int = 2) -> RelationReport:
    """Hirota on the T-functions of a solved chain, with its source factors."""
    if system.series is Series.A:
        return hirota_residual(hirota_grid_A(system, smax, settings), settings)
    return hirota_residual(t_grid(system, smax, settings), settings)


def cmd_chain_solve(args, settings: Settings) -> SuiteReport:
    chain = load_chain(args.spec)
    magnons = parse_magnons(args.magnons, chain.rank)
    solutions = solve_small_chain(chain, magnons, settings)
    reports = []
    for i, solution in enumerate(solutions):
        report = bethe_residual(chain, solution.state, settings)
        roots = {str(a): [complex_pair(z) for z in solution.state.q(a)] for a in solution.state.roots}
        details = {**report.details, "roots": roots}
        reports.append(report.model_copy(update={"relation": f"bethe.{i}", "details": details}))
        hirota = solution_hirota(solution.system, settings)
        reports.append(hirota.model_copy(update={"relation": f"hirota.{i}"}))
    if not solutions:
        logger.warning("no solutions found in sector %s", magnons)
    return SuiteReport(command="chain solve", seed=settings.seed, reports=reports)


def cmd_chain_census(args, settings: Settings) -> SuiteReport:
    chain = load_chain(args.spec)
    report, _ = census_report(chain, settings, args.max_magnons)
    return SuiteReport(command="chain census", seed=settings.seed, reports=[report])


def cmd_chain_oracle(args, settings: Settings) -> SuiteReport:
    chain = load_chain(args.spec)
    rmat = r_matrix_D(chain.rank)
    ybe = RelationReport.from_residuals(
        "oracle.ybe",
        "R12(u-v) R13(u) R23(v) = R23(v) R13(u) R12(u-v)",
        [yang_baxter_residual(rmat, settings.rng(20))],
        1e-10,
    )
    solutions = {}
    if args.compare:
        _, solutions = census_report(chain, settings, args.max_magnons)
    return SuiteReport(command="chain oracle", seed=settings.seed, reports=[ybe] + oracle_report(chain, solutions, settings))


# --- Argument parsing ---
def _add_algebra(parser: argparse.ArgumentParser, series_default: str = "D", rank_default: int = 4) -> None:
    parser.add_argument("--series", default=series_default, help=f"Lie algebra series A, D or E (default: {series_default})")
    parser.add_argument("--rank", type=int, default=rank_default, help=f"Rank of the algebra (default: {rank_default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Build extended Q-systems for simply-laced Lie algebras and verify their relations."
    )
    parser.add_argument("--json", action="store_true", help="Print the report as JSON instead of a table")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (default: QFLAG_SEED or 0)")
    parser.add_argument("--details", action="store_true", help="Print the details attached to each relation")
    commands = parser.add_subparsers(dest="command", required=True)

    # --- Algebra data ---
    algebra = commands.add_parser("algebra", help="Cartan data of an algebra")
    algebra_commands = algebra.add_subparsers(dest="action", required=True)
    info = algebra_commands.add_parser("info", help="Cartan matrix, Coxeter number, Perron-Frobenius vector")
    _add_algebra(info)
    info.set_defaults(handler=cmd_algebra_info)

    spectrum = commands.add_parser("lambda-spectrum", help="Lambda eigenvalues of a representation")
    _add_algebra(spectrum)
    spectrum.add_argument("--node", type=int, default=1, help="Fundamental node (default: 1)")
    spectrum.add_argument("--adjoint", action="store_true", help="Use the adjoint representation")
    spectrum.add_argument("--random-height", action="store_true", help="Sample a Coxeter height function")
    spectrum.set_defaults(handler=cmd_lambda_spectrum)

    # --- Verification ---
    verify = commands.add_parser("verify", help="Run verification suites")
    verify.add_argument("suite", choices=VERIFY_SUITES, help="Suite to run")
    _add_algebra(verify)
    verify.add_argument("--smax", type=int, default=3, help="Largest s on Hirota grids (default: 3)")
    verify.add_argument("--so6", action="store_true", help="Build the D_3 system from A_3 through the so(6) dictionary")
    verify.set_defaults(handler=cmd_verify)

    character = commands.add_parser("character", help="Character solution of the T-system")
    _add_algebra(character)
    character.add_argument("--x", type=complex, nargs="+", help="Twist values, e.g. 0.6+0.8j (default: random)")
    character.add_argument("--smax", type=int, default=4, help="Largest s (default: 4)")
    character.add_argument("--grid-out", help="Write the T-grid to this JSON file")
    character.set_defaults(handler=cmd_character)

    hirota = commands.add_parser("hirota", help="Hirota residual of a T-grid file")
    hirota.add_argument("--grid", required=True, help="Path to grid.json")
    hirota.set_defaults(handler=cmd_hirota)

    # --- Q-systems ---
    qsystem = commands.add_parser("qsystem", help="Build or verify a serialized Q-system")
    qsystem_commands = qsystem.add_subparsers(dest="action", required=True)
    build = qsystem_commands.add_parser("build", help="Random system written as JSON")
    _add_algebra(build)
    build.add_argument("--so6", action="store_true", help="D_3 system through the so(6) dictionary")
    build.add_argument("-o", "--output", help="Output path (default: standard output)")
    build.set_defaults(handler=cmd_qsystem_build)
    check = qsystem_commands.add_parser("verify", help="Run suites on a system file")
    check.add_argument("--system", required=True, help="Path to a system JSON file")
    check.add_argument("--suite", default="all", choices=SUITES + ("all",), help="Suite to run (default: all)")
    check.set_defaults(handler=cmd_qsystem_verify)

    aseries = commands.add_parser("aseries", help="A-series checks")
    aseries_commands = aseries.add_subparsers(dest="action", required=True)
    t_check = aseries_commands.add_parser("tcheck", help="Tableau, Wronskian and bilinear T; Baxter, oper, Bethe")
    t_check.add_argument("--rank", type=int, default=2, help="Rank of A_r (default: 2)")
    t_check.add_argument("--twisted", action="store_true", help="Draw a twisted system")
    t_check.add_argument("--system", help="Use an A-series system file instead of a random draw")
    t_check.set_defaults(handler=cmd_aseries_tcheck)

    # --- Spin chains ---
    chain = commands.add_parser("chain", help="Rational spin chains")
    chain_commands = chain.add_subparsers(dest="action", required=True)
    solve = chain_commands.add_parser("solve", help="Solve one magnon sector")
    solve.add_argument("--spec", required=True, help="Path to chain.json")
    solve.add_argument("--magnons", required=True, help="Comma-separated magnon numbers, e.g. 1,0,1")
    solve.set_defaults(handler=cmd_chain_solve)
    census = chain_commands.add_parser("census", help="Solution counts against weight multiplicities")
    census.add_argument("--spec", required=True, help="Path to chain.json")
    census.add_argument("--max-magnons", type=int, default=4, help="Largest total magnon number (default: 4)")
    census.set_defaults(handler=cmd_chain_census)
    oracle = chain_commands.add_parser("oracle", help="Transfer-matrix cross-check")
    oracle.add_argument("--spec", required=True, help="Path to chain.json")
    oracle.add_argument("--compare", action="store_true", help="Match T_{1,1} of every solution to the spectrum")
    oracle.add_argument("--max-magnons", type=int, default=4, help="Largest total magnon number (default: 4)")
    oracle.set_defaults(handler=cmd_chain_oracle)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    handler: Callable = args.handler
    try:
        overrides: Dict[str, int] = {} if args.seed is None else {"seed": args.seed}
        settings = Settings.from_env(**overrides)
        suite = handler(args, settings)
    except USAGE_ERRORS as e:
        console.print(f"[bold red]Error:[/] {e}")
        return 2
    except QFlagError as e:
        console.print(f"[bold red]Failed:[/] {e}")
        return 1
    except (ValueError, OSError) as e:
        console.print(f"[bold red]Error:[/] {e}")
        return 2
    if suite is None:
        return 0
    if args.json:
        print(suite.model_dump_json(indent=2))
    else:
        render_suite(suite, show_details=args.details)
    return 0 if suite.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
