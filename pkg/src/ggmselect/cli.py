"""Command-line interface: data ingestion, method dispatch, experiment
execution, and result emission.

All subcommands are deterministic given --seed, independent of --threads,
and write output files atomically (write-then-rename). Real numbers are
printed with 12 significant digits so reruns are diff-stable.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .core import (
    DEFAULT_ZERO_TOL,
    DataMatrix,
    EdgeSet,
    atomic_text_writer,
    empirical_covariance,
    edges_from_precision,
    format_real,
    load_data_csv,
)
from .errors import GgmSelectError, InvalidInputError
from .metrics import (
    edges_from_names,
    load_interaction_pairs,
    validated_edge_report,
)
from .robsel import RobselConfig, robsel_lambda
from .simulation import (
    generate_precision,
    load_experiment_config,
    run_experiment,
    sample_gaussian,
    write_replicates_csv,
    write_summary_csv,
)
from .solver import SolverConfig, glasso
from .testing import testing_select
from .tuning import cv_select, ebic_select, lambda_grid

USAGE_ERROR = 2
FAILURE = 1

THREADS_ENV_VAR = "GGMSELECT_THREADS"


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _write_matrix_csv(path, matrix, names) -> None:
    with atomic_text_writer(path) as handle:
        handle.write(",".join(names) + "\n")
        for row in np.asarray(matrix):
            handle.write(",".join("" if np.isnan(v) else format_real(v) for v in row) + "\n")


def _write_edges_csv(path, edges: EdgeSet, names, precision=None) -> None:
    """Three-column edge list; the value column is empty for testing methods."""
    with atomic_text_writer(path) as handle:
        handle.write("node_i,node_j,precision_value\n")
        for i, j in edges:
            value = "" if precision is None else format_real(precision[i, j])
            handle.write(f"{names[i]},{names[j]},{value}\n")


def _write_data_csv(path, data: DataMatrix) -> None:
    names = data.names()
    with atomic_text_writer(path) as handle:
        handle.write(",".join(names) + "\n")
        for row in data.values:
            handle.write(",".join(format_real(v) for v in row) + "\n")


def _load_input(args) -> DataMatrix:
    data = load_data_csv(args.input)
    if getattr(args, "standardize", False):
        data = data.standardized()
    return data


def _solver_config(args, lam: float) -> SolverConfig:
    return SolverConfig(
        lam=lam,
        penalize_diagonal=args.penalize_diagonal,
        kkt_tol=args.kkt_tol,
        max_sweeps=args.max_sweeps,
    )


def _print_fit_summary(result, edges) -> None:
    print(f"objective = {format_real(result.objective)}")
    print(f"kkt_residual = {format_real(result.kkt_residual)}")
    print(f"sweeps_used = {result.sweeps_used}")
    print(f"converged = {str(result.converged).lower()}")
    print(f"edges = {len(edges)}")


def _cmd_fit(args) -> int:
    data = _load_input(args)
    A = empirical_covariance(data, center=not args.no_center)
    result = glasso(A, _solver_config(args, args.lam))
    edges = edges_from_precision(result.precision, args.zero_tol)
    print(f"lambda = {format_real(args.lam)}")
    _print_fit_summary(result, edges)
    if args.output_prefix:
        names = data.names()
        _write_matrix_csv(f"{args.output_prefix}.precision.csv", result.precision, names)
        _write_edges_csv(f"{args.output_prefix}.edges.csv", edges, names, result.precision)
    return 0


def _cmd_robsel(args) -> int:
    data = _load_input(args)
    config = RobselConfig(
        alpha=args.alpha,
        B=args.bootstrap,
        seed=args.seed,
        bootstrap_centering=args.bootstrap_centering,
    )
    selection = robsel_lambda(
        data, config, center=not args.no_center, threads=args.threads
    )
    print(f"alpha = {format_real(args.alpha)}")
    print(f"lambda = {format_real(selection.lam)}")
    if args.output_prefix:
        with atomic_text_writer(f"{args.output_prefix}.lambda.csv") as handle:
            handle.write("alpha,lambda,order_index,bootstrap\n")
            handle.write(
                f"{format_real(args.alpha)},{format_real(selection.lam)},"
                f"{selection.order_index},{args.bootstrap}\n"
            )
        if not args.no_fit:
            A = empirical_covariance(data, center=not args.no_center)
            result = glasso(A, _solver_config(args, selection.lam))
            edges = edges_from_precision(result.precision, args.zero_tol)
            _print_fit_summary(result, edges)
            names = data.names()
            _write_matrix_csv(
                f"{args.output_prefix}.precision.csv", result.precision, names
            )
            _write_edges_csv(
                f"{args.output_prefix}.edges.csv", edges, names, result.precision
            )
    return 0


def _cmd_test(args) -> int:
    data = _load_input(args)
    result = testing_select(
        data, alpha=args.alpha, method=args.method, center=not args.no_center
    )
    print(f"alpha = {format_real(args.alpha)}")
    print(f"method = {args.method}")
    print(f"edges = {len(result.edges)}")
    if args.output_prefix:
        names = data.names()
        pmatrix = result.diagnostics["pvalues"]
        _write_matrix_csv(
            f"{args.output_prefix}.pvalues.csv", pmatrix.as_matrix("adjusted"), names
        )
        _write_edges_csv(f"{args.output_prefix}.edges.csv", result.edges, names)
    return 0


def _cmd_tune(args) -> int:
    data = _load_input(args)
    A = empirical_covariance(data, center=not args.no_center)
    grid = lambda_grid(A, args.grid_size)
    base = _solver_config(args, grid.s_max)
    if args.method == "cv":
        tuned = cv_select(
            data,
            folds=args.folds,
            grid=grid,
            solver_config=base,
            seed=args.seed,
            center=not args.no_center,
            threads=args.threads,
        )
    else:
        tuned = ebic_select(
            data,
            grid,
            gamma=args.gamma,
            solver_config=base,
            zero_tol=args.zero_tol,
            center=not args.no_center,
        )
    print(f"method = {args.method}")
    print(f"chosen_lambda = {format_real(tuned.chosen_lambda)}")
    if args.output_prefix:
        with atomic_text_writer(f"{args.output_prefix}.scores.csv") as handle:
            handle.write("lambda,score\n")
            for lam, score in tuned.scores:
                handle.write(f"{format_real(lam)},{format_real(score)}\n")
        with atomic_text_writer(f"{args.output_prefix}.lambda.csv") as handle:
            handle.write("method,chosen_lambda\n")
            handle.write(f"{args.method},{format_real(tuned.chosen_lambda)}\n")
    return 0


def _cmd_simulate(args) -> int:
    truth = generate_precision(args.d, args.edge_prob, args.seed)
    data = sample_gaussian(truth, args.n, args.seed)
    print(f"true_edges = {len(truth.edges)}")
    if args.output_prefix:
        names = data.names()
        _write_matrix_csv(f"{args.output_prefix}.omega.csv", truth.omega, names)
        _write_data_csv(f"{args.output_prefix}.data.csv", data)
    return 0


def _cmd_experiment(args) -> int:
    plan, methods, options = load_experiment_config(args.config)
    log = (lambda line: print(line, file=sys.stderr)) if args.verbose else None
    report = run_experiment(
        plan,
        methods=methods,
        threads=args.threads,
        record_timings=args.timings,
        log=log,
        **options,
    )
    write_replicates_csv(report, f"{args.output_prefix}.replicates.csv")
    write_summary_csv(report, f"{args.output_prefix}.summary.csv")
    print(f"replicate_rows = {len(report.records)}")
    return 0


def _cmd_evaluate(args) -> int:
    estimated_pairs = [
        (a, b) for a, b, *_ in _read_edge_list(args.edges)
    ]
    reference_pairs = load_interaction_pairs(args.reference)
    if args.data:
        universe = load_data_csv(args.data).names()
    else:
        universe = sorted(
            {name for pair in estimated_pairs for name in pair}
            | {name for pair in reference_pairs for name in pair}
        )
        if len(universe) < 2:
            raise InvalidInputError("fewer than two distinct node names found")
    estimated = edges_from_names(estimated_pairs, universe)
    reference = edges_from_names(reference_pairs, universe)
    report = validated_edge_report(estimated, reference)
    print(f"estimated_edges = {report.estimated_edges}")
    print(f"validated_edges = {report.validated_edges}")
    print(f"proportion = {format_real(report.proportion)}")
    if args.output_prefix:
        with atomic_text_writer(f"{args.output_prefix}.validation.csv") as handle:
            handle.write("estimated_edges,validated_edges,proportion\n")
            handle.write(
                f"{report.estimated_edges},{report.validated_edges},"
                f"{format_real(report.proportion)}\n"
            )
    return 0


def _read_edge_list(path):
    """Rows of an edge-list CSV written by this tool (header skipped)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for r, row in enumerate(csv.reader(handle), start=1):
            if not row:
                continue
            if r == 1 and row[0] == "node_i":
                continue
            if len(row) < 2:
                raise InvalidInputError(f"{path}: row {r} has fewer than 2 fields")
            rows.append(tuple(tok.strip() for tok in row))
    return rows


def _add_common_io(parser, needs_input=True):
    if needs_input:
        parser.add_argument("--input", "-i", required=True, help="observation CSV")
        parser.add_argument(
            "--standardize",
            action="store_true",
            help="scale each column to unit standard deviation before analysis",
        )
        parser.add_argument(
            "--no-center",
            action="store_true",
            help="skip mean-centering in covariance computation",
        )
        parser.add_argument(
            "--output-prefix",
            "-o",
            default=None,
            help="prefix for output files (default: the input path without its extension)",
        )
    else:
        parser.add_argument(
            "--output-prefix", "-o", default=None, help="prefix for output files"
        )


def _add_solver_options(parser):
    parser.add_argument(
        "--penalize-diagonal",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="include the diagonal in the l1 penalty (default: on)",
    )
    parser.add_argument("--kkt-tol", type=float, default=1e-6)
    parser.add_argument("--max-sweeps", type=int, default=500)
    parser.add_argument(
        "--zero-tol",
        type=float,
        default=DEFAULT_ZERO_TOL,
        help="absolute threshold for edge extraction",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ggmselect",
        description=(
            "Gaussian graphical model selection: graphical lasso with "
            "bootstrap-selected regularization, testing and information-"
            "criterion baselines, and a simulation harness."
        ),
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"parallel task cap (default: ${THREADS_ENV_VAR} or 1); results "
        "do not depend on this value",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit", help="graphical lasso at an explicit penalty")
    _add_common_io(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_solver_options(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("robsel", help="bootstrap-select the penalty, then fit")
    _add_common_io(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--bootstrap", type=int, default=200, help="bootstrap replicates B")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--bootstrap-centering",
        choices=("replicate", "original"),
        default="replicate",
        help="center each bootstrap covariance at the replicate mean or the "
        "full-sample mean",
    )
    p.add_argument(
        "--no-fit",
        action="store_true",
        help="only select the penalty; skip the graphical lasso fit",
    )
    _add_solver_options(p)
    p.set_defaults(handler=_cmd_robsel)

    p = sub.add_parser("test", help="partial-correlation testing selection")
    _add_common_io(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument(
        "--method", choices=("holm", "bonferroni", "sidak"), default="holm"
    )
    p.set_defaults(handler=_cmd_test)

    p = sub.add_parser("tune", help="cross-validated or EBIC penalty selection")
    _add_common_io(p)
    p.add_argument("--method", choices=("cv", "ebic"), required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--grid-size", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_solver_options(p)
    p.set_defaults(handler=_cmd_tune)

    p = sub.add_parser("simulate", help="generate a ground truth and a Gaussian sample")
    p.add_argument("--output-prefix", "-o", required=True, help="prefix for output files")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--edge-prob", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a replicated sweep from a plan file")
    p.add_argument("--config", required=True, help="experiment plan (key = value)")
    p.add_argument("--output-prefix", "-o", required=True)
    p.add_argument(
        "--timings",
        action="store_true",
        help="record wall-clock runtimes (makes the report non-reproducible)",
    )
    p.add_argument("--verbose", action="store_true", help="log one line per cell")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("evaluate", help="count estimated edges found in a reference list")
    p.add_argument("--edges", required=True, help="edge-list CSV (node_i,node_j,...)")
    p.add_argument("--reference", required=True, help="two-column interaction CSV")
    p.add_argument(
        "--data",
        default=None,
        help="observation CSV supplying the variable universe; unknown names "
        "then raise an error instead of extending the universe",
    )
    p.add_argument("--output-prefix", "-o", default=None)
    p.set_defaults(handler=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is None:
        args.threads = _default_threads()
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if getattr(args, "output_prefix", None) is None and hasattr(args, "input"):
        stem = os.path.splitext(str(args.input))[0]
        args.output_prefix = stem if stem else f"{args.input}.out"
    try:
        return args.handler(args)
    except InvalidInputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except GgmSelectError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAILURE
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
