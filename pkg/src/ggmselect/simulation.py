"""Ground-truth generation, Gaussian sampling, and the replicated
family-wise error rate experiment.

Ground-truth precision matrices follow the sparse construction used for the
simulation study: an Erdos-Renyi support with uniform edge magnitudes in
[0.5, 1] and random signs, rescaled row-wise to enforce diagonal dominance
(hence positive definiteness), unit diagonal, and finally diagonal entries
resampled uniformly in [1, 1.5].
"""

from __future__ import annotations

import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    DEFAULT_ZERO_TOL,
    DataMatrix,
    EdgeSet,
    _cov,
    edges_from_precision,
    symmetrize,
)
from .errors import GenerationError, InvalidInputError, NotApplicableError
from .metrics import confusion, jaccard, metrics_from_confusion
from .robsel import RobselConfig, bootstrap_rwp_samples, order_statistic_rank
from .solver import SolverConfig, glasso
from .testing import adjust_pvalues, partial_correlations, unadjusted_pvalues
from .tuning import cv_select, ebic_select, lambda_grid

KNOWN_METHODS = ("robsel", "holm", "bonferroni", "sidak", "cv", "ebic")
_TESTING_METHODS = ("holm", "bonferroni", "sidak")


@dataclass
class GroundTruth:
    """A true precision matrix, its edge set, and its inverse."""

    omega: np.ndarray
    edges: EdgeSet
    sigma: np.ndarray


@dataclass
class ExperimentPlan:
    """The sweep definition: one fixed ground truth, many (n, replicate) cells."""

    d: int
    edge_prob: float
    sample_sizes: list[int]
    replications: int
    alphas: list[float]
    B: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise InvalidInputError(f"d must be >= 2, got {self.d}")
        if not (0.0 < self.edge_prob < 1.0):
            raise InvalidInputError(f"edge_prob must be in (0, 1), got {self.edge_prob}")
        if not self.sample_sizes or any(n < 2 for n in self.sample_sizes):
            raise InvalidInputError("sample sizes must be >= 2")
        if self.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if not self.alphas or any(not (0.0 < a < 1.0) for a in self.alphas):
            raise InvalidInputError("alphas must lie in (0, 1)")
        if self.B < 1:
            raise InvalidInputError("bootstrap count must be >= 1")
        if self.seed < 0:
            raise InvalidInputError("seed must be nonnegative")


def generate_precision(d: int, edge_prob: float, seed: int, max_retries: int = 100) -> GroundTruth:
    """Generate a sparse positive definite precision matrix.

    Steps: (1) Erdos-Renyi support over all pairs with probability
    ``edge_prob``; (2) edge magnitudes uniform in [0.5, 1] with equiprobable
    signs; (3) each row's off-diagonal entries divided by 1.5 times the
    row's off-diagonal absolute sum, the matrix symmetrized by averaging
    with its transpose, and the diagonal set to 1 (strict diagonal dominance,
    hence positive definiteness); (4) diagonal entries resampled uniformly in
    [1, 1.5], with a Cholesky check and up to ``max_retries`` re-draws of the
    diagonal if positive definiteness is ever lost.
    """
    if d < 2:
        raise InvalidInputError(f"d must be >= 2, got {d}")
    if not (0.0 < edge_prob < 1.0):
        raise InvalidInputError(f"edge_prob must be in (0, 1), got {edge_prob}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(d, k=1)
    present = rng.random(rows.size) < edge_prob
    n_edges = int(present.sum())
    magnitudes = rng.uniform(0.5, 1.0, size=n_edges)
    signs = np.where(rng.random(n_edges) < 0.5, 1.0, -1.0)

    omega = np.zeros((d, d))
    omega[rows[present], cols[present]] = signs * magnitudes
    omega = omega + omega.T

    row_sums = np.abs(omega).sum(axis=1)
    scale = np.where(row_sums > 0, 1.5 * row_sums, 1.0)
    omega = omega / scale[:, None]
    omega = symmetrize(omega)
    np.fill_diagonal(omega, 1.0)

    for _ in range(max_retries + 1):
        omega[np.diag_indices(d)] = rng.uniform(1.0, 1.5, size=d)
        try:
            np.linalg.cholesky(omega)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise GenerationError(
            f"could not produce a positive definite matrix after {max_retries} "
            f"diagonal redraws (seed {seed})"
        )

    edges = EdgeSet(
        d, frozenset(zip(rows[present].tolist(), cols[present].tolist()))
    )
    sigma = symmetrize(np.linalg.inv(omega))
    return GroundTruth(omega=omega, edges=edges, sigma=sigma)


def sample_gaussian(truth: GroundTruth, n: int, seed: int) -> DataMatrix:
    """Draw n i.i.d. rows from the zero-mean Gaussian with covariance omega^-1.

    Uses the Cholesky factor of sigma applied to standard normal rows, so a
    fixed seed yields a reproducible stream whose first rows agree across
    different n.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    d = truth.sigma.shape[0]
    factor = np.linalg.cholesky(truth.sigma)
    standard = rng.standard_normal((n, d))
    return DataMatrix(standard @ factor.T)


@dataclass
class ReplicateRecord:
    """One row of the tidy experiment report."""

    method: str
    n: int
    alpha: float | None
    replicate: int
    fwer_indicator: int | None
    tpr: float | None
    fpr: float | None
    mcc: float | None
    jaccard_vs_truth: float | None
    jaccard_robsel_holm: float | None
    lam: float | None
    runtime_seconds: float | None


@dataclass
class CellSummary:
    """Per-(method, n, alpha) means and Monte-Carlo standard errors."""

    method: str
    n: int
    alpha: float | None
    replicates: int
    means: dict = field(default_factory=dict)
    standard_errors: dict = field(default_factory=dict)


REPLICATE_COLUMNS = (
    "method",
    "n",
    "alpha",
    "replicate",
    "fwer_indicator",
    "tpr",
    "fpr",
    "mcc",
    "jaccard_vs_truth",
    "jaccard_robsel_holm",
    "lambda",
    "runtime_seconds",
)

_SUMMARY_METRICS = (
    "fwer",
    "tpr",
    "fpr",
    "mcc",
    "jaccard_vs_truth",
    "jaccard_robsel_holm",
    "lambda",
    "runtime_seconds",
)


@dataclass
class ExperimentReport:
    """Tidy replicate-level records plus per-cell aggregates."""

    plan: ExperimentPlan
    methods: tuple
    records: list

    def summaries(self) -> list[CellSummary]:
        cells: dict[tuple, list[ReplicateRecord]] = {}
        for record in self.records:
            cells.setdefault((record.method, record.n, record.alpha), []).append(record)

        def aggregate(values):
            defined = [v for v in values if v is not None]
            if not defined:
                return None, None
            mean = float(np.mean(defined))
            if len(defined) < 2:
                return mean, None
            se = float(np.std(defined, ddof=1) / math.sqrt(len(defined)))
            return mean, se

        out = []
        for (method, n, alpha), records in sorted(
            cells.items(), key=lambda item: (item[0][0], item[0][1], _alpha_key(item[0][2]))
        ):
            summary = CellSummary(method=method, n=n, alpha=alpha, replicates=len(records))
            pulls = {
                "fwer": [r.fwer_indicator for r in records],
                "tpr": [r.tpr for r in records],
                "fpr": [r.fpr for r in records],
                "mcc": [r.mcc for r in records],
                "jaccard_vs_truth": [r.jaccard_vs_truth for r in records],
                "jaccard_robsel_holm": [r.jaccard_robsel_holm for r in records],
                "lambda": [r.lam for r in records],
                "runtime_seconds": [r.runtime_seconds for r in records],
            }
            for key in _SUMMARY_METRICS:
                mean, se = aggregate(pulls[key])
                summary.means[key] = mean
                summary.standard_errors[key] = se
            out.append(summary)
        return out


def _alpha_key(alpha):
    return (0, 0.0) if alpha is None else (1, alpha)


def _child_seed(*keys) -> int:
    return int(np.random.SeedSequence(list(keys)).generate_state(1, dtype=np.uint64)[0])


def _metric_fields(edges: EdgeSet, truth_edges: EdgeSet) -> dict:
    record = metrics_from_confusion(confusion(edges, truth_edges))
    return {
        "fwer_indicator": record.fwer_indicator,
        "tpr": record.tpr,
        "fpr": record.fpr,
        "mcc": record.mcc,
        "jaccard_vs_truth": record.jaccard,
    }


def _empty_metrics() -> dict:
    return {
        "fwer_indicator": None,
        "tpr": None,
        "fpr": None,
        "mcc": None,
        "jaccard_vs_truth": None,
    }


def _run_replicate(plan, methods, truth, n, replicate, options) -> list:
    """All method cells for one (n, replicate) pair; pure given its seeds."""
    data = sample_gaussian(truth, n, _child_seed(plan.seed, n, replicate, 1))
    A = _cov(data.values)
    record_timings = options["record_timings"]
    solver = options["solver"]
    zero_tol = options["zero_tol"]

    # (method, alpha) -> (edges or None, lambda or None, runtime or None)
    outcomes: dict[tuple, tuple] = {}

    def fail(method, alpha, exc):
        print(
            f"warning: {method} failed at (n={n}, r={replicate}"
            f"{'' if alpha is None else f', alpha={alpha}'}): {exc}",
            file=sys.stderr,
        )

    if "robsel" in methods:
        start = time.perf_counter()
        config = RobselConfig(
            alpha=plan.alphas[0], B=plan.B, seed=_child_seed(plan.seed, n, replicate, 2)
        )
        samples = bootstrap_rwp_samples(data, config)
        bootstrap_time = time.perf_counter() - start
        for alpha in plan.alphas:
            start = time.perf_counter()
            lam = float(samples[order_statistic_rank(plan.B, alpha) - 1])
            try:
                fit = glasso(A, replace(solver, lam=lam))
                edges = edges_from_precision(fit.precision, zero_tol)
            except Exception as exc:
                fail("robsel", alpha, exc)
                continue
            runtime = bootstrap_time / len(plan.alphas) + time.perf_counter() - start
            outcomes[("robsel", alpha)] = (edges, lam, runtime)

    requested_testing = [m for m in _TESTING_METHODS if m in methods]
    if requested_testing:
        start = time.perf_counter()
        try:
            R = partial_correlations(A)
            pvalues = unadjusted_pvalues(R, data.n, data.d)
        except NotApplicableError:
            pvalues = None  # emitted as not-applicable cells
        except Exception as exc:
            for method in requested_testing:
                fail(method, None, exc)
            pvalues = None
        if pvalues is not None:
            pairs = pvalues.pairs()
            shared_time = time.perf_counter() - start
            for method in requested_testing:
                start = time.perf_counter()
                adjusted = adjust_pvalues(pvalues.unadjusted, method)
                method_time = time.perf_counter() - start
                for alpha in plan.alphas:
                    start = time.perf_counter()
                    edges = EdgeSet(
                        data.d,
                        frozenset(pairs[k] for k in np.flatnonzero(adjusted <= alpha)),
                    )
                    runtime = (
                        (shared_time / len(requested_testing) + method_time)
                        / len(plan.alphas)
                        + time.perf_counter()
                        - start
                    )
                    outcomes[(method, alpha)] = (edges, None, runtime)

    if "cv" in methods or "ebic" in methods:
        try:
            grid = lambda_grid(A, options["grid_size"])
        except Exception as exc:
            for method in ("cv", "ebic"):
                if method in methods:
                    fail(method, None, exc)
            grid = None
        if grid is not None and "cv" in methods:
            start = time.perf_counter()
            try:
                tuned = cv_select(
                    data,
                    folds=options["folds"],
                    grid=grid,
                    solver_config=solver,
                    seed=_child_seed(plan.seed, n, replicate, 3),
                )
                fit = glasso(A, replace(solver, lam=tuned.chosen_lambda))
                edges = edges_from_precision(fit.precision, zero_tol)
                outcomes[("cv", None)] = (
                    edges,
                    tuned.chosen_lambda,
                    time.perf_counter() - start,
                )
            except Exception as exc:
                fail("cv", None, exc)
        if grid is not None and "ebic" in methods:
            start = time.perf_counter()
            try:
                tuned = ebic_select(
                    data, grid, gamma=options["gamma"], solver_config=solver, zero_tol=zero_tol
                )
                fit = glasso(A, replace(solver, lam=tuned.chosen_lambda))
                edges = edges_from_precision(fit.precision, zero_tol)
                outcomes[("ebic", None)] = (
                    edges,
                    tuned.chosen_lambda,
                    time.perf_counter() - start,
                )
            except Exception as exc:
                fail("ebic", None, exc)

    records = []
    for method in methods:
        cell_alphas = plan.alphas if method not in ("cv", "ebic") else [None]
        for alpha in cell_alphas:
            edges, lam, runtime = outcomes.get((method, alpha), (None, None, None))
            fields = _metric_fields(edges, truth.edges) if edges is not None else _empty_metrics()
            similarity = None
            if method == "robsel" and edges is not None:
                holm_edges = outcomes.get(("holm", alpha), (None, None, None))[0]
                if holm_edges is not None:
                    similarity = jaccard(edges, holm_edges)
            records.append(
                ReplicateRecord(
                    method=method,
                    n=n,
                    alpha=alpha,
                    replicate=replicate,
                    jaccard_robsel_holm=similarity,
                    lam=lam,
                    runtime_seconds=runtime if record_timings else None,
                    **fields,
                )
            )
    return records


def run_experiment(
    plan: ExperimentPlan,
    methods=("robsel", "holm"),
    solver_config: SolverConfig | None = None,
    zero_tol: float = DEFAULT_ZERO_TOL,
    folds: int = 5,
    gamma: float = 0.5,
    grid_size: int = 10,
    threads: int = 1,
    record_timings: bool = False,
    log=None,
) -> ExperimentReport:
    """Run the replicated sweep and collect the tidy report.

    Per-replicate RNG streams are keyed by (seed, n, replicate), so the
    report does not depend on the parallel schedule. Failures inside a
    single replicate are recorded as not-applicable cells and never abort
    the sweep.
    """
    methods = tuple(methods)
    for method in methods:
        if method not in KNOWN_METHODS:
            raise InvalidInputError(
                f"unknown method {method!r}; expected a subset of {KNOWN_METHODS}"
            )
    if len(set(methods)) != len(methods):
        raise InvalidInputError("duplicate methods requested")

    truth = generate_precision(plan.d, plan.edge_prob, plan.seed)
    options = {
        "solver": solver_config if solver_config is not None else SolverConfig(lam=0.0),
        "zero_tol": zero_tol,
        "folds": folds,
        "gamma": gamma,
        "grid_size": grid_size,
        "record_timings": record_timings,
    }

    tasks = [(n, r) for n in plan.sample_sizes for r in range(1, plan.replications + 1)]

    def one_task(task):
        n, replicate = task
        try:
            records = _run_replicate(plan, methods, truth, n, replicate, options)
        except Exception as exc:  # record the failed cell, keep sweeping
            print(
                f"warning: replicate (n={n}, r={replicate}) failed: {exc}",
                file=sys.stderr,
            )
            records = [
                ReplicateRecord(
                    method=method,
                    n=n,
                    alpha=alpha,
                    replicate=replicate,
                    jaccard_robsel_holm=None,
                    lam=None,
                    runtime_seconds=None,
                    **_empty_metrics(),
                )
                for method in methods
                for alpha in (plan.alphas if method not in ("cv", "ebic") else [None])
            ]
        if log is not None:
            log(f"cell n={n} replicate={replicate}: {len(records)} rows")
        return records

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(one_task, tasks))
    else:
        chunks = [one_task(task) for task in tasks]

    records = [record for chunk in chunks for record in chunk]
    records.sort(
        key=lambda r: (r.method, r.n, _alpha_key(r.alpha), r.replicate)
    )
    return ExperimentReport(plan=plan, methods=methods, records=records)


def write_replicates_csv(report: ExperimentReport, path) -> None:
    """Write the tidy replicate-level report; empty fields mark undefined cells."""
    from .core import atomic_text_writer, format_real

    with atomic_text_writer(path) as handle:
        handle.write(",".join(REPLICATE_COLUMNS) + "\n")
        for r in report.records:
            fwer = "" if r.fwer_indicator is None else str(r.fwer_indicator)
            handle.write(
                ",".join(
                    (
                        r.method,
                        str(r.n),
                        format_real(r.alpha),
                        str(r.replicate),
                        fwer,
                        format_real(r.tpr),
                        format_real(r.fpr),
                        format_real(r.mcc),
                        format_real(r.jaccard_vs_truth),
                        format_real(r.jaccard_robsel_holm),
                        format_real(r.lam),
                        format_real(r.runtime_seconds),
                    )
                )
                + "\n"
            )


def write_summary_csv(report: ExperimentReport, path) -> None:
    """Write per-cell means and Monte-Carlo standard errors."""
    from .core import atomic_text_writer, format_real

    header = ["method", "n", "alpha", "replicates"]
    for key in _SUMMARY_METRICS:
        header.extend((key, f"{key}_se"))
    with atomic_text_writer(path) as handle:
        handle.write(",".join(header) + "\n")
        for cell in report.summaries():
            row = [cell.method, str(cell.n), format_real(cell.alpha), str(cell.replicates)]
            for key in _SUMMARY_METRICS:
                row.append(format_real(cell.means[key]))
                row.append(format_real(cell.standard_errors[key]))
            handle.write(",".join(row) + "\n")


_PLAN_SCHEMA = {
    "d": int,
    "edge_prob": float,
    "sample_sizes": "int_list",
    "replications": int,
    "alphas": "float_list",
    "bootstrap": int,
    "seed": int,
    "methods": "str_list",
    "penalize_diagonal": "bool",
    "kkt_tol": float,
    "max_sweeps": int,
    "zero_tol": float,
    "folds": int,
    "gamma": float,
    "grid_size": int,
}

_PLAN_DEFAULTS = {
    "d": 50,
    "edge_prob": 0.02,
    "sample_sizes": [200, 800, 3200],
    "replications": 100,
    "alphas": [0.05, 0.1],
    "bootstrap": 200,
    "seed": 0,
    "methods": ["robsel", "holm"],
    "penalize_diagonal": True,
    "kkt_tol": 1e-6,
    "max_sweeps": 500,
    "zero_tol": DEFAULT_ZERO_TOL,
    "folds": 5,
    "gamma": 0.5,
    "grid_size": 10,
}


def _parse_plan_value(key, raw):
    kind = _PLAN_SCHEMA[key]
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        items = [tok.strip() for tok in raw.split(",") if tok.strip()]
        if kind == "int_list":
            return [int(tok) for tok in items]
        if kind == "float_list":
            return [float(tok) for tok in items]
        return items
    except ValueError:
        raise InvalidInputError(f"invalid value for {key!r}: {raw!r}") from None


def load_experiment_config(path):
    """Parse a 'key = value' experiment plan file.

    Lines starting with '#' and blank lines are ignored; lists are
    comma-separated. Returns (ExperimentPlan, methods, options) where
    ``options`` holds the solver and tuning knobs for ``run_experiment``.
    """
    settings = dict(_PLAN_DEFAULTS)
    with open(path, encoding="utf-8") as handle:
        for ln, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise InvalidInputError(f"{path}: line {ln} is not 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _PLAN_SCHEMA:
                raise InvalidInputError(f"{path}: unknown key {key!r} on line {ln}")
            settings[key] = _parse_plan_value(key, raw)
    plan = ExperimentPlan(
        d=settings["d"],
        edge_prob=settings["edge_prob"],
        sample_sizes=settings["sample_sizes"],
        replications=settings["replications"],
        alphas=settings["alphas"],
        B=settings["bootstrap"],
        seed=settings["seed"],
    )
    methods = tuple(settings["methods"])
    options = {
        "solver_config": SolverConfig(
            lam=0.0,
            penalize_diagonal=settings["penalize_diagonal"],
            kkt_tol=settings["kkt_tol"],
            max_sweeps=settings["max_sweeps"],
        ),
        "zero_tol": settings["zero_tol"],
        "folds": settings["folds"],
        "gamma": settings["gamma"],
        "grid_size": settings["grid_size"],
    }
    return plan, methods, options
