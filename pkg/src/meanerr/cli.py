"""Command-line front door for the estimator laboratory.

Three subcommands share one source-resolution and rendering pipeline:

``params``
    Resolve a population scenario (named preset or measured dataset) and
    print its eight parameters as a single-row table.
``theory``
    Print the first-order MSE comparison: mean per unit, exp-ratio,
    regression-slope difference, jointly optimal weighted difference, then
    one power-exp row and one optimal weighted power-exp row per
    (alpha, beta) grid pair — twelve rows on the default grid.  Each row
    carries the error-free/measurement-error decomposition and the percent
    relative efficiency against the mean per unit.
``simulate``
    Run the Monte Carlo engine over the same estimator set and print
    empirical bias and MSE next to the first-order theory value with the
    relative gap per row.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 tolerance failure (``simulate --tolerance`` exceeded).  Output is a pure
function of the flag set; the ``ME_LAB_THREADS`` environment variable may
change wall time but never a single output byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from .estimators import (
    EstimatorSpec,
    ExpRatio,
    MeanPerUnit,
    PowerExpRatio,
    WeightedDifference,
    WeightedPowerExpRatio,
)
from .ingest import (
    ColumnMap,
    DatasetError,
    compute_params,
    load_dataset,
    preset,
    preset_names,
)
from .moments import ParameterError, PopulationParams, derive_moments
from .simulate import (
    AllReplicatesSkippedError,
    ConfigError,
    ErrorLaw,
    SimulationConfig,
    run_monte_carlo,
)
from . import theory

__all__ = [
    "EXIT_SUCCESS",
    "EXIT_USAGE",
    "EXIT_DATA",
    "EXIT_TOLERANCE",
    "DEFAULT_GRID",
    "ReportTable",
    "scenario_table",
    "theory_table",
    "simulation_table",
    "render_table",
    "build_parser",
    "main",
]

EXIT_SUCCESS = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TOLERANCE = 3

# Default (alpha, beta) grid for the power-exp families.
DEFAULT_GRID: tuple[tuple[int, float], ...] = (
    (1, 0.0), (0, 1.0), (1, 1.0), (1, -1.0))

_PARAMS_COLUMNS = ("mu_y", "mu_x", "sigma_y2", "sigma_x2",
                   "rho", "sigma_u2", "sigma_v2", "n")
_THEORY_COLUMNS = ("estimator", "alpha", "beta", "mean_weight", "aux_weight",
                   "without_me", "me_contribution", "total", "pre", "note")
_SIMULATE_COLUMNS = ("estimator", "alpha", "beta", "mean_weight",
                     "aux_weight", "empirical_bias", "empirical_mse",
                     "mc_se_mse", "theory_mse", "relative_gap",
                     "replicates_used", "replicates_skipped", "note")

# Markdown rounding policy: 3 decimals for MSE cells, 2 for PRE, 5 for
# weights; everything else at 6 significant digits.  CSV and JSON always
# carry full precision.
_MD_FORMATS = {
    "without_me": "{:.3f}",
    "me_contribution": "{:.3f}",
    "total": "{:.3f}",
    "pre": "{:.2f}",
    "mean_weight": "{:.5f}",
    "aux_weight": "{:.5f}",
    "alpha": "{:g}",
    "beta": "{:g}",
}


class _UsageError(Exception):
    """Bad flag combination or malformed flag value (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures raise instead of exiting.

    argparse exits with status 2 on usage errors; the exit-code contract
    reserves 2 for data errors, so usage problems are funneled through
    ``_UsageError`` and mapped to exit code 1 in ``main``.
    """

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        raise _UsageError(message)


@dataclass(frozen=True)
class ReportTable:
    """One renderable table: a title, ordered columns, and record rows.

    Rows are mappings from column name to value (float, int, str, or None
    for a cell that does not apply to the row).  Invariants maintained by
    the builders: every theory row satisfies total = without_me +
    me_contribution within 1e-9 relative, and the mean-per-unit row's PRE
    is exactly 100.0.
    """

    title: str
    columns: tuple[str, ...]
    rows: tuple[dict, ...]


# --------------------------------------------------------------- table builders

def scenario_table(params: PopulationParams, source: str) -> ReportTable:
    """Single-row table of the eight population parameters."""
    row = {
        "mu_y": params.mu_y,
        "mu_x": params.mu_x,
        "sigma_y2": params.sigma_y2,
        "sigma_x2": params.sigma_x2,
        "rho": params.rho,
        "sigma_u2": params.sigma_u2,
        "sigma_v2": params.sigma_v2,
        "n": params.n,
    }
    return ReportTable(title=f"population parameters ({source})",
                       columns=_PARAMS_COLUMNS, rows=(row,))


def _theory_row(label: str, breakdown, reference: float, *,
                alpha=None, beta=None, mean_weight=None, aux_weight=None,
                note: str = "") -> dict:
    row = {
        "estimator": label,
        "alpha": alpha,
        "beta": beta,
        "mean_weight": mean_weight,
        "aux_weight": aux_weight,
        "without_me": None,
        "me_contribution": None,
        "total": None,
        "pre": None,
        "note": note,
    }
    if breakdown is not None:
        row["without_me"] = breakdown.without_me
        row["me_contribution"] = breakdown.me_contribution
        row["total"] = breakdown.total
        row["pre"] = theory.pre(reference, breakdown.total)
    return row


def theory_table(params: PopulationParams,
                 grid: Sequence[tuple[int, float]] = DEFAULT_GRID,
                 ) -> ReportTable:
    """First-order MSE comparison table in fixed row order.

    Rows: mean per unit, exp-ratio, regression-slope difference, optimal
    weighted difference, then the power-exp rows for every grid pair
    followed by the optimal weighted power-exp rows for every grid pair.
    A singular optimum turns into a note on its own row; the other rows
    are unaffected.
    """
    grid = tuple(grid)
    reference = theory.var_mean_per_unit(params).total
    m = derive_moments(params)
    rows = []

    rows.append(_theory_row("mean_per_unit",
                            theory.var_mean_per_unit(params), reference))
    rows.append(_theory_row("exp_ratio",
                            theory.mse_exp_ratio(params), reference))
    rows.append(_theory_row("regression_diff",
                            theory.mse_regression_diff(params), reference,
                            mean_weight=1.0,
                            aux_weight=theory.regression_slope(m)))
    try:
        opt, breakdown = theory.min_mse_weighted_diff(params)
        rows.append(_theory_row("weighted_diff_optimal", breakdown, reference,
                                mean_weight=opt.first,
                                aux_weight=opt.second))
    except theory.SingularSystemError as exc:
        rows.append(_theory_row("weighted_diff_optimal", None, reference,
                                note=str(exc)))
    for alpha, beta in grid:
        rows.append(_theory_row("power_exp",
                                theory.mse_power_exp(params, alpha, beta),
                                reference, alpha=alpha, beta=beta))
    for alpha, beta in grid:
        try:
            opt, breakdown = theory.min_mse_weighted_power_exp(
                params, alpha, beta)
            rows.append(_theory_row("weighted_power_exp_optimal", breakdown,
                                    reference, alpha=alpha, beta=beta,
                                    mean_weight=opt.first,
                                    aux_weight=opt.second))
        except theory.SingularSystemError as exc:
            rows.append(_theory_row("weighted_power_exp_optimal", None,
                                    reference, alpha=alpha, beta=beta,
                                    note=str(exc)))
    return ReportTable(title=f"first-order mse comparison (n={params.n})",
                       columns=_THEORY_COLUMNS, rows=tuple(rows))


def _estimator_plan(params: PopulationParams,
                    grid: Sequence[tuple[int, float]],
                    ) -> list[tuple[str, Optional[EstimatorSpec], dict, str]]:
    """(label, spec, coefficient cells, note) per table row, in table order.

    A singular optimum yields spec None with the note filled in; optimal
    coefficients are computed from ``params`` as given (callers rescale n
    first when simulating at a different sample size).
    """
    m = derive_moments(params)
    plan: list[tuple[str, Optional[EstimatorSpec], dict, str]] = []
    plan.append(("mean_per_unit", MeanPerUnit(), {}, ""))
    plan.append(("exp_ratio", ExpRatio(), {}, ""))
    slope = theory.regression_slope(m)
    plan.append(("regression_diff", WeightedDifference(1.0, slope),
                 {"mean_weight": 1.0, "aux_weight": slope}, ""))
    try:
        opt, _ = theory.min_mse_weighted_diff(params)
        plan.append(("weighted_diff_optimal",
                     WeightedDifference(opt.first, opt.second),
                     {"mean_weight": opt.first, "aux_weight": opt.second},
                     ""))
    except theory.SingularSystemError as exc:
        plan.append(("weighted_diff_optimal", None, {}, str(exc)))
    for alpha, beta in grid:
        plan.append(("power_exp", PowerExpRatio(float(alpha), float(beta)),
                     {"alpha": alpha, "beta": beta}, ""))
    for alpha, beta in grid:
        cells = {"alpha": alpha, "beta": beta}
        try:
            opt, _ = theory.min_mse_weighted_power_exp(params, alpha, beta)
            spec = WeightedPowerExpRatio(opt.first, opt.second,
                                         float(alpha), float(beta))
            plan.append(("weighted_power_exp_optimal", spec,
                         {**cells, "mean_weight": opt.first,
                          "aux_weight": opt.second}, ""))
        except theory.SingularSystemError as exc:
            plan.append(("weighted_power_exp_optimal", None, cells,
                         str(exc)))
    return plan


def simulation_table(config: SimulationConfig,
                     grid: Sequence[tuple[int, float]] = DEFAULT_GRID,
                     ) -> tuple[ReportTable, float]:
    """Monte Carlo comparison table plus the worst relative gap.

    Optimal coefficients and theory values are both taken at the effective
    sample size, so the comparison is apples-to-apples when ``sample_n``
    overrides ``params.n``.
    """
    effective = config.params
    if config.sample_size != config.params.n:
        effective = dataclasses.replace(config.params, n=config.sample_size)
    plan = _estimator_plan(effective, tuple(grid))
    specs = [spec for _, spec, _, _ in plan if spec is not None]
    results = iter(run_monte_carlo(config, specs))
    rows = []
    worst_gap = 0.0
    for label, spec, cells, note in plan:
        row = {column: None for column in _SIMULATE_COLUMNS}
        row["estimator"] = label
        row["note"] = note
        row.update(cells)
        if spec is not None:
            result = next(results)
            gap = (abs(result.empirical_mse - result.theory_mse)
                   / abs(result.theory_mse)) if result.theory_mse else None
            if gap is not None:
                worst_gap = max(worst_gap, gap)
            row.update({
                "empirical_bias": result.empirical_bias,
                "empirical_mse": result.empirical_mse,
                "mc_se_mse": result.mc_se_mse,
                "theory_mse": result.theory_mse,
                "relative_gap": gap,
                "replicates_used": result.replicates_used,
                "replicates_skipped": result.replicates_skipped,
            })
        rows.append(row)
    title = (f"monte carlo (n={config.sample_size}, "
             f"replicates={config.replicates}, seed={config.seed}, "
             f"law={config.error_law.value})")
    return (ReportTable(title=title, columns=_SIMULATE_COLUMNS,
                        rows=tuple(rows)),
            worst_gap)


# ------------------------------------------------------------------- rendering

def _full_precision(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _render_csv(table: ReportTable) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_full_precision(row[c]) for c in table.columns])
    return buffer.getvalue()


def _render_json(table: ReportTable) -> str:
    payload = {
        "title": table.title,
        "columns": list(table.columns),
        "rows": [{c: row[c] for c in table.columns} for row in table.rows],
    }
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def _markdown_cell(column: str, value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return _MD_FORMATS.get(column, "{:.6g}").format(value)
    return str(value)


def _render_markdown(table: ReportTable) -> str:
    lines = [f"## {table.title}", ""]
    lines.append("| " + " | ".join(table.columns) + " |")
    lines.append("|" + "|".join(" --- " for _ in table.columns) + "|")
    for row in table.rows:
        cells = [_markdown_cell(c, row[c]) for c in table.columns]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


_RENDERERS = {"csv": _render_csv, "json": _render_json, "md": _render_markdown}


def render_table(table: ReportTable, fmt: str) -> str:
    """Render a table as 'csv', 'json', or 'md' text."""
    try:
        renderer = _RENDERERS[fmt]
    except KeyError:
        raise _UsageError(f"unknown format {fmt!r}") from None
    return renderer(table)


def _emit(text: str, out_path: Optional[str]) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


# ------------------------------------------------------------ argument parsing

def _add_source_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--preset", metavar="NAME",
        help=f"named scenario: {', '.join(preset_names())}")
    parser.add_argument(
        "--data", metavar="PATH",
        help="delimited text file with true and observed columns")
    parser.add_argument("--col-Y", dest="col_true_study", default="Y",
                        metavar="NAME", help="true study-variable column")
    parser.add_argument("--col-X", dest="col_true_aux", default="X",
                        metavar="NAME", help="true auxiliary-variable column")
    parser.add_argument("--col-y", dest="col_observed_study", default="y",
                        metavar="NAME", help="observed study-variable column")
    parser.add_argument("--col-x", dest="col_observed_aux", default="x",
                        metavar="NAME",
                        help="observed auxiliary-variable column")
    parser.add_argument("--tab", action="store_true",
                        help="read --data as tab-delimited instead of comma")
    parser.add_argument("--n", dest="sample_n", type=int, metavar="N",
                        help="sample size (defaults to the preset's n, or "
                             "the dataset row count)")
    parser.add_argument("--format", choices=("csv", "json", "md"),
                        default="md", help="output format (default: md)")
    parser.add_argument("--out", metavar="PATH",
                        help="write output to PATH instead of stdout")


def _add_grid_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--grid", action="append", metavar="ALPHA,BETA",
        help="power-exp (alpha, beta) pair; repeatable; alpha must be an "
             "integer in [-3, 3]; default grid: 1,0 0,1 1,1 1,-1")


def build_parser() -> argparse.ArgumentParser:
    """CLI parser: params/theory/simulate with shared source flags."""
    parser = _Parser(
        prog="meanerr",
        description="Finite-population mean estimation under additive "
                    "measurement errors: population parameters, first-order "
                    "MSE theory tables, and Monte Carlo verification.")
    subparsers = parser.add_subparsers(dest="command", required=True,
                                       metavar="{params,theory,simulate}")

    params_cmd = subparsers.add_parser(
        "params", help="print the eight population parameters")
    _add_source_flags(params_cmd)
    params_cmd.set_defaults(handler=_cmd_params)

    theory_cmd = subparsers.add_parser(
        "theory", help="print the first-order MSE comparison table")
    _add_source_flags(theory_cmd)
    _add_grid_flag(theory_cmd)
    theory_cmd.set_defaults(handler=_cmd_theory)

    simulate_cmd = subparsers.add_parser(
        "simulate", help="run the Monte Carlo engine against the theory")
    _add_source_flags(simulate_cmd)
    _add_grid_flag(simulate_cmd)
    simulate_cmd.add_argument("--replicates", type=int, default=10_000,
                              metavar="R",
                              help="Monte Carlo replicates (default: 10000)")
    simulate_cmd.add_argument("--seed", type=int, default=0, metavar="S",
                              help="root RNG seed (default: 0)")
    simulate_cmd.add_argument("--error-law", dest="error_law",
                              choices=tuple(law.value for law in ErrorLaw),
                              default=ErrorLaw.GAUSSIAN.value,
                              help="measurement-error law (default: gaussian)")
    simulate_cmd.add_argument("--error-df", dest="error_df", type=float,
                              metavar="DF",
                              help="Student-t degrees of freedom (> 4; "
                                   "required for --error-law student-t)")
    simulate_cmd.add_argument("--tolerance", type=float, metavar="GAP",
                              help="exit with status 3 if any relative gap "
                                   "between empirical and theory MSE "
                                   "exceeds GAP")
    simulate_cmd.set_defaults(handler=_cmd_simulate)
    return parser


def _parse_grid(raw: Optional[list[str]]) -> tuple[tuple[int, float], ...]:
    if not raw:
        return DEFAULT_GRID
    pairs = []
    for item in raw:
        parts = item.split(",")
        if len(parts) != 2:
            raise _UsageError(f"--grid expects ALPHA,BETA, got {item!r}")
        try:
            alpha = int(parts[0])
            beta = float(parts[1])
        except ValueError:
            raise _UsageError(
                f"--grid expects an integer alpha and a real beta, got "
                f"{item!r}") from None
        if not -3 <= alpha <= 3:
            raise _UsageError(
                f"--grid alpha must be an integer in [-3, 3], got {alpha}")
        if not math.isfinite(beta):
            raise _UsageError(f"--grid beta must be finite, got {parts[1]!r}")
        pairs.append((alpha, beta))
    return tuple(pairs)


def _resolve_params(args) -> tuple[PopulationParams, str]:
    """Resolve the scenario from exactly one of --preset / --data.

    Returns the parameters (with any --n override applied) and a short
    source label for table titles.
    """
    if (args.preset is None) == (args.data is None):
        raise _UsageError("exactly one of --preset or --data is required")
    if args.data is not None:
        columns = ColumnMap(true_study=args.col_true_study,
                            true_aux=args.col_true_aux,
                            observed_study=args.col_observed_study,
                            observed_aux=args.col_observed_aux)
        delimiter = "\t" if args.tab else ","
        dataset = load_dataset(args.data, columns, delimiter=delimiter)
        n = args.sample_n if args.sample_n is not None else len(dataset)
        return compute_params(dataset, n), dataset.name
    params = preset(args.preset)
    if args.sample_n is not None:
        params = dataclasses.replace(params, n=args.sample_n)
    return params, args.preset


# ------------------------------------------------------------------- commands

def _cmd_params(args) -> int:
    params, source = _resolve_params(args)
    _emit(render_table(scenario_table(params, source), args.format), args.out)
    return EXIT_SUCCESS


def _cmd_theory(args) -> int:
    params, _ = _resolve_params(args)
    table = theory_table(params, _parse_grid(args.grid))
    _emit(render_table(table, args.format), args.out)
    return EXIT_SUCCESS


def _cmd_simulate(args) -> int:
    params, _ = _resolve_params(args)
    config = SimulationConfig(params=params,
                              replicates=args.replicates,
                              seed=args.seed,
                              error_law=ErrorLaw(args.error_law),
                              error_df=args.error_df)
    table, worst_gap = simulation_table(config, _parse_grid(args.grid))
    _emit(render_table(table, args.format), args.out)
    if args.tolerance is not None and worst_gap > args.tolerance:
        print(f"tolerance exceeded: worst relative gap "
              f"{worst_gap:.6g} > {args.tolerance:.6g}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_SUCCESS


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DatasetError, ConfigError,
            AllReplicatesSkippedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
