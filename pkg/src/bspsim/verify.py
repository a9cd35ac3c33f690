"""Regression checks of model predictions against the reference dataset.

Two modes:

* analytic -- every reference row that carries a tolerance is predicted
  from first principles (topology + cost parameters, no table lookups)
  and each stored metric must land within its relative tolerance.
* empirical -- the table-backed predictor must reproduce the measured
  rows verbatim; it is the ground-truth interface the analytic model is
  graded against, so it gets an exactness check of its own.

`verify_analytic` / `verify_empirical` return a :class:`VerifyReport`;
`format_report` renders the per-experiment PASS/FAIL lines the CLI
prints.
"""

from dataclasses import dataclass, field

from .errors import UnknownExperimentError
from .experiments import default_bench, predict_metrics
from .golden import load_golden


@dataclass(frozen=True)
class CheckResult:
    """One metric of one experiment, predicted vs. measured."""

    experiment_id: str
    metric: str
    predicted: float
    expected: float
    rel_error: float
    tolerance: float

    @property
    def passed(self):
        return self.rel_error <= self.tolerance


@dataclass
class VerifyReport:
    mode: str
    results: list = field(default_factory=list)      # [CheckResult]
    errors: list = field(default_factory=list)       # [(experiment_id, message)]
    reference_only: list = field(default_factory=list)  # ids without a tolerance

    @property
    def failures(self):
        return [r for r in self.results if not r.passed]

    @property
    def ok(self):
        return not self.failures and not self.errors

    def experiments(self):
        """Results grouped by experiment id, in first-seen order."""
        grouped = {}
        for r in self.results:
            grouped.setdefault(r.experiment_id, []).append(r)
        return grouped


def rel_error(predicted, expected):
    if expected == 0:
        return abs(predicted)
    return abs(predicted - expected) / abs(expected)


def verify_analytic(bench=None, golden=None, pattern=None, tolerance=None):
    """Check analytic predictions against every toleranced reference row.

    `pattern` narrows the run to globbing experiment ids; `tolerance`
    overrides the per-row tolerances when given.
    """
    if bench is None:
        bench = default_bench()
    if golden is None:
        golden = load_golden()
    report = VerifyReport(mode="analytic")
    for row in golden.select(pattern):
        if row.analytic_tol is None:
            report.reference_only.append(row.experiment_id)
            continue
        tol = row.analytic_tol if tolerance is None else tolerance
        try:
            predicted = predict_metrics(bench, row.experiment_id)
        except UnknownExperimentError as exc:
            report.errors.append((row.experiment_id, str(exc)))
            continue
        for metric, expected in row.metrics().items():
            got = predicted[metric]
            report.results.append(CheckResult(
                experiment_id=row.experiment_id, metric=metric,
                predicted=got, expected=expected,
                rel_error=rel_error(got, expected), tolerance=tol))
    return report


def verify_empirical(golden=None, pattern=None):
    """Check that the table-backed predictor reproduces its rows exactly."""
    if golden is None:
        golden = load_golden()
    report = VerifyReport(mode="empirical")
    for row in golden.select(pattern):
        try:
            answered = golden.empirical(row.experiment_id)
        except UnknownExperimentError as exc:
            report.errors.append((row.experiment_id, str(exc)))
            continue
        for metric, expected in row.metrics().items():
            got = answered.get(metric)
            if got is None:
                report.errors.append(
                    (row.experiment_id, f"missing metric {metric}"))
                continue
            report.results.append(CheckResult(
                experiment_id=row.experiment_id, metric=metric,
                predicted=got, expected=expected,
                rel_error=rel_error(got, expected), tolerance=0.0))
    return report


def format_report(report, verbose=False):
    """Human-readable report: one PASS/FAIL line per experiment.

    With `verbose`, passing experiments also list per-metric errors;
    failures always show the offending metrics.
    """
    lines = []
    for experiment_id, results in report.experiments().items():
        bad = [r for r in results if not r.passed]
        if not bad:
            worst = max(results, key=lambda r: r.rel_error)
            lines.append(
                f"PASS {experiment_id} "
                f"({len(results)} metric{'s' if len(results) != 1 else ''}, "
                f"worst rel err {worst.rel_error:.2e})")
            if verbose:
                for r in results:
                    lines.append(
                        f"     {r.metric}: got {r.predicted:.6g} "
                        f"want {r.expected:.6g} "
                        f"(rel {r.rel_error:.2e} <= tol {r.tolerance:.2e})")
        else:
            lines.append(f"FAIL {experiment_id}")
            for r in bad:
                lines.append(
                    f"     {r.metric}: got {r.predicted:.6g} "
                    f"want {r.expected:.6g} "
                    f"(rel {r.rel_error:.2e} > tol {r.tolerance:.2e})")
    for experiment_id, message in report.errors:
        lines.append(f"FAIL {experiment_id} ({message})")
    checked = len(report.experiments())
    failed = len({r.experiment_id for r in report.failures})
    total = checked + len(report.errors)
    summary = (f"{report.mode}: {total} experiments, "
               f"{checked - failed} passed, "
               f"{failed + len(report.errors)} failed")
    if report.reference_only:
        summary += f" ({len(report.reference_only)} reference-only rows skipped)"
    lines.append(summary)
    return "\n".join(lines)
