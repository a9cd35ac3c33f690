"""Full regression sweep: the analytic model against every toleranced
reference row, family by family, plus the exactness check of the
table-backed predictor."""

import pytest

from bspsim.golden import FAMILIES
from bspsim.verify import format_report, verify_analytic, verify_empirical


def _family_failures(report, golden, family):
    ids = {r.experiment_id for r in golden.by_family[family]}
    return [c for c in report.results
            if c.experiment_id in ids and not c.passed]


@pytest.mark.parametrize("family", FAMILIES)
def test_analytic_family_within_tolerance(analytic_report, golden, family):
    fails = _family_failures(analytic_report, golden, family)
    detail = "\n".join(
        f"{c.experiment_id}/{c.metric}: got {c.predicted:.6g} "
        f"want {c.expected:.6g} (rel {c.rel_error:.3e} > {c.tolerance:.1e})"
        for c in fails)
    assert not fails, f"{family}:\n{detail}"


def test_analytic_sweep_is_complete(analytic_report, golden):
    assert analytic_report.errors == []
    claimed = {r.experiment_id for r in golden.rows
               if r.analytic_tol is not None}
    assert set(analytic_report.experiments()) == claimed
    assert len(analytic_report.reference_only) == 108
    # every stored metric of every claimed row produced one check
    want = sum(len(r.metrics()) for r in golden.rows
               if r.analytic_tol is not None)
    assert len(analytic_report.results) == want


def test_empirical_rows_reproduce_exactly(golden):
    report = verify_empirical(golden=golden)
    assert report.ok
    assert all(c.rel_error == 0.0 for c in report.results)
    assert len(report.results) == sum(len(r.metrics()) for r in golden.rows)


def test_pattern_narrowing(bench, golden):
    report = verify_analytic(bench=bench, golden=golden,
                             pattern="p2p-latency-noload-*")
    assert set(report.experiments()) == {
        "p2p-latency-noload-a", "p2p-latency-noload-b",
        "p2p-latency-noload-c", "p2p-latency-noload-d"}
    assert report.ok
    empty = verify_analytic(bench=bench, golden=golden, pattern="nothing-*")
    assert empty.ok and not empty.results


def test_tolerance_override(bench, golden):
    # the idle-path latencies are modelled exactly, so even a zero
    # tolerance passes; a loaded row carries a small residual that an
    # absurdly tight override must surface
    exact = verify_analytic(bench=bench, golden=golden,
                            pattern="p2p-latency-noload-*", tolerance=0.0)
    assert exact.ok
    tight = verify_analytic(bench=bench, golden=golden,
                            pattern="p2p-latency-load-*", tolerance=1e-15)
    assert not tight.ok
    loose = verify_analytic(bench=bench, golden=golden,
                            pattern="p2p-latency-load-*", tolerance=0.5)
    assert loose.ok


def test_format_report_lines(bench, golden):
    report = verify_analytic(bench=bench, golden=golden,
                             pattern="p2p-latency-noload-*")
    text = format_report(report)
    assert text.count("PASS") == 4
    assert "analytic: 4 experiments, 4 passed, 0 failed" in text
    verbose = format_report(report, verbose=True)
    assert "latency_ns" in verbose and "tol" in verbose

    failing = verify_analytic(bench=bench, golden=golden,
                              pattern="p2p-latency-load-a", tolerance=1e-15)
    text = format_report(failing)
    assert "FAIL p2p-latency-load-a" in text
    assert "0 passed, 1 failed" in text
