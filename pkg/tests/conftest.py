import pytest

from bspsim.experiments import default_bench
from bspsim.golden import load_golden
from bspsim.verify import verify_analytic


@pytest.fixture(scope="session")
def bench():
    # One shared model instance: several experiments simulate large message
    # sets and memoize on the bench, so the suite must not rebuild it.
    return default_bench()


@pytest.fixture(scope="session")
def analytic_report(bench, golden):
    # The full analytic sweep simulates every toleranced experiment once
    # (~20 s); everything downstream reads from this single report.
    return verify_analytic(bench=bench, golden=golden)


@pytest.fixture(scope="session")
def golden():
    return load_golden()


@pytest.fixture(scope="session")
def topo(bench):
    return bench.topo


@pytest.fixture(scope="session")
def params(bench):
    return bench.params
