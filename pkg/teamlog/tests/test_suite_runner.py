import pytest

from src.config.suite_config import DEFAULT_SUITES
from src.teamlog.properties import EXHAUSTIVE
from src.teamlog.suite_runner import SuiteReport, SuiteRunner, run_suite


@pytest.fixture
def runner(quick_budget):
    return SuiteRunner(quick_budget)


@pytest.fixture
def smoke_scale(monkeypatch):
    monkeypatch.setenv("TEAMLOG_SUITE_SCALE", "0.05")


def test_example_suite(runner):
    report = runner.run("example")
    assert report.passed, report.failures
    assert report.cases == 3
    assert report.details["gamma"]["size"] == 2
    assert report.details["gamma_with_constancy"] == {"satisfiable": False}
    assert report.details["constant_grounding"]["holds"] is False


def test_report_records_seed_and_budget(runner, quick_budget):
    data = runner.run("example", seed=41).to_dict()
    assert data["seed"] == 41
    assert data["budget"] == quick_budget.to_dict()
    assert data["coverage"] == EXHAUSTIVE


def test_unknown_suite(runner):
    with pytest.raises(ValueError):
        runner.run("everything")


def test_failures_are_capped():
    report = SuiteReport(suite="demo", seed=0, budget={})
    for number in range(10):
        report.fail({"case": number})
    assert not report.passed
    assert len(report.failures) == 5


@pytest.mark.parametrize("name", ["merge", "ultraproduct", "substitution"])
def test_quick_suites_pass_at_smoke_scale(runner, smoke_scale, name):
    report = runner.run(name)
    assert report.passed, report.failures
    assert report.cases > 0


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(DEFAULT_SUITES))
def test_every_suite_passes_at_smoke_scale(quick_budget, smoke_scale, name):
    report = run_suite(name, budget=quick_budget)
    assert report.passed, report.failures
