"""Shared fixtures: small structures, teams and a quick budget."""

import os

import pytest

from src.config.budget_config import get_budget_config
from src.teamlog.core_model import Signature, Structure, Team


@pytest.fixture
def quick_budget():
    return get_budget_config("quick")


@pytest.fixture
def pr_signature():
    return Signature.of({"P": 1, "R": 2})


@pytest.fixture
def two_element(pr_signature):
    """M with domain {0, 1}, P = {0}, R = {(0, 1), (1, 1)}."""
    return Structure.build(pr_signature, 2, {"P": [(0,)], "R": [(0, 1), (1, 1)]})


@pytest.fixture
def three_element(pr_signature):
    """M with domain {0, 1, 2}, P = {0, 2}, R the successor relation mod 3."""
    return Structure.build(pr_signature, 3, {"P": [(0,), (2,)], "R": [(0, 1), (1, 2), (2, 0)]})


@pytest.fixture
def lab_structure():
    """P/1, R/2, f/1, c/0 on {0, 1, 2} with f(a) = a + 1 mod 3 and c = 0."""
    signature = Signature.of({"P": 1, "R": 2}, {"f": 1, "c": 0})
    return Structure.build(
        signature,
        3,
        {"P": [(1,)], "R": [(0, 0), (1, 2)]},
        {"f": {0: 1, 1: 2, 2: 0}, "c": 0},
    )


@pytest.fixture
def xy_team():
    return Team(("x", "y"), ((0, 0), (0, 1), (1, 1)))


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in [name for name in os.environ if name.startswith("TEAMLOG_")]:
        monkeypatch.delenv(name, raising=False)
