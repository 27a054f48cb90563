import pytest

from src.teamlog.errors import FragmentError, PreconditionError
from src.teamlog.formula_parser import parse
from src.teamlog.properties import (
    EXHAUSTIVE,
    RANDOMIZED,
    check_downward,
    check_empty_team,
    check_flatness,
    check_flatness_decomposition,
    check_locality,
    check_union_closure,
)


def test_dependence_is_downward_closed(two_element, quick_budget):
    verdict = check_downward(two_element, parse("dep(x ; y)"), ["x", "y"], quick_budget)
    assert verdict.holds
    assert verdict.coverage == EXHAUSTIVE
    assert verdict.counterexample is None


def test_inclusion_is_not_downward_closed(two_element, quick_budget):
    verdict = check_downward(two_element, parse("inc(x ; y)"), ["x", "y"], quick_budget)
    assert not verdict.holds
    counterexample = verdict.counterexample
    assert counterexample.verdicts == (True, False)
    assert set(counterexample.teams[1].rows) < set(counterexample.teams[0].rows)
    assert counterexample.reverify(quick_budget)


def test_inclusion_is_union_closed(two_element, quick_budget):
    assert check_union_closure(two_element, parse("A z (inc(x ; z) v P(x))"), ["x"], quick_budget).holds


def test_constancy_is_not_union_closed(two_element, quick_budget):
    verdict = check_union_closure(two_element, parse("dep( ; x)"), ["x"], quick_budget)
    assert not verdict.holds
    first, second, union = verdict.counterexample.teams
    assert set(first.rows) | set(second.rows) == set(union.rows)
    assert verdict.counterexample.verdicts == (True, True, False)
    assert verdict.counterexample.reverify(quick_budget)


def test_first_order_formulas_are_flat(three_element, quick_budget):
    assert check_flatness(three_element, parse("P(x) v E y R(x, y)"), ["x"], quick_budget).holds
    verdict = check_flatness(three_element, parse("dep( ; x)"), ["x"], quick_budget)
    assert not verdict.holds
    assert verdict.counterexample.reverify(quick_budget)


def test_lax_formulas_are_local(two_element, quick_budget):
    assert check_locality(two_element, parse("E y (dep(x ; y) & inc(x ; y))"), ["x", "u"], quick_budget).holds


def test_strict_split_breaks_locality(two_element, quick_budget):
    formula = parse("(inc(y ; x) & P(y)) vs (inc(x ; y) & P(x))")
    verdict = check_locality(two_element, formula, ["w", "x", "y"], quick_budget)
    assert not verdict.holds
    wide, narrow = verdict.counterexample.teams
    assert wide.variables == ("w", "x", "y")
    assert narrow.variables == ("x", "y")
    assert verdict.counterexample.verdicts[0] != verdict.counterexample.verdicts[1]


def test_locality_needs_extra_variables(two_element):
    with pytest.raises(PreconditionError):
        check_locality(two_element, parse("dep(x ; y)"), ["x", "y"])


def test_free_variables_must_be_in_the_domain(two_element):
    with pytest.raises(PreconditionError):
        check_downward(two_element, parse("dep(x ; y)"), ["x"])


def test_empty_team_property(two_element):
    assert check_empty_team(two_element, parse("inc(x ; y) & dep( ; x)")).holds
    with pytest.raises(FragmentError):
        check_empty_team(two_element, parse("~ P(x)"))
    verdict = check_empty_team(two_element, parse("~ P(x)"), force=True)
    assert not verdict.holds
    assert verdict.counterexample.teams[0].is_empty


def test_large_team_spaces_are_sampled_with_recorded_seed(three_element, quick_budget):
    verdict = check_downward(three_element, parse("dep(x ; y)"), ["w", "x", "y"], quick_budget, seed=7, trials=30)
    assert verdict.holds
    assert verdict.coverage == RANDOMIZED
    data = verdict.to_dict()
    assert data["seed"] == 7
    assert data["trials"] == 30


def test_flatness_decomposition_is_consistent(two_element, quick_budget):
    for text in ("P(x) v R(x, y)", "dep(x ; y)", "inc(x ; y)", "excl(x ; y)"):
        decomposition = check_flatness_decomposition(two_element, parse(text), ["x", "y"], quick_budget)
        assert decomposition.consistent, text
    assert check_flatness_decomposition(two_element, parse("P(x) v R(x, y)"), ["x", "y"], quick_budget).flatness.holds
