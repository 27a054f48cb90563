import dataclasses

import pytest

from src.teamlog.compactness import (
    CoherenceSystem,
    GammaSpec,
    build_delta_gamma,
    check_intuition,
    constant_grounding,
    expand_model,
    formula_relation,
    merge_teams,
    projection_relation,
    system_from_expansion,
)
from src.teamlog.core_model import Team, restrict
from src.teamlog.errors import PreconditionError, TeamError
from src.teamlog.formula_parser import parse_many
from src.teamlog.suite_runner import EXAMPLE_GAMMA, INCOMPLETE_SYSTEM

XZ = Team(("x", "z"), ((0, 0), (1, 1)))


def gamma_of(*texts, variables=()):
    return GammaSpec(tuple(parse_many(texts)), variables)


def test_variables_default_to_sorted_free_variables():
    gamma = gamma_of("dep(z ; x)", "P(y)")
    assert gamma.variables == ("x", "y", "z")
    assert gamma.index_sets() == [(0, 2), (1,)]
    assert gamma.family()[0] == ()
    assert len(gamma.family()) == 8


def test_enumeration_must_cover_free_variables():
    with pytest.raises(PreconditionError):
        gamma_of("dep(x ; y)", variables=("x",))
    with pytest.raises(PreconditionError):
        gamma_of("P(x)", variables=("x", "x"))


def test_relation_names():
    assert formula_relation(3) == "Rphi3"
    assert projection_relation((0, 2)) == "S_0_2"
    assert projection_relation(()) == "S_"


def test_delta_gamma_schema_counts():
    delta = build_delta_gamma(gamma_of("dep(x ; y)", "P(x)"))
    assert len(delta.by_schema(1)) == 2
    assert len(delta.by_schema(2)) == 2
    # pairs I ⊆ J over the four subsets of {0, 1}
    assert len(delta.by_schema(3)) == 9
    assert delta.signature.relation_arity("S_0_1") == 2
    assert delta.signature.relation_arity("Rphi1") == 1
    assert len(delta.to_dict()["sentences"]) == 13


def test_expansion_satisfies_the_intuition_conditions(two_element):
    gamma = gamma_of("A y (inc(y ; x))", "dep(x ; z)")
    expanded = expand_model(two_element, XZ, gamma)
    check = check_intuition(expanded, gamma)
    assert check.consistent
    assert check.models_delta and check.cond1 and check.cond2 and check.cond3
    assert expanded.relations["Rphi1"] == frozenset({(0, 0), (1, 1)})


def test_tampered_expansion_is_caught(two_element):
    gamma = gamma_of("P(x)")
    expanded = expand_model(two_element, Team(("x",), ((0,),)), gamma)
    relations = dict(expanded.relations, S_0=frozenset({(0,), (1,)}))
    tampered = dataclasses.replace(expanded, relations=relations)
    check = check_intuition(tampered, gamma)
    assert not check.cond2
    assert not check.models_delta


def test_expansion_preconditions(two_element):
    gamma = gamma_of("P(x)")
    with pytest.raises(PreconditionError):
        expand_model(two_element, Team.empty(("x",)), gamma)
    with pytest.raises(PreconditionError):
        expand_model(two_element, Team(("x",), ((1,),)), gamma)
    with pytest.raises(TeamError):
        expand_model(two_element, Team(("y",), ((0,),)), gamma)


def test_merge_recovers_the_team(two_element):
    gamma = gamma_of("A y (inc(y ; x))", "dep(x ; z)")
    expanded = expand_model(two_element, XZ, gamma, crosscheck_formulas=False)
    result = merge_teams(system_from_expansion(expanded, gamma))
    assert result.verified
    assert result.team == restrict(XZ, gamma.variables)


def test_pairwise_coherent_tables_may_not_merge():
    result = merge_teams(INCOMPLETE_SYSTEM)
    assert not result.verified
    assert result.team is None
    assert result.to_dict()["failure"] is not None


def test_two_variable_slice_of_the_incomplete_system_merges():
    tables = {indices: rows for indices, rows in INCOMPLETE_SYSTEM.tables.items() if set(indices) <= {0, 1}}
    result = merge_teams(CoherenceSystem(("x0", "x1"), 2, tables))
    assert result.verified
    assert result.team.rows == ((0, 0), (1, 1))


def test_coherence_system_validates_rows():
    with pytest.raises(TeamError):
        CoherenceSystem(("x",), 2, {(0,): [(2,)]})
    with pytest.raises(PreconditionError):
        CoherenceSystem(("x",), 2, {(1,): [(0,)]})


def test_grounding_holds_for_downward_closed_sets(two_element):
    gamma = gamma_of("dep( ; x) & P(x)", "E y (R(x, y))")
    result = constant_grounding(gamma, two_element, Team(("x",), ((0,),)))
    assert result.constants == {"c_x": 0}
    assert result.holds


def test_grounding_can_fail_outside_the_downward_closed_fragment(two_element):
    gamma = gamma_of(*EXAMPLE_GAMMA)
    result = constant_grounding(gamma, two_element, Team(("x",), ((0,), (1,))))
    assert result.verdicts == (False, True)
    assert not result.to_dict()["holds"]
