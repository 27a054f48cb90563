import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.teamlog.core_model import (
    Assignment,
    Signature,
    Structure,
    SupplementFunction,
    Team,
    all_teams,
    count_structures,
    duplicate,
    iter_structures,
    project,
    restrict,
    substitute_team,
    supplement,
    supplement_const,
    term_eval,
)
from src.teamlog.errors import ArityError, SignatureError, StructureError, TeamError, UnboundVariableError
from src.teamlog.terms import Func, Var


def test_signature_rejects_duplicate_symbols():
    with pytest.raises(SignatureError):
        Signature.of({"P": 1}, {"P": 0})


def test_signature_pairs_are_sorted():
    signature = Signature.of({"R": 2, "P": 1}, {"f": 1})
    assert signature.relations == (("P", 1), ("R", 2))
    assert signature.relation_arity("R") == 2
    assert signature.function_arity("g") is None


def test_structure_build_accepts_unary_tables_and_constants(lab_structure):
    assert lab_structure.apply("f", (2,)) == 0
    assert lab_structure.apply("c", ()) == 0
    assert lab_structure.relation("P") == frozenset({(1,)})


def test_structure_rejects_partial_function():
    signature = Signature.of({}, {"f": 1})
    with pytest.raises(StructureError):
        Structure.build(signature, 2, {}, {"f": {0: 1}})


def test_structure_rejects_tuple_outside_domain(pr_signature):
    with pytest.raises(StructureError):
        Structure.build(pr_signature, 2, {"P": [(2,)]})


def test_structure_rejects_wrong_arity(pr_signature):
    with pytest.raises(ArityError):
        Structure.build(pr_signature, 2, {"R": [(0,)]})


def test_structure_rejects_empty_domain(pr_signature):
    with pytest.raises(StructureError):
        Structure.build(pr_signature, 0)


def test_expand_adds_relations_and_keeps_old_tables(two_element):
    expanded = two_element.expand({"S": [(0, 0)], "Z": False}, {"d": 1})
    assert expanded.signature.relation_arity("S") == 2
    assert expanded.signature.relation_arity("Z") == 0
    assert expanded.apply("d", ()) == 1
    assert expanded.relation("P") == two_element.relation("P")
    assert expanded.reduct(two_element.signature) == two_element


def test_count_matches_enumeration(pr_signature):
    assert count_structures(pr_signature, 2) == 2 ** 2 * 2 ** 4
    assert sum(1 for _ in iter_structures(pr_signature, 2)) == 64


def test_team_is_canonical():
    a = Team(("y", "x"), ((1, 0), (0, 0), (1, 0)))
    b = Team(("x", "y"), ((0, 0), (0, 1)))
    assert a == b
    assert a.variables == ("x", "y")
    assert len(a) == 2


def test_team_rejects_repeated_variables():
    with pytest.raises(TeamError):
        Team(("x", "x"), ((0, 0),))


def test_unit_team_is_not_empty():
    assert not Team.unit().is_empty
    assert Team.empty(("x",)).is_empty


def test_assignment_update_appends_and_overwrites():
    s = Assignment(("x",), (0,))
    assert s.update("y", 1).as_dict() == {"x": 0, "y": 1}
    assert s.update("x", 1).as_dict() == {"x": 1}
    with pytest.raises(UnboundVariableError):
        s["z"]


def test_term_eval_nested(lab_structure):
    term = Func("f", (Func("f", (Var("x"),)),))
    assert term_eval(lab_structure, {"x": 2}, term) == 1
    assert term_eval(lab_structure, {}, Func("c")) == 0


def test_restrict_collapses_duplicates(xy_team):
    assert restrict(xy_team, ["x"]) == Team(("x",), ((0,), (1,)))
    with pytest.raises(TeamError):
        restrict(xy_team, ["z"])


def test_project_keeps_listed_order(xy_team):
    assert project(xy_team, ["y", "x"]) == frozenset({(0, 0), (1, 0), (1, 1)})


def test_duplicate_and_supplement(two_element):
    team = Team(("x",), ((0,),))
    assert duplicate(team, "y", two_element) == Team(("x", "y"), ((0, 0), (0, 1)))
    assert supplement_const(team, "y", 1, two_element) == Team(("x", "y"), ((0, 1),))
    function = SupplementFunction(team, {(0,): frozenset({1})})
    assert supplement(team, "x", function) == Team(("x",), ((1,),))


def test_supplement_function_must_be_total_and_nonempty():
    team = Team(("x",), ((0,), (1,)))
    with pytest.raises(TeamError):
        SupplementFunction(team, {(0,): frozenset({0})})
    with pytest.raises(TeamError):
        SupplementFunction(team, {(0,): frozenset({0}), (1,): frozenset()})


def test_substitute_team_writes_term_value(lab_structure):
    team = Team(("x",), ((0,), (2,)))
    assert substitute_team(team, "y", Func("f", (Var("x"),)), lab_structure) == Team(("x", "y"), ((0, 1), (2, 0)))


@given(st.integers(min_value=1, max_value=3), st.integers(min_value=0, max_value=2))
def test_all_teams_counts_every_subset(size, width):
    variables = ("x", "y")[:width]
    teams = list(all_teams(variables, size))
    assert len(teams) == 2 ** (size ** width)
    assert len(set(teams)) == len(teams)
    assert len(list(all_teams(variables, size, include_empty=False))) == len(teams) - 1
