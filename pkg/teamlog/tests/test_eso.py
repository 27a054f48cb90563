import pytest

from src.config.budget_config import get_budget_config, with_overrides
from src.teamlog.core_model import Team, all_teams, project
from src.teamlog.errors import BudgetExceededError, UnboundRelationError, UnboundVariableError, UnsupportedConstructError
from src.teamlog.eso import FOAtom, crosscheck, eval_eso, eval_fo, format_eso, translate
from src.teamlog.formula_parser import parse
from src.teamlog.terms import Var


def test_atoms_translate_without_relation_variables():
    sentence = translate(parse("dep(x ; y)"), ["x", "y"])
    assert sentence.team_predicate == "R"
    assert sentence.team_arity == 2
    assert sentence.prefix == ()


def test_team_predicate_avoids_signature_symbols():
    sentence = translate(parse("P(x) v R(x, x)"), ["x"])
    assert sentence.team_predicate == "RR"
    assert [(v.name, v.arity) for v in sentence.prefix] == [("RR1", 1), ("RR2", 1)]


def test_quantifiers_widen_the_team_relation():
    sentence = translate(parse("(E y R(x, y)) & (A z P(z))"), ["x"])
    arities = sentence.arities()
    assert sorted(v.arity for v in sentence.prefix) == [2, 2]
    assert any(v.forced for v in sentence.prefix)
    assert arities[sentence.team_predicate] == 1
    assert format_eso(sentence).startswith("E")


@pytest.mark.parametrize("text", ["~ P(x)", "P(x) vs P(x)", "E1 y P(y)", "Es y P(y)", "P(x) -> P(x)", "P(x) vv P(x)"])
def test_strict_and_intuitionistic_constructs_are_not_translated(text):
    with pytest.raises(UnsupportedConstructError):
        translate(parse(text), ["x"])


def test_free_variables_must_be_team_variables():
    with pytest.raises(UnboundVariableError):
        translate(parse("R(x, y)"), ["x"])


@pytest.mark.parametrize(
    "text, variables",
    [
        ("dep( ; x) v P(x)", ("x",)),
        ("E y (inc(x ; y) & !R(x, y))", ("x",)),
        ("A y (excl(x ; y) v R(x, y))", ("x",)),
        ("indep(x ; y) & dep(x ; y)", ("x", "y")),
        ("inc(x ; y) v excl(x ; y)", ("x", "y")),
    ],
)
def test_translation_agrees_with_team_semantics(two_element, text, variables):
    formula = parse(text)
    for team in all_teams(variables, two_element.size):
        result = crosscheck(two_element, team, formula)
        assert result.agrees, (text, team.rows)


def test_crosscheck_on_a_wider_team_projects_it(two_element):
    team = Team(("w", "x"), ((0, 0), (1, 1)))
    result = crosscheck(two_element, team, parse("dep( ; x)"), ["x"])
    assert result.direct is False
    assert result.agrees


def test_tuple_budget_is_enforced(three_element):
    budget = with_overrides(get_budget_config("quick"), max_eso_tuples=2)
    sentence = translate(parse("E y (R(x, y))"), ["x"])
    team = Team(("x",), ((0,), (1,)))
    with pytest.raises(BudgetExceededError):
        eval_eso(three_element, sentence, project(team, ["x"]), budget)


def test_first_order_evaluation(two_element):
    assert eval_fo(two_element, FOAtom("P", (Var("x"),)), assignment={"x": 0})
    assert eval_fo(two_element, FOAtom("S", (Var("x"),)), {"S": frozenset({(1,)})}, {"x": 1})
    with pytest.raises(UnboundRelationError):
        eval_fo(two_element, FOAtom("S", (Var("x"),)), assignment={"x": 0})
