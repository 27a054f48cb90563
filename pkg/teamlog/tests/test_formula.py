import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.teamlog.core_model import Signature
from src.teamlog.errors import ArityError, AtomSubstitutionError, CaptureError, SignatureError
from src.teamlog.formula import (
    And,
    Dep,
    Eq,
    Exists,
    ExistsStrict,
    Forall,
    Incl,
    Indep,
    Rel,
    TensorOr,
    TensorOrStrict,
    WeakNeg,
    all_vars,
    check_signature,
    depth,
    desugar_term_atom,
    format_formula,
    formula_signature,
    fragment_of,
    free_vars,
    substitute,
    to_strict,
)
from src.teamlog.formula_parser import parse
from src.teamlog.random_instances import random_formula
from src.teamlog.terms import Func, Var


def test_free_vars_respect_binding():
    formula = And(Rel("P", (Var("x"),)), Exists("x", Rel("R", (Var("x"), Var("y")))))
    assert free_vars(formula) == {"x", "y"}
    assert all_vars(formula) == {"x", "y"}


def test_atom_variables_are_free():
    assert free_vars(Indep(("x",), ("y",), ("z",))) == {"x", "y", "z"}
    assert free_vars(Forall("x", Dep(("x",), "y"))) == {"y"}


def test_inclusion_needs_equal_widths():
    with pytest.raises(ArityError):
        Incl(("x", "y"), ("z",))


def test_fragment_label():
    label = fragment_of(parse("E y (dep(x ; y) & inc(x ; y)) vs P(x)"))
    assert label.atoms == {"dep", "inc"}
    assert label.strict
    assert not label.is_first_order
    assert fragment_of(parse("A y (R(x, y) v P(y))")).is_first_order
    assert fragment_of(parse("A y (inc(x ; y))")).is_union_closed_fragment
    assert not fragment_of(parse("~. dep( ; x)")).is_downward_closed_fragment


def test_to_strict_rewrites_lax_connectives_only():
    formula = Exists("y", TensorOr(Rel("P", (Var("y"),)), WeakNeg(Rel("P", (Var("x"),)))))
    strict = to_strict(formula)
    assert isinstance(strict, ExistsStrict)
    assert isinstance(strict.body, TensorOrStrict)
    assert isinstance(strict.body.right, WeakNeg)


def test_formula_signature_and_arity_clash():
    signature = formula_signature(parse("R(f(x), c()) & P(x)"))
    assert signature == Signature.of({"P": 1, "R": 2}, {"c": 0, "f": 1})
    with pytest.raises(ArityError):
        formula_signature(parse("P(x) & P(x, y)"))


def test_check_signature_reports_unknown_symbols():
    with pytest.raises(SignatureError):
        check_signature(parse("Q(x)"), Signature.of({"P": 1}))


def test_substitution_into_literals():
    formula = parse("E y (R(x, y))")
    assert substitute(formula, Func("f", (Var("w"),)), "x") == parse("E y (R(f(w), y))")


def test_substitution_skips_bound_occurrences():
    formula = parse("A x (P(x))")
    assert substitute(formula, Var("y"), "x") == formula


def test_substitution_detects_capture():
    with pytest.raises(CaptureError):
        substitute(parse("E y (R(x, y))"), Var("y"), "x")


def test_substitution_into_atom_needs_desugaring():
    formula = parse("dep(w ; x)")
    with pytest.raises(AtomSubstitutionError):
        substitute(formula, Func("f", (Var("w"),)), "x")
    desugared = substitute(formula, Func("f", (Var("w"),)), "x", desugar_atoms=True)
    assert isinstance(desugared, Exists)
    assert free_vars(desugared) == {"w"}


def test_desugar_keeps_variable_atoms():
    assert desugar_term_atom("inc", [[Var("x")], [Var("y")]]) == Incl(("x",), ("y",))
    rewritten = desugar_term_atom("dep", [[], [Func("c")]])
    assert free_vars(rewritten) == frozenset()
    assert isinstance(rewritten.body, And)
    assert isinstance(rewritten.body.right, Eq)


def test_depth_counts_nodes_on_longest_branch():
    assert depth(parse("P(x)")) == 1
    assert depth(parse("E y (P(y) & R(x, y))")) == 3


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from(["fo", "lax", "full"]))
def test_format_then_parse_is_identity(seed, profile):
    formula = random_formula(random.Random(seed), ("x", "w"), depth=4, profile=profile)
    assert parse(format_formula(formula)) == formula
