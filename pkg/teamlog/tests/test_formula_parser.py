import pytest

from src.teamlog.core_model import Signature
from src.teamlog.errors import ArityError, FormulaSyntaxError, SignatureError
from src.teamlog.formula import (
    And,
    ClassNeg,
    Dep,
    Eq,
    Excl,
    Exists,
    Exists1,
    ExistsStrict,
    Forall,
    Forall1,
    Incl,
    Indep,
    IntImpl,
    IntOr,
    NegEq,
    NegRel,
    Rel,
    TensorOr,
    TensorOrStrict,
    WeakNeg,
)
from src.teamlog.formula_parser import parse, parse_many
from src.teamlog.terms import Func, Var

x, y, z = Var("x"), Var("y"), Var("z")


def test_literals():
    assert parse("x = y") == Eq(x, y)
    assert parse("x != f(y)") == NegEq(x, Func("f", (y,)))
    assert parse("R(x, y)") == Rel("R", (x, y))
    assert parse("!R(x, y)") == NegRel("R", (x, y))


def test_dependency_atoms():
    assert parse("dep(x, y ; z)") == Dep(("x", "y"), "z")
    assert parse("dep( ; x)") == Dep((), "x")
    assert parse("inc(x, y ; z, z)") == Incl(("x", "y"), ("z", "z"))
    assert parse("excl(x ; y)") == Excl(("x",), ("y",))
    assert parse("indep(x ; y | z)") == Indep(("x",), ("y",), ("z",))
    assert parse("indep(x ; y)") == Indep(("x",), ("y",), ())


def test_dep_with_several_dependents_is_a_conjunction():
    assert parse("dep(x ; y, z)") == And(Dep(("x",), "y"), Dep(("x",), "z"))


def test_precedence_and_associativity():
    p, q, r = Rel("P", (x,)), Rel("P", (y,)), Rel("P", (z,))
    assert parse("P(x) & P(y) v P(z)") == TensorOr(And(p, q), r)
    assert parse("P(x) v P(y) vs P(z)") == TensorOrStrict(TensorOr(p, q), r)
    assert parse("P(x) -> P(y) -> P(z)") == IntImpl(p, IntImpl(q, r))
    assert parse("P(x) vv P(y) -> P(z)") == IntImpl(IntOr(p, q), r)
    assert parse("~. P(x) & ~ P(y)") == And(WeakNeg(p), ClassNeg(q))


def test_quantifier_scope_extends_right():
    assert parse("E x P(x) & P(y)") == Exists("x", And(Rel("P", (x,)), Rel("P", (y,))))
    assert parse("(E x P(x)) & P(y)") == And(Exists("x", Rel("P", (x,))), Rel("P", (y,)))


def test_every_quantifier_keyword():
    body = Rel("P", (x,))
    assert parse("Es x P(x)") == ExistsStrict("x", body)
    assert parse("A x P(x)") == Forall("x", body)
    assert parse("E1 x P(x)") == Exists1("x", body)
    assert parse("A1 x P(x)") == Forall1("x", body)


def test_signature_turns_bare_constants_into_constants():
    signature = Signature.of({"P": 1}, {"c": 0})
    assert parse("P(c)", signature=signature) == Rel("P", (Func("c"),))
    assert parse("P(c())") == Rel("P", (Func("c"),))


def test_signature_is_enforced():
    signature = Signature.of({"P": 1})
    with pytest.raises(SignatureError):
        parse("Q(x)", signature=signature)
    with pytest.raises(ArityError):
        parse("P(x, y)", signature=signature)


def test_strict_flag():
    assert parse("E x (P(x) v P(y))", strict=True) == ExistsStrict("x", TensorOrStrict(Rel("P", (x,)), Rel("P", (y,))))


def test_keywords_are_not_identifiers():
    with pytest.raises(FormulaSyntaxError):
        parse("P(v)")


def test_syntax_error_carries_position():
    with pytest.raises(FormulaSyntaxError) as info:
        parse("P(x) &")
    assert info.value.kind == "syntax"
    assert info.value.line == 1
    assert info.value.column >= 1


def test_reserved_names_only_on_request():
    with pytest.raises(FormulaSyntaxError):
        parse("P($u0)")
    assert parse("P($u0)", allow_reserved=True) == Rel("P", (Var("$u0"),))


def test_parse_many():
    assert parse_many(["P(x)", "x = y"]) == [Rel("P", (x,)), Eq(x, y)]
