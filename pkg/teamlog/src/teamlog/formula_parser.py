"""
Parser for the ASCII formula syntax.

    literals     t = t   t != t   R(t, ...)   !R(t, ...)
    atoms        dep(x, ... ; y)   inc(x, ... ; y, ...)
                 indep(x, ... ; y, ... | z, ...)   excl(x, ... ; y, ...)
    connectives  ~. ~  (prefix, tightest)  &  v vs vv  ->  (right associative)
    quantifiers  E x   Es x   A x   E1 x   A1 x   (scope extends maximally right)

Bare identifiers in term position are variables unless a signature declares
them as constants; constants can always be written c().
"""

import logging
from functools import lru_cache
from typing import Callable, List, Optional

import pyparsing as pp

from .core_model import Signature
from .errors import FormulaSyntaxError
from .formula import (
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
    Formula,
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
    bind_constants,
    check_signature,
    to_strict,
)
from .terms import Func, Var

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

KEYWORDS = ("v", "vs", "vv", "E", "Es", "E1", "A", "A1", "dep", "inc", "indep", "excl")

_BINARY = {"&": And, "v": TensorOr, "vs": TensorOrStrict, "vv": IntOr, "->": IntImpl}
_QUANTIFIERS = {"E": Exists, "Es": ExistsStrict, "E1": Exists1, "A": Forall, "A1": Forall1}


def _fold_left(tokens: pp.ParseResults) -> Formula:
    group = tokens[0]
    result = group[0]
    for position in range(1, len(group), 2):
        result = _BINARY[group[position]](result, group[position + 1])
    return result


def _fold_right(tokens: pp.ParseResults) -> Formula:
    group = tokens[0]
    result = group[-1]
    for position in range(len(group) - 2, 0, -2):
        result = _BINARY[group[position]](group[position - 1], result)
    return result


def _negation(tokens: pp.ParseResults) -> Formula:
    operator, body = tokens[0]
    return WeakNeg(body) if operator == "~." else ClassNeg(body)


def _dep(tokens: pp.ParseResults) -> Formula:
    determiners = tuple(tokens[0])
    atoms = [Dep(determiners, dependent) for dependent in tokens[1]]
    result: Formula = atoms[0]
    for atom in atoms[1:]:
        result = And(result, atom)
    return result


def _pair_atom(node: Callable[..., Formula]) -> Callable[[pp.ParseResults], Formula]:
    def action(tokens: pp.ParseResults) -> Formula:
        return node(tuple(tokens[0]), tuple(tokens[1]))
    return action


@lru_cache(maxsize=2)
def _grammar(allow_reserved: bool) -> pp.ParserElement:
    initial = pp.alphas + "_" + ("$" if allow_reserved else "")
    keyword = pp.MatchFirst([pp.Keyword(word) for word in KEYWORDS])
    ident = pp.Combine(~keyword + pp.Word(initial, pp.alphanums + "_"))

    lpar, rpar = pp.Suppress("("), pp.Suppress(")")
    semi, bar = pp.Suppress(";"), pp.Suppress("|")

    term = pp.Forward()
    arguments = pp.Group(pp.Optional(pp.DelimitedList(term)))
    application = (ident + lpar + arguments + rpar).set_parse_action(lambda t: Func(t[0], tuple(t[1])))
    variable = ident.copy().set_parse_action(lambda t: Var(t[0]))
    term <<= application | variable

    names = pp.Group(pp.Optional(pp.DelimitedList(ident)))
    dep_atom = (pp.Suppress(pp.Keyword("dep")) + lpar + names + semi + pp.Group(pp.DelimitedList(ident)) + rpar)
    dep_atom.set_parse_action(_dep)
    inc_atom = (pp.Suppress(pp.Keyword("inc")) + lpar + names + semi + names + rpar).set_parse_action(_pair_atom(Incl))
    excl_atom = (pp.Suppress(pp.Keyword("excl")) + lpar + names + semi + names + rpar).set_parse_action(_pair_atom(Excl))
    indep_atom = (
        pp.Suppress(pp.Keyword("indep")) + lpar + names + semi + names
        + pp.Group(pp.Optional(bar + pp.Optional(pp.DelimitedList(ident)))) + rpar
    ).set_parse_action(lambda t: Indep(tuple(t[0]), tuple(t[1]), tuple(t[2])))

    negated_relation = (pp.Suppress("!") + ident + lpar + arguments + rpar).set_parse_action(
        lambda t: NegRel(t[0], tuple(t[1]))
    )
    equation = (term + pp.one_of("= !=") + term).set_parse_action(
        lambda t: Eq(t[0], t[2]) if t[1] == "=" else NegEq(t[0], t[2])
    )
    relation = (ident + lpar + arguments + rpar).set_parse_action(lambda t: Rel(t[0], tuple(t[1])))

    formula = pp.Forward()
    quantifier = pp.one_of("E Es E1 A A1", as_keyword=True)
    quantified = (quantifier + ident + formula).set_parse_action(lambda t: _QUANTIFIERS[t[0]](t[1], t[2]))

    operand = quantified | dep_atom | inc_atom | excl_atom | indep_atom | negated_relation | equation | relation
    formula <<= pp.infix_notation(
        operand,
        [
            (pp.one_of("~. ~"), 1, pp.OpAssoc.RIGHT, _negation),
            (pp.Literal("&"), 2, pp.OpAssoc.LEFT, _fold_left),
            (pp.one_of("vv vs v", as_keyword=True), 2, pp.OpAssoc.LEFT, _fold_left),
            (pp.Literal("->"), 2, pp.OpAssoc.RIGHT, _fold_right),
        ],
    )
    return formula


def parse(
    text: str,
    signature: Optional[Signature] = None,
    strict: bool = False,
    allow_reserved: bool = False,
) -> Formula:
    """
    Parse one formula.

    Args:
        text: Formula text
        signature: When given, bare identifiers naming constants become constants
            and every symbol is checked against the signature
        strict: Rewrite lax ∨ and ∃ into their strict counterparts
        allow_reserved: Accept $-prefixed variable names (generated names only)

    Returns:
        The formula AST

    Raises:
        FormulaSyntaxError: with line and column of the first error
        SignatureError, ArityError: when the formula does not fit the signature
    """
    try:
        result = _grammar(allow_reserved).parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise FormulaSyntaxError(exc.msg, line=exc.lineno, column=exc.col) from None
    formula = result[0]
    if signature is not None:
        formula = bind_constants(formula, signature)
        check_signature(formula, signature)
    if strict:
        formula = to_strict(formula)
    logger.debug(f"Parsed formula: {text!r}")
    return formula


def parse_many(texts: List[str], signature: Optional[Signature] = None, strict: bool = False) -> List[Formula]:
    return [parse(text, signature=signature, strict=strict) for text in texts]
