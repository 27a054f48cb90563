"""
Formula AST for first-order logic with team-semantics atoms and connectives.

Literals are t = t', t != t', R(t...), !R(t...). Dependency atoms take
variables only: dep(x...; y), inc(x... ; y...), indep(x... ; y... | z...)
and excl(x... ; y...). Team-level connectives: ∧, lax and strict tensor
disjunction, intuitionistic disjunction and implication, weak and full
classical negation, and five quantifiers (∃, ∃s, ∀, ∃¹, ∀¹).
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Iterator, List, Sequence, Tuple

from .core_model import Signature
from .errors import ArityError, AtomSubstitutionError, CaptureError, SignatureError
from .terms import Func, Term, Var, format_term, substitute_term, term_symbols, term_vars

logger = logging.getLogger(__name__)

RESERVED_PREFIX = "$"


class Formula:
    """Marker base class for all formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class NegEq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Rel(Formula):
    symbol: str
    args: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class NegRel(Formula):
    symbol: str
    args: Tuple[Term, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Dep(Formula):
    """dep(x⃗; y): y is functionally determined by x⃗."""
    determiners: Tuple[str, ...]
    dependent: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "determiners", tuple(self.determiners))


@dataclass(frozen=True)
class Incl(Formula):
    """x⃗ ⊆ y⃗."""
    left: Tuple[str, ...]
    right: Tuple[str, ...]

    def __post_init__(self) -> None:
        _same_length("inclusion", self.left, self.right)
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))


@dataclass(frozen=True)
class Indep(Formula):
    """x⃗ ⊥_z⃗ y⃗."""
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    given: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        object.__setattr__(self, "given", tuple(self.given))


@dataclass(frozen=True)
class Excl(Formula):
    """x⃗ | y⃗."""
    left: Tuple[str, ...]
    right: Tuple[str, ...]

    def __post_init__(self) -> None:
        _same_length("exclusion", self.left, self.right)
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class TensorOr(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class TensorOrStrict(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class IntOr(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class IntImpl(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class WeakNeg(Formula):
    body: Formula


@dataclass(frozen=True)
class ClassNeg(Formula):
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsStrict(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Exists1(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall1(Formula):
    var: str
    body: Formula


def _same_length(name: str, left: Sequence[str], right: Sequence[str]) -> None:
    if len(left) != len(right):
        raise ArityError(f"{name} atom needs tuples of the same length, got {len(left)} and {len(right)}")


LITERALS = (Eq, NegEq, Rel, NegRel)
ATOMS = (Dep, Incl, Indep, Excl)
BINARY = (And, TensorOr, TensorOrStrict, IntOr, IntImpl)
NEGATIONS = (WeakNeg, ClassNeg)
QUANTIFIERS = (Exists, ExistsStrict, Forall, Exists1, Forall1)

ATOM_KIND = {Dep: "dep", Incl: "inc", Indep: "indep", Excl: "excl"}
CONSTRUCT = {
    And: "and", TensorOr: "or", TensorOrStrict: "or_s", IntOr: "vv", IntImpl: "->",
    WeakNeg: "~.", ClassNeg: "~",
    Exists: "E", ExistsStrict: "Es", Forall: "A", Exists1: "E1", Forall1: "A1",
}

AtomGroups = Tuple[Tuple[str, ...], ...]


def atom_groups(atom: Formula) -> AtomGroups:
    """The variable groups of a dependency atom, in grammar order."""
    if isinstance(atom, Dep):
        return (atom.determiners, (atom.dependent,))
    if isinstance(atom, Indep):
        return (atom.left, atom.right, atom.given)
    if isinstance(atom, (Incl, Excl)):
        return (atom.left, atom.right)
    raise TypeError(f"not a dependency atom: {atom!r}")


def atom_from_groups(kind: str, groups: Sequence[Sequence[str]]) -> Formula:
    groups = [tuple(group) for group in groups]
    if kind == "dep":
        if len(groups) != 2 or len(groups[1]) != 1:
            raise ArityError("dep takes determiners and exactly one dependent")
        return Dep(groups[0], groups[1][0])
    if kind == "inc":
        return Incl(groups[0], groups[1])
    if kind == "excl":
        return Excl(groups[0], groups[1])
    if kind == "indep":
        return Indep(groups[0], groups[1], groups[2] if len(groups) > 2 else ())
    raise ValueError(f"unknown atom kind {kind}")


def children(formula: Formula) -> Tuple[Formula, ...]:
    if isinstance(formula, BINARY):
        return (formula.left, formula.right)
    if isinstance(formula, NEGATIONS + QUANTIFIERS):
        return (formula.body,)
    return ()


def walk(formula: Formula) -> Iterator[Formula]:
    """Pre-order traversal of all nodes."""
    stack = [formula]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def literal_terms(literal: Formula) -> Tuple[Term, ...]:
    if isinstance(literal, (Eq, NegEq)):
        return (literal.left, literal.right)
    return tuple(literal.args)


def free_vars(formula: Formula) -> FrozenSet[str]:
    """Free variables; every variable of a dependency atom is free, quantifiers bind."""
    if isinstance(formula, LITERALS):
        found: FrozenSet[str] = frozenset()
        for term in literal_terms(formula):
            found |= term_vars(term)
        return found
    if isinstance(formula, ATOMS):
        return frozenset(name for group in atom_groups(formula) for name in group)
    if isinstance(formula, QUANTIFIERS):
        return free_vars(formula.body) - {formula.var}
    result: FrozenSet[str] = frozenset()
    for child in children(formula):
        result |= free_vars(child)
    return result


def all_vars(formula: Formula) -> FrozenSet[str]:
    """Free and bound variables."""
    names = set(free_vars(formula))
    for node in walk(formula):
        if isinstance(node, QUANTIFIERS):
            names.add(node.var)
        elif isinstance(node, LITERALS + ATOMS):
            names |= free_vars(node)
    return frozenset(names)


def fresh_names(count: int, taken: Iterable[str], stem: str = "u") -> List[str]:
    """Reserved-prefix names $u0, $u1, ... avoiding ``taken``."""
    taken = set(taken)
    names: List[str] = []
    index = 0
    while len(names) < count:
        candidate = f"{RESERVED_PREFIX}{stem}{index}"
        if candidate not in taken:
            names.append(candidate)
        index += 1
    return names


def desugar_term_atom(kind: str, groups: Sequence[Sequence[Term]]) -> Formula:
    """
    Rewrite a dependency atom over arbitrary terms into one over variables.

    dep(t0, ..., tn) becomes ∃u0 ... ∃un (dep(u0, ..., un) ∧ u0 = t0 ∧ ... ∧ un = tn)
    with fresh reserved names. An atom whose terms are all variables is
    returned as the plain atom.

    Args:
        kind: One of dep, inc, indep, excl
        groups: The term groups in grammar order (dep: determiners, [dependent])

    Returns:
        An equivalent formula whose atom takes variables only
    """
    groups = [tuple(group) for group in groups]
    flat = [term for group in groups for term in group]
    if all(isinstance(term, Var) for term in flat):
        return atom_from_groups(kind, [[term.name for term in group] for group in groups])

    taken = set()
    for term in flat:
        taken |= term_vars(term)
    fresh = fresh_names(len(flat), taken)
    fresh_groups = []
    cursor = 0
    for group in groups:
        fresh_groups.append(fresh[cursor:cursor + len(group)])
        cursor += len(group)

    body: Formula = atom_from_groups(kind, fresh_groups)
    for name, term in zip(fresh, flat):
        body = And(body, Eq(Var(name), term))
    for name in reversed(fresh):
        body = Exists(name, body)
    return body


def substitute(formula: Formula, term: Term, name: str, desugar_atoms: bool = False) -> Formula:
    """
    φ(t/x): replace every free occurrence of x by t.

    Raises CaptureError when a variable of t would be bound, and
    AtomSubstitutionError when x occurs in a dependency atom, unless
    ``desugar_atoms`` is set, in which case the atom is rewritten with
    desugar_term_atom after substitution.
    """
    if isinstance(formula, (Eq, NegEq)):
        return type(formula)(substitute_term(formula.left, term, name), substitute_term(formula.right, term, name))
    if isinstance(formula, (Rel, NegRel)):
        return type(formula)(formula.symbol, tuple(substitute_term(arg, term, name) for arg in formula.args))
    if isinstance(formula, ATOMS):
        groups = atom_groups(formula)
        if not any(name in group for group in groups):
            return formula
        if not desugar_atoms:
            raise AtomSubstitutionError(
                f"{name} occurs in the dependency atom {format_formula(formula)}; desugar it first"
            )
        term_groups = [[term if var == name else Var(var) for var in group] for group in groups]
        return desugar_term_atom(ATOM_KIND[type(formula)], term_groups)
    if isinstance(formula, BINARY):
        return type(formula)(
            substitute(formula.left, term, name, desugar_atoms),
            substitute(formula.right, term, name, desugar_atoms),
        )
    if isinstance(formula, NEGATIONS):
        return type(formula)(substitute(formula.body, term, name, desugar_atoms))
    if isinstance(formula, QUANTIFIERS):
        if formula.var == name or name not in free_vars(formula.body):
            return formula
        if formula.var in term_vars(term):
            raise CaptureError(
                f"substituting {format_term(term)} for {name} would capture {formula.var}"
            )
        return type(formula)(formula.var, substitute(formula.body, term, name, desugar_atoms))
    raise TypeError(f"unknown formula node {formula!r}")


def to_strict(formula: Formula) -> Formula:
    """Rewrite lax ∨ and ∃ into their strict counterparts."""
    if isinstance(formula, TensorOr):
        return TensorOrStrict(to_strict(formula.left), to_strict(formula.right))
    if isinstance(formula, Exists):
        return ExistsStrict(formula.var, to_strict(formula.body))
    if isinstance(formula, BINARY):
        return type(formula)(to_strict(formula.left), to_strict(formula.right))
    if isinstance(formula, NEGATIONS):
        return type(formula)(to_strict(formula.body))
    if isinstance(formula, QUANTIFIERS):
        return type(formula)(formula.var, to_strict(formula.body))
    return formula


@dataclass(frozen=True)
class FragmentLabel:
    """The exact inventory of atoms and team-level constructs in a formula."""
    atoms: FrozenSet[str]
    constructs: FrozenSet[str]

    @property
    def strict(self) -> bool:
        return bool(self.constructs & {"or_s", "Es"})

    @property
    def intuitionistic_or(self) -> bool:
        return "vv" in self.constructs

    @property
    def implication(self) -> bool:
        return "->" in self.constructs

    @property
    def weak_negation(self) -> bool:
        return "~." in self.constructs

    @property
    def classical_negation(self) -> bool:
        return "~" in self.constructs

    @property
    def exists1(self) -> bool:
        return "E1" in self.constructs

    @property
    def forall1(self) -> bool:
        return "A1" in self.constructs

    @property
    def is_first_order(self) -> bool:
        return not self.atoms and self.constructs <= {"and", "or", "or_s", "E", "Es", "A"}

    @property
    def is_lax_atomic_fragment(self) -> bool:
        """FO(dep, ⊥c, ⊆, |) under lax semantics."""
        return self.constructs <= {"and", "or", "E", "A"}

    @property
    def is_downward_closed_fragment(self) -> bool:
        return self.atoms <= {"dep", "excl"} and not self.constructs & {"~", "~."}

    @property
    def is_union_closed_fragment(self) -> bool:
        return self.atoms <= {"inc"} and self.constructs <= {"and", "or", "E", "A", "A1"}

    @property
    def strong_los_eligible(self) -> bool:
        return not self.constructs & {"or", "or_s", "E", "Es", "->"}

    def to_dict(self) -> Dict[str, object]:
        return {
            "atoms": sorted(self.atoms),
            "constructs": sorted(self.constructs),
            "strict": self.strict,
            "first_order": self.is_first_order,
            "downward_closed_fragment": self.is_downward_closed_fragment,
            "union_closed_fragment": self.is_union_closed_fragment,
            "strong_los_eligible": self.strong_los_eligible,
        }


def fragment_of(formula: Formula) -> FragmentLabel:
    atoms = set()
    constructs = set()
    for node in walk(formula):
        kind = type(node)
        if kind in ATOM_KIND:
            atoms.add(ATOM_KIND[kind])
        elif kind in CONSTRUCT:
            constructs.add(CONSTRUCT[kind])
    return FragmentLabel(frozenset(atoms), frozenset(constructs))


def formula_signature(formula: Formula) -> Signature:
    """The relation and function symbols a formula uses."""
    relations: Dict[str, int] = {}
    functions: Dict[str, int] = {}

    def note(table: Dict[str, int], symbol: str, arity: int) -> None:
        if table.get(symbol, arity) != arity:
            raise ArityError(f"symbol {symbol} is used with arities {table[symbol]} and {arity}")
        table[symbol] = arity

    for node in walk(formula):
        if isinstance(node, LITERALS):
            if isinstance(node, (Rel, NegRel)):
                note(relations, node.symbol, len(node.args))
            for term in literal_terms(node):
                for symbol, arity in term_symbols(term):
                    note(functions, symbol, arity)
    clash = set(relations) & set(functions)
    if clash:
        raise SignatureError(f"symbols used both as relation and function: {sorted(clash)}")
    return Signature.of(relations, functions)


def check_signature(formula: Formula, signature: Signature) -> None:
    """Raise SignatureError or ArityError when the formula does not fit the signature."""
    used = formula_signature(formula)
    for symbol, arity in used.relations:
        declared = signature.relation_arity(symbol)
        if declared is None:
            raise SignatureError(f"unknown relation symbol {symbol}")
        if declared != arity:
            raise ArityError(f"relation {symbol} has arity {declared}, used with {arity} arguments")
    for symbol, arity in used.functions:
        declared = signature.function_arity(symbol)
        if declared is None:
            raise SignatureError(f"unknown function symbol {symbol}")
        if declared != arity:
            raise ArityError(f"function {symbol} has arity {declared}, used with {arity} arguments")


def bind_constants(formula: Formula, signature: Signature) -> Formula:
    """Turn free variables named like 0-ary function symbols into constants."""
    constants = {name for name, arity in signature.functions if arity == 0}
    if not constants:
        return formula

    def fix(term: Term) -> Term:
        if isinstance(term, Var):
            return Func(term.name) if term.name in constants else term
        return Func(term.symbol, tuple(fix(arg) for arg in term.args))

    def rebuild(node: Formula) -> Formula:
        if isinstance(node, (Eq, NegEq)):
            return type(node)(fix(node.left), fix(node.right))
        if isinstance(node, (Rel, NegRel)):
            return type(node)(node.symbol, tuple(fix(arg) for arg in node.args))
        if isinstance(node, BINARY):
            return type(node)(rebuild(node.left), rebuild(node.right))
        if isinstance(node, NEGATIONS):
            return type(node)(rebuild(node.body))
        if isinstance(node, QUANTIFIERS):
            return type(node)(node.var, rebuild(node.body))
        return node

    return rebuild(formula)


def depth(formula: Formula) -> int:
    kids = children(formula)
    return 1 + max((depth(child) for child in kids), default=0)


# Printing. Higher binds tighter; quantifiers take maximal right scope.
_PRECEDENCE = {
    WeakNeg: 4, ClassNeg: 4,
    And: 3,
    TensorOr: 2, TensorOrStrict: 2, IntOr: 2,
    IntImpl: 1,
}
_BINARY_OPERATOR = {And: "&", TensorOr: "v", TensorOrStrict: "vs", IntOr: "vv", IntImpl: "->"}
_QUANTIFIER_KEYWORD = {Exists: "E", ExistsStrict: "Es", Forall: "A", Exists1: "E1", Forall1: "A1"}
_ATOMIC = 5


def _precedence(formula: Formula) -> int:
    if isinstance(formula, QUANTIFIERS):
        return 0
    return _PRECEDENCE.get(type(formula), _ATOMIC)


def _names(group: Sequence[str]) -> str:
    return ", ".join(group)


def _format_atomic(formula: Formula) -> str:
    if isinstance(formula, Eq):
        return f"{format_term(formula.left)} = {format_term(formula.right)}"
    if isinstance(formula, NegEq):
        return f"{format_term(formula.left)} != {format_term(formula.right)}"
    if isinstance(formula, Rel):
        return f"{formula.symbol}({', '.join(format_term(arg) for arg in formula.args)})"
    if isinstance(formula, NegRel):
        return f"!{formula.symbol}({', '.join(format_term(arg) for arg in formula.args)})"
    if isinstance(formula, Dep):
        return f"dep({_names(formula.determiners)} ; {formula.dependent})"
    if isinstance(formula, Incl):
        return f"inc({_names(formula.left)} ; {_names(formula.right)})"
    if isinstance(formula, Excl):
        return f"excl({_names(formula.left)} ; {_names(formula.right)})"
    if isinstance(formula, Indep):
        given = f" | {_names(formula.given)}" if formula.given else ""
        return f"indep({_names(formula.left)} ; {_names(formula.right)}{given})"
    raise TypeError(f"unknown formula node {formula!r}")


def format_formula(formula: Formula) -> str:
    """Canonical ASCII text; parse(format_formula(φ)) == φ."""
    if isinstance(formula, QUANTIFIERS):
        keyword = _QUANTIFIER_KEYWORD[type(formula)]
        body = format_formula(formula.body)
        if not isinstance(formula.body, QUANTIFIERS):
            body = f"({body})"
        return f"{keyword} {formula.var} {body}"
    if isinstance(formula, NEGATIONS):
        operator = "~." if isinstance(formula, WeakNeg) else "~"
        return f"{operator} {_wrap(formula.body, _precedence(formula.body) < 4)}"
    if isinstance(formula, BINARY):
        level = _precedence(formula)
        right_assoc = isinstance(formula, IntImpl)
        left_level = _precedence(formula.left)
        right_level = _precedence(formula.right)
        left = _wrap(formula.left, left_level < level or (right_assoc and left_level == level))
        right = _wrap(formula.right, right_level < level or (not right_assoc and right_level == level))
        return f"{left} {_BINARY_OPERATOR[type(formula)]} {right}"
    return _format_atomic(formula)


def _wrap(formula: Formula, parenthesize: bool) -> str:
    text = format_formula(formula)
    return f"({text})" if parenthesize else text

