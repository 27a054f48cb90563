"""
Translation of lax team formulas into existential second-order sentences over
a team predicate, a Tarski evaluator for first-order formulas with relation
variables, and a solver that enumerates interpretations of the
second-order prefix.

Each ∨ introduces two relation variables covering the current team relation,
each ∃ or ∀ one relation variable of arity one higher (the widened arity is
carried through the whole subformula). Relation variables record the relation
they are bounded by, which the solver uses to restrict candidates.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

from ..config.budget_config import BudgetConfig, get_default_budget_config
from .core_model import Row, Structure, Team, project
from .errors import ArityError, BudgetExceededError, UnboundRelationError, UnboundVariableError, UnsupportedConstructError
from .evaluator import TeamEvaluator
from .formula import (
    And,
    Dep,
    Eq,
    Excl,
    Exists,
    Forall,
    Formula,
    Incl,
    Indep,
    NegEq,
    NegRel,
    Rel,
    TensorOr,
    format_formula,
    formula_signature,
    free_vars,
)
from .terms import Term, Var, format_term, rename_term

logger = logging.getLogger(__name__)


class FOFormula:
    """Marker base class for classical first-order formulas."""

    __slots__ = ()


@dataclass(frozen=True)
class FOAtom(FOFormula):
    symbol: str
    args: Tuple[Term, ...] = ()


@dataclass(frozen=True)
class FOEq(FOFormula):
    left: Term
    right: Term


@dataclass(frozen=True)
class FONot(FOFormula):
    body: FOFormula


@dataclass(frozen=True)
class FOAnd(FOFormula):
    parts: Tuple[FOFormula, ...]


@dataclass(frozen=True)
class FOOr(FOFormula):
    parts: Tuple[FOFormula, ...]


@dataclass(frozen=True)
class FOImplies(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOIff(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class FOExists(FOFormula):
    variables: Tuple[str, ...]
    body: FOFormula


@dataclass(frozen=True)
class FOForall(FOFormula):
    variables: Tuple[str, ...]
    body: FOFormula


def conj(*parts: FOFormula) -> FOFormula:
    """Flattened conjunction; a single part is returned as is."""
    flat: List[FOFormula] = []
    for part in parts:
        flat.extend(part.parts if isinstance(part, FOAnd) else (part,))
    return flat[0] if len(flat) == 1 else FOAnd(tuple(flat))


def _equalities(pairs: Sequence[Tuple[str, str]]) -> FOFormula:
    return conj(*(FOEq(Var(a), Var(b)) for a, b in pairs)) if pairs else FOAnd(())


@dataclass(frozen=True)
class RelationVariable:
    """
    A second-order variable. ``parent`` names the relation it is bounded by:
    a subset of the parent, or of parent × M when ``widened``. A ``forced``
    variable equals parent × M exactly.
    """
    name: str
    arity: int
    parent: Optional[str] = None
    widened: bool = False
    forced: bool = False


@dataclass(frozen=True)
class ESOSentence:
    """∃R1 ... ∃Rk α(R) with the team predicate R left free."""
    team_predicate: str
    team_arity: int
    prefix: Tuple[RelationVariable, ...]
    matrix: FOFormula

    def arities(self) -> Dict[str, int]:
        arities = {variable.name: variable.arity for variable in self.prefix}
        arities[self.team_predicate] = self.team_arity
        return arities

    def to_dict(self) -> Dict[str, Any]:
        return {
            "team_predicate": {"name": self.team_predicate, "arity": self.team_arity},
            "prefix": [{"name": v.name, "arity": v.arity} for v in self.prefix],
            "sentence": format_eso(self),
        }


class _Translator:
    def __init__(self, stem: str) -> None:
        self.stem = stem
        self.prefix: List[RelationVariable] = []
        self._variables = 0

    def fresh(self, count: int) -> List[str]:
        names = [f"v{self._variables + i}" for i in range(count)]
        self._variables += count
        return names

    def relation(self, arity: int, parent: str, widened: bool = False, forced: bool = False) -> str:
        name = f"{self.stem}{len(self.prefix) + 1}"
        self.prefix.append(RelationVariable(name, arity, parent, widened, forced))
        return name

    @staticmethod
    def lookup(columns: Sequence[str], tuple_vars: Sequence[str], name: str) -> str:
        # the rightmost column wins: a requantified variable shadows the outer one
        for position in range(len(columns) - 1, -1, -1):
            if columns[position] == name:
                return tuple_vars[position]
        raise UnboundVariableError(f"variable {name} is not a team column")

    def clause(self, node: Formula, relation: str, columns: Tuple[str, ...]) -> FOFormula:
        k = len(columns)
        if isinstance(node, (Eq, NegEq, Rel, NegRel)):
            w = self.fresh(k)
            mapping = {name: self.lookup(columns, w, name) for name in set(columns)}
            return FOForall(tuple(w), FOImplies(_row(relation, w), _literal(node, mapping)))

        if isinstance(node, Dep):
            w, w2 = self.fresh(k), self.fresh(k)
            same = [(self.lookup(columns, w, x), self.lookup(columns, w2, x)) for x in node.determiners]
            y = (self.lookup(columns, w, node.dependent), self.lookup(columns, w2, node.dependent))
            return FOForall(
                tuple(w + w2),
                FOImplies(conj(_row(relation, w), _row(relation, w2), *_eq_parts(same)), FOEq(Var(y[0]), Var(y[1]))),
            )

        if isinstance(node, Incl):
            w, w2 = self.fresh(k), self.fresh(k)
            pairs = [(self.lookup(columns, w, x), self.lookup(columns, w2, y)) for x, y in zip(node.left, node.right)]
            return FOForall(
                tuple(w),
                FOImplies(_row(relation, w), FOExists(tuple(w2), conj(_row(relation, w2), *_eq_parts(pairs)))),
            )

        if isinstance(node, Excl):
            w, w2 = self.fresh(k), self.fresh(k)
            pairs = [(self.lookup(columns, w, x), self.lookup(columns, w2, y)) for x, y in zip(node.left, node.right)]
            return FOForall(
                tuple(w + w2),
                FOImplies(conj(_row(relation, w), _row(relation, w2)), FONot(_equalities(pairs))),
            )

        if isinstance(node, Indep):
            w, w2, w3 = self.fresh(k), self.fresh(k), self.fresh(k)
            same_given = [(self.lookup(columns, w, z), self.lookup(columns, w2, z)) for z in node.given]
            witness = (
                [(self.lookup(columns, w3, z), self.lookup(columns, w, z)) for z in node.given]
                + [(self.lookup(columns, w3, x), self.lookup(columns, w, x)) for x in node.left]
                + [(self.lookup(columns, w3, y), self.lookup(columns, w2, y)) for y in node.right]
            )
            return FOForall(
                tuple(w + w2),
                FOImplies(
                    conj(_row(relation, w), _row(relation, w2), *_eq_parts(same_given)),
                    FOExists(tuple(w3), conj(_row(relation, w3), *_eq_parts(witness))),
                ),
            )

        if isinstance(node, And):
            return conj(self.clause(node.left, relation, columns), self.clause(node.right, relation, columns))

        if isinstance(node, TensorOr):
            left = self.relation(k, relation)
            right = self.relation(k, relation)
            w = self.fresh(k)
            cover = FOForall(tuple(w), FOImplies(_row(relation, w), FOOr((_row(left, w), _row(right, w)))))
            w_left, w_right = self.fresh(k), self.fresh(k)
            return conj(
                cover,
                FOForall(tuple(w_left), FOImplies(_row(left, w_left), _row(relation, w_left))),
                FOForall(tuple(w_right), FOImplies(_row(right, w_right), _row(relation, w_right))),
                self.clause(node.left, left, columns),
                self.clause(node.right, right, columns),
            )

        if isinstance(node, Exists):
            wider = self.relation(k + 1, relation, widened=True)
            w = self.fresh(k + 1)
            w2 = self.fresh(k + 1)
            return conj(
                FOForall(tuple(w[:k]), FOImplies(_row(relation, w[:k]), FOExists((w[k],), _row(wider, w)))),
                FOForall(tuple(w2), FOImplies(_row(wider, w2), _row(relation, w2[:k]))),
                self.clause(node.body, wider, columns + (node.var,)),
            )

        if isinstance(node, Forall):
            wider = self.relation(k + 1, relation, widened=True, forced=True)
            w = self.fresh(k + 1)
            return conj(
                FOForall(tuple(w), FOIff(_row(wider, w), _row(relation, w[:k]))),
                self.clause(node.body, wider, columns + (node.var,)),
            )

        raise UnsupportedConstructError(
            f"no ESO translation for {type(node).__name__} in {format_formula(node)}; "
            "only lax FO(dep, indep, inc, excl) is translated"
        )


def _row(relation: str, names: Sequence[str]) -> FOAtom:
    return FOAtom(relation, tuple(Var(name) for name in names))


def _eq_parts(pairs: Sequence[Tuple[str, str]]) -> List[FOFormula]:
    return [FOEq(Var(a), Var(b)) for a, b in pairs]


def _literal(node: Formula, mapping: Mapping[str, str]) -> FOFormula:
    if isinstance(node, (Eq, NegEq)):
        equation = FOEq(rename_term(node.left, mapping), rename_term(node.right, mapping))
        return equation if isinstance(node, Eq) else FONot(equation)
    atom = FOAtom(node.symbol, tuple(rename_term(arg, mapping) for arg in node.args))
    return atom if isinstance(node, Rel) else FONot(atom)


def _stem(taken: Set[str]) -> str:
    stem = "R"
    while any(name == stem or (name.startswith(stem) and name[len(stem):].isdigit()) for name in taken):
        stem += "R"
    return stem


def translate(formula: Formula, team_vars: Sequence[str]) -> ESOSentence:
    """
    χ_φ(R) with M ⊨_X φ ⟺ (M, X[v⃗]) ⊨ χ_φ(R) for teams over ``team_vars``.

    Raises:
        UnsupportedConstructError: strict operators, negations, →, ⋁, ∃¹, ∀¹
        UnboundVariableError: a free variable of φ is not in ``team_vars``
    """
    team_vars = tuple(team_vars)
    missing = free_vars(formula) - set(team_vars)
    if missing:
        raise UnboundVariableError(f"free variables {sorted(missing)} are not among the team variables {list(team_vars)}")
    stem = _stem(set(formula_signature(formula).symbols()))
    translator = _Translator(stem)
    matrix = translator.clause(formula, stem, team_vars)
    sentence = ESOSentence(stem, len(team_vars), tuple(translator.prefix), matrix)
    logger.debug(f"Translated {format_formula(formula)} with {len(sentence.prefix)} relation variables")
    return sentence


def fo_relations(formula: FOFormula) -> FrozenSet[str]:
    """Relation symbols occurring in an FO formula."""
    if isinstance(formula, FOAtom):
        return frozenset((formula.symbol,))
    if isinstance(formula, FOEq):
        return frozenset()
    if isinstance(formula, (FONot, FOExists, FOForall)):
        return fo_relations(formula.body)
    if isinstance(formula, (FOAnd, FOOr)):
        found: FrozenSet[str] = frozenset()
        for part in formula.parts:
            found |= fo_relations(part)
        return found
    return fo_relations(formula.left) | fo_relations(formula.right)


Relations = Mapping[str, FrozenSet[Row]]


class FOEvaluator:
    """
    Tarski semantics over a finite structure with extra relation tables.

    Universal quantifiers over an implication and existentials over a
    conjunction bind their variables through the relation atoms of the
    guard instead of ranging over the whole domain.
    """

    def __init__(self, structure: Structure, relations: Optional[Relations] = None) -> None:
        self.structure = structure
        self.relations: Dict[str, FrozenSet[Row]] = dict(relations or {})

    def table(self, symbol: str, arity: int) -> FrozenSet[Row]:
        if symbol in self.relations:
            rows = self.relations[symbol]
        elif symbol in self.structure.relations:
            rows = self.structure.relations[symbol]
            declared = self.structure.signature.relation_arity(symbol)
            if declared != arity:
                raise ArityError(f"relation {symbol} has arity {declared}, used with {arity} arguments")
            return rows
        else:
            raise UnboundRelationError(f"relation variable {symbol} is not interpreted")
        for row in rows:
            if len(row) != arity:
                raise ArityError(f"relation variable {symbol} holds {row}, used with {arity} arguments")
            break
        return rows

    def term(self, term: Term, assignment: Mapping[str, int]) -> int:
        if isinstance(term, Var):
            if term.name not in assignment:
                raise UnboundVariableError(f"variable {term.name} is unbound")
            return assignment[term.name]
        return self.structure.functions[term.symbol][tuple(self.term(arg, assignment) for arg in term.args)]

    def holds(self, formula: FOFormula, assignment: Optional[Mapping[str, int]] = None) -> bool:
        assignment = dict(assignment or {})
        return self._holds(formula, assignment)

    def _holds(self, formula: FOFormula, assignment: Dict[str, int]) -> bool:
        if isinstance(formula, FOAtom):
            row = tuple(self.term(arg, assignment) for arg in formula.args)
            return row in self.table(formula.symbol, len(formula.args))
        if isinstance(formula, FOEq):
            return self.term(formula.left, assignment) == self.term(formula.right, assignment)
        if isinstance(formula, FONot):
            return not self._holds(formula.body, assignment)
        if isinstance(formula, FOAnd):
            return all(self._holds(part, assignment) for part in formula.parts)
        if isinstance(formula, FOOr):
            return any(self._holds(part, assignment) for part in formula.parts)
        if isinstance(formula, FOImplies):
            return not self._holds(formula.left, assignment) or self._holds(formula.right, assignment)
        if isinstance(formula, FOIff):
            return self._holds(formula.left, assignment) == self._holds(formula.right, assignment)
        if isinstance(formula, FOForall):
            guard = formula.body.left if isinstance(formula.body, FOImplies) else None
            return all(
                self._holds(formula.body, {**assignment, **binding})
                for binding in self._bindings(formula.variables, guard, assignment)
            )
        if isinstance(formula, FOExists):
            guard = formula.body if isinstance(formula.body, (FOAnd, FOAtom)) else None
            return any(
                self._holds(formula.body, {**assignment, **binding})
                for binding in self._bindings(formula.variables, guard, assignment)
            )
        raise TypeError(f"unknown FO node {formula!r}")

    def _bindings(
        self, names: Sequence[str], guard: Optional[FOFormula], assignment: Mapping[str, int]
    ) -> Iterator[Dict[str, int]]:
        bound = set(names)
        atoms = []
        if guard is not None:
            parts = guard.parts if isinstance(guard, FOAnd) else (guard,)
            atoms = [
                part for part in parts
                if isinstance(part, FOAtom) and part.args and all(isinstance(arg, Var) for arg in part.args)
                and any(arg.name in bound for arg in part.args)
            ]
        partial: List[Dict[str, int]] = [{}]
        for atom in atoms:
            extended = []
            for binding in partial:
                for row in self.table(atom.symbol, len(atom.args)):
                    candidate = dict(binding)
                    if all(self._unify(arg.name, value, candidate, bound, assignment) for arg, value in zip(atom.args, row)):
                        extended.append(candidate)
            partial = extended
        for binding in partial:
            rest = [name for name in names if name not in binding]
            for values in itertools.product(self.structure.domain, repeat=len(rest)):
                yield {**binding, **dict(zip(rest, values))}

    @staticmethod
    def _unify(name: str, value: int, binding: Dict[str, int], bound: Set[str], assignment: Mapping[str, int]) -> bool:
        if name in binding:
            return binding[name] == value
        if name in bound:
            binding[name] = value
            return True
        if name in assignment:
            return assignment[name] == value
        raise UnboundVariableError(f"variable {name} is unbound")


def eval_fo(
    structure: Structure,
    formula: FOFormula,
    relations: Optional[Relations] = None,
    assignment: Optional[Mapping[str, int]] = None,
) -> bool:
    """Standard first-order evaluation with relation variables bound by ``relations``."""
    return FOEvaluator(structure, relations).holds(formula, assignment)


def _conjuncts(formula: FOFormula) -> Tuple[FOFormula, ...]:
    return formula.parts if isinstance(formula, FOAnd) else (formula,)


def _candidate_base(
    variable: RelationVariable, env: Mapping[str, FrozenSet[Row]], structure: Structure, config: BudgetConfig
) -> List[Row]:
    if variable.parent is None:
        base = list(itertools.product(structure.domain, repeat=variable.arity))
    elif variable.widened:
        base = [row + (a,) for row in sorted(env[variable.parent]) for a in structure.domain]
    else:
        base = sorted(env[variable.parent])
    if not variable.forced and len(base) > config.max_eso_tuples:
        raise BudgetExceededError(
            f"relation variable {variable.name} has {len(base)} candidate tuples, over max_eso_tuples={config.max_eso_tuples}",
            "max_eso_tuples",
            config.max_eso_tuples,
        )
    return base


def eval_eso(
    structure: Structure,
    sentence: ESOSentence,
    team_relation: FrozenSet[Row],
    budget: Optional[BudgetConfig] = None,
) -> bool:
    """
    (M, R) ⊨ ∃R1 ... ∃Rk α: depth-first search over interpretations of the
    prefix, smallest bitmask first, checking each top-level conjunct as soon
    as every relation variable it mentions is assigned.
    """
    config = budget or get_default_budget_config()
    team_relation = frozenset(team_relation)
    for row in team_relation:
        if len(row) != sentence.team_arity:
            raise ArityError(f"team relation row {row} does not have arity {sentence.team_arity}")
    prefix = sentence.prefix
    level = {variable.name: depth for depth, variable in enumerate(prefix)}
    schedule: List[List[FOFormula]] = [[] for _ in range(len(prefix) + 1)]
    for part in _conjuncts(sentence.matrix):
        depth = max((level[name] + 1 for name in fo_relations(part) if name in level), default=0)
        schedule[depth].append(part)

    env: Dict[str, FrozenSet[Row]] = {sentence.team_predicate: team_relation}
    evaluator = FOEvaluator(structure, env)

    def check(depth: int) -> bool:
        return all(evaluator.holds(part) for part in schedule[depth])

    def search(depth: int) -> bool:
        if depth == len(prefix):
            return True
        variable = prefix[depth]
        base = _candidate_base(variable, env, structure, config)
        if variable.forced:
            candidates: Iterator[FrozenSet[Row]] = iter([frozenset(base)])
        else:
            candidates = (
                frozenset(base[i] for i in range(len(base)) if mask >> i & 1) for mask in range(2 ** len(base))
            )
        for candidate in candidates:
            env[variable.name] = candidate
            if check(depth + 1) and search(depth + 1):
                return True
        del env[variable.name]
        return False

    return check(0) and search(0)


@dataclass
class CrosscheckResult:
    direct: bool
    via_eso: bool

    @property
    def agrees(self) -> bool:
        return self.direct == self.via_eso

    def to_dict(self) -> Dict[str, Any]:
        return {"direct": self.direct, "via_eso": self.via_eso, "agrees": self.agrees}


def crosscheck(
    structure: Structure,
    team: Team,
    formula: Formula,
    team_vars: Optional[Sequence[str]] = None,
    budget: Optional[BudgetConfig] = None,
) -> CrosscheckResult:
    """Evaluate φ directly and through its ESO translation with R := X[v⃗]."""
    team_vars = tuple(team_vars) if team_vars is not None else team.variables
    sentence = translate(formula, team_vars)
    direct = TeamEvaluator(structure, budget).eval(team, formula)
    via_eso = eval_eso(structure, sentence, project(team, team_vars), budget)
    result = CrosscheckResult(direct, via_eso)
    if not result.agrees:
        logger.error(f"ESO crosscheck mismatch for {format_formula(formula)}: direct={direct} via_eso={via_eso}")
    return result


def format_fo(formula: FOFormula) -> str:
    """ASCII rendering; compound subformulas are always parenthesized."""
    if isinstance(formula, FOAtom):
        return f"{formula.symbol}({', '.join(format_term(arg) for arg in formula.args)})"
    if isinstance(formula, FOEq):
        return f"{format_term(formula.left)} = {format_term(formula.right)}"
    if isinstance(formula, FONot):
        return f"~{_wrap(formula.body)}"
    if isinstance(formula, FOAnd):
        return " & ".join(_wrap(part) for part in formula.parts) if formula.parts else "T"
    if isinstance(formula, FOOr):
        return " | ".join(_wrap(part) for part in formula.parts) if formula.parts else "F"
    if isinstance(formula, FOImplies):
        return f"{_wrap(formula.left)} -> {_wrap(formula.right)}"
    if isinstance(formula, FOIff):
        return f"{_wrap(formula.left)} <-> {_wrap(formula.right)}"
    keyword = "A" if isinstance(formula, FOForall) else "E"
    if not formula.variables:
        return format_fo(formula.body)
    return f"{keyword} {' '.join(formula.variables)} ({format_fo(formula.body)})"


def _wrap(formula: FOFormula) -> str:
    text = format_fo(formula)
    atomic = isinstance(formula, (FOAtom, FOEq, FONot)) or (isinstance(formula, (FOAnd, FOOr)) and not formula.parts)
    return text if atomic else f"({text})"


def format_eso(sentence: ESOSentence) -> str:
    prefix = " ".join(f"E{variable.name}/{variable.arity}" for variable in sentence.prefix)
    matrix = format_fo(sentence.matrix)
    return f"{prefix} ({matrix})" if prefix else matrix

