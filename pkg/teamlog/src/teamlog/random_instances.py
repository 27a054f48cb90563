"""
Seeded generators for structures, teams, terms and formulas over the lab
signature (P/1, R/2, f/1, c/0), used by the suites and the tests.
"""

import itertools
import logging
import random
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

from .core_model import Signature, Structure, SupplementFunction, Team
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
)
from .terms import Func, Term, Var

logger = logging.getLogger(__name__)

LAB_SIGNATURE = Signature.of({"P": 1, "R": 2}, {"f": 1, "c": 0})
RELATIONAL_SIGNATURE = Signature.of({"P": 1, "R": 2})

PROFILES = {
    "fo": {"atoms": (), "binary": (And, TensorOr), "unary": (), "quantifiers": (Exists, Forall)},
    "downward": {"atoms": ("dep", "excl"), "binary": (And, TensorOr), "unary": (), "quantifiers": (Exists, Forall)},
    "union": {"atoms": ("inc",), "binary": (And, TensorOr), "unary": (), "quantifiers": (Exists, Forall)},
    "lax": {
        "atoms": ("dep", "inc", "indep", "excl"),
        "binary": (And, TensorOr),
        "unary": (),
        "quantifiers": (Exists, Forall),
    },
    "full": {
        "atoms": ("dep", "inc", "indep", "excl"),
        "binary": (And, TensorOr, TensorOrStrict, IntOr, IntImpl),
        "unary": (WeakNeg, ClassNeg),
        "quantifiers": (Exists, ExistsStrict, Forall, Exists1, Forall1),
    },
}


def random_structure(rng: random.Random, signature: Signature, size: int) -> Structure:
    """Every relation tuple present with probability 1/2; functions uniform."""
    relations = {}
    for name, arity in signature.relations:
        relations[name] = [row for row in itertools.product(range(size), repeat=arity) if rng.random() < 0.5]
        if arity == 0:
            relations[name] = bool(relations[name])
    functions = {}
    for name, arity in signature.functions:
        functions[name] = {args: rng.randrange(size) for args in itertools.product(range(size), repeat=arity)}
    return Structure.build(signature, size, relations, functions)


def random_team(rng: random.Random, variables: Sequence[str], size: int, max_rows: int, min_rows: int = 0) -> Team:
    space = list(itertools.product(range(size), repeat=len(variables)))
    count = rng.randint(min(min_rows, len(space)), min(max_rows, len(space)))
    return Team(tuple(variables), tuple(rng.sample(space, count)))


def random_term(rng: random.Random, variables: Sequence[str], depth: int = 2, signature: Signature = LAB_SIGNATURE) -> Term:
    functions = [(name, arity) for name, arity in signature.functions]
    if depth <= 0 or not functions or rng.random() < 0.5:
        constants = [name for name, arity in functions if arity == 0]
        if variables and (not constants or rng.random() < 0.8):
            return Var(rng.choice(list(variables)))
        return Func(rng.choice(constants))
    name, arity = rng.choice(functions)
    return Func(name, tuple(random_term(rng, variables, depth - 1, signature) for _ in range(arity)))


class FormulaGenerator:
    """
    Random formulas of one profile. ``max_quantifiers`` and ``max_splits``
    cap the number of quantifiers and tensor disjunctions per formula.
    """

    def __init__(
        self,
        rng: random.Random,
        profile: str = "lax",
        signature: Signature = LAB_SIGNATURE,
        bound_pool: Sequence[str] = ("y", "z"),
        max_quantifiers: int = 2,
        max_splits: int = 2,
        term_depth: int = 1,
    ) -> None:
        if profile not in PROFILES:
            raise ValueError(f"Unknown formula profile: {profile}. Available: {list(PROFILES.keys())}")
        self.rng = rng
        self.profile = PROFILES[profile]
        self.signature = signature
        self.bound_pool = tuple(bound_pool)
        self.max_quantifiers = max_quantifiers
        self.max_splits = max_splits
        self.term_depth = term_depth

    def formula(self, free: Sequence[str], depth: int) -> Formula:
        self._quantifiers = 0
        self._splits = 0
        return self._node(tuple(free), depth)

    def _node(self, scope: Tuple[str, ...], depth: int) -> Formula:
        rng = self.rng
        if depth <= 1 or rng.random() < 0.3:
            return self._leaf(scope)
        options = ["binary"]
        if self.profile["unary"]:
            options.append("unary")
        if self._quantifiers < self.max_quantifiers and self.bound_pool:
            options.append("quantifier")
        choice = rng.choice(options)
        if choice == "quantifier":
            self._quantifiers += 1
            var = rng.choice(self.bound_pool)
            kind = rng.choice(self.profile["quantifiers"])
            inner = scope if var in scope else scope + (var,)
            return kind(var, self._node(inner, depth - 1))
        if choice == "unary":
            return rng.choice(self.profile["unary"])(self._node(scope, depth - 1))
        kinds = [k for k in self.profile["binary"] if k not in (TensorOr, TensorOrStrict) or self._splits < self.max_splits]
        kind = rng.choice(kinds)
        if kind in (TensorOr, TensorOrStrict):
            self._splits += 1
        return kind(self._node(scope, depth - 1), self._node(scope, depth - 1))

    def _leaf(self, scope: Tuple[str, ...]) -> Formula:
        rng = self.rng
        atoms = self.profile["atoms"]
        if atoms and scope and rng.random() < 0.5:
            return self._atom(rng.choice(atoms), scope)
        return self._literal(scope)

    def _literal(self, scope: Tuple[str, ...]) -> Formula:
        rng = self.rng
        relations = list(self.signature.relations)
        if relations and rng.random() < 0.5:
            name, arity = rng.choice(relations)
            args = tuple(random_term(rng, scope, self.term_depth, self.signature) for _ in range(arity))
            return rng.choice((Rel, NegRel))(name, args)
        left = random_term(rng, scope, self.term_depth, self.signature)
        right = random_term(rng, scope, self.term_depth, self.signature)
        return rng.choice((Eq, NegEq))(left, right)

    def _atom(self, kind: str, scope: Tuple[str, ...]) -> Formula:
        rng = self.rng
        pick = lambda count: tuple(rng.choice(scope) for _ in range(count))  # noqa: E731
        if kind == "dep":
            return Dep(pick(rng.randint(0, min(2, len(scope)))), rng.choice(scope))
        width = rng.randint(1, min(2, len(scope)))
        if kind == "inc":
            return Incl(pick(width), pick(width))
        if kind == "excl":
            return Excl(pick(width), pick(width))
        return Indep(pick(1), pick(1), pick(rng.randint(0, 1)))


def random_formula(
    rng: random.Random, free: Sequence[str], depth: int = 3, profile: str = "lax", **options
) -> Formula:
    return FormulaGenerator(rng, profile, **options).formula(free, depth)


@dataclass
class SubstitutionInstance:
    structure: Structure
    team: Team
    formula: Formula
    term: Term
    name: str


def substitution_instance(rng: random.Random, max_n: int = 3, max_rows: int = 4) -> SubstitutionInstance:
    """
    φ over free variables {w, x}, substituting a term over {w, x} for x.
    Bound variables come from {y, z, x}, so the term is never captured.
    """
    size = rng.randint(1, max_n)
    structure = random_structure(rng, LAB_SIGNATURE, size)
    team = random_team(rng, ("w", "x"), size, max_rows)
    generator = FormulaGenerator(rng, "full", bound_pool=("y", "z", "x"), max_quantifiers=2, max_splits=1)
    formula = generator.formula(("w", "x"), rng.randint(1, 4))
    term = random_term(rng, ("w", "x"), 2)
    return SubstitutionInstance(structure, team, formula, term, "x")


@dataclass
class FamilyInstance:
    structures: Tuple[Structure, ...]
    teams: Tuple[Team, ...]
    others: Tuple[Team, ...]
    elements: Tuple[int, ...]
    functions: Tuple[SupplementFunction, ...]
    generator: int


def family_instance(
    rng: random.Random,
    max_index: int = 3,
    max_n: int = 3,
    max_rows: int = 3,
    variables: Sequence[str] = ("x", "y"),
    signature: Signature = LAB_SIGNATURE,
) -> FamilyInstance:
    """A structure family with two team families, elements and supplement functions per index."""
    index_size = rng.randint(1, max_index)
    structures = tuple(random_structure(rng, signature, rng.randint(1, max_n)) for _ in range(index_size))
    teams = tuple(random_team(rng, variables, m.size, max_rows) for m in structures)
    others = tuple(random_team(rng, variables, m.size, max_rows) for m in structures)
    elements = tuple(rng.randrange(m.size) for m in structures)
    functions = []
    for structure, team in zip(structures, teams):
        choice: Dict = {}
        for row in team.rows:
            count = rng.randint(1, structure.size)
            choice[row] = frozenset(rng.sample(range(structure.size), count))
        functions.append(SupplementFunction(team, choice))
    return FamilyInstance(structures, teams, others, elements, tuple(functions), rng.randrange(index_size))


def satisfying_team(
    rng: random.Random,
    structure: Structure,
    formulas: Sequence[Formula],
    variables: Sequence[str],
    attempts: int = 50,
    max_rows: int = 4,
    evaluator=None,
) -> Optional[Team]:
    """A random nonempty team over the variables satisfying every formula, if one turns up."""
    from .evaluator import TeamEvaluator

    evaluator = evaluator or TeamEvaluator(structure, persistent=True)
    for _ in range(attempts):
        team = random_team(rng, variables, structure.size, max_rows, min_rows=1)
        if all(evaluator.eval(team, formula) for formula in formulas):
            return team
    return None


