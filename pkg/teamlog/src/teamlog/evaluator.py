"""
Team semantics: M ⊨_X φ for every connective, atom and quantifier, plus the
satisfiability searches and the Substitution Lemma checker.

Lax tensor disjunction searches covers Y ∪ Z = X (every row goes left, right
or both); the strict one searches partitions. Lax ∃ searches supplement
functions with nonempty image sets, smallest images first; strict ∃ uses
singleton images. When both sides of a split (or the body of an ∃) lie in a
downward-closed fragment the search runs row by row and prunes a side as soon
as it fails.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from ..config.budget_config import BudgetConfig, get_budget_config, get_default_budget_config
from .core_model import (
    Row,
    Signature,
    Structure,
    SupplementFunction,
    Team,
    count_structures,
    iter_structures,
    substitute_team,
    supplement,
    supplement_const,
)
from .errors import BudgetExceededError, FragmentError, UnboundVariableError
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
    check_signature,
    format_formula,
    fragment_of,
    free_vars,
    substitute,
)
from .terms import Term, Var

logger = logging.getLogger(__name__)

Rows = FrozenSet[Row]
Variables = Tuple[str, ...]


@dataclass(frozen=True)
class Certificate:
    """Witness found for the top-level connective of a satisfied formula."""
    kind: str
    left: Optional[Team] = None
    right: Optional[Team] = None
    function: Optional[SupplementFunction] = None
    element: Optional[int] = None
    disjunct: Optional[str] = None

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {"kind": self.kind}
        if self.left is not None:
            data["left"] = self.left.to_dict()
        if self.right is not None:
            data["right"] = self.right.to_dict()
        if self.function is not None:
            data["supplement"] = self.function.to_dict()
        if self.element is not None:
            data["element"] = self.element
        if self.disjunct is not None:
            data["disjunct"] = self.disjunct
        return data


def _subset(ordered: Sequence[Row], mask: int) -> Rows:
    return frozenset(ordered[i] for i in range(len(ordered)) if mask >> i & 1)


def _set_value(row: Row, position: int, value: int) -> Row:
    if position == len(row):
        return row + (value,)
    return row[:position] + (value,) + row[position + 1:]


def _extend(variables: Variables, name: str) -> Tuple[Variables, int]:
    if name in variables:
        return variables, variables.index(name)
    return variables + (name,), len(variables)


class TeamEvaluator:
    """
    Evaluates team formulas over one structure.

    The memo cache is keyed by (formula node id, variables, rows) and is
    cleared at every top-level call unless the evaluator is persistent; a
    persistent evaluator keeps every root formula it has seen alive so node
    ids stay unique.
    """

    def __init__(self, structure: Structure, budget: Optional[BudgetConfig] = None, persistent: bool = False) -> None:
        self.structure = structure
        self.config = budget or get_default_budget_config()
        self.persistent = persistent
        self.eval_calls = 0
        self._memo: Dict[Tuple[int, Variables, Rows], bool] = {}
        self._downward: Dict[int, bool] = {}
        self._local: Dict[int, bool] = {}
        self._free_cache: Dict[int, FrozenSet[str]] = {}
        self._positions_cache: Dict[Variables, Dict[str, int]] = {}
        self._roots: Dict[int, Formula] = {}
        self._visits = 0
        self._clauses: Dict[type, Callable[[Formula, Variables, Rows], bool]] = {
            Eq: self._eq,
            NegEq: self._neg_eq,
            Rel: self._rel,
            NegRel: self._neg_rel,
            Dep: self._dep,
            Incl: self._incl,
            Indep: self._indep,
            Excl: self._excl,
            And: lambda node, v, r: self._sat(node.left, v, r) and self._sat(node.right, v, r),
            TensorOr: lambda node, v, r: self._lax_split(node, v, r) is not None,
            TensorOrStrict: lambda node, v, r: self._strict_split(node, v, r) is not None,
            IntOr: lambda node, v, r: self._sat(node.left, v, r) or self._sat(node.right, v, r),
            IntImpl: self._implication,
            WeakNeg: lambda node, v, r: not r or not self._sat(node.body, v, r),
            ClassNeg: lambda node, v, r: not self._sat(node.body, v, r),
            Exists: lambda node, v, r: self._lax_supplement(node, v, r) is not None,
            ExistsStrict: lambda node, v, r: self._strict_supplement(node, v, r) is not None,
            Forall: self._forall,
            Exists1: lambda node, v, r: self._exists1_witness(node, v, r) is not None,
            Forall1: self._forall1,
        }

    @classmethod
    def with_config(cls, structure: Structure, profile: str = "desk", persistent: bool = False) -> "TeamEvaluator":
        return cls(structure, get_budget_config(profile), persistent)

    # public API

    def eval(self, team: Team, formula: Formula) -> bool:
        """M ⊨_X φ."""
        self._prepare(team, formula)
        return self._sat(formula, team.variables, frozenset(team.rows))

    def certificate(self, team: Team, formula: Formula) -> Optional[Certificate]:
        """
        Witness for the top-level connective, or None when the formula fails
        on the team or its top-level node needs no witness.
        """
        self._prepare(team, formula)
        variables, rows = team.variables, frozenset(team.rows)
        if isinstance(formula, (TensorOr, TensorOrStrict)):
            search = self._lax_split if isinstance(formula, TensorOr) else self._strict_split
            found = search(formula, variables, rows)
            if found is None:
                return None
            kind = "cover" if isinstance(formula, TensorOr) else "partition"
            return Certificate(kind, left=Team(variables, tuple(found[0])), right=Team(variables, tuple(found[1])))
        if isinstance(formula, (Exists, ExistsStrict)):
            search = self._lax_supplement if isinstance(formula, Exists) else self._strict_supplement
            choice = search(formula, variables, rows)
            if choice is None:
                return None
            return Certificate("supplement", function=SupplementFunction(team, choice))
        if isinstance(formula, Exists1):
            element = self._exists1_witness(formula, variables, rows)
            return None if element is None else Certificate("element", element=element)
        if isinstance(formula, IntOr):
            if self._sat(formula.left, variables, rows):
                return Certificate("disjunct", disjunct="left")
            if self._sat(formula.right, variables, rows):
                return Certificate("disjunct", disjunct="right")
        return None

    def verify_certificate(self, team: Team, formula: Formula, certificate: Certificate) -> bool:
        """Re-check a witness through the public operations, without the search."""
        if certificate.kind in ("cover", "partition"):
            left, right = certificate.left, certificate.right
            if set(left.rows) | set(right.rows) != set(team.rows):
                return False
            if certificate.kind == "partition" and set(left.rows) & set(right.rows):
                return False
            return self.eval(left, formula.left) and self.eval(right, formula.right)
        if certificate.kind == "supplement":
            function = certificate.function
            if isinstance(formula, ExistsStrict) and not function.is_singleton_valued:
                return False
            return self.eval(supplement(team, formula.var, function, self.structure), formula.body)
        if certificate.kind == "element":
            return self.eval(supplement_const(team, formula.var, certificate.element, self.structure), formula.body)
        if certificate.kind == "disjunct":
            side = formula.left if certificate.disjunct == "left" else formula.right
            return self.eval(team, side)
        return False

    # bookkeeping

    def _prepare(self, team: Team, formula: Formula) -> None:
        check_signature(formula, self.structure.signature)
        missing = free_vars(formula) - set(team.variables)
        if missing:
            raise UnboundVariableError(
                f"free variables {sorted(missing)} of {format_formula(formula)} are not in the team domain {list(team.variables)}"
            )
        team.check_domain(self.structure.size)
        if self.persistent:
            self._roots[id(formula)] = formula
        else:
            self._memo.clear()
            self._downward.clear()
            self._local.clear()
            self._free_cache.clear()
        self._visits = 0
        self.eval_calls += 1

    def _positions(self, variables: Variables) -> Dict[str, int]:
        positions = self._positions_cache.get(variables)
        if positions is None:
            positions = {name: i for i, name in enumerate(variables)}
            self._positions_cache[variables] = positions
        return positions

    def _is_downward(self, node: Formula) -> bool:
        if not self.config.prune_downward:
            return False
        key = id(node)
        if key not in self._downward:
            self._downward[key] = fragment_of(node).is_downward_closed_fragment
        return self._downward[key]

    def _is_local(self, node: Formula) -> bool:
        key = id(node)
        if key not in self._local:
            self._local[key] = not fragment_of(node).strict
        return self._local[key]

    def _free(self, node: Formula) -> FrozenSet[str]:
        key = id(node)
        if key not in self._free_cache:
            self._free_cache[key] = free_vars(node)
        return self._free_cache[key]

    def _check_rows(self, count: int, what: str) -> None:
        if count > self.config.max_split_rows:
            raise BudgetExceededError(
                f"{what} on {count} rows exceeds max_split_rows={self.config.max_split_rows}",
                "max_split_rows",
                self.config.max_split_rows,
            )

    def _sat(self, node: Formula, variables: Variables, rows: Rows) -> bool:
        self._visits += 1
        if self._visits > self.config.max_node_visits:
            raise BudgetExceededError(
                f"evaluation exceeded max_node_visits={self.config.max_node_visits}",
                "max_node_visits",
                self.config.max_node_visits,
            )
        if not self.config.memoize:
            return self._clauses[type(node)](node, variables, rows)
        key = (id(node), variables, rows)
        cached = self._memo.get(key)
        if cached is None:
            cached = self._clauses[type(node)](node, variables, rows)
            self._memo[key] = cached
        return cached

    def _term(self, term: Term, positions: Dict[str, int], row: Row) -> int:
        if isinstance(term, Var):
            return row[positions[term.name]]
        args = tuple(self._term(arg, positions, row) for arg in term.args)
        return self.structure.functions[term.symbol][args]

    # literals and atoms

    def _eq(self, node: Eq, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        return all(self._term(node.left, positions, row) == self._term(node.right, positions, row) for row in rows)

    def _neg_eq(self, node: NegEq, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        return all(self._term(node.left, positions, row) != self._term(node.right, positions, row) for row in rows)

    def _rel(self, node: Rel, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        table = self.structure.relations[node.symbol]
        return all(tuple(self._term(arg, positions, row) for arg in node.args) in table for row in rows)

    def _neg_rel(self, node: NegRel, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        table = self.structure.relations[node.symbol]
        return all(tuple(self._term(arg, positions, row) for arg in node.args) not in table for row in rows)

    def _dep(self, node: Dep, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        determiners = [positions[name] for name in node.determiners]
        dependent = positions[node.dependent]
        seen: Dict[Row, int] = {}
        for row in rows:
            key = tuple(row[p] for p in determiners)
            if seen.setdefault(key, row[dependent]) != row[dependent]:
                return False
        return True

    def _incl(self, node: Incl, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        left = [positions[name] for name in node.left]
        right = [positions[name] for name in node.right]
        available = {tuple(row[p] for p in right) for row in rows}
        return all(tuple(row[p] for p in left) in available for row in rows)

    def _indep(self, node: Indep, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        given = [positions[name] for name in node.given]
        left = [positions[name] for name in node.left]
        right = [positions[name] for name in node.right]
        groups: Dict[Row, Tuple[set, set, set]] = {}
        for row in rows:
            xs, ys, pairs = groups.setdefault(tuple(row[p] for p in given), (set(), set(), set()))
            x = tuple(row[p] for p in left)
            y = tuple(row[p] for p in right)
            xs.add(x)
            ys.add(y)
            pairs.add((x, y))
        return all(len(pairs) == len(xs) * len(ys) for xs, ys, pairs in groups.values())

    def _excl(self, node: Excl, variables: Variables, rows: Rows) -> bool:
        positions = self._positions(variables)
        left = {tuple(row[positions[name]] for name in node.left) for row in rows}
        right = {tuple(row[positions[name]] for name in node.right) for row in rows}
        return left.isdisjoint(right)

    # splits

    def _partition_search(
        self, left: Formula, right: Formula, variables: Variables, ordered: Sequence[Row]
    ) -> Optional[Tuple[Rows, Rows]]:
        # both sides downward closed: a side that fails stays failed as rows are added
        ys: List[Row] = []
        zs: List[Row] = []

        def place(position: int) -> Optional[Tuple[Rows, Rows]]:
            if position == len(ordered):
                return frozenset(ys), frozenset(zs)
            row = ordered[position]
            for side, formula in ((ys, left), (zs, right)):
                side.append(row)
                if self._sat(formula, variables, frozenset(side)):
                    found = place(position + 1)
                    if found is not None:
                        return found
                side.pop()
            return None

        return place(0)

    def _lax_split(self, node: TensorOr, variables: Variables, rows: Rows) -> Optional[Tuple[Rows, Rows]]:
        ordered = sorted(rows)
        left_down, right_down = self._is_downward(node.left), self._is_downward(node.right)
        if left_down and right_down:
            return self._partition_search(node.left, node.right, variables, ordered)
        self._check_rows(len(ordered), "tensor split")
        if left_down:
            found = self._cover_search(node.right, node.left, variables, ordered, True)
            return None if found is None else (found[1], found[0])
        return self._cover_search(node.left, node.right, variables, ordered, right_down)

    def _cover_search(
        self, first: Formula, second: Formula, variables: Variables, ordered: Sequence[Row], minimal_second: bool
    ) -> Optional[Tuple[Rows, Rows]]:
        # a downward-closed second side only needs the rows the first side leaves out
        full = (1 << len(ordered)) - 1
        for first_mask in range(full, -1, -1):
            first_rows = _subset(ordered, first_mask)
            if not self._sat(first, variables, first_rows):
                continue
            rest = full & ~first_mask
            overlap = 0
            while True:
                second_rows = _subset(ordered, rest | overlap)
                if self._sat(second, variables, second_rows):
                    return first_rows, second_rows
                if minimal_second or overlap == first_mask:
                    break
                overlap = (overlap - first_mask) & first_mask
        return None

    def _strict_split(self, node: TensorOrStrict, variables: Variables, rows: Rows) -> Optional[Tuple[Rows, Rows]]:
        ordered = sorted(rows)
        if self._is_downward(node.left) and self._is_downward(node.right):
            return self._partition_search(node.left, node.right, variables, ordered)
        self._check_rows(len(ordered), "strict tensor split")
        full = (1 << len(ordered)) - 1
        for left_mask in range(full, -1, -1):
            left_rows = _subset(ordered, left_mask)
            if self._sat(node.left, variables, left_rows):
                right_rows = _subset(ordered, full ^ left_mask)
                if self._sat(node.right, variables, right_rows):
                    return left_rows, right_rows
        return None

    def _implication(self, node: IntImpl, variables: Variables, rows: Rows) -> bool:
        ordered = sorted(rows)
        self._check_rows(len(ordered), "implication")
        for mask in range(1 << len(ordered)):
            subteam = _subset(ordered, mask)
            if self._sat(node.left, variables, subteam) and not self._sat(node.right, variables, subteam):
                return False
        return True

    # quantifiers

    def _singleton_search(
        self, body: Formula, variables: Variables, bases: Sequence[Row], position: int, prune: bool
    ) -> Optional[List[int]]:
        domain = list(self.structure.domain)
        if not prune:
            for values in itertools.product(domain, repeat=len(bases)):
                team = frozenset(_set_value(row, position, a) for row, a in zip(bases, values))
                if self._sat(body, variables, team):
                    return list(values)
            return None
        chosen: List[int] = []
        built: List[Row] = []

        def place(index: int) -> bool:
            if index == len(bases):
                return True
            for a in domain:
                built.append(_set_value(bases[index], position, a))
                chosen.append(a)
                if self._sat(body, variables, frozenset(built)) and place(index + 1):
                    return True
                built.pop()
                chosen.pop()
            return False

        return chosen if place(0) else None

    def _lax_supplement(self, node: Exists, variables: Variables, rows: Rows) -> Optional[Dict[Row, FrozenSet[int]]]:
        new_variables, position = _extend(variables, node.var)
        # rows with equal keys take the same image; without strict operators the
        # body is local, so only the free variables of the quantified formula count
        if self._is_local(node.body):
            positions = self._positions(variables)
            columns = sorted(positions[name] for name in self._free(node))
        else:
            columns = [i for i in range(len(variables)) if i != position]
        classes: Dict[Row, List[Row]] = {}
        for row in sorted(rows):
            classes.setdefault(tuple(row[i] for i in columns), []).append(row)
        bases = [members[0] for members in classes.values()]
        self._check_rows(len(bases), "supplement search")

        def expand(images: Sequence[FrozenSet[int]]) -> Dict[Row, FrozenSet[int]]:
            return {row: image for members, image in zip(classes.values(), images) for row in members}

        prune = self._is_downward(node.body)
        values = self._singleton_search(node.body, new_variables, bases, position, prune)
        if values is not None:
            return expand([frozenset((a,)) for a in values])
        if prune:
            return None
        image_sets = [
            frozenset(combo)
            for size in range(1, self.structure.size + 1)
            for combo in itertools.combinations(self.structure.domain, size)
        ]
        for images in itertools.product(image_sets, repeat=len(bases)):
            if all(len(image) == 1 for image in images):
                continue
            team = frozenset(_set_value(row, position, a) for row, image in zip(bases, images) for a in image)
            if self._sat(node.body, new_variables, team):
                return expand(images)
        return None

    def _strict_supplement(
        self, node: ExistsStrict, variables: Variables, rows: Rows
    ) -> Optional[Dict[Row, FrozenSet[int]]]:
        new_variables, position = _extend(variables, node.var)
        ordered = sorted(rows)
        self._check_rows(len(ordered), "strict supplement search")
        values = self._singleton_search(node.body, new_variables, ordered, position, self._is_downward(node.body))
        if values is None:
            return None
        return {row: frozenset((a,)) for row, a in zip(ordered, values)}

    def _forall(self, node: Forall, variables: Variables, rows: Rows) -> bool:
        new_variables, position = _extend(variables, node.var)
        team = frozenset(_set_value(row, position, a) for row in rows for a in self.structure.domain)
        return self._sat(node.body, new_variables, team)

    def _exists1_witness(self, node: Exists1, variables: Variables, rows: Rows) -> Optional[int]:
        new_variables, position = _extend(variables, node.var)
        for a in self.structure.domain:
            if self._sat(node.body, new_variables, frozenset(_set_value(row, position, a) for row in rows)):
                return a
        return None

    def _forall1(self, node: Forall1, variables: Variables, rows: Rows) -> bool:
        new_variables, position = _extend(variables, node.var)
        return all(
            self._sat(node.body, new_variables, frozenset(_set_value(row, position, a) for row in rows))
            for a in self.structure.domain
        )


def evaluate(structure: Structure, team: Team, formula: Formula, budget: Optional[BudgetConfig] = None) -> bool:
    """M ⊨_X φ with a fresh evaluator."""
    return TeamEvaluator(structure, budget).eval(team, formula)


def _tarski(structure: Structure, formula: Formula, assignment: Dict[str, int]) -> bool:
    def term(t: Term) -> int:
        if isinstance(t, Var):
            return assignment[t.name]
        return structure.functions[t.symbol][tuple(term(arg) for arg in t.args)]

    if isinstance(formula, Eq):
        return term(formula.left) == term(formula.right)
    if isinstance(formula, NegEq):
        return term(formula.left) != term(formula.right)
    if isinstance(formula, Rel):
        return tuple(term(arg) for arg in formula.args) in structure.relations[formula.symbol]
    if isinstance(formula, NegRel):
        return tuple(term(arg) for arg in formula.args) not in structure.relations[formula.symbol]
    if isinstance(formula, And):
        return _tarski(structure, formula.left, assignment) and _tarski(structure, formula.right, assignment)
    if isinstance(formula, (TensorOr, TensorOrStrict)):
        return _tarski(structure, formula.left, assignment) or _tarski(structure, formula.right, assignment)
    if isinstance(formula, (Exists, ExistsStrict, Forall)):
        outcomes = (
            _tarski(structure, formula.body, {**assignment, formula.var: a}) for a in structure.domain
        )
        return all(outcomes) if isinstance(formula, Forall) else any(outcomes)
    raise FragmentError(f"not a first-order formula: {format_formula(formula)}")


def eval_flat_fo(structure: Structure, team: Team, formula: Formula) -> bool:
    """Per-assignment Tarski evaluation of a first-order formula."""
    if not fragment_of(formula).is_first_order:
        raise FragmentError(f"eval_flat_fo needs a first-order formula, got {format_formula(formula)}")
    check_signature(formula, structure.signature)
    missing = free_vars(formula) - set(team.variables)
    if missing:
        raise UnboundVariableError(f"free variables {sorted(missing)} are not in the team domain")
    return all(_tarski(structure, formula, assignment.as_dict()) for assignment in team.assignments())


def _team_space(structure: Structure, variables: Sequence[str], config: BudgetConfig) -> List[Row]:
    space = structure.size ** len(variables)
    if space > config.max_team_space:
        raise BudgetExceededError(
            f"team space n^|D| = {space} exceeds max_team_space={config.max_team_space}",
            "max_team_space",
            config.max_team_space,
        )
    return list(itertools.product(structure.domain, repeat=len(variables)))


def iter_sat_teams(
    structure: Structure,
    formulas: Sequence[Formula],
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    evaluator: Optional[TeamEvaluator] = None,
) -> Iterator[Team]:
    """Nonempty teams over the variables satisfying every formula, in row-bitmask order."""
    config = budget or get_default_budget_config()
    variables = tuple(sorted(variables))
    space = _team_space(structure, variables, config)
    evaluator = evaluator or TeamEvaluator(structure, config, persistent=True)
    for mask in range(1, 2 ** len(space)):
        team = Team(variables, tuple(space[i] for i in range(len(space)) if mask >> i & 1))
        if all(evaluator.eval(team, formula) for formula in formulas):
            yield team


def sat_teams(
    structure: Structure, formula: Formula, variables: Sequence[str], budget: Optional[BudgetConfig] = None
) -> List[Team]:
    """All nonempty teams X over D with M ⊨_X φ."""
    missing = free_vars(formula) - set(variables)
    if missing:
        raise UnboundVariableError(f"free variables {sorted(missing)} are not among {list(variables)}")
    return list(iter_sat_teams(structure, [formula], variables, budget))


def sat_search(
    formulas: Sequence[Formula],
    signature: Signature,
    max_n: int = 4,
    budget: Optional[BudgetConfig] = None,
) -> Optional[Tuple[Structure, Team]]:
    """
    First (structure, nonempty team) satisfying every formula, enumerating
    labeled structures of size 1..max_n and teams over the union of free variables.

    Args:
        formulas: The finite set Γ
        signature: Signature the structures interpret
        max_n: Largest domain size tried
        budget: Search limits

    Returns:
        (structure, team) or None when the bounded search is exhausted
    """
    config = budget or get_default_budget_config()
    for formula in formulas:
        check_signature(formula, signature)
    variables = sorted(set().union(*(free_vars(formula) for formula in formulas))) if formulas else []
    logger.info(f"Satisfiability search over {len(formulas)} formulas, variables {variables}, n <= {max_n}")
    for size in range(1, max_n + 1):
        count = count_structures(signature, size)
        if count > config.max_structures:
            raise BudgetExceededError(
                f"{count} structures of size {size} exceed max_structures={config.max_structures}",
                "max_structures",
                config.max_structures,
            )
        for structure in iter_structures(signature, size):
            for team in iter_sat_teams(structure, formulas, variables, config):
                logger.info(f"Satisfying model found at n={size}")
                return structure, team
    logger.info("Satisfiability search exhausted")
    return None


def check_substitution(
    structure: Structure,
    team: Team,
    formula: Formula,
    term: Term,
    name: str,
    budget: Optional[BudgetConfig] = None,
) -> bool:
    """M ⊨_X φ(t/x) iff M ⊨_X(t/x) φ; returns whether both sides agree."""
    evaluator = TeamEvaluator(structure, budget)
    substituted = substitute(formula, term, name, desugar_atoms=True)
    lhs = evaluator.eval(team, substituted)
    rhs = evaluator.eval(substitute_team(team, name, term, structure), formula)
    if lhs != rhs:
        logger.error(f"Substitution mismatch for {format_formula(formula)}: lhs={lhs} rhs={rhs}")
    return lhs == rhs
