"""
Signatures, finite structures, assignments and teams, plus the team
operations every semantic clause consumes: restriction, projection,
duplication and supplementation.

Domain elements are the integers 0..n-1. Teams keep their variables in sorted
order and their rows as a sorted tuple of value tuples, so iteration order is
deterministic and equal teams compare equal.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import ArityError, SignatureError, StructureError, TeamError, UnboundVariableError
from .terms import Term, Var

logger = logging.getLogger(__name__)

Row = Tuple[int, ...]
Relation = FrozenSet[Row]
SymbolSpec = Union[Mapping[str, int], Iterable[Tuple[str, int]]]


def _symbol_pairs(spec: Optional[SymbolSpec]) -> Tuple[Tuple[str, int], ...]:
    if spec is None:
        return ()
    items = spec.items() if isinstance(spec, Mapping) else spec
    return tuple(sorted((str(name), int(arity)) for name, arity in items))


@dataclass(frozen=True)
class Signature:
    """Relation and function symbols with arities; constants are 0-ary functions."""
    relations: Tuple[Tuple[str, int], ...] = ()
    functions: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "relations", _symbol_pairs(self.relations))
        object.__setattr__(self, "functions", _symbol_pairs(self.functions))
        seen = set()
        for name, arity in self.relations + self.functions:
            if arity < 0:
                raise SignatureError(f"symbol {name} has negative arity {arity}")
            if name in seen:
                raise SignatureError(f"symbol {name} is declared more than once")
            seen.add(name)

    @classmethod
    def of(cls, relations: Optional[SymbolSpec] = None, functions: Optional[SymbolSpec] = None) -> "Signature":
        return cls(_symbol_pairs(relations), _symbol_pairs(functions))

    def relation_arity(self, name: str) -> Optional[int]:
        return dict(self.relations).get(name)

    def function_arity(self, name: str) -> Optional[int]:
        return dict(self.functions).get(name)

    def symbols(self) -> FrozenSet[str]:
        return frozenset(name for name, _ in self.relations + self.functions)

    def extend(self, relations: Optional[SymbolSpec] = None, functions: Optional[SymbolSpec] = None) -> "Signature":
        return Signature(self.relations + _symbol_pairs(relations), self.functions + _symbol_pairs(functions))

    def to_dict(self) -> Dict[str, Dict[str, int]]:
        return {"relations": dict(self.relations), "functions": dict(self.functions)}


RelationSpec = Union[bool, Iterable[Sequence[int]]]
FunctionSpec = Union[int, Mapping[Any, int], Callable[..., int]]


@dataclass(frozen=True)
class Structure:
    """A finite structure with domain {0, ..., size-1}."""
    signature: Signature
    size: int
    relations: Mapping[str, Relation]
    functions: Mapping[str, Mapping[Row, int]]

    def __post_init__(self) -> None:
        if self.size < 1:
            raise StructureError(f"domain size must be positive, got {self.size}")
        for name, arity in self.signature.relations:
            if name not in self.relations:
                raise StructureError(f"relation {name} has no table")
            for row in self.relations[name]:
                if len(row) != arity:
                    raise ArityError(f"relation {name} expects arity {arity}, table has {row}")
                if any(not 0 <= value < self.size for value in row):
                    raise StructureError(f"relation {name} contains {row} outside the domain")
        for name, arity in self.signature.functions:
            table = self.functions.get(name)
            if table is None:
                raise StructureError(f"function {name} has no table")
            for args in itertools.product(range(self.size), repeat=arity):
                if args not in table:
                    raise StructureError(f"function {name} not total: missing {args}")
                if not 0 <= table[args] < self.size:
                    raise StructureError(f"function {name} maps {args} outside the domain")
            if len(table) != self.size ** arity:
                raise StructureError(f"function {name} has entries outside its tuple space")
        unknown = (set(self.relations) | set(self.functions)) - self.signature.symbols()
        if unknown:
            raise SignatureError(f"tables for undeclared symbols: {sorted(unknown)}")

    def __hash__(self) -> int:
        return hash((
            self.signature,
            self.size,
            frozenset(self.relations.items()),
            frozenset((name, frozenset(table.items())) for name, table in self.functions.items()),
        ))

    @classmethod
    def build(
        cls,
        signature: Signature,
        size: int,
        relations: Optional[Mapping[str, RelationSpec]] = None,
        functions: Optional[Mapping[str, FunctionSpec]] = None,
    ) -> "Structure":
        """
        Build a structure from loose tables.

        Args:
            signature: The signature to interpret
            size: Domain size n
            relations: Per relation, a boolean (0-ary) or an iterable of tuples; missing means empty
            functions: Per function, an element (0-ary), a mapping from argument tuples
                (or bare elements for unary symbols) to elements, or a callable

        Returns:
            Structure with validated, normalized tables
        """
        relations = dict(relations or {})
        functions = dict(functions or {})
        unknown = (set(relations) | set(functions)) - signature.symbols()
        if unknown:
            raise SignatureError(f"tables for undeclared symbols: {sorted(unknown)}")

        relation_tables: Dict[str, Relation] = {}
        for name, arity in signature.relations:
            spec = relations.get(name, ())
            if isinstance(spec, bool):
                if arity != 0:
                    raise ArityError(f"relation {name} has arity {arity}; a boolean only fits 0-ary relations")
                relation_tables[name] = frozenset({()}) if spec else frozenset()
            else:
                relation_tables[name] = frozenset(tuple(int(v) for v in row) for row in spec)

        function_tables: Dict[str, Dict[Row, int]] = {}
        for name, arity in signature.functions:
            if name not in functions:
                raise StructureError(f"function {name} not total: no table given")
            function_tables[name] = _function_table(name, arity, size, functions[name])

        return cls(signature, size, relation_tables, function_tables)

    @property
    def domain(self) -> range:
        return range(self.size)

    def relation(self, name: str) -> Relation:
        if name not in self.relations:
            raise SignatureError(f"unknown relation symbol {name}")
        return self.relations[name]

    def apply(self, name: str, args: Row) -> int:
        table = self.functions.get(name)
        if table is None:
            raise SignatureError(f"unknown function symbol {name}")
        arity = self.signature.function_arity(name)
        if len(args) != arity:
            raise ArityError(f"function {name} expects {arity} arguments, got {len(args)}")
        return table[args]

    def expand(
        self,
        relations: Optional[Mapping[str, RelationSpec]] = None,
        functions: Optional[Mapping[str, FunctionSpec]] = None,
        arities: Optional[Mapping[str, int]] = None,
    ) -> "Structure":
        """
        Expand to a larger signature with new relation and function tables.

        Arities of new relations come from ``arities`` or, failing that, from the
        first tuple of the table; empty relations need an explicit arity.
        """
        relations = dict(relations or {})
        functions = dict(functions or {})
        arities = dict(arities or {})
        new_relations = {}
        for name, spec in relations.items():
            if name in arities:
                new_relations[name] = arities[name]
            elif isinstance(spec, bool):
                new_relations[name] = 0
            else:
                rows = list(spec)
                if not rows:
                    raise ArityError(f"relation {name} is empty; its arity must be given")
                new_relations[name] = len(rows[0])
                relations[name] = rows
        new_functions = {}
        for name, spec in functions.items():
            if name in arities:
                new_functions[name] = arities[name]
            elif isinstance(spec, int):
                new_functions[name] = 0
            else:
                raise ArityError(f"function {name} needs an explicit arity")
        signature = self.signature.extend(new_relations, new_functions)
        merged_relations: Dict[str, RelationSpec] = dict(self.relations)
        merged_relations.update(relations)
        merged_functions: Dict[str, FunctionSpec] = dict(self.functions)
        merged_functions.update(functions)
        return Structure.build(signature, self.size, merged_relations, merged_functions)

    def reduct(self, signature: Signature) -> "Structure":
        missing = signature.symbols() - self.signature.symbols()
        if missing:
            raise SignatureError(f"reduct to symbols the structure lacks: {sorted(missing)}")
        return Structure(
            signature,
            self.size,
            {name: self.relations[name] for name, _ in signature.relations},
            {name: self.functions[name] for name, _ in signature.functions},
        )


def _function_table(name: str, arity: int, size: int, spec: FunctionSpec) -> Dict[Row, int]:
    table: Dict[Row, int] = {}
    for args in itertools.product(range(size), repeat=arity):
        if callable(spec) and not isinstance(spec, Mapping):
            value = spec(*args)
        elif isinstance(spec, Mapping):
            if args in spec:
                value = spec[args]
            elif arity == 1 and args[0] in spec:
                value = spec[args[0]]
            else:
                raise StructureError(f"function {name} not total: missing {args}")
        elif arity == 0:
            value = spec
        else:
            raise StructureError(f"function {name} of arity {arity} needs a table")
        table[args] = int(value)
    return table


def count_structures(signature: Signature, size: int) -> int:
    """Number of labeled structures of the given size over the signature."""
    count = 1
    for _, arity in signature.relations:
        count *= 2 ** (size ** arity)
    for _, arity in signature.functions:
        count *= size ** (size ** arity)
    return count


def iter_structures(signature: Signature, size: int) -> Iterator[Structure]:
    """Enumerate all labeled structures of one size in canonical order."""
    choices: List[List[Any]] = []
    for _, arity in signature.relations:
        space = list(itertools.product(range(size), repeat=arity))
        choices.append([
            frozenset(space[i] for i in range(len(space)) if mask >> i & 1)
            for mask in range(2 ** len(space))
        ])
    for _, arity in signature.functions:
        space = list(itertools.product(range(size), repeat=arity))
        choices.append([dict(zip(space, values)) for values in itertools.product(range(size), repeat=len(space))])
    relation_names = [name for name, _ in signature.relations]
    function_names = [name for name, _ in signature.functions]
    split = len(relation_names)
    for combo in itertools.product(*choices):
        yield Structure(
            signature,
            size,
            dict(zip(relation_names, combo[:split])),
            dict(zip(function_names, combo[split:])),
        )


@dataclass(frozen=True)
class Assignment:
    """A total map from an ordered list of distinct variables to domain elements."""
    variables: Tuple[str, ...]
    values: Row

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if len(set(self.variables)) != len(self.variables):
            raise TeamError(f"assignment variables are not distinct: {self.variables}")
        if len(self.variables) != len(self.values):
            raise TeamError("assignment needs exactly one value per variable")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, int]) -> "Assignment":
        return cls(tuple(mapping), tuple(mapping.values()))

    def __getitem__(self, name: str) -> int:
        try:
            return self.values[self.variables.index(name)]
        except ValueError:
            raise UnboundVariableError(f"variable {name} is not in the assignment domain {list(self.variables)}")

    def update(self, name: str, value: int) -> "Assignment":
        """s(a/x): overwrite x, or append it when absent."""
        if name in self.variables:
            position = self.variables.index(name)
            return Assignment(self.variables, self.values[:position] + (value,) + self.values[position + 1:])
        return Assignment(self.variables + (name,), self.values + (value,))

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.variables, self.values))


@dataclass(frozen=True)
class Team:
    """A set of assignments over one variable domain, stored canonically."""
    variables: Tuple[str, ...]
    rows: Tuple[Row, ...] = ()

    def __post_init__(self) -> None:
        variables = tuple(self.variables)
        if len(set(variables)) != len(variables):
            raise TeamError(f"team variables are not distinct: {list(variables)}")
        rows = [tuple(int(v) for v in row) for row in self.rows]
        for number, row in enumerate(rows):
            if len(row) != len(variables):
                raise TeamError(f"row {number} has {len(row)} values for {len(variables)} variables")
        order = sorted(range(len(variables)), key=lambda i: variables[i])
        if order != list(range(len(variables))):
            variables = tuple(variables[i] for i in order)
            rows = [tuple(row[i] for i in order) for row in rows]
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rows", tuple(sorted(set(rows))))

    @classmethod
    def empty(cls, variables: Iterable[str] = ()) -> "Team":
        return cls(tuple(variables), ())

    @classmethod
    def unit(cls) -> "Team":
        """The team {∅} on which sentences are evaluated."""
        return cls((), ((),))

    @classmethod
    def from_assignments(cls, variables: Sequence[str], assignments: Iterable[Mapping[str, int]]) -> "Team":
        return cls(tuple(variables), tuple(tuple(s[v] for v in variables) for s in assignments))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def is_empty(self) -> bool:
        return not self.rows

    def index(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise UnboundVariableError(f"variable {name} is not in the team domain {list(self.variables)}")

    def assignments(self) -> Iterator[Assignment]:
        for row in self.rows:
            yield Assignment(self.variables, row)

    def column(self, name: str) -> FrozenSet[int]:
        position = self.index(name)
        return frozenset(row[position] for row in self.rows)

    def check_domain(self, size: int) -> None:
        for number, row in enumerate(self.rows):
            for column, value in enumerate(row):
                if not 0 <= value < size:
                    raise TeamError(
                        f"row {number}, column {self.variables[column]}: value {value} outside domain of size {size}"
                    )

    def to_dict(self) -> Dict[str, Any]:
        return {"vars": list(self.variables), "rows": [list(row) for row in self.rows]}


@dataclass(frozen=True)
class SupplementFunction:
    """F: X -> P+(M), keyed by the rows of the base team."""
    base: Team
    choice: Mapping[Row, FrozenSet[int]]

    def __post_init__(self) -> None:
        choice = {tuple(row): frozenset(int(a) for a in images) for row, images in self.choice.items()}
        missing = set(self.base.rows) - set(choice)
        if missing:
            raise TeamError(f"supplement function not total: no images for rows {sorted(missing)}")
        extra = set(choice) - set(self.base.rows)
        if extra:
            raise TeamError(f"supplement function has rows outside its base team: {sorted(extra)}")
        for row, images in choice.items():
            if not images:
                raise TeamError(f"supplement function has an empty image set at row {row}")
        object.__setattr__(self, "choice", choice)

    def __hash__(self) -> int:
        return hash((self.base, frozenset(self.choice.items())))

    @classmethod
    def constant(cls, team: Team, value: int) -> "SupplementFunction":
        return cls(team, {row: frozenset((value,)) for row in team.rows})

    @classmethod
    def full(cls, team: Team, structure: Structure) -> "SupplementFunction":
        return cls(team, {row: frozenset(structure.domain) for row in team.rows})

    def images(self, row: Row) -> FrozenSet[int]:
        return self.choice[row]

    @property
    def is_singleton_valued(self) -> bool:
        return all(len(images) == 1 for images in self.choice.values())

    def check_domain(self, size: int) -> None:
        for row, images in self.choice.items():
            if any(not 0 <= a < size for a in images):
                raise TeamError(f"supplement images at row {row} fall outside domain of size {size}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "vars": list(self.base.variables),
            "images": [{"row": list(row), "values": sorted(self.choice[row])} for row in self.base.rows],
        }


def term_eval(structure: Structure, assignment: Union[Assignment, Mapping[str, int]], term: Term) -> int:
    """The interpretation s(t) of a term under an assignment."""
    if isinstance(term, Var):
        if isinstance(assignment, Assignment):
            return assignment[term.name]
        if term.name not in assignment:
            raise UnboundVariableError(f"variable {term.name} is not in the assignment domain")
        return assignment[term.name]
    arity = structure.signature.function_arity(term.symbol)
    if arity is None:
        raise SignatureError(f"unknown function symbol {term.symbol}")
    if arity != len(term.args):
        raise ArityError(f"function {term.symbol} expects {arity} arguments, got {len(term.args)}")
    args = tuple(term_eval(structure, assignment, arg) for arg in term.args)
    return structure.functions[term.symbol][args]


def _extend_variables(variables: Tuple[str, ...], name: str) -> Tuple[Tuple[str, ...], int]:
    if name in variables:
        return variables, variables.index(name)
    return variables + (name,), len(variables)


def _set_value(row: Row, position: int, value: int) -> Row:
    if position == len(row):
        return row + (value,)
    return row[:position] + (value,) + row[position + 1:]


def restrict(team: Team, variables: Iterable[str]) -> Team:
    """X↾V: restrict every row to V; duplicates collapse."""
    keep = sorted(set(variables))
    unknown = [name for name in keep if name not in team.variables]
    if unknown:
        raise TeamError(f"cannot restrict to {unknown}: not in the team domain {list(team.variables)}")
    positions = [team.variables.index(name) for name in keep]
    return Team(tuple(keep), tuple(tuple(row[p] for p in positions) for row in team.rows))


def project(team: Team, variables: Sequence[str]) -> Relation:
    """X[x0, ..., xk]: the value tuples of the listed variables, in that order."""
    positions = [team.index(name) for name in variables]
    return frozenset(tuple(row[p] for p in positions) for row in team.rows)


def duplicate(team: Team, name: str, structure: Structure) -> Team:
    """X(M/x) = {s(a/x) | s ∈ X, a ∈ M}."""
    variables, position = _extend_variables(team.variables, name)
    return Team(variables, tuple(_set_value(row, position, a) for row in team.rows for a in structure.domain))


def supplement(team: Team, name: str, function: SupplementFunction, structure: Optional[Structure] = None) -> Team:
    """X(F/x) = {s(a/x) | s ∈ X, a ∈ F(s)}."""
    if function.base != team:
        raise TeamError("supplement function is defined on a different team")
    if structure is not None:
        function.check_domain(structure.size)
    variables, position = _extend_variables(team.variables, name)
    return Team(variables, tuple(_set_value(row, position, a) for row in team.rows for a in function.images(row)))


def supplement_const(team: Team, name: str, value: int, structure: Structure) -> Team:
    """X(a/x) = {s(a/x) | s ∈ X}."""
    if not 0 <= value < structure.size:
        raise StructureError(f"element {value} is outside the domain of size {structure.size}")
    variables, position = _extend_variables(team.variables, name)
    return Team(variables, tuple(_set_value(row, position, value) for row in team.rows))


def substitute_team(team: Team, name: str, term: Term, structure: Structure) -> Team:
    """X(t/x) = {s(s(t)/x) | s ∈ X}."""
    variables, position = _extend_variables(team.variables, name)
    rows = []
    for assignment in team.assignments():
        rows.append(_set_value(assignment.values, position, term_eval(structure, assignment, term)))
    return Team(variables, tuple(rows))


def all_teams(variables: Sequence[str], size: int, include_empty: bool = True) -> Iterator[Team]:
    """Every team over the variables in row-bitmask order of the lexicographic tuple space."""
    space = list(itertools.product(range(size), repeat=len(variables)))
    for mask in range(0 if include_empty else 1, 2 ** len(space)):
        yield Team(tuple(variables), tuple(space[i] for i in range(len(space)) if mask >> i & 1))
