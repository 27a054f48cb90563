"""
JSON file formats for structures, teams, coherence systems and supplement
functions, validated with pydantic, plus formula files and the bundled
formula corpus.

Structure file:
    {"domain": 2 | ["a", "b"],
     "signature": {"relations": {"R": 2}, "functions": {"f": 1}},   (optional)
     "relations": {"R": [[0, 1]], "P": true},
     "functions": {"f": {"(0)": 1, "(1)": 0}},
     "constants": {"c": 0}}

Team file:
    {"vars": ["x", "y"], "rows": [[0, 1], [1, 1]]}

Team rows always hold element indices, also over a labelled domain; labels
are accepted only as strings.
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core_model import Row, Signature, Structure, SupplementFunction, Team
from .compactness import CoherenceSystem
from .errors import FileFormatError

logger = logging.getLogger(__name__)

Element = Union[int, str]

CORPUS_PATH = os.path.join(os.path.dirname(__file__), "..", "data", "corpus.json")


class SignatureBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    relations: Dict[str, int] = Field(default_factory=dict)
    functions: Dict[str, int] = Field(default_factory=dict)


def _labels(domain: Union[int, List[Element]]) -> Dict[str, int]:
    if isinstance(domain, int):
        return {str(i): i for i in range(domain)}
    return {str(label): i for i, label in enumerate(domain)}


def _element(value: Element, labels: Mapping[str, int], where: str) -> int:
    key = str(value).strip()
    if key not in labels:
        raise FileFormatError(f"{where}: {value!r} is not a domain element")
    return labels[key]


def _index(value: Element, size: Optional[int], labels: Mapping[str, int], where: str) -> int:
    """
    Read a team value or family element: integers are canonical indices,
    strings are looked up among the structure's labels.
    """
    if isinstance(value, int) and not isinstance(value, bool):
        if value < 0:
            raise FileFormatError(f"{where}: index {value} is negative")
        if size is not None and value >= size:
            raise FileFormatError(f"{where}: index {value} outside 0..{size - 1}")
        return value
    if isinstance(value, str) and value.strip() in labels:
        return labels[value.strip()]
    if labels:
        raise FileFormatError(f"{where}: {value!r} is neither an index nor a domain label")
    raise FileFormatError(f"{where}: {value!r} is not an element index")


def _domain_size(domain: Union[int, List[Element]]) -> int:
    return domain if isinstance(domain, int) else len(domain)


def _parse_key(key: str, labels: Mapping[str, int], where: str) -> Row:
    inner = key.strip()
    if inner.startswith("(") and inner.endswith(")"):
        inner = inner[1:-1]
    parts = [part for part in (p.strip() for p in inner.split(",")) if part]
    return tuple(_element(part, labels, where) for part in parts)


class StructureFile(BaseModel):
    """A finite structure as stored on disk."""

    model_config = ConfigDict(extra="forbid")

    domain: Union[int, List[Element]]
    signature: Optional[SignatureBlock] = None
    relations: Dict[str, Union[bool, List[List[Element]]]] = Field(default_factory=dict)
    functions: Dict[str, Dict[str, Element]] = Field(default_factory=dict)
    constants: Dict[str, Element] = Field(default_factory=dict)

    @field_validator("domain")
    @classmethod
    def domain_is_nonempty(cls, value: Union[int, List[Element]]) -> Union[int, List[Element]]:
        if isinstance(value, int):
            if value < 1:
                raise ValueError("domain size must be positive")
        else:
            if not value:
                raise ValueError("domain labels must be nonempty")
            if len({str(label) for label in value}) != len(value):
                raise ValueError("domain labels must be distinct")
        return value

    @property
    def size(self) -> int:
        return _domain_size(self.domain)

    def to_signature(self) -> Signature:
        declared = self.signature or SignatureBlock()
        relations = dict(declared.relations)
        functions = dict(declared.functions)
        for name, table in self.relations.items():
            if name in relations:
                continue
            if isinstance(table, bool):
                relations[name] = 0
            elif table:
                relations[name] = len(table[0])
            else:
                raise FileFormatError(f"relation {name} is empty; declare its arity in the signature block")
        for name, table in self.functions.items():
            if name not in functions:
                first = next(iter(table), None)
                if first is None:
                    raise FileFormatError(f"function {name} has an empty table")
                functions[name] = len(_parse_key(first, _labels(self.domain), f"function {name}"))
        for name in self.constants:
            functions.setdefault(name, 0)
        return Signature.of(relations, functions)

    def to_structure(self) -> Structure:
        labels = _labels(self.domain)
        signature = self.to_signature()
        relations: Dict[str, Any] = {}
        for name, table in self.relations.items():
            if isinstance(table, bool):
                relations[name] = table
            else:
                relations[name] = [tuple(_element(v, labels, f"relation {name}") for v in row) for row in table]
        functions: Dict[str, Any] = {}
        for name, table in self.functions.items():
            functions[name] = {
                _parse_key(key, labels, f"function {name}"): _element(value, labels, f"function {name}")
                for key, value in table.items()
            }
        for name, value in self.constants.items():
            functions[name] = _element(value, labels, f"constant {name}")
        return Structure.build(signature, self.size, relations, functions)


class TeamFile(BaseModel):
    """
    A team as stored on disk. Rows hold element indices 0..n-1; a string
    value is read as a label of a labelled structure domain.
    """

    model_config = ConfigDict(extra="forbid")

    vars: List[str]
    rows: List[List[Element]] = Field(default_factory=list)

    @model_validator(mode="after")
    def rows_match_vars(self) -> "TeamFile":
        if len(set(self.vars)) != len(self.vars):
            raise ValueError(f"team variables are not distinct: {self.vars}")
        for number, row in enumerate(self.rows):
            if len(row) != len(self.vars):
                raise ValueError(f"row {number} has {len(row)} values for {len(self.vars)} variables")
        return self

    def to_team(self, structure: Optional[Structure] = None, domain: Optional[Union[int, List[Element]]] = None) -> Team:
        size = structure.size if structure is not None else None
        labels: Dict[str, int] = {}
        if domain is not None:
            size = _domain_size(domain)
            if not isinstance(domain, int):
                labels = _labels(domain)
        rows = []
        for number, row in enumerate(self.rows):
            rows.append(
                tuple(_index(value, size, labels, f"row {number}, column {column}") for column, value in zip(self.vars, row))
            )
        return Team(tuple(self.vars), tuple(rows))


class CoherenceSystemFile(BaseModel):
    """{"vars": [...], "size": n, "tables": {"": [[]], "0": [[0]], "0,1": [[0, 1]]}}"""

    model_config = ConfigDict(extra="forbid")

    vars: List[str]
    size: int
    tables: Dict[str, List[List[int]]]

    def to_system(self) -> CoherenceSystem:
        tables = {}
        for key, rows in self.tables.items():
            try:
                indices = tuple(int(part) for part in key.split(",") if part.strip())
            except ValueError:
                raise FileFormatError(f"index set key {key!r} is not a comma-separated list of indices")
            tables[indices] = [tuple(row) for row in rows]
        return CoherenceSystem(tuple(self.vars), self.size, tables)


class SupplementImage(BaseModel):
    row: List[int]
    values: List[int]


class SupplementFile(BaseModel):
    """{"vars": [...], "images": [{"row": [...], "values": [...]}]}"""

    model_config = ConfigDict(extra="forbid")

    vars: List[str]
    images: List[SupplementImage]

    def to_function(self, team: Team) -> SupplementFunction:
        if sorted(self.vars) != list(team.variables):
            raise FileFormatError(f"supplement variables {self.vars} do not match the team {list(team.variables)}")
        order = [self.vars.index(name) for name in team.variables]
        choice = {tuple(image.row[i] for i in order): frozenset(image.values) for image in self.images}
        return SupplementFunction(team, choice)


class FamilyFile(BaseModel):
    """
    A structure family for the ultraproduct commands:
    {"structures": [...], "teams": [...], "others": [...], "elements": [...], "functions": [...]}
    """

    model_config = ConfigDict(extra="forbid")

    structures: List[StructureFile]
    teams: Optional[List[TeamFile]] = None
    others: Optional[List[TeamFile]] = None
    elements: Optional[List[Element]] = None
    functions: Optional[List[SupplementFile]] = None

    @model_validator(mode="after")
    def one_entry_per_index(self) -> "FamilyFile":
        if not self.structures:
            raise ValueError("a family needs at least one structure")
        for name in ("teams", "others", "elements", "functions"):
            values = getattr(self, name)
            if values is not None and len(values) != len(self.structures):
                raise ValueError(f"{name} has {len(values)} entries for {len(self.structures)} structures")
        if self.functions is not None and self.teams is None:
            raise ValueError("supplement functions need the teams they extend")
        return self

    def to_family(self) -> "FamilyData":
        structures = tuple(entry.to_structure() for entry in self.structures)
        domains = [entry.domain for entry in self.structures]
        teams = None if self.teams is None else tuple(t.to_team(domain=d) for t, d in zip(self.teams, domains))
        others = None if self.others is None else tuple(t.to_team(domain=d) for t, d in zip(self.others, domains))
        elements = None
        if self.elements is not None:
            elements = tuple(
                _index(value, _domain_size(d), {} if isinstance(d, int) else _labels(d), f"element of structure {i}")
                for i, (value, d) in enumerate(zip(self.elements, domains))
            )
        functions = None
        if self.functions is not None:
            functions = tuple(f.to_function(team) for f, team in zip(self.functions, teams))
        return FamilyData(structures, teams, others, elements, functions)


@dataclass
class FamilyData:
    structures: Tuple[Structure, ...]
    teams: Optional[Tuple[Team, ...]] = None
    others: Optional[Tuple[Team, ...]] = None
    elements: Optional[Tuple[int, ...]] = None
    functions: Optional[Tuple[SupplementFunction, ...]] = None


def _validate(model: type, data: Any, what: str) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc']) or what}: {error['msg']}" for error in exc.errors()
        )
        raise FileFormatError(f"invalid {what}: {problems}") from None


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from None


def structure_from_dict(data: Any) -> Structure:
    return _validate(StructureFile, data, "structure").to_structure()


def team_from_dict(
    data: Any, structure: Optional[Structure] = None, domain: Optional[Union[int, List[Element]]] = None
) -> Team:
    return _validate(TeamFile, data, "team").to_team(structure, domain)


def read_structure_file(path: str) -> StructureFile:
    logger.debug(f"Loading structure from {path}")
    return _validate(StructureFile, _read_json(path), "structure")


def load_structure(path: str) -> Structure:
    return read_structure_file(path).to_structure()


def load_team(
    path: str, structure: Optional[Structure] = None, domain: Optional[Union[int, List[Element]]] = None
) -> Team:
    logger.debug(f"Loading team from {path}")
    return team_from_dict(_read_json(path), structure, domain)


def load_system(path: str) -> CoherenceSystem:
    return _validate(CoherenceSystemFile, _read_json(path), "coherence system").to_system()


def load_supplement(path: str, team: Team) -> SupplementFunction:
    return _validate(SupplementFile, _read_json(path), "supplement function").to_function(team)


def load_family(path: str) -> FamilyData:
    logger.debug(f"Loading structure family from {path}")
    return _validate(FamilyFile, _read_json(path), "structure family").to_family()


def family_from_files(
    structures: Sequence[str],
    teams: Optional[Sequence[str]] = None,
    others: Optional[Sequence[str]] = None,
    elements: Optional[Sequence[Element]] = None,
    functions: Optional[Sequence[str]] = None,
) -> FamilyData:
    """
    Assemble a structure family from one file per index.

    Args:
        structures: Structure files M_0 ... M_{k-1}
        teams: Team files X_i, one per structure
        others: Second team files Y_i for the union and disjointness identities
        elements: One element per structure (index or label)
        functions: Supplement function files F_i over the X_i
    """

    def read_all(paths: Optional[Sequence[str]]) -> Optional[List[Any]]:
        return None if paths is None else [_read_json(path) for path in paths]

    logger.debug(f"Loading structure family from {len(structures)} structure files")
    data = {
        "structures": read_all(structures),
        "teams": read_all(teams),
        "others": read_all(others),
        "elements": None if elements is None else list(elements),
        "functions": read_all(functions),
    }
    return _validate(FamilyFile, data, "structure family").to_family()


def structure_to_dict(structure: Structure) -> Dict[str, Any]:
    """Canonical form: rows and argument tuples in lexicographic order."""
    relations: Dict[str, Any] = {}
    for name, arity in structure.signature.relations:
        table = structure.relations[name]
        relations[name] = bool(table) if arity == 0 else [list(row) for row in sorted(table)]
    functions: Dict[str, Any] = {}
    constants: Dict[str, int] = {}
    for name, arity in structure.signature.functions:
        table = structure.functions[name]
        if arity == 0:
            constants[name] = table[()]
        else:
            functions[name] = {f"({','.join(str(a) for a in args)})": table[args] for args in sorted(table)}
    return {
        "domain": structure.size,
        "signature": structure.signature.to_dict(),
        "relations": relations,
        "functions": functions,
        "constants": constants,
    }


def system_to_dict(system: CoherenceSystem) -> Dict[str, Any]:
    return {
        "vars": list(system.variables),
        "size": system.size,
        "tables": {",".join(str(i) for i in I): [list(row) for row in sorted(system.tables[I])] for I in system.family()},
    }


def dump_json(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False)


def save_structure(structure: Structure, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_json(structure_to_dict(structure)) + "\n")


def save_team(team: Team, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_json(team.to_dict()) + "\n")


def save_system(system: CoherenceSystem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_json(system_to_dict(system)) + "\n")


def read_formula_lines(text: str) -> List[str]:
    """One formula per line; '#' starts a comment, blank lines are skipped."""
    formulas = []
    for line in text.splitlines():
        content = line.split("#", 1)[0].strip()
        if content:
            formulas.append(content)
    return formulas


def load_formulas(path: str) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return read_formula_lines(handle.read())
    except OSError as exc:
        raise FileFormatError(f"{path}: {exc.strerror}") from None


def load_corpus(groups: Optional[Sequence[str]] = None) -> Dict[str, List[str]]:
    """
    The bundled formula corpus, grouped by fragment.

    Args:
        groups: Group names to return (all groups when omitted)

    Returns:
        Mapping from group name to formula texts
    """
    with open(CORPUS_PATH, "r", encoding="utf-8") as handle:
        corpus = json.load(handle)["groups"]
    if groups is None:
        return corpus
    unknown = set(groups) - set(corpus)
    if unknown:
        raise ValueError(f"Unknown corpus groups: {sorted(unknown)}. Available: {list(corpus.keys())}")
    return {name: corpus[name] for name in groups}


def corpus_formulas(groups: Optional[Sequence[str]] = None) -> List[str]:
    """All formula texts of the selected groups, without duplicates, in file order."""
    seen: Dict[str, None] = {}
    for texts in load_corpus(groups).values():
        for text in texts:
            seen.setdefault(text, None)
    return list(seen)

