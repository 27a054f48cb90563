"""
Ultrafilters on finite index sets, ultraproducts of structures and teams, the
identities relating team operations to team ultraproducts, and the Łoś check.

On a finite index set every ultrafilter is principal. Quotients are still
computed from the definition: the full product Π M_i is split into classes of
f ≡ g ⟺ {i | f(i) = g(i)} ∈ U by comparing against class representatives.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..config.budget_config import BudgetConfig, get_default_budget_config
from .core_model import Row, Structure, SupplementFunction, Team, duplicate, supplement, supplement_const
from .errors import (
    BudgetExceededError,
    NonPrincipalUltrafilterError,
    PreconditionError,
    SignatureError,
    TeamError,
)
from .evaluator import TeamEvaluator
from .formula import (
    ATOMS,
    LITERALS,
    And,
    ClassNeg,
    Exists,
    Exists1,
    ExistsStrict,
    Forall,
    Forall1,
    Formula,
    IntImpl,
    IntOr,
    TensorOr,
    TensorOrStrict,
    WeakNeg,
    format_formula,
    fragment_of,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ultrafilter:
    """The principal ultrafilter {A ⊆ I | generator ∈ A}; members are bitmasks over I."""
    index_size: int
    generator: int
    members: FrozenSet[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.index_size < 1:
            raise PreconditionError(f"index set must be nonempty, got size {self.index_size}")
        if not 0 <= self.generator < self.index_size:
            raise PreconditionError(f"generator {self.generator} is outside the index set of size {self.index_size}")
        members = frozenset(mask for mask in range(2 ** self.index_size) if mask >> self.generator & 1)
        object.__setattr__(self, "members", members)

    @classmethod
    def principal(cls, index_size: int, generator: int) -> "Ultrafilter":
        return cls(index_size, generator)

    @property
    def full(self) -> int:
        return 2 ** self.index_size - 1

    def contains(self, indices: Any) -> bool:
        """Membership of an index set given as a bitmask or an iterable of indices."""
        mask = indices if isinstance(indices, int) else _mask(indices)
        return mask in self.members

    def verify_axioms(self) -> bool:
        """Filter axioms and maximality, checked over all of P(I)."""
        space = range(2 ** self.index_size)
        if 0 in self.members or self.full not in self.members:
            return False
        for a in self.members:
            for b in self.members:
                if a & b not in self.members:
                    return False
        for a in self.members:
            for b in space:
                if a & b == a and b not in self.members:
                    return False
        return all((a in self.members) != ((self.full ^ a) in self.members) for a in space)

    def to_dict(self) -> Dict[str, Any]:
        return {"index_size": self.index_size, "generator": self.generator}


def _mask(indices: Iterable[int]) -> int:
    mask = 0
    for index in indices:
        mask |= 1 << index
    return mask


def ultrafilter_from_fip(index_size: int, family: Iterable[Iterable[int]]) -> Ultrafilter:
    """
    Extend a family with the finite intersection property to an ultrafilter.

    On a finite index set the extension exists exactly when the whole family
    has a common element; the least one generates the result.
    """
    common = set(range(index_size))
    for members in family:
        common &= set(members)
    if not common:
        raise NonPrincipalUltrafilterError("requires non-principal ultrafilter (infinite I)")
    return Ultrafilter(index_size, min(common))


@dataclass(frozen=True)
class StructureFamily:
    """Structures M_i (i ∈ I) over one signature, optionally with teams X_i over one domain."""
    structures: Tuple[Structure, ...]
    teams: Optional[Tuple[Team, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "structures", tuple(self.structures))
        if not self.structures:
            raise PreconditionError("a structure family needs at least one index")
        signature = self.structures[0].signature
        for index, structure in enumerate(self.structures):
            if structure.signature != signature:
                raise SignatureError(f"structure {index} has a different signature")
        if self.teams is not None:
            object.__setattr__(self, "teams", tuple(self.teams))
            self._check_teams(self.teams)

    def _check_teams(self, teams: Sequence[Team]) -> None:
        if len(teams) != len(self.structures):
            raise PreconditionError(f"{len(teams)} teams for {len(self.structures)} structures")
        variables = teams[0].variables
        for index, (structure, team) in enumerate(zip(self.structures, teams)):
            if team.variables != variables:
                raise TeamError(f"team {index} has domain {list(team.variables)}, expected {list(variables)}")
            team.check_domain(structure.size)

    @property
    def index_size(self) -> int:
        return len(self.structures)

    @property
    def signature(self):
        return self.structures[0].signature

    def with_teams(self, teams: Sequence[Team]) -> "StructureFamily":
        return StructureFamily(self.structures, tuple(teams))


@dataclass(frozen=True)
class QuotientMap:
    """f ↦ class id for every f ∈ Π M_i; representatives are the least member of each class."""
    classes: Mapping[Tuple[int, ...], int]
    representatives: Tuple[Tuple[int, ...], ...]

    def __call__(self, f: Sequence[int]) -> int:
        return self.classes[tuple(f)]

    @property
    def size(self) -> int:
        return len(self.representatives)


@dataclass(frozen=True)
class Ultraproduct:
    structure: Structure
    quotient: QuotientMap
    team: Optional[Team] = None


def _agreement(f: Sequence[int], g: Sequence[int]) -> int:
    return _mask(i for i, (a, b) in enumerate(zip(f, g)) if a == b)


def _quotient(family: StructureFamily, ultrafilter: Ultrafilter, config: BudgetConfig) -> QuotientMap:
    sizes = [structure.size for structure in family.structures]
    total = math.prod(sizes)
    if total > config.max_product_size:
        raise BudgetExceededError(
            f"product of domains has {total} elements, over max_product_size={config.max_product_size}",
            "max_product_size",
            config.max_product_size,
        )
    classes: Dict[Tuple[int, ...], int] = {}
    representatives: List[Tuple[int, ...]] = []
    for f in itertools.product(*(range(size) for size in sizes)):
        for class_id, g in enumerate(representatives):
            if ultrafilter.contains(_agreement(f, g)):
                classes[f] = class_id
                break
        else:
            classes[f] = len(representatives)
            representatives.append(f)
    return QuotientMap(classes, tuple(representatives))


def _check_index_size(family: StructureFamily, ultrafilter: Ultrafilter) -> None:
    if ultrafilter.index_size != family.index_size:
        raise PreconditionError(
            f"ultrafilter on {ultrafilter.index_size} indices for a family of {family.index_size}"
        )


def product_structure(
    family: StructureFamily, ultrafilter: Ultrafilter, budget: Optional[BudgetConfig] = None
) -> Tuple[Structure, QuotientMap]:
    """
    The ultraproduct Π M_i / U.

    Args:
        family: Structures over a shared signature
        ultrafilter: Ultrafilter on the index set
        budget: Limits the size of Π M_i

    Returns:
        (structure, quotient map from Π M_i onto its domain)
    """
    _check_index_size(family, ultrafilter)
    config = budget or get_default_budget_config()
    quotient = _quotient(family, ultrafilter, config)
    structures = family.structures
    indices = range(family.index_size)

    relations: Dict[str, List[Row]] = {}
    for name, arity in family.signature.relations:
        table = []
        for classes in itertools.product(range(quotient.size), repeat=arity):
            picked = [quotient.representatives[c] for c in classes]
            holding = _mask(i for i in indices if tuple(f[i] for f in picked) in structures[i].relations[name])
            if ultrafilter.contains(holding):
                table.append(classes)
        relations[name] = table

    functions: Dict[str, Dict[Row, int]] = {}
    for name, arity in family.signature.functions:
        table = {}
        for classes in itertools.product(range(quotient.size), repeat=arity):
            picked = [quotient.representatives[c] for c in classes]
            table[classes] = quotient(tuple(structures[i].functions[name][tuple(f[i] for f in picked)] for i in indices))
        functions[name] = table

    structure = Structure.build(family.signature, quotient.size, relations, functions)
    logger.debug(f"Ultraproduct of {family.index_size} structures at {ultrafilter.generator}: {quotient.size} classes")
    return structure, quotient


Representatives = Dict[Row, Tuple[Optional[Row], ...]]


def _team_representatives(
    teams: Sequence[Team], ultrafilter: Ultrafilter, quotient: QuotientMap, config: BudgetConfig
) -> Representatives:
    """
    Product rows of Π X_i / U, each with the first family (s_i) representing it.

    A family only matters on the indices where s_i ∈ X_i, and those must form
    a U-set, so the search runs over Π (X_i ∪ {absent}) and fills absent
    coordinates with 0.
    """
    options: List[List[Optional[Row]]] = [list(team.rows) + [None] for team in teams]
    total = math.prod(len(option) for option in options)
    if total > config.max_product_size:
        raise BudgetExceededError(
            f"team product has {total} candidate families, over max_product_size={config.max_product_size}",
            "max_product_size",
            config.max_product_size,
        )
    width = len(teams[0].variables)
    found: Representatives = {}
    for choice in itertools.product(*options):
        present = _mask(i for i, row in enumerate(choice) if row is not None)
        if not ultrafilter.contains(present):
            continue
        row = tuple(
            quotient(tuple(member[p] if member is not None else 0 for member in choice)) for p in range(width)
        )
        found.setdefault(row, choice)
    return found


def team_ultraproduct(
    family: StructureFamily,
    ultrafilter: Ultrafilter,
    teams: Optional[Sequence[Team]] = None,
    quotient: Optional[QuotientMap] = None,
    budget: Optional[BudgetConfig] = None,
) -> Team:
    """Π X_i / U: the assignments (s_i)_i / U with {i | s_i ∈ X_i} ∈ U."""
    _check_index_size(family, ultrafilter)
    config = budget or get_default_budget_config()
    teams = tuple(teams) if teams is not None else family.teams
    if teams is None:
        raise PreconditionError("team ultraproduct needs one team per index")
    family._check_teams(teams)
    if quotient is None:
        quotient = _quotient(family, ultrafilter, config)
    rows = _team_representatives(teams, ultrafilter, quotient, config)
    return Team(teams[0].variables, tuple(rows))


def ultraproduct(
    family: StructureFamily, ultrafilter: Ultrafilter, budget: Optional[BudgetConfig] = None
) -> Ultraproduct:
    """Structure ultraproduct together with the team ultraproduct when the family carries teams."""
    structure, quotient = product_structure(family, ultrafilter, budget)
    team = None
    if family.teams is not None:
        team = team_ultraproduct(family, ultrafilter, quotient=quotient, budget=budget)
    return Ultraproduct(structure, quotient, team)


def ultrapower(
    structure: Structure,
    ultrafilter: Ultrafilter,
    teams: Optional[Sequence[Team]] = None,
    budget: Optional[BudgetConfig] = None,
) -> Ultraproduct:
    """Ultraproduct of index_size copies of one structure."""
    family = StructureFamily(
        tuple(structure for _ in range(ultrafilter.index_size)),
        tuple(teams) if teams is not None else None,
    )
    return ultraproduct(family, ultrafilter, budget)


@dataclass
class LemmaCheck:
    """Both sides of one team-operation identity, plus the transfer clauses checked alongside."""
    kind: str
    holds: bool
    lhs: Team
    rhs: Team
    extra: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "holds": self.holds,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "extra": dict(self.extra),
        }


LEMMA_KINDS = ("union", "disjointness", "const-supplement", "duplicate", "supplement")


def check_team_lemma(
    family: StructureFamily,
    ultrafilter: Ultrafilter,
    kind: str,
    others: Optional[Sequence[Team]] = None,
    elements: Optional[Sequence[int]] = None,
    functions: Optional[Sequence[SupplementFunction]] = None,
    var: str = "x",
    budget: Optional[BudgetConfig] = None,
) -> LemmaCheck:
    """
    Compute both sides of a team ultraproduct identity independently.

    Args:
        family: Structures with teams X_i
        ultrafilter: Ultrafilter on the index set
        kind: union, disjointness, const-supplement, duplicate or supplement
        others: Teams Y_i (union, disjointness)
        elements: Elements a_i (const-supplement)
        functions: Supplement functions F_i on X_i (supplement)
        var: The variable written by the supplement operations
        budget: Product size limits

    Returns:
        LemmaCheck with holds = (lhs == rhs) and any transfer clause satisfied
    """
    if kind not in LEMMA_KINDS:
        raise ValueError(f"Unknown lemma kind: {kind}. Available: {list(LEMMA_KINDS)}")
    if family.teams is None:
        raise PreconditionError("team lemma checks need one team per index")
    config = budget or get_default_budget_config()
    product, quotient = product_structure(family, ultrafilter, config)
    representatives = _team_representatives(family.teams, ultrafilter, quotient, config)
    team = Team(family.teams[0].variables, tuple(representatives))
    indices = range(family.index_size)

    def lift(teams: Sequence[Team]) -> Team:
        return team_ultraproduct(family, ultrafilter, teams, quotient, config)

    def shaped(values: Optional[Sequence[Any]], name: str) -> Sequence[Any]:
        if values is None or len(values) != family.index_size:
            raise PreconditionError(f"{kind} check needs one {name} per index")
        return values

    if kind in ("union", "disjointness"):
        others = shaped(others, "team Y_i")
        other = lift(others)
        premise = ultrafilter.contains(_mask(i for i in indices if not set(family.teams[i].rows) & set(others[i].rows)))
        transfer = not premise or not set(team.rows) & set(other.rows)
        if kind == "disjointness":
            return LemmaCheck(kind, transfer, team, other, {"premise": premise, "disjoint": transfer})
        lhs = Team(team.variables, team.rows + other.rows)
        rhs = lift([Team(x.variables, x.rows + y.rows) for x, y in zip(family.teams, others)])
        return LemmaCheck(kind, lhs == rhs and transfer, lhs, rhs, {"disjointness_transfer": transfer})

    if kind == "const-supplement":
        elements = shaped(elements, "element a_i")
        value = quotient(tuple(elements))
        lhs = supplement_const(team, var, value, product)
        rhs = lift([supplement_const(x, var, a, m) for x, a, m in zip(family.teams, elements, family.structures)])
        return LemmaCheck(kind, lhs == rhs, lhs, rhs)

    if kind == "duplicate":
        lhs = duplicate(team, var, product)
        rhs = lift([duplicate(x, var, m) for x, m in zip(family.teams, family.structures)])
        return LemmaCheck(kind, lhs == rhs, lhs, rhs)

    functions = shaped(functions, "supplement function F_i")
    choice: Dict[Row, FrozenSet[int]] = {}
    for row, members in representatives.items():
        options = [
            sorted(functions[i].images(member)) + [None] if member is not None else [None]
            for i, member in enumerate(members)
        ]
        values = set()
        for pick in itertools.product(*options):
            if ultrafilter.contains(_mask(i for i, a in enumerate(pick) if a is not None)):
                values.add(quotient(tuple(a if a is not None else 0 for a in pick)))
        choice[row] = frozenset(values)
    lifted = SupplementFunction(team, choice)
    lhs = supplement(team, var, lifted, product)
    rhs = lift([supplement(x, var, f, m) for x, f, m in zip(family.teams, functions, family.structures)])
    premise = ultrafilter.contains(_mask(i for i in indices if functions[i].is_singleton_valued))
    transfer = not premise or lifted.is_singleton_valued
    return LemmaCheck(kind, lhs == rhs and transfer, lhs, rhs, {"singleton_transfer": transfer})


@dataclass
class IsomorphismCheck:
    generator: int
    bijective: bool
    relations: bool
    functions: bool
    team: bool

    @property
    def holds(self) -> bool:
        return self.bijective and self.relations and self.functions and self.team

    def to_dict(self) -> Dict[str, Any]:
        return {
            "generator": self.generator,
            "bijective": self.bijective,
            "relations": self.relations,
            "functions": self.functions,
            "team": self.team,
            "holds": self.holds,
        }


def check_principal_isomorphism(
    family: StructureFamily, ultrafilter: Ultrafilter, budget: Optional[BudgetConfig] = None
) -> IsomorphismCheck:
    """Check that class-of(f) ↦ f(j) maps Π M_i / U isomorphically onto M_j, and Π X_i / U onto X_j."""
    j = ultrafilter.generator
    result = ultraproduct(family, ultrafilter, budget)
    product, quotient = result.structure, result.quotient
    target = family.structures[j]
    image = [f[j] for f in quotient.representatives]

    bijective = sorted(image) == list(target.domain)
    relations = all(
        (classes in product.relations[name]) == (tuple(image[c] for c in classes) in target.relations[name])
        for name, arity in product.signature.relations
        for classes in itertools.product(range(product.size), repeat=arity)
    )
    functions = all(
        image[product.functions[name][classes]] == target.functions[name][tuple(image[c] for c in classes)]
        for name, arity in product.signature.functions
        for classes in itertools.product(range(product.size), repeat=arity)
    )
    team = True
    if result.team is not None:
        mapped = {tuple(image[c] for c in row) for row in result.team.rows}
        team = mapped == set(family.teams[j].rows)
    return IsomorphismCheck(j, bijective, relations, functions, team)


STRONG, WEAK, NONE = "strong", "weak", "none"
_RANK = {NONE: 0, WEAK: 1, STRONG: 2}


def _weakest(*grades: str) -> str:
    return min(grades, key=_RANK.__getitem__)


def los_guarantee(formula: Formula) -> str:
    """
    How much of Łoś' theorem the preservation lemmas promise for φ.

    strong: {i | M_i ⊨ φ} ∈ U ⟺ Π M_i/U ⊨ φ; weak: only ⟹; none: nothing.
    """
    if isinstance(formula, LITERALS + ATOMS):
        return STRONG
    if isinstance(formula, (And, IntOr)):
        return _weakest(los_guarantee(formula.left), los_guarantee(formula.right))
    if isinstance(formula, (Forall, Forall1, Exists1)):
        return los_guarantee(formula.body)
    if isinstance(formula, (TensorOr, TensorOrStrict)):
        return _weakest(WEAK, los_guarantee(formula.left), los_guarantee(formula.right))
    if isinstance(formula, (Exists, ExistsStrict)):
        return _weakest(WEAK, los_guarantee(formula.body))
    if isinstance(formula, (WeakNeg, ClassNeg)):
        return STRONG if los_guarantee(formula.body) == STRONG else NONE
    if isinstance(formula, IntImpl):
        return NONE
    raise TypeError(f"unknown formula node {formula!r}")


@dataclass
class LosCheck:
    lhs: bool
    rhs: bool
    strong_claimed: bool
    guarantee: str
    satisfying_indices: Tuple[int, ...]

    @property
    def agrees(self) -> bool:
        return self.lhs == self.rhs

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "agrees": self.agrees,
            "strong_claimed": self.strong_claimed,
            "guarantee": self.guarantee,
            "satisfying_indices": list(self.satisfying_indices),
        }


def check_los(
    family: StructureFamily, ultrafilter: Ultrafilter, formula: Formula, budget: Optional[BudgetConfig] = None
) -> LosCheck:
    """
    lhs = {i | M_i ⊨_{X_i} φ} ∈ U, rhs = Π M_i/U ⊨_{Π X_i/U} φ.

    On a finite index set the two always agree; a mismatch is a bug.
    """
    if family.teams is None:
        raise PreconditionError("the Łoś check needs one team per index")
    satisfying = tuple(
        i for i, (structure, team) in enumerate(zip(family.structures, family.teams))
        if TeamEvaluator(structure, budget).eval(team, formula)
    )
    lhs = ultrafilter.contains(satisfying)
    result = ultraproduct(family, ultrafilter, budget)
    rhs = TeamEvaluator(result.structure, budget).eval(result.team, formula)
    check = LosCheck(lhs, rhs, fragment_of(formula).strong_los_eligible, los_guarantee(formula), satisfying)
    if not check.agrees:
        logger.error(f"Łoś mismatch for {format_formula(formula)}: lhs={lhs} rhs={rhs}")
    return check
