"""
Finite-scale machinery behind compactness for team formulas.

A set Γ of formulas over variables x_0 ... x_{κ-1} is coded by the first-order
theory Δ_Γ over relation symbols R_φ (one per formula, arity |I_φ|) and S_I
(one per index set I ⊆ κ, arity |I|). A model of Δ_Γ carries a coherent
family of projected teams; merging that family yields one team.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from ..config.budget_config import BudgetConfig
from .core_model import Row, Signature, Structure, Team, project, restrict
from .errors import PreconditionError, SignatureError, TeamError, UnsupportedConstructError, VerificationError
from .eso import FOExists, FOForall, FOFormula, FOIff, FOAtom, crosscheck, eval_fo, format_fo
from .evaluator import TeamEvaluator
from .formula import Formula, format_formula, free_vars, substitute
from .terms import Func, Var

logger = logging.getLogger(__name__)

IndexSet = Tuple[int, ...]
LARGE_KAPPA = 12


@dataclass(frozen=True)
class GammaSpec:
    """A finite Γ with an enumeration x_0 ... x_{κ-1} of its variables."""
    formulas: Tuple[Formula, ...]
    variables: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "formulas", tuple(self.formulas))
        variables = tuple(self.variables) or tuple(sorted(set().union(*(free_vars(f) for f in self.formulas))))
        if len(set(variables)) != len(variables):
            raise PreconditionError(f"variable enumeration repeats a name: {list(variables)}")
        for formula in self.formulas:
            missing = free_vars(formula) - set(variables)
            if missing:
                raise PreconditionError(f"{format_formula(formula)} has free variables {sorted(missing)} outside the enumeration")
        object.__setattr__(self, "variables", variables)

    @property
    def kappa(self) -> int:
        return len(self.variables)

    def index_set(self, formula: Formula) -> IndexSet:
        """I_φ: indices of the free variables of φ."""
        names = free_vars(formula)
        return tuple(i for i, name in enumerate(self.variables) if name in names)

    def index_sets(self) -> List[IndexSet]:
        return [self.index_set(formula) for formula in self.formulas]

    def family(self) -> List[IndexSet]:
        """Every I ⊆ κ, ordered by size then lexicographically."""
        return [combo for size in range(self.kappa + 1) for combo in itertools.combinations(range(self.kappa), size)]

    def names(self, indices: Sequence[int]) -> List[str]:
        return [self.variables[i] for i in indices]


def formula_relation(position: int) -> str:
    return f"Rphi{position}"


def projection_relation(indices: Sequence[int]) -> str:
    return "S_" + "_".join(str(i) for i in indices)


def _x(indices: Sequence[int]) -> Tuple[str, ...]:
    return tuple(f"x{i}" for i in indices)


def _atom(name: str, indices: Sequence[int]) -> FOAtom:
    return FOAtom(name, tuple(Var(v) for v in _x(indices)))


@dataclass(frozen=True)
class LabeledSentence:
    schema: int
    label: str
    sentence: FOFormula


@dataclass(frozen=True)
class DeltaGamma:
    """τ_Γ and the sentences of Δ_Γ."""
    signature: Signature
    sentences: Tuple[LabeledSentence, ...]

    def by_schema(self, schema: int) -> List[LabeledSentence]:
        return [s for s in self.sentences if s.schema == schema]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "signature": self.signature.to_dict(),
            "sentences": [
                {"schema": s.schema, "label": s.label, "sentence": format_fo(s.sentence)} for s in self.sentences
            ],
        }


def delta_signature(gamma: GammaSpec, base: Optional[Signature] = None) -> Signature:
    base = base or Signature()
    relations = {formula_relation(k): len(I) for k, I in enumerate(gamma.index_sets())}
    relations.update({projection_relation(I): len(I) for I in gamma.family()})
    return base.extend(relations)


def build_delta_gamma(gamma: GammaSpec, base: Optional[Signature] = None) -> DeltaGamma:
    """
    Instantiate the three schemas of Δ_Γ:

        ∃v⃗ R_φ(v⃗)                                   for φ ∈ Γ
        ∀x⃗ (R_φ(x_{I_φ}) ↔ S_{I_φ}(x_{I_φ}))           for φ ∈ Γ
        ∀x_I (S_I(x_I) ↔ ∃x_{J∖I} S_J(x_J))          for I ⊆ J in the family
    """
    if gamma.kappa > LARGE_KAPPA:
        logger.warning(f"κ = {gamma.kappa}: the third schema alone has 3^{gamma.kappa} sentences")
    sentences: List[LabeledSentence] = []
    for k, (formula, I) in enumerate(zip(gamma.formulas, gamma.index_sets())):
        sentences.append(LabeledSentence(1, f"nonempty {format_formula(formula)}", FOExists(_x(I), _atom(formula_relation(k), I))))
    for k, (formula, I) in enumerate(zip(gamma.formulas, gamma.index_sets())):
        body = FOIff(_atom(formula_relation(k), I), _atom(projection_relation(I), I))
        sentences.append(LabeledSentence(2, f"{formula_relation(k)} = {projection_relation(I)}", FOForall(_x(I), body)))
    family = gamma.family()
    for J in family:
        for I in family:
            if set(I) <= set(J):
                extra = tuple(j for j in J if j not in I)
                body = FOIff(_atom(projection_relation(I), I), FOExists(_x(extra), _atom(projection_relation(J), J)))
                label = f"{projection_relation(I)} = {projection_relation(J)} restricted"
                sentences.append(LabeledSentence(3, label, FOForall(_x(I), body)))
    return DeltaGamma(delta_signature(gamma, base), tuple(sentences))


def _table(structure: Structure, name: str, arity: int) -> FrozenSet[Row]:
    declared = structure.signature.relation_arity(name)
    if declared is None:
        raise SignatureError(f"structure does not interpret {name}")
    if declared != arity:
        raise SignatureError(f"{name} has arity {declared} in the structure, expected {arity}")
    return structure.relations[name]


def _restrict_rows(rows: FrozenSet[Row], J: Sequence[int], I: Sequence[int]) -> FrozenSet[Row]:
    positions = [list(J).index(i) for i in I]
    return frozenset(tuple(row[p] for p in positions) for row in rows)


@dataclass
class IntuitionCheck:
    models_delta: bool
    cond1: bool
    cond2: bool
    cond3: bool

    @property
    def consistent(self) -> bool:
        return self.models_delta == (self.cond1 and self.cond2 and self.cond3)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "models_delta": self.models_delta,
            "cond1": self.cond1,
            "cond2": self.cond2,
            "cond3": self.cond3,
            "consistent": self.consistent,
        }


def check_intuition(structure: Structure, gamma: GammaSpec) -> IntuitionCheck:
    """
    Evaluate M ⊨ Δ_Γ and, separately from the relation tables, the three
    conditions: every R_φ nonempty, R_φ = S_{I_φ}, and S_I = S_J↾I for I ⊆ J.
    """
    index_sets = gamma.index_sets()
    family = gamma.family()
    formula_tables = [_table(structure, formula_relation(k), len(I)) for k, I in enumerate(index_sets)]
    projection_tables = {I: _table(structure, projection_relation(I), len(I)) for I in family}

    delta = build_delta_gamma(gamma)
    models_delta = all(eval_fo(structure, labeled.sentence) for labeled in delta.sentences)
    cond1 = all(formula_tables)
    cond2 = all(table == projection_tables[I] for table, I in zip(formula_tables, index_sets))
    cond3 = all(
        projection_tables[I] == _restrict_rows(projection_tables[J], J, I)
        for J in family for I in family if set(I) <= set(J)
    )
    return IntuitionCheck(models_delta, cond1, cond2, cond3)


def expand_model(
    structure: Structure,
    team: Team,
    gamma: GammaSpec,
    verify: bool = True,
    crosscheck_formulas: bool = True,
    budget: Optional[BudgetConfig] = None,
) -> Structure:
    """
    Expand M to τ_Γ with R_φ = Y[Fv(φ)] and S_I = Y[(x_i)_{i∈I}].

    Args:
        structure: M
        team: A nonempty team Y with M ⊨_Y φ for all φ ∈ Γ
        gamma: Γ with its variable enumeration
        verify: Check that the expansion satisfies the intuition conditions
        crosscheck_formulas: Also crosscheck each φ against its ESO translation
        budget: Limits for the evaluations

    Raises:
        PreconditionError: Y is empty, misses a variable, or fails some φ
        VerificationError: a postcondition check fails
    """
    if team.is_empty:
        raise PreconditionError("expansion needs a nonempty team")
    missing = set(gamma.variables) - set(team.variables)
    if missing:
        raise TeamError(f"team domain {list(team.variables)} misses {sorted(missing)}")
    evaluator = TeamEvaluator(structure, budget)
    for formula in gamma.formulas:
        if not evaluator.eval(team, formula):
            raise PreconditionError(f"the team does not satisfy {format_formula(formula)}")

    relations: Dict[str, FrozenSet[Row]] = {}
    arities: Dict[str, int] = {}
    for k, I in enumerate(gamma.index_sets()):
        relations[formula_relation(k)] = project(team, gamma.names(I))
        arities[formula_relation(k)] = len(I)
    for I in gamma.family():
        relations[projection_relation(I)] = project(team, gamma.names(I))
        arities[projection_relation(I)] = len(I)
    expanded = structure.expand({name: sorted(rows) for name, rows in relations.items()}, arities=arities)

    if verify:
        check = check_intuition(expanded, gamma)
        if not (check.models_delta and check.cond1 and check.cond2 and check.cond3):
            raise VerificationError(f"expansion fails the intuition conditions: {check.to_dict()}")
    if crosscheck_formulas:
        for formula, I in zip(gamma.formulas, gamma.index_sets()):
            names = gamma.names(I)
            try:
                result = crosscheck(structure, restrict(team, names), formula, names, budget)
            except UnsupportedConstructError:
                logger.debug(f"No ESO translation for {format_formula(formula)}; crosscheck skipped")
                continue
            if not result.agrees:
                raise VerificationError(f"ESO crosscheck disagrees on {format_formula(formula)}: {result.to_dict()}")
    return expanded


@dataclass(frozen=True)
class CoherenceSystem:
    """Relations Y_I over one structure, indexed by subsets I of the variable enumeration."""
    variables: Tuple[str, ...]
    size: int
    tables: Mapping[IndexSet, FrozenSet[Row]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        tables: Dict[IndexSet, FrozenSet[Row]] = {}
        for key, rows in self.tables.items():
            indices = tuple(sorted(key))
            if any(not 0 <= i < len(self.variables) for i in indices):
                raise PreconditionError(f"index set {list(key)} does not fit {len(self.variables)} variables")
            table = frozenset(tuple(int(v) for v in row) for row in rows)
            for row in table:
                if len(row) != len(indices):
                    raise TeamError(f"Y_{list(indices)} has row {row} of the wrong arity")
                if any(not 0 <= v < self.size for v in row):
                    raise TeamError(f"Y_{list(indices)} has row {row} outside domain of size {self.size}")
            tables[indices] = table
        object.__setattr__(self, "tables", tables)

    def __hash__(self) -> int:
        return hash((self.variables, self.size, frozenset(self.tables.items())))

    def family(self) -> List[IndexSet]:
        return sorted(self.tables, key=lambda I: (len(I), I))


@dataclass
class MergeResult:
    team: Optional[Team]
    verified: bool
    failure: Optional[IndexSet] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "team": self.team.to_dict() if self.team is not None else None,
            "verified": self.verified,
            "failure": list(self.failure) if self.failure is not None else None,
        }


def merge_teams(system: CoherenceSystem) -> MergeResult:
    """
    Y = every κ-tuple whose projections all lie in the corresponding Y_I;
    verified when Y↾I = Y_I for every I of the family, else the least failing I.
    """
    kappa = len(system.variables)
    family = system.family()
    merged = [
        values for values in itertools.product(range(system.size), repeat=kappa)
        if all(tuple(values[i] for i in I) in system.tables[I] for I in family)
    ]
    rows = frozenset(merged)
    for I in family:
        if _restrict_rows(rows, range(kappa), I) != system.tables[I]:
            logger.info(f"Merge fails at index set {list(I)}")
            return MergeResult(None, False, I)
    return MergeResult(Team(system.variables, tuple(merged)), True)


def system_from_expansion(structure: Structure, gamma: GammaSpec) -> CoherenceSystem:
    """Read the S_I tables of an expanded structure as a coherence system."""
    tables = {I: _table(structure, projection_relation(I), len(I)) for I in gamma.family()}
    return CoherenceSystem(gamma.variables, structure.size, tables)


@dataclass
class GroundingResult:
    constants: Dict[str, int]
    sentences: Tuple[Formula, ...]
    verdicts: Tuple[bool, ...]

    @property
    def holds(self) -> bool:
        return all(self.verdicts)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constants": dict(self.constants),
            "sentences": [format_formula(s) for s in self.sentences],
            "verdicts": list(self.verdicts),
            "holds": self.holds,
        }


def constant_grounding(
    gamma: GammaSpec, structure: Structure, team: Team, budget: Optional[BudgetConfig] = None
) -> GroundingResult:
    """
    Replace each free variable x by a fresh constant interpreted as s₀(x),
    s₀ the first row of the team, and evaluate the resulting sentences on {∅}.

    For downward-closed Γ satisfied by the team the sentences hold; outside
    that fragment they may fail.
    """
    if team.is_empty:
        raise PreconditionError("grounding needs a nonempty team")
    missing = set(gamma.variables) - set(team.variables)
    if missing:
        raise TeamError(f"team domain {list(team.variables)} misses {sorted(missing)}")
    first = dict(zip(team.variables, team.rows[0]))
    taken = set(structure.signature.symbols())
    names: Dict[str, str] = {}
    for variable in gamma.variables:
        name = f"c_{variable}"
        while name in taken:
            name += "_"
        taken.add(name)
        names[variable] = name
    expanded = structure.expand(
        functions={names[v]: first[v] for v in gamma.variables},
        arities={names[v]: 0 for v in gamma.variables},
    )
    sentences = []
    for formula in gamma.formulas:
        grounded = formula
        for variable in sorted(free_vars(formula)):
            grounded = substitute(grounded, Func(names[variable]), variable, desugar_atoms=True)
        sentences.append(grounded)
    evaluator = TeamEvaluator(expanded, budget)
    verdicts = tuple(evaluator.eval(Team.unit(), sentence) for sentence in sentences)
    return GroundingResult({names[v]: first[v] for v in gamma.variables}, tuple(sentences), verdicts)
