"""
Executable checkers for the closure properties of team formulas: empty team
property, downward closure, union closure, flatness and locality.

Every check runs exhaustively over all teams of M^D when the team space and
the eval-call budget allow it, and otherwise samples teams with a seeded
generator recorded in the verdict. A failed check always carries a
counterexample that re-verifies through the evaluator.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ..config.budget_config import BudgetConfig, get_default_budget_config
from .core_model import Row, Structure, Team, restrict
from .errors import BudgetExceededError, FragmentError, PreconditionError
from .evaluator import TeamEvaluator
from .formula import Formula, format_formula, fragment_of, free_vars

logger = logging.getLogger(__name__)

EXHAUSTIVE = "exhaustive"
RANDOMIZED = "randomized"


@dataclass
class Counterexample:
    """Teams of one structure together with the verdicts that break a property."""
    structure: Structure
    formula: Formula
    teams: Tuple[Team, ...]
    verdicts: Tuple[bool, ...]
    note: str = ""

    def reverify(self, budget: Optional[BudgetConfig] = None) -> bool:
        """Recompute every verdict with a fresh evaluator."""
        evaluator = TeamEvaluator(self.structure, budget)
        return all(evaluator.eval(team, self.formula) == verdict for team, verdict in zip(self.teams, self.verdicts))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "formula": format_formula(self.formula),
            "teams": [team.to_dict() for team in self.teams],
            "verdicts": list(self.verdicts),
            "note": self.note,
        }


@dataclass
class PropertyVerdict:
    """Outcome of one property check."""
    property_name: str
    holds: bool
    counterexample: Optional[Counterexample] = None
    coverage: str = EXHAUSTIVE
    seed: Optional[int] = None
    trials: Optional[int] = None
    eval_calls: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "property": self.property_name,
            "holds": self.holds,
            "coverage": self.coverage,
            "eval_calls": self.eval_calls,
        }
        if self.coverage == RANDOMIZED:
            data["seed"] = self.seed
            data["trials"] = self.trials
        if self.counterexample is not None:
            data["counterexample"] = self.counterexample.to_dict()
        return data


@dataclass
class FlatnessDecomposition:
    """Flatness against empty team property ∧ downward closure ∧ union closure."""
    flatness: PropertyVerdict
    empty_team: PropertyVerdict
    downward: PropertyVerdict
    union: PropertyVerdict
    consistent: bool = field(init=False)

    def __post_init__(self) -> None:
        combined = self.empty_team.holds and self.downward.holds and self.union.holds
        self.consistent = self.flatness.holds == combined

    def to_dict(self) -> Dict[str, Any]:
        return {
            "flatness": self.flatness.to_dict(),
            "empty_team": self.empty_team.to_dict(),
            "downward": self.downward.to_dict(),
            "union": self.union.to_dict(),
            "consistent": self.consistent,
        }


class PropertyChecker:
    """
    Shared machinery for the team-pair searches over M^D.

    Satisfaction is cached per row bitmask of the team space, so the
    exhaustive searches touch each team once.
    """

    def __init__(
        self,
        structure: Structure,
        formula: Formula,
        variables: Sequence[str],
        budget: Optional[BudgetConfig] = None,
        seed: int = 0,
        trials: int = 200,
    ) -> None:
        missing = free_vars(formula) - set(variables)
        if missing:
            raise PreconditionError(f"free variables {sorted(missing)} are not among {list(variables)}")
        self.structure = structure
        self.formula = formula
        self.variables = tuple(sorted(variables))
        self.config = budget or get_default_budget_config()
        self.seed = seed
        self.trials = trials
        self.evaluator = TeamEvaluator(structure, self.config, persistent=True)
        self.rows: List[Row] = list(itertools.product(structure.domain, repeat=len(self.variables)))
        self._table: Dict[int, bool] = {}

    @property
    def exhaustive_feasible(self) -> bool:
        return len(self.rows) <= self.config.max_team_space and 2 ** len(self.rows) <= self.config.max_eval_calls

    def team(self, mask: int) -> Team:
        return Team(self.variables, tuple(self.rows[i] for i in range(len(self.rows)) if mask >> i & 1))

    def sat(self, mask: int) -> bool:
        if mask not in self._table:
            if self.evaluator.eval_calls >= self.config.max_eval_calls:
                raise BudgetExceededError(
                    f"property check exceeded max_eval_calls={self.config.max_eval_calls}",
                    "max_eval_calls",
                    self.config.max_eval_calls,
                )
            self._table[mask] = self.evaluator.eval(self.team(mask), self.formula)
        return self._table[mask]

    def eval(self, team: Team) -> bool:
        return self.evaluator.eval(team, self.formula)

    def counterexample(self, masks: Sequence[int], note: str) -> Counterexample:
        return Counterexample(
            self.structure,
            self.formula,
            tuple(self.team(mask) for mask in masks),
            tuple(self.sat(mask) for mask in masks),
            note,
        )

    def random_mask(self, rng: random.Random) -> int:
        count = rng.randint(0, min(len(self.rows), self.config.max_split_rows))
        mask = 0
        for index in rng.sample(range(len(self.rows)), count):
            mask |= 1 << index
        return mask

    def run(
        self,
        name: str,
        exhaustive: Callable[[], Optional[Counterexample]],
        sample: Callable[[random.Random], Optional[Counterexample]],
    ) -> PropertyVerdict:
        if self.exhaustive_feasible:
            try:
                found = exhaustive()
                return self._verdict(name, found, EXHAUSTIVE, None)
            except BudgetExceededError as exc:
                logger.warning(f"{name}: exhaustive search hit the budget ({exc.detail}); sampling instead")
        done = 0
        found = None
        rng = random.Random(self.seed)
        for _ in range(self.trials):
            try:
                found = sample(rng)
            except BudgetExceededError as exc:
                logger.debug(f"{name}: trial skipped ({exc.detail})")
                if exc.limit_name == "max_eval_calls":
                    break
                continue
            done += 1
            if found is not None:
                break
        return self._verdict(name, found, RANDOMIZED, done)

    def _verdict(self, name: str, found: Optional[Counterexample], coverage: str, trials: Optional[int]) -> PropertyVerdict:
        verdict = PropertyVerdict(
            property_name=name,
            holds=found is None,
            counterexample=found,
            coverage=coverage,
            seed=self.seed if coverage == RANDOMIZED else None,
            trials=trials,
            eval_calls=self.evaluator.eval_calls,
        )
        logger.info(f"{name} on {format_formula(self.formula)}: holds={verdict.holds} ({coverage})")
        return verdict

    def masks(self) -> range:
        return range(2 ** len(self.rows))


def _bits(mask: int) -> List[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def check_empty_team(
    structure: Structure,
    formula: Formula,
    force: bool = False,
    budget: Optional[BudgetConfig] = None,
    variables: Optional[Sequence[str]] = None,
) -> PropertyVerdict:
    """
    Evaluate φ on the empty team over Fv(φ), or over the given variables.

    Formulas with ∼ are refused unless forced, since ∼ turns the empty team
    property upside down.
    """
    if not force and fragment_of(formula).classical_negation:
        raise FragmentError(f"empty team property is not expected for ~ formulas: {format_formula(formula)}")
    evaluator = TeamEvaluator(structure, budget)
    team = Team.empty(sorted(free_vars(formula) if variables is None else variables))
    holds = evaluator.eval(team, formula)
    counterexample = None if holds else Counterexample(structure, formula, (team,), (False,), "fails on the empty team")
    return PropertyVerdict("empty_team", holds, counterexample, EXHAUSTIVE, eval_calls=evaluator.eval_calls)


def check_downward(
    structure: Structure,
    formula: Formula,
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    seed: int = 0,
    trials: int = 200,
) -> PropertyVerdict:
    """Search Y ⊆ X with M ⊨_X φ and M ⊭_Y φ."""
    checker = PropertyChecker(structure, formula, variables, budget, seed, trials)

    def exhaustive() -> Optional[Counterexample]:
        # single-row removals suffice: a failing subteam is reached by a chain of them
        for mask in checker.masks():
            if not checker.sat(mask):
                continue
            for bit in _bits(mask):
                smaller = mask & ~(1 << bit)
                if not checker.sat(smaller):
                    return checker.counterexample((mask, smaller), "satisfied team with a failing subteam")
        return None

    def sample(rng: random.Random) -> Optional[Counterexample]:
        mask = checker.random_mask(rng)
        if checker.sat(mask):
            smaller = mask & rng.getrandbits(len(checker.rows))
            if not checker.sat(smaller):
                return checker.counterexample((mask, smaller), "satisfied team with a failing subteam")
        return None

    return checker.run("downward", exhaustive, sample)


def check_union_closure(
    structure: Structure,
    formula: Formula,
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    seed: int = 0,
    trials: int = 200,
) -> PropertyVerdict:
    """Search X, Y both satisfying φ with X ∪ Y failing."""
    checker = PropertyChecker(structure, formula, variables, budget, seed, trials)

    def exhaustive() -> Optional[Counterexample]:
        # top[m]: union of all satisfied subteams of m, None when there is none
        top: List[Optional[int]] = []
        for mask in checker.masks():
            if checker.sat(mask):
                top.append(mask)
                continue
            parts = [top[mask & ~(1 << bit)] for bit in _bits(mask)]
            parts = [part for part in parts if part is not None]
            union = 0
            for part in parts:
                union |= part
            if not parts or union != mask:
                # a proper union was already verified when its own mask came up
                top.append(union if parts else None)
                continue
            acc = parts[0]
            for part in parts[1:]:
                if not checker.sat(acc | part):
                    return checker.counterexample((acc, part, acc | part), "union of satisfied teams fails")
                acc |= part
            top.append(None)
        return None

    def sample(rng: random.Random) -> Optional[Counterexample]:
        first, second = checker.random_mask(rng), checker.random_mask(rng)
        if checker.sat(first) and checker.sat(second) and not checker.sat(first | second):
            return checker.counterexample((first, second, first | second), "union of satisfied teams fails")
        return None

    return checker.run("union", exhaustive, sample)


def check_flatness(
    structure: Structure,
    formula: Formula,
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    seed: int = 0,
    trials: int = 200,
) -> PropertyVerdict:
    """Compare M ⊨_X φ with M ⊨_{s} φ for all s ∈ X."""
    checker = PropertyChecker(structure, formula, variables, budget, seed, trials)

    def compare(mask: int) -> Optional[Counterexample]:
        singletons = [1 << bit for bit in _bits(mask)]
        pointwise = all(checker.sat(single) for single in singletons)
        if checker.sat(mask) != pointwise:
            return checker.counterexample((mask, *singletons), "team verdict differs from its singletons")
        return None

    def exhaustive() -> Optional[Counterexample]:
        for mask in checker.masks():
            found = compare(mask)
            if found is not None:
                return found
        return None

    return checker.run("flatness", exhaustive, lambda rng: compare(checker.random_mask(rng)))


def check_locality(
    structure: Structure,
    formula: Formula,
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    seed: int = 0,
    trials: int = 200,
) -> PropertyVerdict:
    """Compare M ⊨_X φ with M ⊨_{X↾Fv(φ)} φ over teams on a domain larger than Fv(φ)."""
    free = free_vars(formula)
    if not free < set(variables):
        raise PreconditionError(
            f"locality needs a team domain strictly larger than Fv = {sorted(free)}, got {sorted(variables)}"
        )
    checker = PropertyChecker(structure, formula, variables, budget, seed, trials)

    def compare(mask: int) -> Optional[Counterexample]:
        team = checker.team(mask)
        restricted = restrict(team, free)
        narrow = checker.eval(restricted)
        if checker.sat(mask) != narrow:
            return Counterexample(
                structure, formula, (team, restricted), (checker.sat(mask), narrow),
                "verdict changes under restriction to the free variables",
            )
        return None

    def exhaustive() -> Optional[Counterexample]:
        for mask in checker.masks():
            found = compare(mask)
            if found is not None:
                return found
        return None

    return checker.run("locality", exhaustive, lambda rng: compare(checker.random_mask(rng)))


def check_flatness_decomposition(
    structure: Structure,
    formula: Formula,
    variables: Sequence[str],
    budget: Optional[BudgetConfig] = None,
    seed: int = 0,
) -> FlatnessDecomposition:
    """Run flatness and its three components on the same team space."""
    return FlatnessDecomposition(
        flatness=check_flatness(structure, formula, variables, budget, seed),
        empty_team=check_empty_team(structure, formula, force=True, budget=budget, variables=variables),
        downward=check_downward(structure, formula, variables, budget, seed),
        union=check_union_closure(structure, formula, variables, budget, seed),
    )


CHECKS = {
    "downward": check_downward,
    "union": check_union_closure,
    "flatness": check_flatness,
    "locality": check_locality,
}
