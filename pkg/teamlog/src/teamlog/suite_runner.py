"""
Reproducible experiment runner for the acceptance suites.

Each suite is deterministic given its seed and budget, and its report embeds
both together with whether the instances were covered exhaustively or by a
seeded sample.
"""

import logging
import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

from ..config.budget_config import BudgetConfig, get_default_budget_config
from ..config.suite_config import DEFAULT_SUITES, SuiteConfig, get_suite_config
from .compactness import (
    CoherenceSystem,
    GammaSpec,
    check_intuition,
    constant_grounding,
    expand_model,
    formula_relation,
    merge_teams,
    projection_relation,
    system_from_expansion,
)
from .core_model import Signature, Structure, Team, all_teams, count_structures, iter_structures, restrict
from .errors import BudgetExceededError, TeamlogError, UnsupportedConstructError
from .eso import crosscheck
from .evaluator import TeamEvaluator, check_substitution, eval_flat_fo, sat_search
from .formula import Formula, format_formula, formula_signature, fragment_of, free_vars
from .formula_parser import parse
from .model_files import load_corpus
from .properties import (
    EXHAUSTIVE,
    check_downward,
    check_empty_team,
    check_locality,
    check_union_closure,
)
from .random_instances import (
    LAB_SIGNATURE,
    FormulaGenerator,
    family_instance,
    random_structure,
    random_team,
    satisfying_team,
    substitution_instance,
)
from .ultraproduct import (
    LEMMA_KINDS,
    StructureFamily,
    Ultrafilter,
    check_los,
    check_principal_isomorphism,
    check_team_lemma,
)

logger = logging.getLogger(__name__)

SAMPLED = "sampled"
MAX_FAILURES = 5

# Satisfiable on two elements, but not together with dep( ; x)
EXAMPLE_GAMMA = ("A y (inc(y ; x))", "E y E z (y != z)")
EXAMPLE_CONSTANCY = "dep( ; x)"

# Strict splits and strict supplements break locality on these
STRICT_LOCALITY_WITNESSES = (
    ("(inc(y ; x) & P(y)) vs (inc(x ; y) & P(x))", ("w", "x", "y")),
    ("Es y (A z (inc(z ; y)))", ("x",)),
)

# Pairwise consistent two-element tables with no completing triple.
# Three variables are the fewest for this: with two, the table on {0, 1}
# is itself a team over all variables, so consistency already merges.
INCOMPLETE_SYSTEM = CoherenceSystem(
    ("x0", "x1", "x2"),
    2,
    {
        (): [()],
        (0,): [(0,), (1,)],
        (1,): [(0,), (1,)],
        (2,): [(0,), (1,)],
        (0, 1): [(0, 0), (1, 1)],
        (1, 2): [(0, 0), (1, 1)],
        (0, 2): [(0, 1), (1, 0)],
    },
)


@dataclass
class SuiteReport:
    """Outcome of one acceptance suite."""
    suite: str
    seed: int
    budget: Dict[str, Any]
    passed: bool = True
    coverage: str = EXHAUSTIVE
    cases: int = 0
    skipped: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    duration_seconds: float = 0.0

    def fail(self, record: Dict[str, Any]) -> None:
        self.passed = False
        if len(self.failures) < MAX_FAILURES:
            self.failures.append(record)

    def sampled(self) -> None:
        self.coverage = SAMPLED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "seed": self.seed,
            "budget": self.budget,
            "coverage": self.coverage,
            "cases": self.cases,
            "skipped": self.skipped,
            "failures": self.failures,
            "details": self.details,
            "duration_seconds": round(self.duration_seconds, 3),
        }


def _structures(
    signature: Signature, max_n: int, limit: Optional[int], rng: random.Random, report: SuiteReport
) -> Iterator[Structure]:
    """All structures of size 1..max_n, or a seeded sample of ``limit`` per size when there are more."""
    for size in range(1, max_n + 1):
        if limit is None or count_structures(signature, size) <= limit:
            yield from iter_structures(signature, size)
            continue
        report.sampled()
        for _ in range(limit):
            yield random_structure(rng, signature, size)


def _formulas(group: str, count: Optional[int] = None) -> List[Tuple[str, Formula]]:
    texts = load_corpus([group])[group]
    if count is not None:
        texts = texts[:count]
    return [(text, parse(text)) for text in texts]


class SuiteRunner:
    """Runs acceptance suites by name with one budget profile."""

    def __init__(self, budget: Optional[BudgetConfig] = None) -> None:
        self.budget = budget or get_default_budget_config()
        self.suites: Dict[str, Callable[[SuiteConfig, SuiteReport], None]] = {
            "example": self._example,
            "flatness": self._flatness,
            "closure": self._closure,
            "substitution": self._substitution,
            "ultraproduct": self._ultraproduct,
            "los": self._los,
            "eso": self._eso,
            "intuition": self._intuition,
            "merge": self._merge,
        }

    def run(self, name: str, seed: Optional[int] = None) -> SuiteReport:
        """
        Run one suite.

        Args:
            name: Suite name (see DEFAULT_SUITES)
            seed: Explicit seed overriding TEAMLOG_SEED and the suite default

        Returns:
            SuiteReport with the seed and budget used
        """
        if name not in self.suites:
            raise ValueError(f"Unknown suite: {name}. Available: {list(self.suites.keys())}")
        config = get_suite_config(name, seed)
        report = SuiteReport(suite=name, seed=config.seed, budget=self.budget.to_dict())
        logger.info(f"Running suite {name} with seed {config.seed}, {config.instances} instances")
        start_time = time.time()
        self.suites[name](config, report)
        report.duration_seconds = time.time() - start_time
        logger.info(
            f"Suite {name}: passed={report.passed}, cases={report.cases}, skipped={report.skipped}, "
            f"coverage={report.coverage}, {report.duration_seconds:.1f}s"
        )
        return report

    def run_all(self, seed: Optional[int] = None) -> List[SuiteReport]:
        return [self.run(name, seed) for name in DEFAULT_SUITES]

    # suites

    def _example(self, config: SuiteConfig, report: SuiteReport) -> None:
        gamma = [parse(text) for text in EXAMPLE_GAMMA]
        constancy = parse(EXAMPLE_CONSTANCY)
        signature = Signature()

        found = sat_search(gamma, signature, config.max_n, self.budget)
        expected = Team(("x",), ((0,), (1,)))
        satisfiable = found is not None and found[0].size == 2 and found[1] == expected
        report.cases += 1
        report.details["gamma"] = {
            "satisfiable": found is not None,
            "size": found[0].size if found else None,
            "team": found[1].to_dict() if found else None,
        }
        if not satisfiable:
            report.fail({"check": "gamma satisfiable at n=2 with team {0, 1}", "found": report.details["gamma"]})

        with_constancy = sat_search(gamma + [constancy], signature, config.max_n, self.budget)
        report.cases += 1
        report.details["gamma_with_constancy"] = {"satisfiable": with_constancy is not None}
        if with_constancy is not None:
            report.fail({"check": "gamma with dep( ; x) unsatisfiable", "team": with_constancy[1].to_dict()})

        if found is not None:
            grounding = constant_grounding(GammaSpec(tuple(gamma)), found[0], found[1], self.budget)
            report.cases += 1
            report.details["constant_grounding"] = grounding.to_dict()
            if grounding.holds:
                report.fail({"check": "constant grounding fails outside downward-closed fragments"})

    def _flatness(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        formulas = _formulas("first_order", config.instances)
        for text, formula in formulas:
            variables = sorted(free_vars(formula)) or ["x"]
            evaluations = 0
            for structure in _structures(formula_signature(formula), config.max_n, config.structure_limit, rng, report):
                evaluator = TeamEvaluator(structure, self.budget, persistent=True)
                for team in all_teams(variables, structure.size):
                    evaluations += 1
                    direct = evaluator.eval(team, formula)
                    pointwise = eval_flat_fo(structure, team, formula)
                    if direct != pointwise:
                        report.fail({"formula": text, "team": team.to_dict(), "team_eval": direct, "tarski": pointwise})
            report.cases += evaluations
        report.details["formulas"] = len(formulas)

    def _closure(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        groups = {
            "downward": (_formulas("downward", config.instances), check_downward),
            "union": (_formulas("union", config.instances), check_union_closure),
            "locality": (_formulas("lax", config.instances), check_locality),
        }
        for label, (formulas, check) in groups.items():
            checked = 0
            for text, formula in formulas:
                free = sorted(free_vars(formula))
                variables = free + ["u_dummy"] if label == "locality" else (free or ["x"])
                for structure in _structures(
                    formula_signature(formula), config.max_n, config.structure_limit, rng, report
                ):
                    if structure.size ** len(variables) > self.budget.max_team_space:
                        report.skipped += 1
                        continue
                    verdict = check(structure, formula, variables, self.budget, config.seed)
                    checked += 1
                    if verdict.coverage != EXHAUSTIVE:
                        report.sampled()
                    if not verdict.holds:
                        report.fail({"property": label, "formula": text, "verdict": verdict.to_dict()})
            report.cases += checked
            report.details[label] = {"formulas": len(formulas), "checks": checked}

        empty_checked = 0
        for group in ("first_order", "downward", "union", "lax", "strict", "full"):
            for text, formula in _formulas(group):
                if fragment_of(formula).classical_negation:
                    continue
                structure = next(iter_structures(formula_signature(formula), 1))
                verdict = check_empty_team(structure, formula, budget=self.budget)
                empty_checked += 1
                if not verdict.holds:
                    report.fail({"property": "empty_team", "formula": text})
        report.cases += empty_checked
        report.details["empty_team"] = {"formulas": empty_checked}

        violations = []
        for text, variables in STRICT_LOCALITY_WITNESSES:
            formula = parse(text)
            for structure in _structures(formula_signature(formula), config.max_n, None, rng, report):
                if structure.size ** len(variables) > self.budget.max_team_space:
                    continue
                verdict = check_locality(structure, formula, variables, self.budget, config.seed)
                if not verdict.holds:
                    violations.append({"formula": text, "counterexample": verdict.counterexample.to_dict()})
                    break
        report.details["strict_locality_violations"] = violations
        if not violations:
            report.fail({"property": "strict locality", "detail": "no violation found"})

    def _substitution(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        report.sampled()
        for number in range(config.instances):
            instance = substitution_instance(rng, config.max_n)
            try:
                agrees = check_substitution(
                    instance.structure, instance.team, instance.formula, instance.term, instance.name, self.budget
                )
            except BudgetExceededError as exc:
                logger.debug(f"Substitution instance {number} skipped: {exc.detail}")
                report.skipped += 1
                continue
            report.cases += 1
            if not agrees:
                report.fail({"instance": number, "formula": format_formula(instance.formula), "team": instance.team.to_dict()})

    def _ultraproduct(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        report.sampled()
        counts = {kind: 0 for kind in LEMMA_KINDS}
        for number in range(config.instances):
            instance = family_instance(rng, max_n=config.max_n)
            family = StructureFamily(instance.structures, instance.teams)
            ultrafilter = Ultrafilter.principal(family.index_size, instance.generator)
            for kind in LEMMA_KINDS:
                check = check_team_lemma(
                    family,
                    ultrafilter,
                    kind,
                    others=instance.others,
                    elements=instance.elements,
                    functions=instance.functions,
                    var="x",
                    budget=self.budget,
                )
                counts[kind] += 1
                report.cases += 1
                if not check.holds:
                    report.fail({"instance": number, "check": check.to_dict()})
        report.details["checks"] = counts

    def _los(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        report.sampled()
        formulas = [(text, formula) for group in ("lax", "strict", "full") for text, formula in _formulas(group)]
        formulas = [(text, formula) for text, formula in formulas if free_vars(formula) <= {"x", "y"}]
        isomorphisms = 0
        for number in range(config.instances):
            instance = family_instance(rng, max_n=config.max_n)
            family = StructureFamily(instance.structures, instance.teams)
            ultrafilter = Ultrafilter.principal(family.index_size, instance.generator)
            iso = check_principal_isomorphism(family, ultrafilter, self.budget)
            isomorphisms += 1
            if not iso.holds:
                report.fail({"instance": number, "isomorphism": iso.to_dict()})
            for text, formula in formulas:
                try:
                    check = check_los(family, ultrafilter, formula, self.budget)
                except BudgetExceededError as exc:
                    logger.debug(f"Łoś check skipped for {text}: {exc.detail}")
                    report.skipped += 1
                    continue
                report.cases += 1
                if not check.agrees:
                    report.fail({"instance": number, "formula": text, "check": check.to_dict()})
        report.details["formulas"] = len(formulas)
        report.details["isomorphism_checks"] = isomorphisms

    def _eso(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        exhaustive_n = config.extra.get("exhaustive_max_n", 2)
        sweep = 0
        for text, formula in _formulas("lax"):
            variables = sorted(free_vars(formula))
            if len(variables) > 2:
                continue
            for structure in _structures(formula_signature(formula), exhaustive_n, config.structure_limit, rng, report):
                for team in all_teams(variables, structure.size):
                    sweep += self._crosscheck(report, structure, team, formula, text)
        report.details["sweep_cases"] = sweep

        randomized = 0
        for number in range(config.instances):
            quantifiers = rng.randint(0, 1)
            generator = FormulaGenerator(rng, "lax", max_quantifiers=quantifiers, max_splits=1 - quantifiers)
            free = tuple(sorted(rng.sample(("x", "y"), rng.randint(1, 2))))
            formula = generator.formula(free, rng.randint(1, 4))
            structure = random_structure(rng, LAB_SIGNATURE, config.max_n)
            team = random_team(rng, free, structure.size, 3)
            randomized += self._crosscheck(report, structure, team, formula, format_formula(formula))
        report.details["randomized_cases"] = randomized
        if randomized:
            report.sampled()

    def _crosscheck(self, report: SuiteReport, structure: Structure, team: Team, formula: Formula, text: str) -> int:
        try:
            result = crosscheck(structure, team, formula, budget=self.budget)
        except (BudgetExceededError, UnsupportedConstructError) as exc:
            logger.debug(f"Crosscheck skipped for {text}: {exc.detail}")
            report.skipped += 1
            return 0
        report.cases += 1
        if not result.agrees:
            report.fail({"formula": text, "team": team.to_dict(), "result": result.to_dict()})
        return 1

    def _intuition(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        report.sampled()
        mutations = config.extra.get("mutations", config.instances)
        expansions: List[Tuple[Structure, GammaSpec]] = []
        for number, (structure, team, gamma) in enumerate(self._gamma_instances(rng, config, report)):
            try:
                expanded = expand_model(structure, team, gamma, verify=False, crosscheck_formulas=False, budget=self.budget)
            except TeamlogError as exc:
                report.fail({"instance": number, "error": exc.to_dict()})
                continue
            check = check_intuition(expanded, gamma)
            report.cases += 1
            if not (check.models_delta and check.cond1 and check.cond2 and check.cond3):
                report.fail({"instance": number, "expansion": check.to_dict()})
            expansions.append((expanded, gamma))

        flipped = 0
        for number in range(mutations if expansions else 0):
            expanded, gamma = expansions[number % len(expansions)]
            mutated, target = _mutate(rng, expanded, gamma)
            check = check_intuition(mutated, gamma)
            report.cases += 1
            if check.models_delta or not check.consistent:
                report.fail({"mutation": number, "relation": target, "check": check.to_dict()})
            else:
                flipped += 1
        report.details["expansions"] = len(expansions)
        report.details["mutations_flipped"] = flipped

    def _merge(self, config: SuiteConfig, report: SuiteReport) -> None:
        rng = random.Random(config.seed)
        report.sampled()
        recovered = 0
        for number, (structure, team, gamma) in enumerate(self._gamma_instances(rng, config, report)):
            expanded = expand_model(structure, team, gamma, verify=False, crosscheck_formulas=False, budget=self.budget)
            result = merge_teams(system_from_expansion(expanded, gamma))
            report.cases += 1
            if result.verified and result.team == restrict(team, gamma.variables):
                recovered += 1
            else:
                report.fail({"instance": number, "merge": result.to_dict(), "team": team.to_dict()})

        fixture = merge_teams(INCOMPLETE_SYSTEM)
        report.cases += 1
        report.details["recovered"] = recovered
        report.details["incomplete_fixture"] = fixture.to_dict()
        if fixture.verified or fixture.failure is None:
            report.fail({"check": "incomplete coherence system is rejected", "merge": fixture.to_dict()})

    def _gamma_instances(
        self, rng: random.Random, config: SuiteConfig, report: SuiteReport
    ) -> Iterator[Tuple[Structure, Team, GammaSpec]]:
        """(M, Y, Γ) with κ ≤ 3, |Γ| ≤ 2 and Y a nonempty team satisfying Γ."""
        produced = 0
        attempts = 0
        while produced < config.instances and attempts < 20 * config.instances:
            attempts += 1
            kappa = rng.randint(1, 3)
            variables = ("x0", "x1", "x2")[:kappa]
            generator = FormulaGenerator(rng, "lax", bound_pool=("y",), max_quantifiers=1, max_splits=1)
            formulas = tuple(
                generator.formula(tuple(rng.sample(variables, rng.randint(1, kappa))), rng.randint(1, 3))
                for _ in range(rng.randint(1, 2))
            )
            structure = random_structure(rng, LAB_SIGNATURE, rng.randint(1, config.max_n))
            try:
                team = satisfying_team(rng, structure, formulas, variables, attempts=20)
            except BudgetExceededError:
                team = None
            if team is None:
                report.skipped += 1
                continue
            produced += 1
            yield structure, team, GammaSpec(formulas, variables)


def _mutate(rng: random.Random, structure: Structure, gamma: GammaSpec) -> Tuple[Structure, str]:
    """
    Flip one tuple of an R_φ table or of an S_I table with I a proper subset
    of the enumeration; both always break Δ_Γ.
    """
    targets = [(formula_relation(k), len(I)) for k, I in enumerate(gamma.index_sets())]
    targets += [(projection_relation(I), len(I)) for I in gamma.family() if len(I) < gamma.kappa]
    name, arity = rng.choice(targets)
    row = tuple(rng.randrange(structure.size) for _ in range(arity))
    table = set(structure.relations[name])
    table.symmetric_difference_update({row})
    relations = dict(structure.relations)
    relations[name] = frozenset(table)
    return Structure(structure.signature, structure.size, relations, structure.functions), name


def run_suite(name: str, seed: Optional[int] = None, budget: Optional[BudgetConfig] = None) -> SuiteReport:
    return SuiteRunner(budget).run(name, seed)
