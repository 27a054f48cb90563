"""
teamlog command-line interface.

Every subcommand prints one JSON document to standard output. Exit codes:
0 true/success, 1 false/counterexample found, 2 usage or input error,
3 budget exceeded. Logging goes to standard error.
"""

import functools
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click

from ..config.budget_config import BudgetConfig, DEFAULT_CONFIGS, get_default_budget_config
from ..config.suite_config import DEFAULT_SUITES
from .compactness import (
    GammaSpec,
    build_delta_gamma,
    check_intuition,
    constant_grounding,
    expand_model,
    merge_teams,
)
from .core_model import Signature, Structure, Team
from .errors import BudgetExceededError, PreconditionError, TeamlogError
from .eso import crosscheck, format_eso, translate
from .evaluator import TeamEvaluator, sat_search
from .formula import Formula, format_formula, formula_signature, fragment_of, free_vars
from .formula_parser import parse
from .model_files import (
    FamilyData,
    dump_json,
    family_from_files,
    load_family,
    load_formulas,
    load_structure,
    load_system,
    load_team,
    read_structure_file,
    save_structure,
    structure_to_dict,
)
from .properties import (
    CHECKS,
    check_empty_team,
    check_flatness_decomposition,
)
from .suite_runner import SuiteRunner
from .ultraproduct import (
    LEMMA_KINDS,
    StructureFamily,
    Ultrafilter,
    check_los,
    check_principal_isomorphism,
    check_team_lemma,
    los_guarantee,
    ultrafilter_from_fip,
    ultraproduct,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_ERROR = 2
EXIT_BUDGET = 3


class Settings:
    """Options shared by every subcommand."""

    def __init__(self, strict: bool, budget: BudgetConfig) -> None:
        self.strict = strict
        self.budget = budget

    def parse(self, text: str, signature: Optional[Signature] = None) -> Formula:
        return parse(text, signature=signature, strict=self.strict)


def _emit(data: Any) -> None:
    click.echo(dump_json(data))


def _verdict(flag: bool) -> int:
    return EXIT_OK if flag else EXIT_FALSE


def reported(command: Callable[..., int]) -> Callable[..., None]:
    """Turn the command's result or error into a JSON document and an exit code."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> None:
        try:
            code = command(*args, **kwargs)
        except BudgetExceededError as exc:
            logger.error(f"Budget exceeded: {exc.detail}")
            _emit(exc.to_dict())
            code = EXIT_BUDGET
        except TeamlogError as exc:
            logger.error(f"{exc.kind}: {exc.detail}")
            _emit(exc.to_dict())
            code = EXIT_ERROR
        except ValueError as exc:
            logger.error(f"usage: {exc}")
            _emit({"error": {"kind": "usage", "detail": str(exc)}})
            code = EXIT_ERROR
        if code is not None:
            click.get_current_context().exit(code)

    return wrapper


def _variables(option: Optional[str], formula: Optional[Formula] = None) -> List[str]:
    if option:
        return [name.strip() for name in option.split(",") if name.strip()]
    return sorted(free_vars(formula)) if formula is not None else []


def _combined_signature(formulas: Sequence[Formula]) -> Signature:
    relations: Dict[str, int] = {}
    functions: Dict[str, int] = {}
    for formula in formulas:
        signature = formula_signature(formula)
        relations.update(signature.relations)
        functions.update(signature.functions)
    return Signature.of(relations, functions)


def _formula_texts(formulas: Sequence[str], formula_file: Optional[str]) -> List[str]:
    texts = list(formulas)
    if formula_file:
        texts.extend(load_formulas(formula_file))
    if not texts:
        raise ValueError("no formulas given; use -f or --formula-file")
    return texts


def _structure_and_team(model: str, team_path: str) -> Tuple[Structure, Team]:
    structure_file = read_structure_file(model)
    structure = structure_file.to_structure()
    return structure, load_team(team_path, structure, structure_file.domain)


PROPERTY_NAMES = ("empty", *CHECKS, "decomposition")


def _split_checks(ctx: click.Context, param: click.Parameter, values: Sequence[str]) -> List[str]:
    names = [name.strip() for value in values for name in value.split(",") if name.strip()]
    unknown = [name for name in names if name not in PROPERTY_NAMES]
    if unknown:
        raise click.BadParameter(f"unknown properties {unknown}; choose from {', '.join(PROPERTY_NAMES)}")
    return names


class ListOption(click.Option):
    """An option that takes every following value up to the next option or subcommand."""

    def add_to_parser(self, parser: Any, ctx: click.Context) -> None:
        super().add_to_parser(parser, ctx)
        subcommands = ctx.command.commands if isinstance(ctx.command, click.Group) else {}
        option = parser._long_opt.get(self.opts[0]) or parser._short_opt.get(self.opts[0])
        process = option.process

        def take_all(value: str, state: Any) -> None:
            values = [value]
            while state.rargs and not state.rargs[0].startswith("-") and state.rargs[0] not in subcommands:
                values.append(state.rargs.pop(0))
            process(tuple(values), state)

        option.process = take_all


def _ultrafilter(index_size: int, generator: Optional[int], fip: Optional[str]) -> Ultrafilter:
    if fip and generator is not None:
        raise ValueError("--principal and --fip exclude each other")
    if fip:
        family = [[int(part) for part in block.split(",") if part.strip()] for block in fip.split(";")]
        return ultrafilter_from_fip(index_size, family)
    return Ultrafilter.principal(index_size, generator or 0)


@click.group()
@click.option("--strict", is_flag=True, help="Read lax ∨ and ∃ as their strict counterparts.")
@click.option("--verbose", "-v", is_flag=True, help="Log at INFO level to standard error.")
@click.option("--profile", type=click.Choice(sorted(DEFAULT_CONFIGS)), default=None, help="Budget profile.")
@click.pass_context
def cli(ctx: click.Context, strict: bool, verbose: bool, profile: Optional[str]) -> None:
    """Team-semantics logic workbench."""
    level = logging.INFO if verbose else os.environ.get("TEAMLOG_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = Settings(strict, get_default_budget_config(profile))


@cli.command("eval")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Structure file.")
@click.option("-t", "--team", "team_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Team file.")
@click.option("-f", "--formula", "text", required=True, help="Formula text.")
@click.option("--certificate", is_flag=True, help="Include the witness for the top-level connective.")
@click.pass_obj
@reported
def eval_command(settings: Settings, model: str, team_path: str, text: str, certificate: bool) -> int:
    """Decide M ⊨_X φ."""
    structure, team = _structure_and_team(model, team_path)
    formula = settings.parse(text, structure.signature)
    evaluator = TeamEvaluator(structure, settings.budget)
    satisfied = evaluator.eval(team, formula)
    report: Dict[str, Any] = {
        "formula": format_formula(formula),
        "satisfied": satisfied,
        "fragment": fragment_of(formula).to_dict(),
    }
    if certificate:
        found = evaluator.certificate(team, formula)
        report["certificate"] = found.to_dict() if found is not None else None
        if found is not None:
            report["certificate_verified"] = evaluator.verify_certificate(team, formula, found)
    _emit(report)
    return _verdict(satisfied)


@cli.command("sat")
@click.option("-f", "--formula", "formulas", multiple=True, help="Formula text; repeat for a set Γ.")
@click.option("--formula-file", type=click.Path(exists=True, dir_okay=False), help="One formula per line.")
@click.option("--max-n", default=4, show_default=True, type=click.IntRange(1), help="Largest domain size tried.")
@click.pass_obj
@reported
def sat_command(settings: Settings, formulas: Sequence[str], formula_file: Optional[str], max_n: int) -> int:
    """Search a small structure and nonempty team satisfying every formula."""
    parsed = [settings.parse(text) for text in _formula_texts(formulas, formula_file)]
    signature = _combined_signature(parsed)
    found = sat_search(parsed, signature, max_n, settings.budget)
    report: Dict[str, Any] = {
        "formulas": [format_formula(formula) for formula in parsed],
        "max_n": max_n,
        "satisfiable": found is not None,
    }
    if found is not None:
        report["structure"] = structure_to_dict(found[0])
        report["team"] = found[1].to_dict()
    _emit(report)
    return _verdict(found is not None)


@cli.command("props")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Structure file.")
@click.option("-f", "--formula", "text", required=True, help="Formula text.")
@click.option("--vars", "variables", help="Comma-separated team domain (default: free variables).")
@click.option(
    "--check",
    "properties",
    multiple=True,
    callback=_split_checks,
    help=f"Comma-separated properties from {', '.join(PROPERTY_NAMES)} (default: empty,downward,union,flatness).",
)
@click.option("--seed", default=0, show_default=True, help="Seed for sampled checks.")
@click.option("--trials", default=200, show_default=True, help="Trials for sampled checks.")
@click.option("--force", is_flag=True, help="Run the empty team check on formulas with ~.")
@click.pass_obj
@reported
def props_command(
    settings: Settings,
    model: str,
    text: str,
    variables: Optional[str],
    properties: Sequence[str],
    seed: int,
    trials: int,
    force: bool,
) -> int:
    """Check closure properties of a formula over all teams of M^D."""
    structure = load_structure(model)
    formula = settings.parse(text, structure.signature)
    domain = _variables(variables, formula)
    selected = list(properties) or ["empty", "downward", "union", "flatness"]
    verdicts = []
    holds = True
    for name in selected:
        if name == "empty":
            verdict = check_empty_team(structure, formula, force, settings.budget, domain)
        elif name == "decomposition":
            decomposition = check_flatness_decomposition(structure, formula, domain, settings.budget, seed)
            verdicts.append({"property": "decomposition", **decomposition.to_dict()})
            holds = holds and decomposition.consistent
            continue
        else:
            verdict = CHECKS[name](structure, formula, domain, settings.budget, seed, trials)
        verdicts.append(verdict.to_dict())
        holds = holds and verdict.holds
    _emit({"formula": format_formula(formula), "vars": domain, "seed": seed, "verdicts": verdicts})
    return _verdict(holds)


def _family_options(command: Callable) -> Callable:
    options = [
        click.option("--family", "family_path", type=click.Path(exists=True, dir_okay=False), help="Family file (instead of --structures)."),
        click.option("--structures", cls=ListOption, type=click.UNPROCESSED, help="Structure files M_0 ... M_{k-1}."),
        click.option("--teams", cls=ListOption, type=click.UNPROCESSED, help="Team files X_i, one per structure."),
        click.option("--others", cls=ListOption, type=click.UNPROCESSED, help="Team files Y_i for union and disjointness."),
        click.option("--functions", cls=ListOption, type=click.UNPROCESSED, help="Supplement function files F_i."),
        click.option("--elements", help="Comma-separated element per structure, e.g. '1,0,2'."),
        click.option("--indices", type=click.IntRange(1), help="Size of the index set I; must match the structures."),
        click.option("--principal", "--generator", "-j", "generator", type=int, default=None, help="Generator of the principal ultrafilter."),
        click.option("--fip", help="Family with the finite intersection property, e.g. '0,1;1,2' (instead of --principal)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


FAMILY_KEYS = ("family_path", "structures", "teams", "others", "functions", "elements", "indices", "generator", "fip")


def _family_source(ctx: click.Context, given: Dict[str, Any]) -> Dict[str, Any]:
    """Options given to the subcommand win over those given to `up`."""
    inherited = ctx.meta.get("family_source", {})
    return {key: given[key] if given.get(key) is not None else inherited.get(key) for key in FAMILY_KEYS}


def _element_list(text: Optional[str]) -> Optional[List[Any]]:
    if text is None:
        return None
    parts = [part.strip() for part in text.split(",") if part.strip()]
    return [int(part) if part.lstrip("-").isdigit() else part for part in parts]


def _load_family(source: Dict[str, Any]) -> Tuple[FamilyData, StructureFamily, Ultrafilter]:
    if source["family_path"]:
        extra = [key for key in ("structures", "teams", "others", "functions", "elements") if source[key] is not None]
        if extra:
            raise ValueError(f"--family already holds {', '.join(extra)}; drop the separate options")
        data = load_family(source["family_path"])
    elif source["structures"]:
        data = family_from_files(
            source["structures"],
            source["teams"],
            source["others"],
            _element_list(source["elements"]),
            source["functions"],
        )
    else:
        raise ValueError("no structures given; use --structures FILE ... or --family FILE")
    if source["indices"] is not None and source["indices"] != len(data.structures):
        raise ValueError(f"--indices {source['indices']} does not match the {len(data.structures)} structures given")
    family = StructureFamily(data.structures, data.teams)
    return data, family, _ultrafilter(family.index_size, source["generator"], source["fip"])


def _product_report(settings: Settings, family: StructureFamily, ultrafilter: Ultrafilter) -> int:
    result = ultraproduct(family, ultrafilter, settings.budget)
    isomorphism = check_principal_isomorphism(family, ultrafilter, settings.budget)
    _emit({
        "ultrafilter": ultrafilter.to_dict(),
        "structure": structure_to_dict(result.structure),
        "team": result.team.to_dict() if result.team is not None else None,
        "classes": [list(f) for f in result.quotient.representatives],
        "isomorphism": isomorphism.to_dict(),
    })
    return _verdict(isomorphism.holds)


@cli.group("up", invoke_without_command=True)
@_family_options
@click.pass_context
@reported
def up_group(ctx: click.Context, **options: Any) -> int:
    """Ultraproducts over finite index sets; builds the product without a subcommand."""
    ctx.meta["family_source"] = options
    if ctx.invoked_subcommand is not None:
        return None
    _, family, ultrafilter = _load_family(_family_source(ctx, {}))
    return _product_report(ctx.obj, family, ultrafilter)


@up_group.command("product")
@_family_options
@click.pass_context
@reported
def up_product(ctx: click.Context, **options: Any) -> int:
    """Build Π M_i / U (and Π X_i / U) and check it against the generator's factor."""
    _, family, ultrafilter = _load_family(_family_source(ctx, options))
    return _product_report(ctx.obj, family, ultrafilter)


@up_group.command("check-lemma")
@_family_options
@click.option("--kind", required=True, type=click.Choice(LEMMA_KINDS), help="Team operation to check.")
@click.option("--var", default="x", show_default=True, help="Variable written by the supplement operations.")
@click.pass_context
@reported
def up_check_lemma(ctx: click.Context, kind: str, var: str, **options: Any) -> int:
    """Compare both sides of a team ultraproduct identity."""
    settings: Settings = ctx.obj
    data, family, ultrafilter = _load_family(_family_source(ctx, options))
    check = check_team_lemma(
        family,
        ultrafilter,
        kind,
        others=data.others,
        elements=data.elements,
        functions=data.functions,
        var=var,
        budget=settings.budget,
    )
    _emit(check.to_dict())
    return _verdict(check.holds)


@up_group.command("check-los")
@_family_options
@click.option("-f", "--formula", "text", required=True, help="Formula text.")
@click.pass_context
@reported
def up_check_los(ctx: click.Context, text: str, **options: Any) -> int:
    """Compare U-large satisfaction in the factors with satisfaction in the ultraproduct."""
    settings: Settings = ctx.obj
    _, family, ultrafilter = _load_family(_family_source(ctx, options))
    formula = settings.parse(text, family.signature)
    check = check_los(family, ultrafilter, formula, settings.budget)
    _emit({"formula": format_formula(formula), **check.to_dict()})
    return _verdict(check.agrees)


@cli.command("translate")
@click.option("-f", "--formula", "text", required=True, help="Formula text.")
@click.option("--vars", "variables", help="Comma-separated team variables (default: free variables).")
@click.pass_obj
@reported
def translate_command(settings: Settings, text: str, variables: Optional[str]) -> int:
    """Print the ESO translation χ_φ(R)."""
    formula = settings.parse(text)
    sentence = translate(formula, _variables(variables, formula))
    _emit({
        "formula": format_formula(formula),
        "sentence": format_eso(sentence),
        "los_guarantee": los_guarantee(formula),
        **sentence.to_dict(),
    })
    return EXIT_OK


@cli.command("crosscheck")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Structure file.")
@click.option("-t", "--team", "team_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Team file.")
@click.option("-f", "--formula", "text", required=True, help="Formula text.")
@click.option("--vars", "variables", help="Comma-separated team variables (default: the team's variables).")
@click.pass_obj
@reported
def crosscheck_command(settings: Settings, model: str, team_path: str, text: str, variables: Optional[str]) -> int:
    """Evaluate φ directly and through its ESO translation."""
    structure, team = _structure_and_team(model, team_path)
    formula = settings.parse(text, structure.signature)
    result = crosscheck(structure, team, formula, _variables(variables) or None, settings.budget)
    _emit({"formula": format_formula(formula), **result.to_dict()})
    return _verdict(result.agrees)


@cli.group("delta", invoke_without_command=True)
@click.option("-f", "--formulas", "formula_file", type=click.Path(exists=True, dir_okay=False), help="Γ, one formula per line.")
@click.option("--vars", "variables", help="Comma-separated enumeration x_0 ... x_{κ-1} (default: sorted free variables).")
@click.pass_context
@reported
def delta_group(ctx: click.Context, formula_file: Optional[str], variables: Optional[str]) -> int:
    """Δ_Γ, the intuition conditions, model expansion and team merging; prints Δ_Γ without a subcommand."""
    settings: Settings = ctx.obj
    gamma = None
    if formula_file:
        gamma = GammaSpec(tuple(settings.parse(text) for text in load_formulas(formula_file)), tuple(_variables(variables)))
    ctx.meta["gamma"] = gamma
    if ctx.invoked_subcommand is not None:
        # subcommand runs next
        return None
    if gamma is None:
        raise PreconditionError("delta needs Γ: pass -f FILE")
    _emit(build_delta_gamma(gamma).to_dict())
    return EXIT_OK


def _gamma(ctx: click.Context) -> GammaSpec:
    gamma = ctx.meta.get("gamma")
    if gamma is None:
        raise PreconditionError("this delta subcommand needs Γ: pass -f FILE before the subcommand")
    return gamma


@delta_group.command("check")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Expanded structure file.")
@click.pass_context
@reported
def delta_check(ctx: click.Context, model: str) -> int:
    """Evaluate N ⊨ Δ_Γ and the three intuition conditions separately."""
    check = check_intuition(load_structure(model), _gamma(ctx))
    _emit(check.to_dict())
    return _verdict(check.models_delta)


@delta_group.command("expand")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Structure file.")
@click.option("-t", "--team", "team_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Team file.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Write the expansion here as well.")
@click.option("--no-crosscheck", is_flag=True, help="Skip the ESO crosscheck of each formula.")
@click.pass_context
@reported
def delta_expand(ctx: click.Context, model: str, team_path: str, output: Optional[str], no_crosscheck: bool) -> int:
    """Expand M with R_φ and S_I read off a satisfying team."""
    settings: Settings = ctx.obj
    structure, team = _structure_and_team(model, team_path)
    expanded = expand_model(structure, team, _gamma(ctx), crosscheck_formulas=not no_crosscheck, budget=settings.budget)
    if output:
        save_structure(expanded, output)
        logger.info(f"Expansion written to {output}")
    _emit(structure_to_dict(expanded))
    return EXIT_OK


@delta_group.command("merge")
@click.option("-s", "--system", "system_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Coherence system file.")
@reported
def delta_merge(system_path: str) -> int:
    """Merge a coherence system into one team, or report the first index set it fails on."""
    result = merge_teams(load_system(system_path))
    _emit(result.to_dict())
    return _verdict(result.verified)


@delta_group.command("ground")
@click.option("-m", "--model", required=True, type=click.Path(exists=True, dir_okay=False), help="Structure file.")
@click.option("-t", "--team", "team_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Team file.")
@click.pass_context
@reported
def delta_ground(ctx: click.Context, model: str, team_path: str) -> int:
    """Replace free variables by constants read off the first row and evaluate the sentences."""
    settings: Settings = ctx.obj
    structure, team = _structure_and_team(model, team_path)
    result = constant_grounding(_gamma(ctx), structure, team, settings.budget)
    _emit(result.to_dict())
    return _verdict(result.holds)


@cli.command("suite")
@click.option(
    "--name", "names", multiple=True, type=click.Choice([*DEFAULT_SUITES, "all"]), default=("all",), show_default=True,
    help="Suite to run; repeat for several.",
)
@click.option("--seed", type=int, default=None, help="Seed (default: TEAMLOG_SEED or the suite default).")
@click.pass_obj
@reported
def suite_command(settings: Settings, names: Sequence[str], seed: Optional[int]) -> int:
    """Run acceptance suites; reports embed the seed and budget used."""
    runner = SuiteRunner(settings.budget)
    selected = list(DEFAULT_SUITES) if "all" in names else list(names)
    reports = [runner.run(name, seed) for name in selected]
    _emit({"passed": all(report.passed for report in reports), "reports": [report.to_dict() for report in reports]})
    return _verdict(all(report.passed for report in reports))


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="teamlog", standalone_mode=False)
    except click.ClickException as exc:
        _emit({"error": {"kind": "usage", "detail": exc.format_message()}})
        return EXIT_ERROR
    except click.Abort:
        return EXIT_ERROR
    return result if isinstance(result, int) else EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
