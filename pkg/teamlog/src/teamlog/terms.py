"""First-order terms: variables and function applications (constants are 0-ary)."""

from dataclasses import dataclass
from typing import FrozenSet, Iterator, Tuple, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Func:
    symbol: str
    args: Tuple["Term", ...] = ()


Term = Union[Var, Func]


def term_vars(term: Term) -> FrozenSet[str]:
    """Variables occurring in a term."""
    if isinstance(term, Var):
        return frozenset((term.name,))
    found: FrozenSet[str] = frozenset()
    for arg in term.args:
        found |= term_vars(arg)
    return found


def term_symbols(term: Term) -> Iterator[Tuple[str, int]]:
    """Yield (function symbol, arity) for every application inside the term."""
    if isinstance(term, Func):
        yield term.symbol, len(term.args)
        for arg in term.args:
            yield from term_symbols(arg)


def substitute_term(term: Term, replacement: Term, name: str) -> Term:
    if isinstance(term, Var):
        return replacement if term.name == name else term
    return Func(term.symbol, tuple(substitute_term(arg, replacement, name) for arg in term.args))


def rename_term(term: Term, mapping: dict) -> Term:
    """Rename variables according to ``mapping`` (unmapped names are kept)."""
    if isinstance(term, Var):
        return Var(mapping.get(term.name, term.name))
    return Func(term.symbol, tuple(rename_term(arg, mapping) for arg in term.args))


def format_term(term: Term) -> str:
    # constants print as c() so that parsing needs no signature
    if isinstance(term, Var):
        return term.name
    return f"{term.symbol}({', '.join(format_term(arg) for arg in term.args)})"
