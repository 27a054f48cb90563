"""
Error types for the team-logic workbench.

Every error carries a machine-readable ``kind`` and a human ``detail`` so the
command line can report it as ``{"error": {"kind": ..., "detail": ...}}``.
"""

from typing import Any, Dict, Optional


class TeamlogError(Exception):
    """Base class for all workbench errors."""

    kind = "error"

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail

    def to_dict(self) -> Dict[str, Any]:
        return {"error": {"kind": self.kind, "detail": self.detail}}


class SignatureError(TeamlogError):
    kind = "signature"


class StructureError(TeamlogError):
    kind = "structure"


class TeamError(TeamlogError):
    kind = "team"


class UnboundVariableError(TeamlogError):
    kind = "unbound-variable"


class ArityError(TeamlogError):
    kind = "arity"


class FormulaSyntaxError(TeamlogError):
    """Raised by the parser; carries the 1-based line and column."""

    kind = "syntax"

    def __init__(self, detail: str, line: int = 1, column: int = 1) -> None:
        super().__init__(f"{detail} (line {line}, column {column})")
        self.line = line
        self.column = column


class CaptureError(TeamlogError):
    kind = "capture"


class AtomSubstitutionError(TeamlogError):
    kind = "atom-substitution"


class FragmentError(TeamlogError):
    kind = "fragment"


class UnsupportedConstructError(TeamlogError):
    kind = "unsupported"


class BudgetExceededError(TeamlogError):
    """A search would exceed a configured limit; never truncated silently."""

    kind = "budget"

    def __init__(self, detail: str, limit_name: Optional[str] = None, limit: Optional[int] = None) -> None:
        super().__init__(detail)
        self.limit_name = limit_name
        self.limit = limit


class NonPrincipalUltrafilterError(TeamlogError):
    kind = "non-principal"


class UnboundRelationError(TeamlogError):
    kind = "unbound-relation"


class PreconditionError(TeamlogError):
    kind = "precondition"


class VerificationError(TeamlogError):
    kind = "verification"


class FileFormatError(TeamlogError):
    kind = "file-format"
