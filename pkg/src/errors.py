"""
Error hierarchy shared by every toposlos module.

Each error carries a stable ``code`` (used in reports) and the process
``exit_code`` the command line surface maps it to.
"""
from typing import Any, Dict, Optional


class ToposLosError(Exception):
    """Base class for all toposlos errors"""
    code = "error"
    exit_code = 2

    def __init__(self, message: str, **payload: Any):
        super().__init__(message)
        self.message = message
        self.payload: Dict[str, Any] = payload

    def location(self) -> Optional[str]:
        """Human readable location of the error, when one is known"""
        return None

    def to_dict(self) -> Dict[str, Any]:
        data = {"code": self.code, "message": self.message}
        where = self.location()
        if where:
            data["location"] = where
        if self.payload:
            data["details"] = self.payload
        return data


class MalformedInput(ToposLosError):
    code = "malformed-input"


class UnknownIdentifier(ToposLosError):
    code = "unknown-identifier"


class BaseMismatch(ToposLosError):
    code = "base-mismatch"


class AmbientMismatch(ToposLosError):
    code = "ambient-mismatch"


class SignatureMismatch(ToposLosError):
    code = "signature-mismatch"


class UnknownSort(ToposLosError):
    code = "unknown-sort"


class UnboundVariable(ToposLosError):
    code = "unbound-variable"


class ArityMismatch(ToposLosError):
    code = "arity-mismatch"


class UnknownQuantifier(ToposLosError):
    code = "unknown-quantifier"


class UnsupportedCarrier(ToposLosError):
    code = "unsupported-carrier"


class UnsupportedFunctor(ToposLosError):
    code = "unsupported-functor"


class PreconditionFailed(ToposLosError):
    code = "precondition-failed"


class ImproperFilter(ToposLosError):
    code = "improper-filter"


class EmptyCarrier(ToposLosError):
    code = "empty-carrier"


class SubstitutionUndefined(ToposLosError):
    code = "substitution-undefined"


class ParseError(ToposLosError):
    """Error in a textual input, located by line and column (1-based)"""
    code = "parse-error"

    def __init__(self, message: str, line: int, column: int, source: str = ""):
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column
        self.source = source

    def location(self) -> Optional[str]:
        prefix = f"{self.source}:" if self.source else ""
        return f"{prefix}{self.line}:{self.column}"

    def __str__(self):
        return f"{self.location()}: {self.message}"


class WorkspaceError(ToposLosError):
    """Validation error inside a workspace document, located by object path"""
    code = "invalid-workspace"

    def __init__(self, message: str, path: str, **payload: Any):
        super().__init__(message, **payload)
        self.path = path

    def location(self) -> Optional[str]:
        return self.path

    def __str__(self):
        return f"{self.path}: {self.message}"


class HypothesesNotMet(ToposLosError):
    code = "hypotheses-not-met"
    exit_code = 1


class NotASentence(ToposLosError):
    code = "not-a-sentence"
    exit_code = 1


class FunctorNotProductPreserving(ToposLosError):
    code = "functor-not-product-preserving"
    exit_code = 1


class SearchSpaceTooLarge(ToposLosError):
    code = "search-space-too-large"
    exit_code = 3
