"""Exception hierarchy shared by all modules."""


class ELError(Exception):
    """Base class for every error raised by this package."""


class UnboundVariable(ELError):
    def __init__(self, name: str):
        super().__init__(f"variable {name!r} has no binding")
        self.name = name


class DomainMismatch(ELError):
    pass


class ParseError(ELError):
    """Raised on malformed problem or substitution text."""

    def __init__(self, message: str, line: int, col: int, expected: str = ""):
        where = f"line {line}, col {col}"
        text = f"{where}: {message}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)
        self.line = line
        self.col = col
        self.expected = expected


class DuplicateVarDecl(ParseError):
    pass


class RoleUsedAsConcept(ParseError):
    pass


class ReservedName(ParseError):
    pass


class NonGroundBinding(ParseError):
    pass


class UnknownVariable(ParseError):
    pass


class NotFlat(ELError):
    pass


class CyclicAssignment(ELError):
    pass


class SearchSpaceTooLarge(ELError):
    pass


class NotDismatching(ELError):
    pass


class NotVariablized(ELError):
    pass


class NotASolution(ELError):
    pass


class InternalEncodingError(ELError):
    pass


class ExternalSolverError(ELError):
    def __init__(self, status: int, stderr: str):
        super().__init__(f"external SAT solver failed (status {status}): {stderr[:200]}")
        self.status = status
        self.stderr = stderr


class MalformedSolverOutput(ELError):
    pass


class SolverTimeout(ELError):
    pass


class VerificationFailed(ELError):
    """A produced solution failed re-verification (an internal bug)."""
