"""Exception hierarchy shared by the engine, sensing pipelines and CLI."""

from typing import Optional


class IsacSimError(Exception):
    """Base class for all simulator errors."""


class ContractViolation(IsacSimError, ValueError):
    """A precondition of a pure function was violated by its caller."""


class ConfigurationError(IsacSimError):
    """Invalid or unreadable scenario configuration.

    Attributes:
        line: 1-based line number in the source file, when known
        source: Path or label of the offending file
    """

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self) -> str:
        prefix = ""
        if self.source:
            prefix = f"{self.source}:"
        if self.line is not None:
            prefix = f"{prefix}{self.line}:" if prefix else f"line {self.line}:"
        return f"{prefix} {self.message}" if prefix else self.message


class PlacementError(ConfigurationError):
    """Node placement could not satisfy its spacing rules."""


class PowerAllocationError(IsacSimError):
    """Power allocation received unusable channel statistics."""


class FusionError(IsacSimError):
    """Line-bundle fusion has no unique solution."""


class RecoveryError(IsacSimError):
    """A sparse-recovery or subspace routine failed."""


class ValidationFailure(IsacSimError):
    """One or more validation checks failed."""
