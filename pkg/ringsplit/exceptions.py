"""
Exception types raised by the ringsplit package.
"""

from typing import List, Optional, Tuple


class RingSplitError(Exception):
    """Base class for all ringsplit errors."""


class GridError(RingSplitError, ValueError):
    """Invalid grid construction or fields living on different grids."""


class ModelError(RingSplitError, ValueError):
    """Invalid physical or trap parameters."""


class NumericalBlowUpError(RingSplitError, FloatingPointError):
    """A propagation step produced NaN or Inf values."""

    def __init__(self, step_index: int, message: Optional[str] = None):
        self.step_index = step_index
        super().__init__(message or f"non-finite wavefunction after step {step_index}")


class RevivalNotFoundError(RingSplitError, LookupError):
    """No autocorrelation peak inside the requested revival window."""


class ObservableError(RingSplitError, ValueError):
    """An observable cannot be evaluated for the given fields."""


class ConfigError(RingSplitError, ValueError):
    """Configuration text failed to parse or validate.

    ``problems`` holds ``(line_number, message)`` pairs; line 0 means the
    problem is not tied to a single line.
    """

    def __init__(self, problems: List[Tuple[int, str]]):
        self.problems = sorted(problems)
        lines = [f"line {lineno}: {msg}" if lineno else msg for lineno, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


class ArtifactError(RingSplitError, ValueError):
    """An artifact file is malformed or does not match its documented layout."""
