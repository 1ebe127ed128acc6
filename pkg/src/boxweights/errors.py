"""Exception types shared across the package.

The CLI maps these onto exit codes: precondition violations exit with 2,
numeric failures with 3 and infeasible splits with 4.
"""

from __future__ import annotations


class BoxweightsError(Exception):
    """Base class for all package errors."""


class PreconditionError(BoxweightsError, ValueError):
    """An operation was called outside its documented domain."""


class NumericFailureError(BoxweightsError, RuntimeError):
    """An iteration failed to converge; carries the last bracket."""

    def __init__(self, message: str, bracket: tuple[float, float] | None = None):
        super().__init__(message)
        self.bracket = bracket


class ZeroMeasureBoxError(BoxweightsError, ValueError):
    """An average was requested over a box of zero measure."""

    def __init__(self, box) -> None:
        super().__init__(f"box {box} has zero measure")
        self.box = box


class InfeasibleSplitError(BoxweightsError, RuntimeError):
    """No admissible split position exists for a box.

    ``best_ratio`` is the interior mass ratio closest to 1/2 over all
    positions, ``best_segment_max`` the smallest segment maximum seen among
    positions inside the ratio window (None if that set was empty).
    ``path`` locates the offending node in a split tree ('' is the root,
    then one character '0'/'1' per level).
    """

    def __init__(
        self,
        message: str,
        box=None,
        best_ratio: float | None = None,
        best_segment_max: float | None = None,
        path: str | None = None,
    ):
        super().__init__(message)
        self.box = box
        self.best_ratio = best_ratio
        self.best_segment_max = best_segment_max
        self.path = path


class CandidateDomainError(BoxweightsError, ValueError):
    """A candidate function was evaluated outside its domain of definition."""

    def __init__(self, point: tuple[float, float], message: str = ""):
        msg = message or f"candidate undefined at point {point}"
        super().__init__(msg)
        self.point = point
