"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: InvalidInputError exits 1, while
CapacityError and InfeasibleTargetError exit 2.
"""


class CtcKitError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(CtcKitError):
    """Malformed or inconsistent caller input (shapes, ranges, formats)."""


class CapacityError(CtcKitError):
    """An exhaustive oracle was asked to enumerate beyond its size cap."""


class InfeasibleTargetError(CtcKitError):
    """The target sequence admits no alignment at the given frame count."""
