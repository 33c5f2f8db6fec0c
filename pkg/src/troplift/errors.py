"""Exception types shared across the package."""


class TropliftError(Exception):
    """Base class for all troplift errors."""


class InvalidInputError(TropliftError):
    """Malformed or inconsistent input data (CLI exit code 3)."""


class UnrealizableError(TropliftError):
    """A tropical type admits no family of the requested kind (CLI exit code 2)."""


class NotPointedError(TropliftError):
    """An operation that requires a pointed cone received one with lineality."""


class EmbeddingRequiredError(TropliftError):
    """An operation that needs an embedded cone complex got an abstract one."""


class MembershipBoundError(TropliftError):
    """Monoid membership could not be certified within the search bound."""


class GenerationBoundError(TropliftError):
    """A minimal generating set could not be certified finite within bounds."""


class NonIntegralAmalgamationError(TropliftError):
    """A fine pushout produced torsion in the groupified amalgamation."""


class NotAConeError(TropliftError):
    """A union of cones expected to be convex is not."""


class FiberBoundError(TropliftError):
    """A decorated-lift search box was too small to certify the fiber."""


class IdealMismatchError(TropliftError):
    """Truncation ideals of two objects are incompatible (CLI exit code 4)."""


class TruncationError(TropliftError):
    """A truncation ideal fails the finite-complement requirement (exit code 4)."""
