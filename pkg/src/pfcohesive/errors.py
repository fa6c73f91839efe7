"""Exception hierarchy shared by all modules.

The CLI maps :class:`HypothesisViolation` to exit code 2 and
:class:`NonConvergent` to exit code 3.
"""

from __future__ import annotations


class ArtifactError(Exception):
    """Base class of every error raised by the package."""


# numerics
class NonConvergent(ArtifactError):
    pass


class NonFinite(ArtifactError):
    pass


class EnvelopeViolated(ArtifactError):
    pass


class NoBracket(ArtifactError):
    pass


class NotMonotone(ArtifactError):
    pass


# model
class HypothesisViolation(ArtifactError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


# forward
class DomainError(ArtifactError):
    pass


class OutOfRange(ArtifactError):
    pass


class Unsupported(ArtifactError):
    pass


class WrongRegime(ArtifactError):
    pass


# reconstruct
class NotInvertible(ArtifactError):
    pass


class CompatibilityError(ArtifactError):
    pass


# catalog
class UnknownEntry(ArtifactError):
    pass


class BadParameters(ArtifactError):
    pass
