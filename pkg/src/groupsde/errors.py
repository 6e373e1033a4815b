"""Exception hierarchy shared by the library and the CLI."""


class GroupSdeError(Exception):
    """Base class. ``reason`` is a stable machine-readable tag used in reports."""

    reason = "error"


class ValidationError(GroupSdeError, ValueError):
    reason = "validation"


# group-core

class NotLatinSquare(ValidationError):
    reason = "not_latin_square"


class NotAssociative(ValidationError):
    reason = "not_associative"


class NoIdentity(ValidationError):
    reason = "no_identity"


class NoInverse(ValidationError):
    reason = "no_inverse"


class NotBijective(ValidationError):
    reason = "not_bijective"


class NotHomomorphism(ValidationError):
    reason = "not_homomorphism"


# measure-core

class InvalidMeasure(ValidationError):
    reason = "invalid_measure"


class GroupMismatch(GroupSdeError, ValueError):
    reason = "group_mismatch"


class AutomorphismMismatch(GroupSdeError, ValueError):
    reason = "automorphism_mismatch"


class NotConverged(GroupSdeError):
    """A measure sequence showed no exact period within the search bound."""

    reason = "not_converged"

    def __init__(self, message, last=None, oscillation=None):
        super().__init__(message)
        self.last = last
        self.oscillation = oscillation


# sde-core

class LimitNotConverged(NotConverged):
    reason = "limit_not_converged"


class LimitNotIdempotent(GroupSdeError):
    reason = "limit_not_idempotent"


class TheoremViolation(GroupSdeError):
    """A structural conclusion failed on a finite group; this means a bug."""

    reason = "theorem_violation"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NotInvariant(ValidationError):
    reason = "not_invariant"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class HypothesisViolation(ValidationError):
    reason = "hypothesis_violation"

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# torus-lab

class InsufficientSamples(GroupSdeError, ValueError):
    reason = "insufficient_samples"
