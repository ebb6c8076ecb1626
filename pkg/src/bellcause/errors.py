"""Exception hierarchy. Every class carries a stable ``code`` used by the CLI."""


class BellCauseError(Exception):
    code = "E_GENERIC"


class NonNormalized(BellCauseError):
    code = "E_NONNORMALIZED"


class NonNormalizedModel(NonNormalized):
    code = "E_NONNORMALIZED_MODEL"


class ScenarioMismatch(BellCauseError):
    code = "E_SCENARIO_MISMATCH"


class RepresentationError(BellCauseError):
    """Exact and floating values were combined without explicit promotion."""

    code = "E_REPRESENTATION"


class DomainError(BellCauseError, ValueError):
    code = "E_DOMAIN"


class InvalidState(BellCauseError):
    code = "E_INVALID_STATE"


class EnsembleMismatch(BellCauseError):
    code = "E_ENSEMBLE_MISMATCH"


class OutcomeArityError(BellCauseError):
    code = "E_OUTCOME_ARITY"


class CapExceeded(BellCauseError):
    code = "E_CAP_EXCEEDED"


class NotMember(BellCauseError):
    code = "E_NOT_MEMBER"


class NotLocallyCausal(BellCauseError):
    code = "E_NOT_LOCALLY_CAUSAL"


class InsufficientSamples(BellCauseError):
    code = "E_INSUFFICIENT_SAMPLES"


class MissingCpt(BellCauseError):
    code = "E_MISSING_CPT"


class CyclicGraph(BellCauseError):
    code = "E_CYCLIC"


class ParseError(BellCauseError):
    code = "E_PARSE"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class UnknownVersion(ParseError):
    code = "E_UNKNOWN_VERSION"
