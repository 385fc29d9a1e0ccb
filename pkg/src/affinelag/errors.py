"""Exception hierarchy.

Every error carries the process exit code the command line maps it to:
1 parse, 2 no multiplier, 3 construction failure, 4 verification failure,
5 I/O.
"""


class AffineLagError(Exception):
    exit_code = 3
    kind = "error"

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class ParseError(AffineLagError):
    exit_code = 1
    kind = "parse-error"

    def __init__(self, message, offset=None, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        if offset is not None:
            message = f"{message} at offset {offset}"
        if self.expected:
            message += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(message)

    def to_dict(self):
        d = super().to_dict()
        d.update(offset=self.offset, expected=list(self.expected))
        return d


class UnknownFunctionError(ParseError):
    kind = "unknown-function"


class SystemFileError(ParseError):
    kind = "system-file"


class EvaluationError(AffineLagError):
    exit_code = 4
    kind = "evaluation-error"


class UnboundSymbolError(EvaluationError):
    kind = "unbound-symbol"


class DomainViolation(EvaluationError):
    kind = "domain-violation"


class SamplingError(EvaluationError):
    kind = "sampling-failure"


class NotAMultiplierError(AffineLagError):
    exit_code = 4
    kind = "not-a-multiplier"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

    def to_dict(self):
        d = super().to_dict()
        d["residual"] = None if self.residual is None else str(self.residual)
        return d


class VanishingMultiplierError(NotAMultiplierError):
    kind = "vanishing-multiplier"


class NoMultiplierFound(AffineLagError):
    exit_code = 2
    kind = "no-multiplier-found"

    def __init__(self, reasons):
        self.reasons = dict(reasons)
        lines = "; ".join(f"{k}: {v}" for k, v in self.reasons.items())
        super().__init__(f"no ansatz family produced a multiplier ({lines})")

    def to_dict(self):
        d = super().to_dict()
        d["reasons"] = self.reasons
        return d


class ConstructionError(AffineLagError):
    kind = "construction-failure"


class ConsistencyFailure(ConstructionError):
    kind = "consistency-failure"


class PreconditionError(ConstructionError):
    kind = "precondition"


class ResidualNonzero(ConstructionError):
    kind = "residual-nonzero"

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals

    def to_dict(self):
        d = super().to_dict()
        if self.residuals is not None:
            d["residuals"] = {k: str(v) for k, v in self.residuals.items()}
        return d


class SingularMatrixError(ConstructionError):
    kind = "singular-A"


class NoNondegenerateSolution(ConstructionError):
    kind = "no-nondegenerate-solution"


class IntegrationError(AffineLagError):
    exit_code = 4
    kind = "integration-error"

    def __init__(self, message, last_valid_index=None):
        super().__init__(message)
        self.last_valid_index = last_valid_index


class DomainExit(IntegrationError):
    kind = "domain-exit"


class NumericOverflow(IntegrationError):
    kind = "numeric-overflow"


class VerificationFailure(AffineLagError):
    exit_code = 4
    kind = "verification-failure"
