"""Exception hierarchy shared by all stages."""


class BilliardZetaError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfiguration(BilliardZetaError):
    pass


class SolverFailure(BilliardZetaError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GrazingError(SolverFailure):
    pass


class OcclusionError(SolverFailure):
    pass


class InternalConsistencyError(BilliardZetaError):
    pass


class OracleFailure(BilliardZetaError):
    """A perturbed ray left the prescribed itinerary; retry with a smaller step."""


class CoverageError(BilliardZetaError):
    pass


class InsufficientData(BilliardZetaError):
    pass


class DomainError(BilliardZetaError):
    pass


class ParseError(BilliardZetaError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IntegrityError(BilliardZetaError):
    pass
