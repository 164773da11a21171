"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class CsqfcError(Exception):
    exit_code = 1


class ParameterError(CsqfcError, ValueError):
    """Invalid model parameters or malformed inputs."""

    exit_code = 2


class ConfigError(ParameterError):
    """Unreadable config, missing section, or unresolved unit tag."""


class PhysicsDomainError(CsqfcError):
    exit_code = 3


class OutOfBandError(PhysicsDomainError):
    """Requested resonance lies outside the converter's acceptance band."""


class ConvergenceError(PhysicsDomainError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ResourceExhaustedError(PhysicsDomainError):
    """No entangled-pair channel left to hand out."""


class InvalidDropError(PhysicsDomainError):
    pass


class AddCollisionError(PhysicsDomainError):
    pass


class AnalysisError(CsqfcError):
    exit_code = 4


class FitError(AnalysisError):
    pass


class NoPeriodicityError(AnalysisError):
    pass


class InsufficientSpanError(AnalysisError):
    pass


class NumericalError(AnalysisError):
    """Quadrature or other numerical routine failed to converge."""
