"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid physical or numerical parameters."""


class SolverGuardError(ConfigurationError):
    """A solver was asked for a system size it refuses to handle."""


class IntegrationError(RuntimeError):
    """Time integration drifted out of its accuracy envelope."""


class NessAmbiguityError(RuntimeError):
    """The Liouvillian kernel is not one-dimensional."""


class StepSizeError(ConfigurationError):
    """Time step too large for the first-order jump expansion."""


class FitError(ValueError):
    """Not enough data for a fit."""


class DataError(ValueError):
    """Input records are malformed, mixed or unphysical."""


class InconclusiveError(RuntimeError):
    """A scan did not bracket the feature it was looking for."""
