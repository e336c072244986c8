"""Exception types raised by ruinopt."""


class RuinOptError(Exception):
    """Base class for all package errors."""


class ModelError(RuinOptError, ValueError):
    """Model parameters violate an invariant or the model is infeasible."""


class UnsupportedModelError(ModelError):
    """Operation is not defined for this model (e.g. path ruin with risky assets)."""


class EstimatorDomainError(RuinOptError, ValueError):
    """Estimator evaluated outside its domain (e.g. weights on a claim-free scenario)."""


class ConfigError(RuinOptError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
