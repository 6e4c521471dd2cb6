"""Exception types raised across the package."""


class BiphotonRadonError(Exception):
    """Base class for all package errors."""

    module = "biphoton_radon"


class InvalidParametersError(BiphotonRadonError, ValueError):
    module = "biphoton-model"


class DegenerateStateError(BiphotonRadonError, ArithmeticError):
    module = "measurement-sim"


class UndefinedDistributionError(BiphotonRadonError, ValueError):
    module = "info-metrics"


class InsufficientAnglesError(BiphotonRadonError, ValueError):
    module = "tomography"


class UndefinedDeviationError(BiphotonRadonError, ArithmeticError):
    module = "sep-bound"


class IncomparableSettingsError(BiphotonRadonError, ValueError):
    module = "sep-bound"


class ConfigError(BiphotonRadonError, ValueError):
    module = "cli-pipeline"


class MissingDataError(BiphotonRadonError, LookupError):
    module = "cli-pipeline"


class PhaseWrapWarning(UserWarning):
    """A phase outside [0, pi) was folded back into range."""
